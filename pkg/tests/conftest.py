import pytest

from roleinfer.model import (
    Alignment,
    GameConfig,
    GameKind,
    RoleSpec,
    SolverSettings,
    World,
)


@pytest.fixture
def avalon6() -> GameConfig:
    return GameConfig(
        players=tuple(f"player-{i}" for i in range(1, 7)),
        roles=(
            RoleSpec("merlin", 1, Alignment.GOOD),
            RoleSpec("percival", 1, Alignment.GOOD),
            RoleSpec("servant", 2, Alignment.GOOD),
            RoleSpec("morgana", 1, Alignment.EVIL),
            RoleSpec("assassin", 1, Alignment.EVIL),
        ),
        game_kind=GameKind.AVALON,
    )


@pytest.fixture
def avalon6_truth(avalon6) -> World:
    return World.from_assignment(
        {
            "player-1": "merlin",
            "player-2": "percival",
            "player-3": "servant",
            "player-4": "servant",
            "player-5": "morgana",
            "player-6": "assassin",
        }
    )


@pytest.fixture
def mafia5() -> GameConfig:
    return GameConfig(
        players=tuple(f"player-{i}" for i in range(1, 6)),
        roles=(
            RoleSpec("mafia", 1, Alignment.EVIL),
            RoleSpec("bystander", 4, Alignment.GOOD),
        ),
        game_kind=GameKind.MAFIA,
    )


@pytest.fixture
def two_world_config() -> GameConfig:
    return GameConfig(
        players=("alice", "bob"),
        roles=(RoleSpec("good", 1, Alignment.GOOD), RoleSpec("evil", 1, Alignment.EVIL)),
        game_kind=GameKind.CUSTOM,
    )


@pytest.fixture
def settings() -> SolverSettings:
    return SolverSettings()
