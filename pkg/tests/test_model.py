import pytest

from roleinfer.model import (
    Alignment,
    Constraint,
    ConstraintClass,
    ConstraintKind,
    ConstraintSet,
    GameConfig,
    GameKind,
    ModelError,
    RoleSpec,
    SolverSettings,
    View,
    ViewKind,
    World,
    resolve_set_label,
    validate_config,
    world_violations,
)


def test_valid_avalon_config(avalon6):
    assert validate_config(avalon6) == []
    assert avalon6.good_roles == ("merlin", "percival", "servant")
    assert avalon6.evil_roles == ("morgana", "assassin")


def test_count_mismatch_reported():
    roles = (
        RoleSpec("merlin", 1, Alignment.GOOD),
        RoleSpec("servant", 3, Alignment.GOOD),
        RoleSpec("assassin", 1, Alignment.EVIL),
    )
    codes = validate_config(tuple(f"p{i}" for i in range(6)), roles, GameKind.AVALON)
    assert "COUNT_MISMATCH" in codes
    with pytest.raises(ModelError):
        GameConfig(tuple(f"p{i}" for i in range(6)), roles, GameKind.AVALON)


def test_duplicate_player_reported():
    roles = (
        RoleSpec("good", 1, Alignment.GOOD),
        RoleSpec("evil", 1, Alignment.EVIL),
    )
    codes = validate_config(("a", "a"), roles, GameKind.MAFIA)
    assert "DUPLICATE_PLAYER" in codes


def test_no_evil_role_for_avalon():
    roles = (RoleSpec("servant", 2, Alignment.GOOD),)
    assert "NO_EVIL_ROLE" in validate_config(("a", "b"), roles, GameKind.AVALON)
    # custom games may be all-good
    assert "NO_EVIL_ROLE" not in validate_config(("a", "b"), roles, GameKind.CUSTOM)


def test_world_is_canonical_and_validated(avalon6, avalon6_truth):
    same = World.from_assignment(dict(reversed(avalon6_truth.assignment)))
    assert same == avalon6_truth
    assert world_violations(avalon6, avalon6_truth) == []

    bad = World.from_assignment({p: "merlin" for p in avalon6.players})
    assert "ROLE_COUNT_MISMATCH" in world_violations(avalon6, bad)

    with pytest.raises(ModelError):
        World((("a", "x"), ("a", "y")))


def test_world_validation_is_deterministic(avalon6, avalon6_truth):
    assert world_violations(avalon6, avalon6_truth) == world_violations(avalon6, avalon6_truth)


def test_constraint_class_follows_kind():
    c = Constraint(ConstraintKind.ROLE_IS, player="p", role="r")
    assert c.constraint_class is ConstraintClass.EVIDENCE
    c = Constraint(ConstraintKind.EVIL_AT_LEAST, team=("a", "b"), min_count=1)
    assert c.constraint_class is ConstraintClass.PHENOMENON
    c = Constraint(ConstraintKind.ASSERT_TEAM_GOOD, speaker="s", team=("a",))
    assert c.constraint_class is ConstraintClass.ASSERTION
    c = Constraint(ConstraintKind.HYPO_ROLE_IN, speaker="s", target="t", set_label="evil")
    assert c.constraint_class is ConstraintClass.HYPOTHESIS


def test_weight_only_on_hypotheses():
    with pytest.raises(ModelError):
        Constraint(ConstraintKind.ROLE_IS, player="p", role="r", weight=0.5)
    with pytest.raises(ModelError):
        Constraint(
            ConstraintKind.HYPO_TEAM_GOOD, speaker="s", team=("a",),
            weight=0.5, auto_weight=True,
        )
    with pytest.raises(ModelError):
        Constraint(ConstraintKind.HYPO_TEAM_GOOD, speaker="s", team=("a",), weight=-1.0)


def test_min_count_range():
    with pytest.raises(ModelError):
        Constraint(ConstraintKind.EVIL_AT_LEAST, team=("a", "b"), min_count=3)
    with pytest.raises(ModelError):
        Constraint(ConstraintKind.EVIL_AT_LEAST, team=("a", "b"), min_count=0)
    Constraint(ConstraintKind.EVIL_AT_LEAST, team=("a", "b"), min_count=2)


def test_kind_specific_args_enforced():
    with pytest.raises(ModelError):
        Constraint(ConstraintKind.ROLE_IS, player="p")  # missing role
    with pytest.raises(ModelError):
        Constraint(ConstraintKind.ROLE_IS, player="p", role="r", team=("a",))


def test_constraint_set_rejects_misfiled_members():
    hypo = Constraint(ConstraintKind.HYPO_TEAM_GOOD, speaker="s", team=("a",), weight=0.5)
    with pytest.raises(ModelError):
        ConstraintSet(evidence=(hypo,))
    cset = ConstraintSet.from_constraints([hypo])
    assert cset.hypotheses == (hypo,)


def test_settings_invariants():
    SolverSettings()
    with pytest.raises(ModelError):
        SolverSettings(assertion_weight=1.0)
    with pytest.raises(ModelError):
        SolverSettings(w_strong=0.1, w_mid=0.2, w_low=0.3)
    with pytest.raises(ModelError):
        SolverSettings(global_scale=0.0)


def test_resolve_set_label(avalon6):
    assert resolve_set_label(avalon6, "evil") == ("morgana", "assassin")
    assert resolve_set_label(avalon6, "GOOD") == ("merlin", "percival", "servant")
    assert resolve_set_label(avalon6, "merlin") == ("merlin",)
    with pytest.raises(KeyError):
        resolve_set_label(avalon6, "werewolf")


def test_view_invariants():
    with pytest.raises(ModelError):
        View(kind=ViewKind.ROLE, viewer="a", role="r")  # missing own-role pin
    pin = Constraint(ConstraintKind.ROLE_IS, player="a", role="r")
    view = View(kind=ViewKind.ROLE, viewer="a", role="r", knowledge=(pin,))
    assert view.label == "r:a"
    assert View().label == "objective"
    with pytest.raises(ModelError):
        View(knowledge=(pin,))  # objective views know nothing


def test_types_are_immutable(avalon6, avalon6_truth):
    with pytest.raises(AttributeError):
        avalon6.players = ()
    with pytest.raises(AttributeError):
        avalon6_truth.assignment = ()
    c = Constraint(ConstraintKind.ROLE_IS, player="p", role="r")
    with pytest.raises(AttributeError):
        c.role = "other"
