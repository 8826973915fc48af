"""Core domain types for hidden-role inference in social deduction games.

Everything downstream (parsing, solving, replay, the live service) shares
these types. All of them are immutable after construction and validate
their invariants eagerly: building an invalid value raises ModelError with
machine-readable codes, so a constructed value is always a valid one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np


class EngineError(Exception):
    """Base error carrying a machine-readable code plus optional detail."""

    def __init__(self, code: str, message: str = "", detail: object = None):
        super().__init__(message or code)
        self.code = code
        self.detail = detail


class ModelError(EngineError):
    """Raised when constructing a domain value whose invariants fail."""

    def __init__(self, codes: Sequence[str], message: str = ""):
        codes = list(codes)
        super().__init__(codes[0] if codes else "INVALID", message or "; ".join(codes))
        self.codes = codes


class Alignment(str, Enum):
    GOOD = "GOOD"
    EVIL = "EVIL"


class GameKind(str, Enum):
    AVALON = "AVALON"
    MAFIA = "MAFIA"
    CUSTOM = "CUSTOM"


class ConstraintClass(str, Enum):
    EVIDENCE = "EVIDENCE"
    PHENOMENON = "PHENOMENON"
    ASSERTION = "ASSERTION"
    HYPOTHESIS = "HYPOTHESIS"


class Preset(str, Enum):
    """Constraint-inclusion policies controlling which soft constraints score."""

    STRICT = "STRICT"      # hard constraints only
    ASSERT = "ASSERT"      # + assertions, carried forward across rounds
    HYP_IG = "HYP_IG"      # + all hypotheses, info-gain weighted
    HYP_M = "HYP_M"        # + all hypotheses, manual weights
    TURN_IG = "TURN_IG"    # + current-round hypotheses only, info-gain weighted


@dataclass(frozen=True)
class RoleSpec:
    """One catalogue entry: a role name, how many seats hold it, and its side."""

    name: str
    count: int
    alignment: Alignment


def validate_config(players, roles=None, game_kind=GameKind.CUSTOM) -> list[str]:
    """Return all invariant violations for a (players, roles, kind) triple.

    Accepts either a GameConfig or the raw parts; an empty list means ok.
    """
    if isinstance(players, GameConfig):
        config = players
        players, roles, game_kind = config.players, config.roles, config.game_kind
    players = list(players)
    roles = list(roles or ())
    codes: list[str] = []
    if len(set(players)) != len(players):
        codes.append("DUPLICATE_PLAYER")
    names = [r.name for r in roles]
    if len(set(names)) != len(names):
        codes.append("DUPLICATE_ROLE")
    if any(r.count < 1 for r in roles):
        codes.append("BAD_ROLE_COUNT")
    if sum(r.count for r in roles) != len(players):
        codes.append("COUNT_MISMATCH")
    if not any(r.alignment is Alignment.GOOD for r in roles):
        codes.append("NO_GOOD_ROLE")
    if game_kind in (GameKind.AVALON, GameKind.MAFIA) and not any(
        r.alignment is Alignment.EVIL for r in roles
    ):
        codes.append("NO_EVIL_ROLE")
    return codes


@dataclass(frozen=True)
class GameConfig:
    """The world space: who plays, which roles exist, and in what counts.

    Role counts must sum to the number of players; together with the
    good/evil alignment of each role this fixes the set of possible
    player-to-role assignments.
    """

    players: tuple[str, ...]
    roles: tuple[RoleSpec, ...]
    game_kind: GameKind = GameKind.CUSTOM

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "roles", tuple(self.roles))
        codes = validate_config(self.players, self.roles, self.game_kind)
        if codes:
            raise ModelError(codes, f"invalid game config: {', '.join(codes)}")

    # -- lookups -------------------------------------------------------

    @property
    def role_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.roles)

    def player_index(self, player: str) -> int:
        try:
            return self.players.index(player)
        except ValueError:
            raise KeyError(player) from None

    def role_index(self, role: str) -> int:
        for i, spec in enumerate(self.roles):
            if spec.name == role:
                return i
        raise KeyError(role)

    def alignment_of(self, role: str) -> Alignment:
        return self.roles[self.role_index(role)].alignment

    def roles_of_alignment(self, alignment: Alignment) -> tuple[str, ...]:
        return tuple(r.name for r in self.roles if r.alignment is alignment)

    @property
    def good_roles(self) -> tuple[str, ...]:
        return self.roles_of_alignment(Alignment.GOOD)

    @property
    def evil_roles(self) -> tuple[str, ...]:
        return self.roles_of_alignment(Alignment.EVIL)

    def role_counts(self) -> dict[str, int]:
        return {r.name: r.count for r in self.roles}

    def is_evil(self, world: "World", player: str) -> bool:
        return self.alignment_of(world.role_of(player)) is Alignment.EVIL


def resolve_set_label(config: GameConfig, label: str) -> tuple[str, ...]:
    """Map a set label to concrete role names.

    "good"/"evil" (any case) name alignment classes; anything else must be
    a role name in the config and denotes exactly that role.
    """
    low = label.lower()
    if low == "good":
        return config.good_roles
    if low == "evil":
        return config.evil_roles
    for spec in config.roles:
        if spec.name.lower() == low:
            return (spec.name,)
    raise KeyError(label)


@dataclass(frozen=True)
class World:
    """One total assignment of players to roles.

    Stored as player-sorted pairs so equality and hashing are independent
    of construction order. Multiset validity is checked against a config
    via world_violations(), not here.
    """

    assignment: tuple[tuple[str, str], ...]

    def __post_init__(self):
        pairs = self.assignment
        if isinstance(pairs, Mapping):
            pairs = tuple(pairs.items())
        norm = tuple(sorted((str(p), str(r)) for p, r in pairs))
        players = [p for p, _ in norm]
        if len(set(players)) != len(players):
            raise ModelError(["DUPLICATE_PLAYER"], "player assigned more than once")
        object.__setattr__(self, "assignment", norm)

    @classmethod
    def from_assignment(cls, mapping: Mapping[str, str]) -> "World":
        return cls(tuple(mapping.items()))

    @property
    def as_dict(self) -> dict[str, str]:
        return dict(self.assignment)

    @property
    def player_names(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.assignment)

    def role_of(self, player: str) -> str:
        for p, r in self.assignment:
            if p == player:
                return r
        raise KeyError(player)


def world_violations(config: GameConfig, world: World) -> list[str]:
    """Pure predicate: all reasons `world` is not a valid world for `config`."""
    codes: list[str] = []
    if set(world.player_names) != set(config.players):
        codes.append("PLAYER_SET_MISMATCH")
    known = set(config.role_names)
    used: dict[str, int] = {}
    for _, r in world.assignment:
        if r not in known:
            codes.append("UNKNOWN_ROLE")
            return codes
        used[r] = used.get(r, 0) + 1
    if not codes and used != {r.name: r.count for r in config.roles}:
        codes.append("ROLE_COUNT_MISMATCH")
    return codes


class ConstraintKind(str, Enum):
    ROLE_IS = "role_is"
    ROLE_NOT = "role_not"
    ROLE_IN = "role_in"
    EVIL_AT_LEAST = "evil_at_least"
    ASSERT_ROLE_IS = "assert_role_is"
    ASSERT_TEAM_GOOD = "assert_team_good"
    ASSERT_ROLE_IN = "assert_role_in"
    HYPO_ROLE_IN = "hypo_role_in"
    HYPO_TEAM_GOOD = "hypo_team_good"
    HYPO_TEAM_EVIL = "hypo_team_evil"


def class_of_kind(kind: ConstraintKind) -> ConstraintClass:
    if kind in (ConstraintKind.ROLE_IS, ConstraintKind.ROLE_NOT, ConstraintKind.ROLE_IN):
        return ConstraintClass.EVIDENCE
    if kind is ConstraintKind.EVIL_AT_LEAST:
        return ConstraintClass.PHENOMENON
    if kind.value.startswith("assert_"):
        return ConstraintClass.ASSERTION
    return ConstraintClass.HYPOTHESIS


# Which arg fields each kind requires; every other arg field must be unset.
_KIND_FIELDS: dict[ConstraintKind, tuple[str, ...]] = {
    ConstraintKind.ROLE_IS: ("player", "role"),
    ConstraintKind.ROLE_NOT: ("player", "role"),
    ConstraintKind.ROLE_IN: ("player", "roles"),
    ConstraintKind.EVIL_AT_LEAST: ("team", "min_count"),
    ConstraintKind.ASSERT_ROLE_IS: ("speaker", "role"),
    ConstraintKind.ASSERT_TEAM_GOOD: ("speaker", "team"),
    ConstraintKind.ASSERT_ROLE_IN: ("speaker", "target", "set_label"),
    ConstraintKind.HYPO_ROLE_IN: ("speaker", "target", "set_label"),
    ConstraintKind.HYPO_TEAM_GOOD: ("speaker", "team"),
    ConstraintKind.HYPO_TEAM_EVIL: ("speaker", "team"),
}

_ARG_FIELDS = ("player", "speaker", "target", "role", "roles", "team", "min_count", "set_label")


@dataclass(frozen=True)
class Constraint:
    """One constraint over worlds, in flattened tagged-union form.

    kind determines which arg fields are set and which class (evidence,
    phenomenon, assertion, hypothesis) the constraint belongs to. Weights
    exist only on hypotheses: either an explicit manual weight or the
    auto_weight marker asking the solver to derive one from info gain.
    round_index records the quest/day the constraint was observed in.
    """

    kind: ConstraintKind
    player: Optional[str] = None
    speaker: Optional[str] = None
    target: Optional[str] = None
    role: Optional[str] = None
    roles: Optional[tuple[str, ...]] = None
    team: Optional[tuple[str, ...]] = None
    min_count: Optional[int] = None
    set_label: Optional[str] = None
    weight: Optional[float] = None
    auto_weight: bool = False
    round_index: int = 0

    def __post_init__(self):
        if self.roles is not None:
            object.__setattr__(self, "roles", tuple(self.roles))
        if self.team is not None:
            object.__setattr__(self, "team", tuple(self.team))
        kind = ConstraintKind(self.kind)
        object.__setattr__(self, "kind", kind)
        required = _KIND_FIELDS[kind]
        for name in _ARG_FIELDS:
            value = getattr(self, name)
            if name in required and value is None:
                raise ModelError(["BAD_ARGS"], f"{kind.value} requires '{name}'")
            if name not in required and value is not None:
                raise ModelError(["BAD_ARGS"], f"{kind.value} does not take '{name}'")
        if self.team is not None:
            if not self.team:
                raise ModelError(["BAD_ARGS"], f"{kind.value}: empty team")
            if len(set(self.team)) != len(self.team):
                raise ModelError(["BAD_ARGS"], f"{kind.value}: duplicate team member")
        if self.roles is not None and not self.roles:
            raise ModelError(["BAD_ARGS"], f"{kind.value}: empty role set")
        if self.min_count is not None and not 1 <= self.min_count <= len(self.team or ()):
            raise ModelError(["BAD_ARGS"], "min must satisfy 1 <= min <= |team|")
        cls = class_of_kind(kind)
        if self.weight is not None:
            if cls is not ConstraintClass.HYPOTHESIS:
                raise ModelError(["BAD_ARGS"], "weight is only valid on hypotheses")
            if self.auto_weight:
                raise ModelError(["BAD_ARGS"], "weight and auto_weight are mutually exclusive")
            if not self.weight >= 0:
                raise ModelError(["BAD_ARGS"], "weight must be nonnegative")
        if self.auto_weight and cls is not ConstraintClass.HYPOTHESIS:
            raise ModelError(["BAD_ARGS"], "auto_weight is only valid on hypotheses")
        if self.round_index < 0:
            raise ModelError(["BAD_ARGS"], "round_index must be nonnegative")

    @property
    def constraint_class(self) -> ConstraintClass:
        return class_of_kind(self.kind)

    def referenced_players(self) -> tuple[str, ...]:
        out = [p for p in (self.player, self.speaker, self.target) if p is not None]
        out.extend(self.team or ())
        return tuple(out)


def constraint_violations(config: GameConfig, c: Constraint) -> list[tuple[str, str]]:
    """All (code, message) problems binding `c` against `config`."""
    problems: list[tuple[str, str]] = []
    players = set(config.players)
    for p in c.referenced_players():
        if p not in players:
            problems.append(("UNKNOWN_NAME", f"unknown player '{p}'"))
    known_roles = set(config.role_names)
    if c.role is not None and c.role not in known_roles:
        problems.append(("UNKNOWN_NAME", f"unknown role '{c.role}'"))
    for r in c.roles or ():
        if r not in known_roles:
            problems.append(("UNKNOWN_NAME", f"unknown role '{r}'"))
    if c.set_label is not None:
        try:
            resolve_set_label(config, c.set_label)
        except KeyError:
            problems.append(("UNKNOWN_NAME", f"unknown set label '{c.set_label}'"))
    return problems


_CLASS_TO_LIST = {
    ConstraintClass.EVIDENCE: "evidence",
    ConstraintClass.PHENOMENON: "phenomenon",
    ConstraintClass.ASSERTION: "assertions",
    ConstraintClass.HYPOTHESIS: "hypotheses",
}


@dataclass(frozen=True)
class ConstraintSet:
    """Constraints accumulated so far, bucketed by class."""

    evidence: tuple[Constraint, ...] = ()
    phenomenon: tuple[Constraint, ...] = ()
    assertions: tuple[Constraint, ...] = ()
    hypotheses: tuple[Constraint, ...] = ()

    def __post_init__(self):
        for list_name, cls in (
            ("evidence", ConstraintClass.EVIDENCE),
            ("phenomenon", ConstraintClass.PHENOMENON),
            ("assertions", ConstraintClass.ASSERTION),
            ("hypotheses", ConstraintClass.HYPOTHESIS),
        ):
            members = tuple(getattr(self, list_name))
            object.__setattr__(self, list_name, members)
            for c in members:
                if c.constraint_class is not cls:
                    raise ModelError(
                        ["CLASS_MISMATCH"],
                        f"{c.kind.value} does not belong in '{list_name}'",
                    )

    @classmethod
    def from_constraints(cls, constraints: Iterable[Constraint]) -> "ConstraintSet":
        buckets: dict[str, list[Constraint]] = {
            "evidence": [], "phenomenon": [], "assertions": [], "hypotheses": []
        }
        for c in constraints:
            buckets[_CLASS_TO_LIST[c.constraint_class]].append(c)
        return cls(**{k: tuple(v) for k, v in buckets.items()})

    @classmethod
    def merge(cls, *sets: "ConstraintSet") -> "ConstraintSet":
        return cls(
            evidence=sum((s.evidence for s in sets), ()),
            phenomenon=sum((s.phenomenon for s in sets), ()),
            assertions=sum((s.assertions for s in sets), ()),
            hypotheses=sum((s.hypotheses for s in sets), ()),
        )

    def all_constraints(self) -> Iterator[Constraint]:
        yield from self.evidence
        yield from self.phenomenon
        yield from self.assertions
        yield from self.hypotheses

    def restricted_to_rounds(self, max_round: int) -> "ConstraintSet":
        keep = lambda cs: tuple(c for c in cs if c.round_index <= max_round)
        return ConstraintSet(
            keep(self.evidence), keep(self.phenomenon),
            keep(self.assertions), keep(self.hypotheses),
        )

    def hard(self) -> tuple[Constraint, ...]:
        """Hard constraints in diagnostic order: round asc, evidence before phenomenon."""
        merged = list(self.evidence) + list(self.phenomenon)
        merged.sort(key=lambda c: c.round_index)
        return tuple(merged)

    @property
    def size(self) -> int:
        return (len(self.evidence) + len(self.phenomenon)
                + len(self.assertions) + len(self.hypotheses))


@dataclass(frozen=True)
class SolverSettings:
    """Preset selector plus the weight table used by the scoring rule.

    assertion_weight is the large multiplicative factor earned per satisfied
    assertion; w_strong/w_mid/w_low are the manual hypothesis weights by cue
    strength; ig_scale multiplies info-gain weights; global_scale rescales
    every soft weight. Entropies are always reported in bits (log base 2).
    """

    preset: Preset = Preset.STRICT
    assertion_weight: float = 10000.0
    w_strong: float = 0.5
    w_mid: float = 0.2
    w_low: float = 0.1
    ig_scale: float = 1.0
    global_scale: float = 1.0

    LOG_BASE: ClassVar[int] = 2

    def __post_init__(self):
        object.__setattr__(self, "preset", Preset(self.preset))
        codes = []
        if not self.assertion_weight > 1:
            codes.append("BAD_ASSERTION_WEIGHT")
        if not 0 < self.w_low <= self.w_mid <= self.w_strong < 1:
            codes.append("BAD_MANUAL_WEIGHTS")
        if not self.ig_scale >= 0:
            codes.append("BAD_IG_SCALE")
        if not self.global_scale > 0:
            codes.append("BAD_GLOBAL_SCALE")
        if codes:
            raise ModelError(codes, f"invalid solver settings: {', '.join(codes)}")

    def manual_weight_for(self, kind: ConstraintKind) -> float:
        if kind is ConstraintKind.HYPO_TEAM_GOOD:
            return self.w_strong
        if kind is ConstraintKind.HYPO_ROLE_IN:
            return self.w_mid
        return self.w_low


class ViewKind(str, Enum):
    OBJECTIVE = "OBJECTIVE"
    ROLE = "ROLE"


@dataclass(frozen=True)
class View:
    """A perspective: what a given seat (or a neutral observer) knows for sure.

    Knowledge is plain hard evidence so the solver treats views like any
    other constraints. A role view always pins the viewer's own role.
    """

    kind: ViewKind = ViewKind.OBJECTIVE
    viewer: Optional[str] = None
    role: Optional[str] = None
    knowledge: tuple[Constraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ViewKind(self.kind))
        object.__setattr__(self, "knowledge", tuple(self.knowledge))
        if self.kind is ViewKind.OBJECTIVE:
            if self.knowledge or self.viewer or self.role:
                raise ModelError(["BAD_VIEW"], "objective view carries no knowledge")
            return
        if not self.viewer or not self.role:
            raise ModelError(["BAD_VIEW"], "role view needs viewer and role")
        for c in self.knowledge:
            if c.constraint_class is not ConstraintClass.EVIDENCE:
                raise ModelError(["BAD_VIEW"], "view knowledge must be evidence")
        pins_self = any(
            c.kind is ConstraintKind.ROLE_IS and c.player == self.viewer and c.role == self.role
            for c in self.knowledge
        )
        if not pins_self:
            raise ModelError(["BAD_VIEW"], "role view must pin the viewer's own role")

    @property
    def label(self) -> str:
        if self.kind is ViewKind.OBJECTIVE:
            return "objective"
        return f"{self.role}:{self.viewer}"


OBJECTIVE_VIEW = View()


@dataclass(frozen=True)
class Posterior:
    """Normalized distribution over the feasible worlds plus derived summaries.

    assignments holds the feasible worlds as role indices (rows in canonical
    enumeration order, columns in config player order); marginals is the
    player-by-role probability matrix; map_world is the first world of
    maximal probability in canonical order.
    """

    config: GameConfig
    assignments: np.ndarray
    scores: np.ndarray
    probabilities: np.ndarray
    marginals: np.ndarray
    map_world: World
    entropy_bits: float
    feasible_count: int
    approximate: bool = False

    def __post_init__(self):
        for name in ("assignments", "scores", "probabilities", "marginals"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.feasible_count > 0:
            total = float(self.probabilities.sum())
            if abs(total - 1.0) > 1e-9:
                raise ModelError(["NOT_NORMALIZED"], f"probabilities sum to {total}")
            rows = self.marginals.sum(axis=1)
            if np.abs(rows - 1.0).max() > 1e-9:
                raise ModelError(["NOT_NORMALIZED"], "marginal rows must sum to 1")

    def world(self, i: int) -> World:
        names = self.config.role_names
        return World(tuple(zip(self.config.players, (names[j] for j in self.assignments[i]))))

    def iter_worlds(self) -> Iterator[tuple[World, float, float]]:
        for i in range(len(self.probabilities)):
            yield self.world(i), float(self.scores[i]), float(self.probabilities[i])

    def top_worlds(self, k: int) -> list[tuple[World, float, float]]:
        """The k most probable worlds; ties resolve to canonical order."""
        order = np.argsort(-self.probabilities, kind="stable")[: max(k, 0)]
        return [
            (self.world(i), float(self.scores[i]), float(self.probabilities[i]))
            for i in order
        ]

    def marginal(self, player: str, role: str) -> float:
        return float(
            self.marginals[self.config.player_index(player), self.config.role_index(role)]
        )
