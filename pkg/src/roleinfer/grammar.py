"""Parser and serializer for the JSON constraint-document wire format.

A constraint document is a single JSON object with exactly four arrays
(evidence, phenomenon, assertions, hypotheses), each holding objects of the
form {"type": ..., "args": {...}} plus, on hypotheses only, an optional
"weight" or "auto_weight". The same format is used for on-disk fixtures
and service request bodies. Parsing is strict and total: anything invalid
raises ParseError and never yields a partial set.

This module also owns the small document formats for game configs, worlds
and solver settings used by the CLI and the service.
"""

from __future__ import annotations

import json
from typing import Mapping, Optional, Union

from .model import (
    Alignment,
    Constraint,
    ConstraintClass,
    ConstraintKind,
    ConstraintSet,
    EngineError,
    GameConfig,
    GameKind,
    ModelError,
    Preset,
    RoleSpec,
    SolverSettings,
    World,
    class_of_kind,
    constraint_violations,
    world_violations,
)

DOCUMENT_KEYS = ("evidence", "phenomenon", "assertions", "hypotheses")

_KEY_TO_CLASS = {
    "evidence": ConstraintClass.EVIDENCE,
    "phenomenon": ConstraintClass.PHENOMENON,
    "assertions": ConstraintClass.ASSERTION,
    "hypotheses": ConstraintClass.HYPOTHESIS,
}

# JSON arg key -> Constraint field, per kind; also fixes serialization order.
_ARG_SCHEMA: dict[ConstraintKind, tuple[tuple[str, str], ...]] = {
    ConstraintKind.ROLE_IS: (("player", "player"), ("role", "role")),
    ConstraintKind.ROLE_NOT: (("player", "player"), ("role", "role")),
    ConstraintKind.ROLE_IN: (("player", "player"), ("roles", "roles")),
    ConstraintKind.EVIL_AT_LEAST: (("team", "team"), ("min", "min_count")),
    ConstraintKind.ASSERT_ROLE_IS: (("speaker", "speaker"), ("role", "role")),
    ConstraintKind.ASSERT_TEAM_GOOD: (("speaker", "speaker"), ("team", "team")),
    ConstraintKind.ASSERT_ROLE_IN: (("speaker", "speaker"), ("target", "target"), ("set", "set_label")),
    ConstraintKind.HYPO_ROLE_IN: (("speaker", "speaker"), ("target", "target"), ("set", "set_label")),
    ConstraintKind.HYPO_TEAM_GOOD: (("speaker", "speaker"), ("team", "team")),
    ConstraintKind.HYPO_TEAM_EVIL: (("speaker", "speaker"), ("team", "team")),
}

# Manual weight assigned when a hypothesis arrives with neither an explicit
# weight nor the auto_weight marker, by cue strength of the kind: a proposer
# vouching for a whole team is the strongest cue, a per-player suspicion is
# mid, and a team-level "someone here is evil" (vote-derived) is weakest.
DEFAULT_MANUAL_WEIGHTS = {
    ConstraintKind.HYPO_TEAM_GOOD: 0.5,
    ConstraintKind.HYPO_ROLE_IN: 0.2,
    ConstraintKind.HYPO_TEAM_EVIL: 0.1,
}


class ParseError(EngineError):
    """Typed rejection of an invalid document (code + human message)."""


def _fail(code: str, message: str, detail: object = None):
    raise ParseError(code, message, detail)


def _as_str(value, what: str) -> str:
    if not isinstance(value, str) or not value:
        _fail("BAD_ARGS", f"{what} must be a non-empty string")
    return value


def _as_str_list(value, what: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        _fail("BAD_ARGS", f"{what} must be an array of strings")
    return tuple(value)


def parse_constraint_object(
    obj, config: GameConfig, expected_class: Optional[ConstraintClass] = None,
    round_index: int = 0, where: str = "constraint",
) -> Constraint:
    """Parse one {"type": ..., "args": {...}} object into a bound Constraint."""
    if not isinstance(obj, Mapping):
        _fail("MALFORMED", f"{where}: expected an object")
    if "type" not in obj:
        _fail("MALFORMED", f"{where}: missing 'type'")
    try:
        kind = ConstraintKind(obj["type"])
    except ValueError:
        _fail("UNKNOWN_KIND", f"{where}: unknown constraint type {obj['type']!r}")
    cls = class_of_kind(kind)
    if expected_class is not None and cls is not expected_class:
        _fail(
            "MALFORMED",
            f"{where}: {kind.value} is {cls.value} and cannot appear in this array",
        )
    args = obj.get("args")
    if not isinstance(args, Mapping):
        _fail("MALFORMED", f"{where}: missing 'args' object")

    fields: dict[str, object] = {}
    for json_key, field in _ARG_SCHEMA[kind]:
        if json_key not in args:
            _fail("BAD_ARGS", f"{where}: {kind.value} requires arg '{json_key}'")
        raw = args[json_key]
        if field in ("roles", "team"):
            fields[field] = _as_str_list(raw, f"{kind.value}.{json_key}")
        elif field == "min_count":
            if isinstance(raw, bool) or not isinstance(raw, int):
                _fail("BAD_ARGS", f"{where}: {kind.value}.min must be an integer")
            fields[field] = raw
        else:
            fields[field] = _as_str(raw, f"{kind.value}.{json_key}")
    # unknown extra arg keys are ignored for forward compatibility

    weight = obj.get("weight")
    auto_weight = obj.get("auto_weight", False)
    if weight is not None:
        if cls is not ConstraintClass.HYPOTHESIS:
            _fail("BAD_ARGS", f"{where}: weight is only valid on hypotheses")
        if isinstance(weight, bool) or not isinstance(weight, (int, float)):
            _fail("BAD_ARGS", f"{where}: weight must be a number")
    if not isinstance(auto_weight, bool):
        _fail("BAD_ARGS", f"{where}: auto_weight must be a boolean")
    if cls is ConstraintClass.HYPOTHESIS and weight is None and not auto_weight:
        weight = DEFAULT_MANUAL_WEIGHTS[kind]

    try:
        constraint = Constraint(
            kind=kind,
            weight=float(weight) if weight is not None else None,
            auto_weight=auto_weight,
            round_index=round_index,
            **fields,
        )
    except ModelError as err:
        _fail("BAD_ARGS", f"{where}: {err}")
    problems = constraint_violations(config, constraint)
    if problems:
        code, message = problems[0]
        _fail(code, f"{where}: {message}", [m for _, m in problems])
    return constraint


def parse_constraint_document(
    text: Union[str, bytes], config: GameConfig, round_index: int = 0
) -> ConstraintSet:
    """Parse a full four-array document, validating every entry against config."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError:
            _fail("MALFORMED", "document is not valid UTF-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        _fail("MALFORMED", f"invalid JSON: {err}")
    return constraint_set_from_document(doc, config, round_index)


def constraint_set_from_document(
    doc, config: GameConfig, round_index: int = 0
) -> ConstraintSet:
    if not isinstance(doc, Mapping):
        _fail("MALFORMED", "document must be a single JSON object")
    for key in DOCUMENT_KEYS:
        if key not in doc:
            _fail("MALFORMED", f"missing required key '{key}'")
        if not isinstance(doc[key], list):
            _fail("MALFORMED", f"'{key}' must be an array")
    extra = set(doc) - set(DOCUMENT_KEYS)
    if extra:
        _fail("MALFORMED", f"unknown top-level keys: {sorted(extra)}")
    buckets = {}
    for key in DOCUMENT_KEYS:
        buckets[key] = tuple(
            parse_constraint_object(
                entry, config, _KEY_TO_CLASS[key], round_index, where=f"{key}[{i}]"
            )
            for i, entry in enumerate(doc[key])
        )
    return ConstraintSet(**buckets)


def constraint_to_object(c: Constraint) -> dict:
    args = {}
    for json_key, field in _ARG_SCHEMA[c.kind]:
        value = getattr(c, field)
        args[json_key] = list(value) if isinstance(value, tuple) else value
    obj: dict = {"type": c.kind.value, "args": args}
    if c.auto_weight:
        obj["auto_weight"] = True
    elif c.weight is not None:
        obj["weight"] = c.weight
    return obj


def constraint_set_to_document(cset: ConstraintSet) -> dict:
    return {
        "evidence": [constraint_to_object(c) for c in cset.evidence],
        "phenomenon": [constraint_to_object(c) for c in cset.phenomenon],
        "assertions": [constraint_to_object(c) for c in cset.assertions],
        "hypotheses": [constraint_to_object(c) for c in cset.hypotheses],
    }


def serialize_constraint_set(cset: ConstraintSet) -> bytes:
    """UTF-8 bytes with fixed key order; stable across repeated round trips."""
    doc = constraint_set_to_document(cset)
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


# ---------------------------------------------------------------------------
# Config / world / settings documents
# ---------------------------------------------------------------------------

def config_from_document(doc) -> GameConfig:
    if not isinstance(doc, Mapping):
        _fail("MALFORMED", "config must be an object")
    players = doc.get("players")
    roles = doc.get("roles")
    if not isinstance(players, list) or not all(isinstance(p, str) for p in players):
        _fail("MALFORMED", "config.players must be an array of strings")
    if not isinstance(roles, list):
        _fail("MALFORMED", "config.roles must be an array")
    specs = []
    for i, entry in enumerate(roles):
        if not isinstance(entry, Mapping):
            _fail("MALFORMED", f"config.roles[{i}] must be an object")
        name = entry.get("name")
        count = entry.get("count")
        alignment = entry.get("alignment")
        if not isinstance(name, str) or isinstance(count, bool) or not isinstance(count, int):
            _fail("MALFORMED", f"config.roles[{i}] needs string name and integer count")
        try:
            specs.append(RoleSpec(name, count, Alignment(alignment)))
        except ValueError:
            _fail("MALFORMED", f"config.roles[{i}].alignment must be GOOD or EVIL")
    kind_raw = doc.get("game_kind", "CUSTOM")
    try:
        kind = GameKind(kind_raw)
    except ValueError:
        _fail("MALFORMED", f"unknown game_kind {kind_raw!r}")
    try:
        return GameConfig(tuple(players), tuple(specs), kind)
    except ModelError as err:
        raise ParseError(err.code, str(err), err.codes) from None


def config_to_document(config: GameConfig) -> dict:
    return {
        "players": list(config.players),
        "roles": [
            {"name": r.name, "count": r.count, "alignment": r.alignment.value}
            for r in config.roles
        ],
        "game_kind": config.game_kind.value,
    }


def parse_game_config(text: Union[str, bytes]) -> GameConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        _fail("MALFORMED", f"invalid JSON: {err}")
    return config_from_document(doc)


def world_from_document(doc, config: GameConfig) -> World:
    if not isinstance(doc, Mapping) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in doc.items()
    ):
        _fail("MALFORMED", "world must be an object mapping player to role")
    world = World.from_assignment(doc)
    codes = world_violations(config, world)
    if codes:
        _fail(codes[0], f"invalid world: {', '.join(codes)}")
    return world


def world_to_document(world: World) -> dict:
    return world.as_dict


_SETTINGS_FIELDS = (
    "preset", "assertion_weight", "w_strong", "w_mid", "w_low", "ig_scale", "global_scale",
)


def settings_from_document(doc, base: Optional[SolverSettings] = None) -> SolverSettings:
    if not isinstance(doc, Mapping):
        _fail("MALFORMED", "settings must be an object")
    base = base or SolverSettings()
    extra = set(doc) - set(_SETTINGS_FIELDS)
    if extra:
        _fail("MALFORMED", f"unknown settings keys: {sorted(extra)}")
    values = {name: getattr(base, name) for name in _SETTINGS_FIELDS}
    if "preset" in doc:
        try:
            values["preset"] = Preset(str(doc["preset"]).upper())
        except ValueError:
            _fail("MALFORMED", f"unknown preset {doc['preset']!r}")
    for name in _SETTINGS_FIELDS[1:]:
        if name in doc:
            raw = doc[name]
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                _fail("MALFORMED", f"settings.{name} must be a number")
            values[name] = float(raw)
    try:
        return SolverSettings(**values)
    except ModelError as err:
        raise ParseError(err.code, str(err), err.codes) from None


def settings_to_document(settings: SolverSettings) -> dict:
    return {
        "preset": settings.preset.value,
        "assertion_weight": settings.assertion_weight,
        "w_strong": settings.w_strong,
        "w_mid": settings.w_mid,
        "w_low": settings.w_low,
        "ig_scale": settings.ig_scale,
        "global_scale": settings.global_scale,
    }
