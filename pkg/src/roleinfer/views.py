"""Perspective evidence: the hard knowledge a given seat starts the game with.

A view is expressed entirely through the role_is / role_in grammar so the
solver needs no special handling. The objective view knows nothing; a role
view always pins the viewer's own role, and the informed roles add more:
merlin sees which players are evil, percival sees the merlin/morgana
candidate pair, and every evil player sees their fellow evils.
"""

from __future__ import annotations

from typing import Optional

from .model import (
    Alignment,
    Constraint,
    ConstraintClass,
    ConstraintKind,
    EngineError,
    GameConfig,
    View,
    ViewKind,
    World,
    world_violations,
)

OBJECTIVE = "objective"


class ViewError(EngineError):
    pass


def parse_view_spec(spec: str) -> tuple[Optional[str], Optional[str]]:
    """'objective' -> (None, None); 'role' or 'role:viewer' -> (role, viewer?)."""
    spec = spec.strip()
    if spec.lower() == OBJECTIVE:
        return None, None
    if ":" in spec:
        role, viewer = spec.split(":", 1)
        return role.strip(), viewer.strip()
    return spec, None


def build_view(
    config: GameConfig,
    truth: Optional[World] = None,
    role: Optional[str] = None,
    viewer: Optional[str] = None,
) -> View:
    """Construct the view for a seat, deriving its private knowledge from truth.

    With role=None this is the objective view and needs no truth. Otherwise
    truth must be a valid world for the config; viewer defaults to the first
    player (config order) whose true role matches, and must actually hold
    the role.
    """
    if role is None:
        return View()
    if truth is None:
        raise ViewError("BAD_VIEW", "a role view needs the truth world")
    if world_violations(config, truth):
        raise ViewError("BAD_VIEW", "truth world is not valid for this config")
    try:
        config.role_index(role)
    except KeyError:
        raise ViewError("UNKNOWN_NAME", f"unknown role '{role}'") from None
    if viewer is None:
        for p in config.players:
            if truth.role_of(p) == role:
                viewer = p
                break
        if viewer is None:
            raise ViewError("VIEWER_ROLE_MISMATCH", f"no player holds role '{role}'")
    if viewer not in config.players:
        raise ViewError("UNKNOWN_NAME", f"unknown player '{viewer}'")
    if truth.role_of(viewer) != role:
        raise ViewError(
            "VIEWER_ROLE_MISMATCH",
            f"{viewer} holds '{truth.role_of(viewer)}', not '{role}'",
        )

    knowledge = [Constraint(ConstraintKind.ROLE_IS, player=viewer, role=role)]
    evil_roles = config.evil_roles
    low = role.lower()
    if low == "merlin":
        # every truly evil player is known to be evil
        for p in config.players:
            if config.is_evil(truth, p):
                knowledge.append(
                    Constraint(ConstraintKind.ROLE_IN, player=p, roles=evil_roles)
                )
    elif low == "percival":
        candidates = tuple(
            r for r in config.role_names if r.lower() in ("merlin", "morgana")
        )
        for p in config.players:
            if truth.role_of(p) in candidates:
                knowledge.append(
                    Constraint(ConstraintKind.ROLE_IN, player=p, roles=candidates)
                )
    elif config.alignment_of(role) is Alignment.EVIL:
        # fellow evils reveal each other
        for p in config.players:
            if p != viewer and config.is_evil(truth, p):
                knowledge.append(
                    Constraint(ConstraintKind.ROLE_IN, player=p, roles=evil_roles)
                )
    return View(kind=ViewKind.ROLE, viewer=viewer, role=role, knowledge=tuple(knowledge))


def view_to_document(view: View) -> dict:
    from .grammar import constraint_to_object

    if view.kind is ViewKind.OBJECTIVE:
        return {"kind": "objective"}
    return {
        "kind": "role",
        "role": view.role,
        "viewer": view.viewer,
        "knowledge": [constraint_to_object(c) for c in view.knowledge],
    }


def view_from_document(doc, config: GameConfig) -> View:
    """Build a View from a client-supplied document (live mode, no truth).

    The viewer's own role pin is injected if the knowledge list omits it.
    """
    from .grammar import ParseError, parse_constraint_object

    if not isinstance(doc, dict) or "kind" not in doc:
        raise ParseError("MALFORMED", "view must be an object with a 'kind'")
    kind = str(doc["kind"]).lower()
    if kind == "objective":
        return View()
    if kind != "role":
        raise ParseError("MALFORMED", f"unknown view kind {doc['kind']!r}")
    role = doc.get("role")
    viewer = doc.get("viewer")
    if not isinstance(role, str) or not isinstance(viewer, str):
        raise ParseError("MALFORMED", "role view needs 'role' and 'viewer'")
    if viewer not in config.players:
        raise ParseError("UNKNOWN_NAME", f"unknown player '{viewer}'")
    if role not in config.role_names:
        raise ParseError("UNKNOWN_NAME", f"unknown role '{role}'")
    knowledge = [
        parse_constraint_object(
            entry, config, ConstraintClass.EVIDENCE, where=f"knowledge[{i}]"
        )
        for i, entry in enumerate(doc.get("knowledge", []))
    ]
    pin = Constraint(ConstraintKind.ROLE_IS, player=viewer, role=role)
    if pin not in knowledge:
        knowledge.insert(0, pin)
    return View(kind=ViewKind.ROLE, viewer=viewer, role=role, knowledge=tuple(knowledge))
