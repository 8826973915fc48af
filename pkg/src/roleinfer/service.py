"""Session-oriented HTTP facade for live decision support.

Clients create a session from a game config, a preset, and their view,
then post constraint documents round by round and read back posteriors,
run non-mutating what-if info-gain queries, and undo mistakes. Sessions
live in memory (optionally snapshotted to disk, one JSON document per
session); mutations within a session are serialized, reads see a
consistent revision, and identical revisions yield identical responses.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import solver
from .grammar import (
    ParseError,
    config_from_document,
    config_to_document,
    constraint_set_from_document,
    constraint_to_object,
    settings_from_document,
    settings_to_document,
)
from .model import (
    Constraint,
    ConstraintClass,
    ConstraintSet,
    EngineError,
    GameConfig,
    ModelError,
    Posterior,
    SolverSettings,
    View,
)
from .solver import InfeasibleError
from .views import view_from_document, view_to_document

DEFAULT_TOP_K = 5


@dataclass
class Session:
    """One live game being tracked; all mutation happens under the lock."""

    id: str
    config: GameConfig
    settings: SolverSettings
    view: View
    rounds: dict[int, list[Constraint]] = field(default_factory=dict)
    journal: list[tuple[int, int]] = field(default_factory=list)  # (round, count) batches
    revision: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def constraint_set(self, upto: Optional[int] = None) -> ConstraintSet:
        constraints = []
        for k in sorted(self.rounds):
            if upto is None or k <= upto:
                constraints.extend(self.rounds[k])
        return ConstraintSet.from_constraints(constraints)

    def current_round(self, upto: Optional[int] = None) -> int:
        rounds = [k for k in self.rounds if upto is None or k <= upto]
        return max(rounds, default=0 if upto is None else upto)


def _error_payload(code: str, message: str, detail=None) -> dict:
    body: dict = {"code": code, "message": message}
    if detail is not None:
        body["detail"] = detail
    return body


def _offending_detail(err: InfeasibleError):
    if err.constraint is None:
        return None
    return {
        "constraint": constraint_to_object(err.constraint),
        "round": err.constraint.round_index,
    }


def _marginals_payload(config: GameConfig, post: Posterior) -> dict:
    return {
        "players": list(config.players),
        "roles": list(config.role_names),
        "matrix": [[float(x) for x in row] for row in post.marginals],
    }


def _posterior_payload(session: Session, post: Posterior, top_k: int) -> dict:
    return {
        "session_id": session.id,
        "revision": session.revision,
        "marginals": _marginals_payload(session.config, post),
        "map_world": post.map_world.as_dict,
        "entropy_bits": post.entropy_bits,
        "feasible_count": post.feasible_count,
        "top_worlds": [
            {"world": w.as_dict, "score": s, "probability": p}
            for w, s, p in post.top_worlds(top_k)
        ],
    }


def _hard_feasibility(session: Session) -> Optional[InfeasibleError]:
    """Probe whether the session's hard constraints still admit a world."""
    try:
        solver.posterior(
            session.config,
            session.constraint_set(),
            replace(session.settings, preset="STRICT"),
            view=session.view,
            current_round=session.current_round(),
        )
        return None
    except InfeasibleError as err:
        return err


def _restore_sessions(snapshot_path: Path) -> dict[str, Session]:
    """Rehydrate previously snapshotted sessions; unreadable files are skipped."""
    from .grammar import parse_constraint_object

    sessions: dict[str, Session] = {}
    for path in sorted(snapshot_path.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            config = config_from_document(doc["config"])
            session = Session(
                id=doc["id"],
                config=config,
                settings=settings_from_document(doc.get("settings", {})),
                view=view_from_document(doc.get("view", {"kind": "objective"}), config),
                revision=int(doc.get("revision", 0)),
            )
            for key, entries in sorted(doc.get("rounds", {}).items(), key=lambda kv: int(kv[0])):
                round_index = int(key)
                session.rounds[round_index] = [
                    parse_constraint_object(obj, config, None, round_index, where=path.name)
                    for obj in entries
                ]
                if session.rounds[round_index]:
                    session.journal.append((round_index, len(session.rounds[round_index])))
            sessions[session.id] = session
        except (EngineError, KeyError, TypeError, ValueError, json.JSONDecodeError):
            continue
    return sessions


def create_app(snapshot_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="roleinfer service")
    snapshot_path = Path(snapshot_dir) if snapshot_dir else None
    sessions: dict[str, Session] = (
        _restore_sessions(snapshot_path)
        if snapshot_path is not None and snapshot_path.is_dir()
        else {}
    )
    store_lock = threading.Lock()

    def save_snapshot(session: Session):
        if snapshot_path is None:
            return
        snapshot_path.mkdir(parents=True, exist_ok=True)
        doc = {
            "id": session.id,
            "config": config_to_document(session.config),
            "settings": settings_to_document(session.settings),
            "view": view_to_document(session.view),
            "rounds": {
                str(k): [constraint_to_object(c) for c in cs]
                for k, cs in session.rounds.items()
            },
            "revision": session.revision,
        }
        (snapshot_path / f"{session.id}.json").write_text(
            json.dumps(doc, indent=2) + "\n", encoding="utf-8"
        )

    def get_session(session_id: str) -> Optional[Session]:
        with store_lock:
            return sessions.get(session_id)

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, err: EngineError):
        status = 400
        if isinstance(err, InfeasibleError):
            status = 409
        return JSONResponse(
            status_code=status,
            content=_error_payload(err.code, str(err)),
        )

    @app.post("/sessions")
    def create_session(body: dict):
        if not isinstance(body, dict) or "config" not in body:
            return JSONResponse(
                status_code=400,
                content=_error_payload("MALFORMED", "body needs a 'config' object"),
            )
        try:
            config = config_from_document(body["config"])
            settings = settings_from_document(body.get("settings", {}))
            view = (
                view_from_document(body["view"], config)
                if "view" in body
                else View()
            )
        except (ParseError, ModelError) as err:
            return JSONResponse(
                status_code=400, content=_error_payload(err.code, str(err))
            )
        session = Session(
            id=uuid.uuid4().hex, config=config, settings=settings, view=view
        )
        with store_lock:
            sessions[session.id] = session
        save_snapshot(session)
        return {"session_id": session.id, "revision": session.revision}

    @app.get("/sessions/{session_id}")
    def describe_session(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(
                status_code=404, content=_error_payload("UNKNOWN_SESSION", session_id)
            )
        with session.lock:
            return {
                "session_id": session.id,
                "revision": session.revision,
                "config": config_to_document(session.config),
                "settings": settings_to_document(session.settings),
                "view": view_to_document(session.view),
                "rounds": {str(k): len(v) for k, v in sorted(session.rounds.items())},
            }

    @app.put("/sessions/{session_id}/settings")
    def update_settings(session_id: str, body: dict):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(
                status_code=404, content=_error_payload("UNKNOWN_SESSION", session_id)
            )
        try:
            new_settings = settings_from_document(body, base=session.settings)
        except ParseError as err:
            return JSONResponse(
                status_code=400, content=_error_payload(err.code, str(err))
            )
        with session.lock:
            session.settings = new_settings
            session.revision += 1
            save_snapshot(session)
            return {"session_id": session.id, "revision": session.revision}

    @app.post("/sessions/{session_id}/rounds/{round_index}/constraints")
    def add_constraints(session_id: str, round_index: int, body: dict):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(
                status_code=404, content=_error_payload("UNKNOWN_SESSION", session_id)
            )
        if round_index < 0:
            return JSONResponse(
                status_code=400,
                content=_error_payload("BAD_ARGS", "round index must be nonnegative"),
            )
        try:
            parsed = constraint_set_from_document(body, session.config, round_index)
        except ParseError as err:
            return JSONResponse(
                status_code=400, content=_error_payload(err.code, str(err))
            )
        added = list(parsed.all_constraints())
        if not added:
            return JSONResponse(
                status_code=400,
                content=_error_payload("MALFORMED", "document adds no constraints"),
            )
        with session.lock:
            session.rounds.setdefault(round_index, []).extend(added)
            session.journal.append((round_index, len(added)))
            session.revision += 1
            # contradictions are kept but flagged so the client can undo
            problem = _hard_feasibility(session)
            save_snapshot(session)
            payload: dict = {
                "session_id": session.id,
                "revision": session.revision,
                "added": len(added),
                "infeasible": problem is not None,
            }
            if problem is not None:
                payload["offending"] = _offending_detail(problem)
            return payload

    @app.post("/sessions/{session_id}/undo")
    def undo_last(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(
                status_code=404, content=_error_payload("UNKNOWN_SESSION", session_id)
            )
        with session.lock:
            if not session.journal:
                return JSONResponse(
                    status_code=409,
                    content=_error_payload("NOTHING_TO_UNDO", "no constraints added yet"),
                )
            round_index, count = session.journal.pop()
            bucket = session.rounds[round_index]
            del bucket[len(bucket) - count:]
            if not bucket:
                del session.rounds[round_index]
            session.revision += 1
            save_snapshot(session)
            return {"session_id": session.id, "revision": session.revision}

    @app.get("/sessions/{session_id}/posterior")
    def get_posterior(
        session_id: str, upto: Optional[int] = None, topk: int = DEFAULT_TOP_K
    ):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(
                status_code=404, content=_error_payload("UNKNOWN_SESSION", session_id)
            )
        with session.lock:
            cset = session.constraint_set(upto)
            current = session.current_round(upto)
            settings, config, view = session.settings, session.config, session.view
        try:
            post = solver.posterior(config, cset, settings, view=view, current_round=current)
        except InfeasibleError as err:
            return JSONResponse(
                status_code=409,
                content=_error_payload(err.code, str(err), _offending_detail(err)),
            )
        return _posterior_payload(session, post, topk)

    @app.post("/sessions/{session_id}/whatif")
    def what_if(session_id: str, body: dict):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(
                status_code=404, content=_error_payload("UNKNOWN_SESSION", session_id)
            )
        with session.lock:
            cset = session.constraint_set()
            current = session.current_round()
            settings, config, view = session.settings, session.config, session.view
            revision = session.revision
        try:
            candidate = _parse_single_hypothesis(body, config, current)
        except ParseError as err:
            return JSONResponse(
                status_code=400, content=_error_payload(err.code, str(err))
            )
        try:
            report = solver.info_gain(candidate, config, cset, settings, view=view)
            weighted = replace(
                candidate,
                weight=report.applied_weight / settings.global_scale,
                auto_weight=False,
            )
            preview_cset, preview_settings = _preview_inputs(cset, settings, weighted)
            post = solver.posterior(
                config, preview_cset, preview_settings, view=view, current_round=current
            )
        except solver.SolverError as err:
            status = 409 if err.code in ("INFEASIBLE", "INFEASIBLE_CONTEXT") else 400
            return JSONResponse(status_code=status, content=_error_payload(err.code, str(err)))
        return {
            "session_id": session.id,
            "revision": revision,
            "ig_report": {
                "hypothesis": constraint_to_object(candidate),
                "prior_entropy_bits": report.prior_entropy_bits,
                "posterior_entropy_bits": report.posterior_entropy_bits,
                "ig_bits": report.ig_bits,
                "applied_weight": report.applied_weight,
                "vacuous": report.vacuous,
            },
            "marginals": _marginals_payload(config, post),
            "entropy_bits": post.entropy_bits,
            "feasible_count": post.feasible_count,
        }

    return app


def _preview_inputs(
    cset: ConstraintSet, settings: SolverSettings, weighted: Constraint
) -> tuple[ConstraintSet, SolverSettings]:
    """Constraint set and settings for the what-if preview solve.

    The candidate must be scored even under presets that normally drop
    hypotheses, without dragging the session's inactive soft constraints
    into the preview: under STRICT/ASSERT the preview keeps only whatever
    those presets already activate, plus the candidate at its IG weight.
    """
    from .model import Preset

    if settings.preset in (Preset.STRICT, Preset.ASSERT):
        preview = ConstraintSet(
            evidence=cset.evidence,
            phenomenon=cset.phenomenon,
            assertions=cset.assertions if settings.preset is Preset.ASSERT else (),
            hypotheses=(weighted,),
        )
        return preview, replace(settings, preset=Preset.HYP_M)
    preview = ConstraintSet(
        evidence=cset.evidence,
        phenomenon=cset.phenomenon,
        assertions=cset.assertions,
        hypotheses=cset.hypotheses + (weighted,),
    )
    return preview, settings


def _parse_single_hypothesis(body, config: GameConfig, round_index: int) -> Constraint:
    from .grammar import parse_constraint_object

    if isinstance(body, dict) and "type" in body:
        return parse_constraint_object(
            body, config, ConstraintClass.HYPOTHESIS, round_index, where="candidate"
        )
    if isinstance(body, dict):
        cset = constraint_set_from_document(body, config, round_index)
        hyps = list(cset.hypotheses)
        others = cset.size - len(hyps)
        if len(hyps) != 1 or others:
            raise ParseError("MALFORMED", "what-if takes exactly one hypothesis")
        return hyps[0]
    raise ParseError("MALFORMED", "what-if body must be a constraint object or document")


def serve_app(app: FastAPI, host: str = "127.0.0.1", port: int = 8000):
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")
