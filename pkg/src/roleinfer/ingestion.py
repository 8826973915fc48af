"""Turning raw game material into per-round constraint sets.

Three routes in: programmatic extraction from structured event logs
(proposals, votes, quest outcomes, night kills, assassinations), loading
of pre-extracted constraint documents from disk, and a pluggable chat
transcript extraction client that talks to a chat-completion endpoint and
validates its output through the strict document parser.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

import requests

from .grammar import (
    ParseError,
    config_from_document,
    config_to_document,
    constraint_set_from_document,
    constraint_set_to_document,
    world_from_document,
    world_to_document,
)
from .model import (
    Constraint,
    ConstraintKind,
    ConstraintSet,
    EngineError,
    GameConfig,
    GameKind,
    World,
    world_violations,
)


class IngestionError(EngineError):
    pass


class Condition(str, Enum):
    TRUTH = "TRUTH"
    LIE = "LIE"


class VoteValue(str, Enum):
    YES = "YES"
    NO = "NO"


@dataclass(frozen=True)
class Proposal:
    proposer: str
    team: tuple[str, ...]


@dataclass(frozen=True)
class Vote:
    """A vote either on a proposed team (Avalon) or on a lynch target (Mafia)."""

    voter: str
    value: VoteValue
    team: Optional[tuple[str, ...]] = None
    target: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "value", VoteValue(self.value))
        if self.team is not None:
            object.__setattr__(self, "team", tuple(self.team))
        if (self.team is None) == (self.target is None):
            raise IngestionError("BAD_RECORD", "vote needs exactly one of team/target")


@dataclass(frozen=True)
class QuestResult:
    team: tuple[str, ...]
    fail_count: int

    def __post_init__(self):
        object.__setattr__(self, "team", tuple(self.team))
        if not 0 <= self.fail_count <= len(self.team):
            raise IngestionError("BAD_RECORD", "fail_count must lie in [0, |team|]")


@dataclass(frozen=True)
class Assassination:
    killer: str
    target: str
    hit: bool


@dataclass(frozen=True)
class RoundEvents:
    """Everything observed in one temporal block (a quest or a day/night cycle).

    claims optionally carries dialogue-derived constraints for the round as a
    pre-extracted constraint document (the output shape of the extraction
    pipeline), so replay does not depend on a live extraction endpoint.
    """

    index: int
    proposals: tuple[Proposal, ...] = ()
    votes: tuple[Vote, ...] = ()
    quest_result: Optional[QuestResult] = None
    night_kill: Optional[str] = None
    lynch_reveal: Optional[tuple[str, str]] = None
    assassination: Optional[Assassination] = None
    chat: tuple[tuple[str, str], ...] = ()
    claims: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "proposals", tuple(self.proposals))
        object.__setattr__(self, "votes", tuple(self.votes))
        object.__setattr__(self, "chat", tuple(tuple(line) for line in self.chat))
        if self.lynch_reveal is not None:
            object.__setattr__(self, "lynch_reveal", tuple(self.lynch_reveal))
        if self.index < 0:
            raise IngestionError("BAD_RECORD", "round index must be nonnegative")
        if self.quest_result is not None and self.night_kill is not None:
            raise IngestionError(
                "BAD_RECORD", "a round holds either a quest result or a night kill"
            )


@dataclass(frozen=True)
class GameRecord:
    config: GameConfig
    rounds: tuple[RoundEvents, ...]
    truth: Optional[World] = None
    condition: Optional[Condition] = None
    game_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise IngestionError("BAD_RECORD", "record has no rounds")
        if self.condition is not None:
            object.__setattr__(self, "condition", Condition(self.condition))
        if self.truth is not None:
            codes = world_violations(self.config, self.truth)
            if codes:
                raise IngestionError("BAD_RECORD", f"truth world invalid: {codes}")


# ---------------------------------------------------------------------------
# Programmatic event extraction
# ---------------------------------------------------------------------------

def _require_names(config: GameConfig, names: Sequence[str], what: str):
    for name in names:
        if name not in config.players:
            raise IngestionError("BAD_RECORD", f"{what}: unknown player '{name}'")


def extract_avalon_events(record: GameRecord) -> list[ConstraintSet]:
    """Per-round constraints from Avalon event logs.

    Proposals and YES votes become team-good hypotheses (strong/low weight),
    NO votes become team-evil hypotheses (low weight), failed quests become
    evil_at_least phenomena, and an assassination resolves into two pieces
    of hard evidence about the killer and the target.
    """
    config = record.config
    if config.game_kind is not GameKind.AVALON:
        raise IngestionError("BAD_RECORD", "extract_avalon_events needs an AVALON config")
    role_names = set(config.role_names)
    out = []
    for rnd in record.rounds:
        constraints: list[Constraint] = []
        k = rnd.index
        for prop in rnd.proposals:
            _require_names(config, (prop.proposer, *prop.team), f"round {k} proposal")
            constraints.append(
                Constraint(
                    ConstraintKind.HYPO_TEAM_GOOD,
                    speaker=prop.proposer,
                    team=prop.team,
                    weight=0.5,
                    round_index=k,
                )
            )
        for vote in rnd.votes:
            if vote.team is None:
                raise IngestionError("BAD_RECORD", f"round {k}: avalon votes target teams")
            _require_names(config, (vote.voter, *vote.team), f"round {k} vote")
            kind = (
                ConstraintKind.HYPO_TEAM_GOOD
                if vote.value is VoteValue.YES
                else ConstraintKind.HYPO_TEAM_EVIL
            )
            constraints.append(
                Constraint(kind, speaker=vote.voter, team=vote.team, weight=0.1, round_index=k)
            )
        if rnd.quest_result is not None and rnd.quest_result.fail_count >= 1:
            _require_names(config, rnd.quest_result.team, f"round {k} quest")
            constraints.append(
                Constraint(
                    ConstraintKind.EVIL_AT_LEAST,
                    team=rnd.quest_result.team,
                    min_count=rnd.quest_result.fail_count,
                    round_index=k,
                )
            )
        if rnd.assassination is not None:
            a = rnd.assassination
            _require_names(config, (a.killer, a.target), f"round {k} assassination")
            if "assassin" not in role_names or "merlin" not in role_names:
                raise IngestionError("BAD_RECORD", "assassination needs assassin and merlin roles")
            constraints.append(
                Constraint(ConstraintKind.ROLE_IS, player=a.killer, role="assassin", round_index=k)
            )
            constraints.append(
                Constraint(
                    ConstraintKind.ROLE_IS if a.hit else ConstraintKind.ROLE_NOT,
                    player=a.target,
                    role="merlin",
                    round_index=k,
                )
            )
        out.append(ConstraintSet.from_constraints(constraints))
    return out


def extract_mafia_events(record: GameRecord) -> list[ConstraintSet]:
    """Per-round constraints from Mafia event logs.

    A night kill is hard evidence the victim was a bystander; lynch votes
    become per-player role hypotheses; a revealed lynch result is hard
    evidence of the eliminated player's role.
    """
    config = record.config
    if config.game_kind is not GameKind.MAFIA:
        raise IngestionError("BAD_RECORD", "extract_mafia_events needs a MAFIA config")
    if "bystander" not in config.role_names:
        raise IngestionError("BAD_RECORD", "mafia extraction needs a 'bystander' role")
    out = []
    for rnd in record.rounds:
        constraints: list[Constraint] = []
        k = rnd.index
        if rnd.night_kill is not None:
            _require_names(config, (rnd.night_kill,), f"round {k} night kill")
            constraints.append(
                Constraint(
                    ConstraintKind.ROLE_IS, player=rnd.night_kill, role="bystander", round_index=k
                )
            )
        for vote in rnd.votes:
            if vote.target is None:
                raise IngestionError("BAD_RECORD", f"round {k}: mafia votes target players")
            _require_names(config, (vote.voter, vote.target), f"round {k} vote")
            label = "mafia" if vote.value is VoteValue.YES else "bystander"
            constraints.append(
                Constraint(
                    ConstraintKind.HYPO_ROLE_IN,
                    speaker=vote.voter,
                    target=vote.target,
                    set_label=label,
                    weight=0.2,
                    round_index=k,
                )
            )
        if rnd.lynch_reveal is not None:
            player, role = rnd.lynch_reveal
            _require_names(config, (player,), f"round {k} lynch reveal")
            if role not in config.role_names:
                raise IngestionError("BAD_RECORD", f"round {k}: unknown role '{role}'")
            constraints.append(
                Constraint(ConstraintKind.ROLE_IS, player=player, role=role, round_index=k)
            )
        out.append(ConstraintSet.from_constraints(constraints))
    return out


def extract_events(record: GameRecord) -> list[ConstraintSet]:
    if record.config.game_kind is GameKind.AVALON:
        return extract_avalon_events(record)
    if record.config.game_kind is GameKind.MAFIA:
        return extract_mafia_events(record)
    raise IngestionError("BAD_RECORD", "programmatic extraction needs AVALON or MAFIA")


def record_constraint_rounds(record: GameRecord) -> list[ConstraintSet]:
    """Event-derived constraints merged with each round's pre-extracted claims."""
    per_round = extract_events(record)
    merged = []
    for rnd, events in zip(record.rounds, per_round):
        if rnd.claims is not None:
            claims = constraint_set_from_document(rnd.claims, record.config, rnd.index)
            merged.append(ConstraintSet.merge(events, claims))
        else:
            merged.append(events)
    return merged


# ---------------------------------------------------------------------------
# Constraint-round fixtures on disk
# ---------------------------------------------------------------------------

_ROUND_FILE = re.compile(r"^round-(\d+)\.json$")


def load_constraint_rounds(directory: Union[str, Path], config: GameConfig) -> list[ConstraintSet]:
    """Parse round-<k>.json files (k = 1..N, contiguous) in round order."""
    directory = Path(directory)
    found: dict[int, Path] = {}
    for path in directory.iterdir():
        m = _ROUND_FILE.match(path.name)
        if m:
            found[int(m.group(1))] = path
    if not found:
        return []
    expected = set(range(1, max(found) + 1))
    missing = sorted(expected - set(found))
    if missing:
        raise IngestionError(
            "MISSING_ROUND", f"missing round file(s): {', '.join(f'round-{k}.json' for k in missing)}"
        )
    out = []
    for k in sorted(found):
        try:
            text = found[k].read_bytes()
            out.append(
                constraint_set_from_document(json.loads(text), config, round_index=k)
            )
        except (ParseError, json.JSONDecodeError) as err:
            raise IngestionError(
                getattr(err, "code", "MALFORMED"), f"{found[k].name}: {err}"
            ) from err
    return out


# ---------------------------------------------------------------------------
# Game record files
# ---------------------------------------------------------------------------

def record_to_document(record: GameRecord) -> dict:
    rounds = []
    for rnd in record.rounds:
        doc: dict = {"index": rnd.index}
        if rnd.proposals:
            doc["proposals"] = [
                {"proposer": p.proposer, "team": list(p.team)} for p in rnd.proposals
            ]
        if rnd.votes:
            doc["votes"] = [
                {
                    "voter": v.voter,
                    "value": v.value.value,
                    **({"team": list(v.team)} if v.team is not None else {"target": v.target}),
                }
                for v in rnd.votes
            ]
        if rnd.quest_result is not None:
            doc["quest_result"] = {
                "team": list(rnd.quest_result.team),
                "fail_count": rnd.quest_result.fail_count,
            }
        if rnd.night_kill is not None:
            doc["night_kill"] = rnd.night_kill
        if rnd.lynch_reveal is not None:
            doc["lynch_reveal"] = {"player": rnd.lynch_reveal[0], "role": rnd.lynch_reveal[1]}
        if rnd.assassination is not None:
            doc["assassination"] = {
                "killer": rnd.assassination.killer,
                "target": rnd.assassination.target,
                "hit": rnd.assassination.hit,
            }
        if rnd.chat:
            doc["chat"] = [{"speaker": s, "text": t} for s, t in rnd.chat]
        if rnd.claims is not None:
            doc["claims"] = rnd.claims
        rounds.append(doc)
    out: dict = {"config": config_to_document(record.config), "rounds": rounds}
    if record.truth is not None:
        out["truth"] = world_to_document(record.truth)
    if record.condition is not None:
        out["condition"] = record.condition.value
    if record.game_id:
        out["game_id"] = record.game_id
    return out


def record_from_document(doc, game_id: str = "") -> GameRecord:
    try:
        config = config_from_document(doc["config"])
        rounds = []
        for rdoc in doc["rounds"]:
            votes = []
            for v in rdoc.get("votes", []):
                votes.append(
                    Vote(
                        voter=v["voter"],
                        value=VoteValue(v["value"]),
                        team=tuple(v["team"]) if "team" in v else None,
                        target=v.get("target"),
                    )
                )
            quest = rdoc.get("quest_result")
            lynch = rdoc.get("lynch_reveal")
            assassination = rdoc.get("assassination")
            rounds.append(
                RoundEvents(
                    index=rdoc["index"],
                    proposals=tuple(
                        Proposal(p["proposer"], tuple(p["team"]))
                        for p in rdoc.get("proposals", [])
                    ),
                    votes=tuple(votes),
                    quest_result=QuestResult(tuple(quest["team"]), quest["fail_count"])
                    if quest
                    else None,
                    night_kill=rdoc.get("night_kill"),
                    lynch_reveal=(lynch["player"], lynch["role"]) if lynch else None,
                    assassination=Assassination(
                        assassination["killer"], assassination["target"], assassination["hit"]
                    )
                    if assassination
                    else None,
                    chat=tuple((c["speaker"], c["text"]) for c in rdoc.get("chat", [])),
                    claims=rdoc.get("claims"),
                )
            )
        truth = world_from_document(doc["truth"], config) if "truth" in doc else None
        condition = Condition(doc["condition"]) if "condition" in doc else None
        return GameRecord(
            config=config,
            rounds=tuple(rounds),
            truth=truth,
            condition=condition,
            game_id=doc.get("game_id", game_id),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise IngestionError("BAD_RECORD", f"malformed game record: {err!r}") from err


def write_game_record(record: GameRecord, path: Union[str, Path]):
    Path(path).write_text(
        json.dumps(record_to_document(record), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def read_game_record(path: Union[str, Path]) -> GameRecord:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise IngestionError("BAD_RECORD", f"{path.name}: invalid JSON: {err}") from err
    return record_from_document(doc, game_id=path.stem)


def read_game_records(directory: Union[str, Path]) -> list[GameRecord]:
    directory = Path(directory)
    records = []
    for path in sorted(directory.glob("*.json")):
        records.append(read_game_record(path))
    return records


# ---------------------------------------------------------------------------
# Transcript extraction via a chat-completion endpoint
# ---------------------------------------------------------------------------

API_KEY_ENV = "ROLEINFER_API_KEY"

_PROMPT_FILES = {GameKind.AVALON: "avalon.txt", GameKind.MAFIA: "mafia.txt"}


def extraction_prompt(template: GameKind) -> str:
    name = _PROMPT_FILES.get(GameKind(template))
    if name is None:
        raise IngestionError("BAD_RECORD", f"no extraction template for {template}")
    return resources.files("roleinfer.prompts").joinpath(name).read_text(encoding="utf-8")


class ExtractionClient(Protocol):
    """Narrow seam so tests (and offline runs) can substitute the transport."""

    def send(self, prompt: str, transcript: str) -> str: ...


class HttpChatCompletionClient:
    """Chat-completion HTTP transport (temperature 0, key from environment)."""

    def __init__(
        self,
        endpoint: str,
        model: str = "gpt-4.1-mini",
        api_key_env: str = API_KEY_ENV,
        timeout: float = 60.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout

    def send(self, prompt: str, transcript: str) -> str:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.model,
            "temperature": 0.0,
            "messages": [
                {"role": "system", "content": prompt},
                {"role": "user", "content": transcript},
            ],
        }
        try:
            response = requests.post(
                f"{self.endpoint}/chat/completions", json=body,
                headers=headers, timeout=self.timeout,
            )
            response.raise_for_status()
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as err:
            raise IngestionError("ENDPOINT_ERROR", f"extraction endpoint failed: {err}") from err


def extract_via_llm(
    transcript: str,
    template: GameKind,
    client: ExtractionClient,
    config: GameConfig,
    round_index: int = 0,
    retries: int = 4,
    backoff: float = 0.0,
) -> ConstraintSet:
    """Extract one round's constraints from a transcript, retrying on bad output.

    Makes at most retries+1 attempts; malformed documents and endpoint
    failures both consume attempts. Raises EXTRACTION_INVALID when the last
    failure was a parse problem, ENDPOINT_ERROR when it was transport.
    """
    prompt = extraction_prompt(template)
    last: Optional[Exception] = None
    for attempt in range(retries + 1):
        if attempt and backoff:
            time.sleep(backoff * attempt)
        try:
            text = client.send(prompt, transcript)
        except IngestionError as err:
            last = err
            continue
        try:
            return constraint_set_from_document(json.loads(text), config, round_index)
        except (ParseError, json.JSONDecodeError) as err:
            last = err
            continue
    if isinstance(last, IngestionError):
        raise IngestionError("ENDPOINT_ERROR", f"all attempts failed: {last}") from last
    raise IngestionError(
        "EXTRACTION_INVALID", f"no valid constraint document after {retries + 1} attempts: {last}"
    ) from last
