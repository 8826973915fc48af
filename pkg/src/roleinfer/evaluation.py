"""Replay, metrics, aggregation, significance tests, and synthetic games.

Replays game records round by round under a preset and a view, computing
marginal accuracy (mean posterior mass on true roles) and MAP accuracy
(fraction of players correct in the most probable world). Round metrics
aggregate per game first, then across games with equal weight. Paired
significance testing uses a Wilcoxon signed-rank test (exact by sign-pattern
enumeration up to n=20) and a paired t-test, both two-sided; an improvement
counts as significant only when both p-values clear the threshold.

The synthetic generator produces seeded, fully labelled game records so the
whole pipeline can be exercised offline.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import stats as scipy_stats

from . import solver
from .ingestion import (
    Assassination,
    Condition,
    GameRecord,
    Proposal,
    QuestResult,
    RoundEvents,
    Vote,
    VoteValue,
)
from .model import (
    Alignment,
    ConstraintSet,
    EngineError,
    GameConfig,
    GameKind,
    Preset,
    RoleSpec,
    SolverSettings,
    World,
)
from .solver import InfeasibleError
from .views import build_view, parse_view_spec


class EvalError(EngineError):
    pass


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoundMetrics:
    round_index: int
    marginal_accuracy: float
    map_accuracy: float
    entropy_bits: float
    feasible_count: int


@dataclass(frozen=True)
class MetricRow:
    """One metrics CSV row: a (game, round, preset, view) cell."""

    game_id: str
    round_index: int
    preset: str
    view: str
    condition: str
    marginal_accuracy: float
    map_accuracy: float
    entropy_bits: float
    feasible_count: int


def marginal_accuracy(config: GameConfig, marginals: np.ndarray, truth: World) -> float:
    """Mean over players of the posterior mass on each player's true role."""
    marginals = np.asarray(marginals)
    if marginals.shape != (len(config.players), len(config.roles)):
        raise EvalError("SHAPE_MISMATCH", f"marginals shape {marginals.shape} does not match config")
    try:
        cols = [config.role_index(truth.role_of(p)) for p in config.players]
    except KeyError as err:
        raise EvalError("SHAPE_MISMATCH", f"truth does not cover player/role {err}") from None
    return float(marginals[np.arange(len(cols)), cols].mean())


def map_accuracy(map_world: World, truth: World) -> float:
    """Fraction of players assigned their true role in the MAP world."""
    if map_world.player_names != truth.player_names:
        raise EvalError("SHAPE_MISMATCH", "worlds cover different player sets")
    players = truth.player_names
    hits = sum(map_world.role_of(p) == truth.role_of(p) for p in players)
    return hits / len(players)


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------

def replay_game(
    record: GameRecord,
    preset: Union[str, Preset],
    view_spec: str,
    settings: Optional[SolverSettings] = None,
) -> list[RoundMetrics]:
    """Solve the record round by round under one preset and view.

    Constraints accumulate across rounds; the preset decides which soft
    constraints enter each solve. View knowledge is derived from the
    record's truth world.
    """
    if record.truth is None:
        raise EvalError("BAD_RECORD", "replay needs a record with a truth world")
    from .ingestion import record_constraint_rounds

    settings = replace(settings or SolverSettings(), preset=Preset(preset))
    role, viewer = parse_view_spec(view_spec)
    view = build_view(record.config, record.truth, role, viewer)
    per_round = record_constraint_rounds(record)

    out = []
    seen: list[ConstraintSet] = []
    for events, rnd in zip(per_round, record.rounds):
        seen.append(events)
        cset = ConstraintSet.merge(*seen)
        try:
            post = solver.posterior(
                record.config, cset, settings, view=view, current_round=rnd.index
            )
        except InfeasibleError as err:
            raise InfeasibleError(
                err.constraint, f"round {rnd.index}: {err}"
            ) from err
        out.append(
            RoundMetrics(
                round_index=rnd.index,
                marginal_accuracy=marginal_accuracy(record.config, post.marginals, record.truth),
                map_accuracy=map_accuracy(post.map_world, record.truth),
                entropy_bits=post.entropy_bits,
                feasible_count=post.feasible_count,
            )
        )
    return out


def replay_records(
    records: Sequence[GameRecord],
    presets: Sequence[Union[str, Preset]],
    views: Sequence[str],
    settings: Optional[SolverSettings] = None,
    sample_one_round: bool = False,
    seed: int = 0,
) -> tuple[list[MetricRow], list[tuple[str, str, str, EngineError]]]:
    """Cross-product replay; failures are collected, not fatal."""
    rows: list[MetricRow] = []
    failures: list[tuple[str, str, str, EngineError]] = []
    for record in records:
        keep_round = None
        if sample_one_round:
            rng = random.Random(f"{seed}:{record.game_id}")
            keep_round = record.rounds[rng.randrange(len(record.rounds))].index
        condition = record.condition.value if record.condition else ""
        for preset in presets:
            preset_name = Preset(preset).value
            for view_spec in views:
                try:
                    metrics = replay_game(record, preset, view_spec, settings)
                except EngineError as err:
                    failures.append((record.game_id, preset_name, view_spec, err))
                    continue
                for m in metrics:
                    if keep_round is not None and m.round_index != keep_round:
                        continue
                    rows.append(
                        MetricRow(
                            game_id=record.game_id,
                            round_index=m.round_index,
                            preset=preset_name,
                            view=view_spec,
                            condition=condition,
                            marginal_accuracy=m.marginal_accuracy,
                            map_accuracy=m.map_accuracy,
                            entropy_bits=m.entropy_bits,
                            feasible_count=m.feasible_count,
                        )
                    )
    return rows, failures


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AggregateMetrics:
    preset: str
    view: str
    condition: str
    n_games: int
    game_means: dict[str, tuple[float, float, float]]  # game_id -> (ma, map, entropy)
    mean_marginal: float
    sd_marginal: float
    mean_map: float
    sd_map: float
    mean_entropy: float
    sd_entropy: float


def aggregate(rows: Iterable[MetricRow]) -> list[AggregateMetrics]:
    """Per-game means over rounds, then unweighted mean/sd across games."""
    groups: dict[tuple[str, str, str], dict[str, list[MetricRow]]] = {}
    for row in rows:
        key = (row.preset, row.view, row.condition)
        groups.setdefault(key, {}).setdefault(row.game_id, []).append(row)
    if not groups:
        raise EvalError("EMPTY_GROUP", "no rows to aggregate")
    out = []
    for key in sorted(groups):
        by_game = groups[key]
        game_means = {}
        for game_id in sorted(by_game):
            rows_g = by_game[game_id]
            game_means[game_id] = (
                float(np.mean([r.marginal_accuracy for r in rows_g])),
                float(np.mean([r.map_accuracy for r in rows_g])),
                float(np.mean([r.entropy_bits for r in rows_g])),
            )
        ma = np.array([v[0] for v in game_means.values()])
        mp = np.array([v[1] for v in game_means.values()])
        en = np.array([v[2] for v in game_means.values()])
        out.append(
            AggregateMetrics(
                preset=key[0], view=key[1], condition=key[2],
                n_games=len(game_means), game_means=game_means,
                mean_marginal=float(ma.mean()), sd_marginal=float(ma.std()),
                mean_map=float(mp.mean()), sd_map=float(mp.std()),
                mean_entropy=float(en.mean()), sd_entropy=float(en.std()),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Paired significance tests
# ---------------------------------------------------------------------------

def wilcoxon_signed_rank(pairs: Sequence[tuple[float, float]]) -> float:
    """Two-sided Wilcoxon signed-rank p-value for paired samples.

    Zero differences are dropped. Up to n=20 the null distribution of W+ is
    enumerated exactly over all 2^n sign patterns (average ranks for ties);
    beyond that a tie-corrected normal approximation is used.
    """
    diffs = [float(x) - float(y) for x, y in pairs]
    d = np.array([v for v in diffs if v != 0.0])
    if d.size == 0:
        raise EvalError("ALL_ZERO_DIFFERENCES", "every paired difference is zero")
    ranks = scipy_stats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    n = int(d.size)
    if n <= 20:
        idx = np.arange(1 << n, dtype=np.int64)
        w = np.zeros(1 << n)
        for j in range(n):
            w += ranks[j] * ((idx >> j) & 1)
        p_le = np.count_nonzero(w <= w_plus + 1e-9) / (1 << n)
        p_ge = np.count_nonzero(w >= w_plus - 1e-9) / (1 << n)
        return min(1.0, 2.0 * min(p_le, p_ge))
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var -= float(((tie_counts**3 - tie_counts) / 48.0).sum())
    z = (w_plus - mean) / math.sqrt(var)
    return float(2.0 * scipy_stats.norm.sf(abs(z)))


def paired_t_test(pairs: Sequence[tuple[float, float]]) -> float:
    """Two-sided paired t-test p-value on the differences."""
    d = np.array([float(x) - float(y) for x, y in pairs])
    if d.size < 2:
        raise EvalError("TOO_FEW", "paired t-test needs at least two pairs")
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise EvalError("ZERO_VARIANCE", "differences have zero variance")
    t = float(d.mean()) / (sd / math.sqrt(d.size))
    return float(2.0 * scipy_stats.t.sf(abs(t), d.size - 1))


@dataclass(frozen=True)
class SignificanceRow:
    view: str
    metric: str
    p_wilcoxon: Optional[float]
    p_ttest: Optional[float]
    significant: bool
    note: str = ""


def significance_report(
    baseline: Sequence[MetricRow],
    candidate: Sequence[MetricRow],
    alpha: float = 0.05,
) -> list[SignificanceRow]:
    """Pair per-game means by (view, metric) and run both tests.

    Rows must cover identical (game, round, view) keys in both inputs.
    Degenerate test preconditions are reported in the note column rather
    than raised.
    """
    def keyed(rows):
        return {(r.game_id, r.round_index, r.view): r for r in rows}

    base, cand = keyed(baseline), keyed(candidate)
    if set(base) != set(cand):
        missing = set(base) ^ set(cand)
        raise EvalError("KEY_MISMATCH", f"{len(missing)} unmatched (game, round, view) keys")

    by_view: dict[str, dict[str, list[tuple[MetricRow, MetricRow]]]] = {}
    for key in base:
        view = key[2]
        by_view.setdefault(view, {}).setdefault(key[0], []).append((cand[key], base[key]))

    out = []
    for view in sorted(by_view):
        games = by_view[view]
        for metric, attr in (("marginal", "marginal_accuracy"), ("map", "map_accuracy")):
            pairs = []
            for game_id in sorted(games):
                cs = [getattr(c, attr) for c, _ in games[game_id]]
                bs = [getattr(b, attr) for _, b in games[game_id]]
                pairs.append((float(np.mean(cs)), float(np.mean(bs))))
            p_w: Optional[float] = None
            p_t: Optional[float] = None
            notes = []
            try:
                p_w = wilcoxon_signed_rank(pairs)
            except EvalError as err:
                notes.append(f"wilcoxon: {err.code}")
            try:
                p_t = paired_t_test(pairs)
            except EvalError as err:
                notes.append(f"t-test: {err.code}")
            significant = p_w is not None and p_t is not None and p_w < alpha and p_t < alpha
            out.append(
                SignificanceRow(view, metric, p_w, p_t, significant, "; ".join(notes))
            )
    return out


# ---------------------------------------------------------------------------
# Metrics CSV
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "game_id", "round", "preset", "view", "condition",
    "ma", "map", "entropy_bits", "feasible_count",
)


def write_metrics_csv(rows: Iterable[MetricRow], path: Union[str, Path]):
    rows = sorted(rows, key=lambda r: (r.game_id, r.round_index, r.preset, r.view))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([
                r.game_id, r.round_index, r.preset, r.view, r.condition,
                repr(r.marginal_accuracy), repr(r.map_accuracy),
                repr(r.entropy_bits), r.feasible_count,
            ])


def read_metrics_csv(path: Union[str, Path]) -> list[MetricRow]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise EvalError("KEY_MISMATCH", f"unexpected CSV columns in {path}")
        for row in reader:
            out.append(
                MetricRow(
                    game_id=row["game_id"],
                    round_index=int(row["round"]),
                    preset=row["preset"],
                    view=row["view"],
                    condition=row["condition"],
                    marginal_accuracy=float(row["ma"]),
                    map_accuracy=float(row["map"]),
                    entropy_bits=float(row["entropy_bits"]),
                    feasible_count=int(row["feasible_count"]),
                )
            )
    return out


# ---------------------------------------------------------------------------
# Synthetic games
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthProfile:
    """Behaviour rates for the synthetic game generator."""

    good_assert_rate: float = 0.6
    evil_false_assert_rate: float = 0.2
    accuse_rate: float = 0.5
    fail_rate: float = 0.8
    assassination_rate: float = 0.5
    lynch_reveal_rate: float = 0.3
    self_claim_rate: float = 0.5


# Standard mission team sizes by player count, quests 1-5.
_QUEST_SIZES = {
    5: (2, 3, 2, 3, 3),
    6: (2, 3, 4, 3, 4),
    7: (2, 3, 3, 4, 4),
    8: (3, 4, 4, 5, 5),
    9: (3, 4, 4, 5, 5),
    10: (3, 4, 4, 5, 5),
}


def default_avalon_config(n_players: int = 6) -> GameConfig:
    if not 5 <= n_players <= 10:
        raise EvalError("BAD_ARGS", "avalon boards cover 5-10 players")
    n_evil = {5: 2, 6: 2, 7: 3, 8: 3, 9: 3, 10: 4}[n_players]
    roles = [
        RoleSpec("merlin", 1, Alignment.GOOD),
        RoleSpec("percival", 1, Alignment.GOOD),
        RoleSpec("servant", n_players - n_evil - 2, Alignment.GOOD),
        RoleSpec("morgana", 1, Alignment.EVIL),
        RoleSpec("assassin", 1, Alignment.EVIL),
    ]
    if n_evil > 2:
        roles.append(RoleSpec("minion", n_evil - 2, Alignment.EVIL))
    players = tuple(f"player-{i}" for i in range(1, n_players + 1))
    return GameConfig(players, tuple(roles), GameKind.AVALON)


def default_mafia_config(n_players: int = 5, n_mafia: int = 1) -> GameConfig:
    if n_mafia < 1 or n_mafia >= n_players:
        raise EvalError("BAD_ARGS", "need 1 <= mafia < players")
    players = tuple(f"player-{i}" for i in range(1, n_players + 1))
    roles = (
        RoleSpec("mafia", n_mafia, Alignment.EVIL),
        RoleSpec("bystander", n_players - n_mafia, Alignment.GOOD),
    )
    return GameConfig(players, roles, GameKind.MAFIA)


def _sample_truth(config: GameConfig, rng: random.Random) -> World:
    tokens = [r.name for r in config.roles for _ in range(r.count)]
    rng.shuffle(tokens)
    return World(tuple(zip(config.players, tokens)))


def _is_good(config: GameConfig, truth: World, player: str) -> bool:
    return config.alignment_of(truth.role_of(player)) is Alignment.GOOD


def _hypo_claim(speaker: str, target: str, label: str, weight: float) -> dict:
    return {
        "type": "hypo_role_in",
        "args": {"speaker": speaker, "target": target, "set": label},
        "weight": weight,
    }


def _synth_avalon(
    config: GameConfig, rng: random.Random, condition: Condition, profile: SynthProfile
) -> tuple[tuple[RoundEvents, ...], World]:
    truth = _sample_truth(config, rng)
    players = list(config.players)
    n = len(players)
    goods = [p for p in players if _is_good(config, truth, p)]
    evils = [p for p in players if not _is_good(config, truth, p)]
    good_role_names = list(config.good_roles)
    sizes = _QUEST_SIZES[n]
    n_rounds = rng.randint(3, 5)

    # the Lie condition plants one false role claim by a good player,
    # classically merlin passing as percival
    liar, liar_round = None, -1
    if condition is Condition.LIE:
        merlins = [p for p in goods if truth.role_of(p) == "merlin"]
        liar = merlins[0] if merlins else rng.choice(goods)
        liar_round = rng.randint(1, n_rounds)

    rounds = []
    for q in range(1, n_rounds + 1):
        proposer = players[(q - 1) % n]
        team_size = sizes[min(q, 5) - 1]
        others = [p for p in players if p != proposer]
        rng.shuffle(others)
        team = tuple(sorted([proposer] + others[: team_size - 1], key=players.index))

        votes = []
        for p in players:
            evil_on_team = any(t in evils for t in team)
            if p in evils:
                yes = rng.random() < (0.8 if evil_on_team else 0.3)
            else:
                yes = rng.random() < 0.6
            votes.append(
                Vote(voter=p, value=VoteValue.YES if yes else VoteValue.NO, team=team)
            )

        fails = sum(
            1 for p in team if p in evils and rng.random() < profile.fail_rate
        )
        quest = QuestResult(team=team, fail_count=fails)

        assertions: list[dict] = []
        hypotheses: list[dict] = []
        for p in goods:
            role = truth.role_of(p)
            if p == liar and q == liar_round:
                fake = rng.choice([r for r in good_role_names if r != role])
                assertions.append(
                    {"type": "assert_role_is", "args": {"speaker": p, "role": fake}}
                )
            elif rng.random() < profile.good_assert_rate:
                assertions.append(
                    {"type": "assert_role_is", "args": {"speaker": p, "role": role}}
                )
            if rng.random() < profile.accuse_rate:
                # good players mostly voice true suspicions
                if evils and rng.random() < 0.7:
                    hypotheses.append(_hypo_claim(p, rng.choice(evils), "evil", 0.2))
                else:
                    other = rng.choice([x for x in players if x != p])
                    hypotheses.append(_hypo_claim(p, other, "good", 0.2))
        for p in evils:
            if rng.random() < profile.evil_false_assert_rate:
                assertions.append(
                    {
                        "type": "assert_role_is",
                        "args": {"speaker": p, "role": rng.choice(good_role_names)},
                    }
                )
            if rng.random() < profile.accuse_rate:
                # deception: paint a good player as evil
                target = rng.choice(goods)
                hypotheses.append(_hypo_claim(p, target, "evil", 0.2))

        assassination = None
        if q == n_rounds and rng.random() < profile.assassination_rate:
            killer = next(p for p in evils if truth.role_of(p) == "assassin")
            target = rng.choice(goods)
            assassination = Assassination(
                killer=killer, target=target, hit=truth.role_of(target) == "merlin"
            )

        rounds.append(
            RoundEvents(
                index=q,
                proposals=(Proposal(proposer=proposer, team=team),),
                votes=tuple(votes),
                quest_result=quest,
                assassination=assassination,
                claims={
                    "evidence": [],
                    "phenomenon": [],
                    "assertions": assertions,
                    "hypotheses": hypotheses,
                },
            )
        )
    return tuple(rounds), truth


def _synth_mafia(
    config: GameConfig, rng: random.Random, condition: Condition, profile: SynthProfile
) -> tuple[tuple[RoundEvents, ...], World]:
    truth = _sample_truth(config, rng)
    players = list(config.players)
    bystanders = [p for p in players if truth.role_of(p) == "bystander"]
    mafiosi = [p for p in players if truth.role_of(p) != "bystander"]
    n_rounds = rng.randint(2, 3)

    liar, liar_round = None, -1
    if condition is Condition.LIE:
        liar = rng.choice(bystanders)
        liar_round = rng.randint(1, n_rounds)

    alive = list(players)
    rounds = []
    for day in range(1, n_rounds + 1):
        if len(alive) <= 2 and day > max(1, liar_round):
            break
        # the designated liar must survive long enough to utter the lie
        victims = [
            p for p in alive
            if p in bystanders and not (p == liar and day <= liar_round)
        ]
        night_kill = rng.choice(victims) if victims else None
        if night_kill:
            alive.remove(night_kill)

        votes = []
        for p in alive:
            if len(alive) >= 2 and rng.random() < 0.7:
                target = rng.choice([x for x in alive if x != p])
                suspect_is_mafia = target in mafiosi
                if p in mafiosi:
                    yes = not suspect_is_mafia and rng.random() < 0.7
                else:
                    yes = rng.random() < (0.6 if suspect_is_mafia else 0.3)
                votes.append(
                    Vote(
                        voter=p,
                        value=VoteValue.YES if yes else VoteValue.NO,
                        target=target,
                    )
                )

        hypotheses = []
        for p in alive:
            lying_now = p == liar and day == liar_round
            if lying_now or rng.random() < profile.self_claim_rate:
                label = "mafia" if lying_now else "bystander"
                hypotheses.append(_hypo_claim(p, p, label, 0.5))
            if p in mafiosi and rng.random() < profile.accuse_rate and bystanders:
                hypotheses.append(_hypo_claim(p, rng.choice(bystanders), "mafia", 0.5))

        lynch_reveal = None
        lynchable = [p for p in alive if not (p == liar and day < liar_round)]
        if len(alive) > 2 and lynchable and rng.random() < profile.lynch_reveal_rate:
            lynched = rng.choice(lynchable)
            lynch_reveal = (lynched, truth.role_of(lynched))
            alive.remove(lynched)

        rounds.append(
            RoundEvents(
                index=day,
                votes=tuple(votes),
                night_kill=night_kill,
                lynch_reveal=lynch_reveal,
                claims={
                    "evidence": [],
                    "phenomenon": [],
                    "assertions": [],
                    "hypotheses": hypotheses,
                },
            )
        )
    return tuple(rounds), truth


def synth_games(
    config: GameConfig,
    count: int,
    seed: int,
    condition: Condition = Condition.TRUTH,
    profile: Optional[SynthProfile] = None,
) -> list[GameRecord]:
    """Generate seeded, labelled game records for offline end-to-end runs."""
    profile = profile or SynthProfile()
    condition = Condition(condition)
    records = []
    for i in range(count):
        rng = random.Random(f"{seed}:{i}")
        if config.game_kind is GameKind.AVALON:
            rounds, truth = _synth_avalon(config, rng, condition, profile)
        elif config.game_kind is GameKind.MAFIA:
            rounds, truth = _synth_mafia(config, rng, condition, profile)
        else:
            raise EvalError("BAD_ARGS", "synthetic games need AVALON or MAFIA configs")
        records.append(
            GameRecord(
                config=config,
                rounds=rounds,
                truth=truth,
                condition=condition,
                game_id=f"{config.game_kind.value.lower()}-{condition.value.lower()}-{seed}-{i:03d}",
            )
        )
    return records
