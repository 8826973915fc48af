"""Acceptance suite: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
PASS lines. Everything is offline and seeded. The sampling-backend check
can be skipped by setting ROLEINFER_SKIP_MCMC=1; its absence does not fail
the rest of the suite.
"""

import os
import random
import time

import numpy as np
import pytest

from helpers import (
    oracle_enumerate,
    random_config,
    random_hard_constraints,
    random_soft_constraints,
    random_truth,
    truthful_gap_instance,
)
from roleinfer.evaluation import (
    aggregate,
    default_avalon_config,
    default_mafia_config,
    paired_t_test,
    replay_game,
    replay_records,
    significance_report,
    synth_games,
    wilcoxon_signed_rank,
)
from roleinfer.ingestion import Condition
from roleinfer.model import (
    Alignment,
    Constraint,
    ConstraintKind,
    ConstraintSet,
    GameConfig,
    GameKind,
    Preset,
    RoleSpec,
    SolverSettings,
)
from roleinfer.solver import (
    InfeasibleError,
    apply_hard,
    enumerate_worlds,
    info_gain,
    mcmc_posterior,
    posterior,
    select_active,
    soft_hard_gap,
)


def report(line: str):
    print(f"\nACCEPTANCE {line}")


def _avalon6():
    return default_avalon_config(6)


# ---------------------------------------------------------------------------
# 1. Normalization & marginal consistency on 500 random instances, < 60 s
# ---------------------------------------------------------------------------

def test_normalization_and_marginal_consistency_500():
    rng = random.Random(20240501)
    worst_prob = 0.0
    worst_marg = 0.0
    start = time.time()
    solved = 0
    for i in range(500):
        config = random_config(rng, rng.randint(5, 10))
        truth = random_truth(config, rng)
        hard = random_hard_constraints(config, rng, rng.randint(0, 3), truth=truth)
        assertions, hypotheses = random_soft_constraints(
            config, rng, rng.randint(0, 3), rng.randint(0, 4), truth=None
        )
        cset = ConstraintSet.from_constraints(hard + assertions + hypotheses)
        preset = rng.choice([Preset.STRICT, Preset.ASSERT, Preset.HYP_M, Preset.HYP_IG])
        try:
            post = posterior(config, cset, SolverSettings(preset=preset))
        except InfeasibleError:
            continue
        solved += 1
        worst_prob = max(worst_prob, abs(float(post.probabilities.sum()) - 1.0))
        # independent aggregation of world mass by role
        recomputed = np.stack(
            [
                (post.probabilities[:, None] * (post.assignments == j)).sum(axis=0)
                for j in range(len(config.roles))
            ],
            axis=1,
        )
        worst_marg = max(worst_marg, float(np.abs(recomputed - post.marginals).max()))
    elapsed = time.time() - start
    assert solved >= 400
    assert worst_prob <= 1e-9
    assert worst_marg <= 1e-9
    assert elapsed < 60.0
    report(
        f"normalization+marginals: PASS ({solved} feasible of 500, "
        f"max |sum p - 1| = {worst_prob:.2e}, max marginal gap = {worst_marg:.2e}, "
        f"{elapsed:.1f}s)"
    )


# ---------------------------------------------------------------------------
# 2. Oracle equivalence on 100 instances with <= 7 players
# ---------------------------------------------------------------------------

def _oracle_satisfies(config, assignment, c):
    def is_evil(p):
        return config.alignment_of(assignment[p]) is Alignment.EVIL

    k = c.kind
    if k is ConstraintKind.ROLE_IS:
        return assignment[c.player] == c.role
    if k is ConstraintKind.ROLE_NOT:
        return assignment[c.player] != c.role
    if k is ConstraintKind.ROLE_IN:
        return assignment[c.player] in c.roles
    if k is ConstraintKind.EVIL_AT_LEAST:
        return sum(is_evil(p) for p in c.team) >= c.min_count
    if k is ConstraintKind.ASSERT_ROLE_IS:
        return assignment[c.speaker] == c.role
    if k in (ConstraintKind.ASSERT_TEAM_GOOD, ConstraintKind.HYPO_TEAM_GOOD):
        return all(not is_evil(p) for p in c.team)
    if k is ConstraintKind.HYPO_TEAM_EVIL:
        return any(is_evil(p) for p in c.team)
    label = c.set_label.lower()
    if label == "good":
        return not is_evil(c.target)
    if label == "evil":
        return is_evil(c.target)
    return assignment[c.target].lower() == label


def _oracle_posterior_marginals(config, hard, assertions, hypotheses, settings):
    """Filter-then-weight over an independently enumerated permutation list."""
    lam = settings.global_scale
    survivors = [
        a for a in oracle_enumerate(config)
        if all(_oracle_satisfies(config, a, c) for c in hard)
    ]
    if not survivors:
        return None
    scores = []
    for a in survivors:
        s = 1.0
        for c in assertions:
            if _oracle_satisfies(config, a, c):
                s *= lam * settings.assertion_weight
        bonus = 0.0
        for h in hypotheses:
            if _oracle_satisfies(config, a, h):
                bonus += lam * h.weight
        scores.append(s * (1.0 + bonus))
    total = sum(scores)
    marginals = {
        (p, r): 0.0 for p in config.players for r in config.role_names
    }
    for a, s in zip(survivors, scores):
        for p in config.players:
            marginals[(p, a[p])] += s / total
    return marginals


def test_oracle_equivalence_100():
    rng = random.Random(77)
    worst = 0.0
    checked = 0
    while checked < 100:
        config = random_config(rng, rng.randint(5, 7))
        truth = random_truth(config, rng)
        hard = random_hard_constraints(config, rng, rng.randint(0, 2), truth=truth)
        assertions, hypotheses = random_soft_constraints(
            config, rng, rng.randint(0, 2), rng.randint(0, 3), truth=None
        )
        settings = SolverSettings(
            preset=Preset.HYP_M, global_scale=rng.choice([0.5, 1.0, 2.0])
        )
        oracle = _oracle_posterior_marginals(config, hard, assertions, hypotheses, settings)
        if oracle is None:
            continue
        cset = ConstraintSet.from_constraints(hard + assertions + hypotheses)
        post = posterior(config, cset, settings)
        for i, p in enumerate(config.players):
            for j, r in enumerate(config.role_names):
                worst = max(worst, abs(post.marginals[i, j] - oracle[(p, r)]))
        checked += 1
    assert worst <= 1e-9
    report(f"oracle equivalence: PASS (100 instances, max |Δmarginal| = {worst:.2e})")


# ---------------------------------------------------------------------------
# 3. Soft-vs-hard assertion gap: bound at w_A = 1e4, shrinking at 1e6
# ---------------------------------------------------------------------------

def test_soft_hard_gap_200_truthful_instances():
    rng = random.Random(31)
    gaps4 = []
    gaps6 = []
    for i in range(200):
        config = random_config(rng, rng.randint(5, 7)) if i % 2 else _avalon6()
        assertions, hypotheses = truthful_gap_instance(config, rng)
        gap4, bound4 = soft_hard_gap(
            config, assertions, hypotheses, SolverSettings(assertion_weight=1e4)
        )
        gap6, _ = soft_hard_gap(
            config, assertions, hypotheses, SolverSettings(assertion_weight=1e6)
        )
        assert gap4 <= bound4
        assert gap6 <= gap4 + 1e-15
        gaps4.append(gap4)
        gaps6.append(gap6)
    assert max(gaps4) <= 1e-4
    assert max(gaps6) < max(gaps4)
    report(
        f"assertion soft=hard gap: PASS (200 instances, max gap {max(gaps4):.2e} <= 1e-4 "
        f"at w=1e4; {max(gaps6):.2e} at w=1e6)"
    )


# ---------------------------------------------------------------------------
# 4. Pruning monotonicity under random constraint sequences
# ---------------------------------------------------------------------------

def test_pruning_monotonicity():
    rng = random.Random(4242)
    checked = 0
    for _ in range(60):
        config = random_config(rng, rng.randint(5, 8))
        worlds = enumerate_worlds(config)
        sizes = [len(worlds)]
        for c in random_hard_constraints(config, rng, 5):
            worlds = apply_hard(config, worlds, [c])
            sizes.append(len(worlds))
        assert all(b <= a for a, b in zip(sizes, sizes[1:]))
        checked += 1
    report(f"pruning monotonicity: PASS ({checked} random sequences, |AS| never grew)")


# ---------------------------------------------------------------------------
# 5. Information-gain identities
# ---------------------------------------------------------------------------

def test_ig_identities():
    config = _avalon6()
    # uniform 4-world set: merlin/percival undecided on two seats and the
    # evil pair undecided on two seats, servants pinned
    hard = ConstraintSet(
        evidence=(
            Constraint(ConstraintKind.ROLE_IN, player="player-1", roles=("merlin", "percival")),
            Constraint(ConstraintKind.ROLE_IN, player="player-2", roles=("merlin", "percival")),
            Constraint(ConstraintKind.ROLE_IS, player="player-3", role="servant"),
            Constraint(ConstraintKind.ROLE_IS, player="player-4", role="servant"),
            Constraint(ConstraintKind.ROLE_IN, player="player-5", roles=("morgana", "assassin")),
            Constraint(ConstraintKind.ROLE_IN, player="player-6", roles=("morgana", "assassin")),
        )
    )
    settings = SolverSettings(preset=Preset.HYP_IG)
    assert posterior(config, hard, settings).feasible_count == 4

    tautology = Constraint(
        ConstraintKind.HYPO_TEAM_EVIL, speaker="player-1", team=tuple(config.players)
    )
    r0 = info_gain(tautology, config, hard, settings)
    assert r0.ig_bits == 0.0 and r0.applied_weight == 0.0

    half = Constraint(
        ConstraintKind.HYPO_ROLE_IN, speaker="player-3", target="player-1",
        set_label="merlin",
    )
    r1 = info_gain(half, config, hard, settings)
    assert r1.prior_entropy_bits == 2.0
    assert r1.ig_bits == 1.0 and r1.applied_weight == 1.0

    # applied weights never negative, over random hypotheses and contexts
    rng = random.Random(9)
    for _ in range(200):
        cfg = random_config(rng, rng.randint(5, 7))
        truth = random_truth(cfg, rng)
        hard_cs = random_hard_constraints(cfg, rng, rng.randint(0, 2), truth=truth)
        assertions, hyps = random_soft_constraints(cfg, rng, rng.randint(0, 2), 1)
        if not hyps:
            continue
        r = info_gain(
            hyps[0], cfg, ConstraintSet.from_constraints(hard_cs + assertions), settings
        )
        assert r.applied_weight >= 0.0
    report("info-gain identities: PASS (tautology 0.0, half-split 1.0 bit, weights >= 0)")


# ---------------------------------------------------------------------------
# 6. Mafia evil view: perfect accuracy in every round of 100 synthetic games
# ---------------------------------------------------------------------------

def test_mafia_view_always_perfect():
    boards = [(5, 1), (6, 1), (7, 2), (8, 2)]
    total_rounds = 0
    for idx, (n, k) in enumerate(boards):
        config = default_mafia_config(n, k)
        records = synth_games(config, 25, seed=100 + idx, condition=Condition.TRUTH)
        for record in records:
            metrics = replay_game(record, Preset.HYP_IG, "mafia")
            for m in metrics:
                assert m.marginal_accuracy == 1.0
                assert m.map_accuracy == 1.0
            total_rounds += len(metrics)
    report(f"mafia-view replay: PASS (100 games, MA=MAP=1.0 in all {total_rounds} rounds)")


# ---------------------------------------------------------------------------
# 7. Prior-marginal MA in the 6-player board equals 8/36
# ---------------------------------------------------------------------------

def test_prior_marginal_accuracy_six_player():
    from roleinfer.evaluation import marginal_accuracy

    config = _avalon6()
    rng = random.Random(1)
    post = posterior(config, ConstraintSet(), SolverSettings())
    for _ in range(5):
        truth = random_truth(config, rng)
        ma = marginal_accuracy(config, post.marginals, truth)
        assert abs(ma - 8.0 / 36.0) <= 1e-12
    report("prior marginal accuracy: PASS (6-player board, MA = 8/36 ± 1e-12)")


# ---------------------------------------------------------------------------
# 8. Significance machinery
# ---------------------------------------------------------------------------

def test_significance_tests_and_rule():
    # exact Wilcoxon for five uniformly positive differences, vs enumeration
    import itertools

    pairs = [(float(i + 1), 0.0) for i in range(5)]
    p = wilcoxon_signed_rank(pairs)
    ranks = [1, 2, 3, 4, 5]
    le = ge = 0
    for signs in itertools.product((0, 1), repeat=5):
        w = sum(r for r, s in zip(ranks, signs) if s)
        le += w <= 15
        ge += w >= 15
    oracle = min(1.0, 2.0 * min(le / 32.0, ge / 32.0))
    assert p == oracle == 0.0625

    assert paired_t_test([(1.0, 0.0), (0.0, 1.0)]) == 1.0

    # the both-tests rule drives the significance mark
    from roleinfer.evaluation import MetricRow

    base = [
        MetricRow(f"g{i}", 1, "STRICT", "objective", "TRUTH", 0.4, 0.35 + 0.01 * i, 1.0, 10)
        for i in range(8)
    ]
    cand = [
        MetricRow(f"g{i}", 1, "STRICT", "objective", "TRUTH", 0.4 + 0.02 * (i + 1),
                  0.36 + 0.01 * i, 1.0, 10)
        for i in range(8)
    ]
    rows = significance_report(base, cand)
    marked = {r.metric: r.significant for r in rows}
    assert marked["marginal"] is True  # both tests well under 0.05
    assert marked["map"] is False      # constant +0.01 shift: t-test degenerate
    report("significance tests: PASS (Wilcoxon exact 0.0625, t zero-mean 1.0, both-p rule)")


# ---------------------------------------------------------------------------
# 9. Preset behaviour on synthetic TRUTH games
# ---------------------------------------------------------------------------

def test_preset_behaviour_on_truth_games():
    config = _avalon6()
    records = synth_games(config, 100, seed=2024, condition=Condition.TRUTH)
    rows_strict, fail_s = replay_records(records, [Preset.STRICT], ["objective"])
    rows_assert, fail_a = replay_records(records, [Preset.ASSERT], ["objective"])
    assert not fail_s and not fail_a
    (agg_strict,) = aggregate(rows_strict)
    (agg_assert,) = aggregate(rows_assert)
    assert agg_assert.mean_map >= agg_strict.mean_map - 0.01

    # structurally, TURN_IG admits strictly fewer hypotheses per round than
    # HYP_IG once earlier rounds have contributed any
    multi_round = ConstraintSet.from_constraints(
        [
            Constraint(
                ConstraintKind.HYPO_ROLE_IN, speaker="player-1", target="player-2",
                set_label="evil", weight=0.2, round_index=k,
            )
            for k in (1, 1, 2, 2, 3)
        ]
    )
    for current in (2, 3):
        _, _, hyp_all = select_active(
            multi_round, SolverSettings(preset=Preset.HYP_IG), current
        )
        _, _, hyp_turn = select_active(
            multi_round, SolverSettings(preset=Preset.TURN_IG), current
        )
        assert len(hyp_turn) < len(hyp_all)
        assert all(h.round_index == current for h in hyp_turn)
    report(
        f"preset behaviour: PASS (+Assert MAP {agg_assert.mean_map:.3f} >= "
        f"Strict {agg_strict.mean_map:.3f} - 0.01 over 100 games; "
        f"TURN_IG < HYP_IG hypothesis counts per round)"
    )


# ---------------------------------------------------------------------------
# 10. Sampling backend: TV distance at 200k samples on three fixtures
# ---------------------------------------------------------------------------

@pytest.mark.skipif(
    os.environ.get("ROLEINFER_SKIP_MCMC") == "1",
    reason="sampling backend check disabled by ROLEINFER_SKIP_MCMC=1",
)
def test_mcmc_tv_distance_on_fixtures():
    config = _avalon6()
    fixtures = [
        (
            ConstraintSet(
                evidence=(
                    Constraint(ConstraintKind.ROLE_IS, player="player-3", role="merlin"),
                    Constraint(ConstraintKind.ROLE_IS, player="player-2", role="percival"),
                )
            ),
            Preset.STRICT,
        ),
        (
            ConstraintSet(
                evidence=(Constraint(ConstraintKind.ROLE_IS, player="player-1", role="merlin"),),
                phenomenon=(
                    Constraint(
                        ConstraintKind.EVIL_AT_LEAST, team=("player-2", "player-3"), min_count=1
                    ),
                ),
                hypotheses=(
                    Constraint(
                        ConstraintKind.HYPO_ROLE_IN, speaker="player-1", target="player-2",
                        set_label="evil", weight=0.5,
                    ),
                ),
            ),
            Preset.HYP_M,
        ),
        (
            ConstraintSet(
                evidence=(
                    Constraint(ConstraintKind.ROLE_IN, player="player-1", roles=("merlin", "percival")),
                    Constraint(ConstraintKind.ROLE_IN, player="player-2", roles=("merlin", "percival")),
                    Constraint(ConstraintKind.ROLE_IS, player="player-3", role="servant"),
                ),
                hypotheses=(
                    Constraint(
                        ConstraintKind.HYPO_TEAM_EVIL, speaker="player-1",
                        team=("player-5", "player-6"), weight=0.3,
                    ),
                ),
            ),
            Preset.HYP_M,
        ),
    ]
    tvs = []
    for i, (cset, preset) in enumerate(fixtures):
        settings = SolverSettings(preset=preset)
        exact = posterior(config, cset, settings)
        approx = mcmc_posterior(config, cset, settings, samples=200_000, seed=99 + i)
        exact_by_key = {
            exact.assignments[j].tobytes(): exact.probabilities[j]
            for j in range(exact.feasible_count)
        }
        approx_by_key = {
            approx.assignments[j].tobytes(): approx.probabilities[j]
            for j in range(approx.feasible_count)
        }
        keys = set(exact_by_key) | set(approx_by_key)
        tv = 0.5 * sum(
            abs(exact_by_key.get(k, 0.0) - approx_by_key.get(k, 0.0)) for k in keys
        )
        assert tv <= 0.02
        tvs.append(tv)
    report(
        "sampling backend: PASS (TV "
        + ", ".join(f"{tv:.4f}" for tv in tvs)
        + " <= 0.02 at 200k samples)"
    )
