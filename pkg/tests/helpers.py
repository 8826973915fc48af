"""Shared randomized-instance builders for solver and acceptance tests."""

from __future__ import annotations

import itertools
import random

import numpy as np

from roleinfer.model import (
    Alignment,
    Constraint,
    ConstraintKind,
    GameConfig,
    GameKind,
    RoleSpec,
    World,
)
from roleinfer.solver import constraint_mask, world_count
from roleinfer.solver import _table  # canonical world table, read-only


def random_config(rng: random.Random, n_players: int) -> GameConfig:
    """A random hidden-role board: 1-2 named good specials, a servant block,
    and 1-3 evil seats split over named evil roles."""
    n_evil = rng.randint(1, max(1, min(3, n_players - 2)))
    n_good = n_players - n_evil
    specials = rng.randint(1, min(2, n_good - 1)) if n_good > 1 else 0
    roles = []
    special_names = ["seer", "guard"]
    for i in range(specials):
        roles.append(RoleSpec(special_names[i], 1, Alignment.GOOD))
    roles.append(RoleSpec("servant", n_good - specials, Alignment.GOOD))
    evil_names = ["imp", "spy", "ghoul"]
    evil_split = [1] * n_evil
    if n_evil >= 2 and rng.random() < 0.5:
        evil_split = [n_evil - 1, 1]
    elif n_evil >= 1:
        evil_split = [n_evil]
    if rng.random() < 0.5 and n_evil >= 2:
        evil_split = [1] * n_evil
    for i, count in enumerate(evil_split):
        roles.append(RoleSpec(evil_names[i], count, Alignment.EVIL))
    players = tuple(f"p{i}" for i in range(1, n_players + 1))
    return GameConfig(players, tuple(roles), GameKind.CUSTOM)


def random_truth(config: GameConfig, rng: random.Random) -> World:
    tokens = [r.name for r in config.roles for _ in range(r.count)]
    rng.shuffle(tokens)
    return World(tuple(zip(config.players, tokens)))


def random_hard_constraints(config: GameConfig, rng: random.Random, n: int,
                            truth: World | None = None) -> list[Constraint]:
    """Random evidence/phenomenon constraints; satisfied by truth when given."""
    players = list(config.players)
    roles = list(config.role_names)
    out = []
    for _ in range(n):
        kind = rng.choice(["role_is", "role_not", "role_in", "evil_at_least"])
        if kind == "role_is":
            p = rng.choice(players)
            role = truth.role_of(p) if truth else rng.choice(roles)
            out.append(Constraint(ConstraintKind.ROLE_IS, player=p, role=role))
        elif kind == "role_not":
            p = rng.choice(players)
            if truth:
                role = rng.choice([r for r in roles if r != truth.role_of(p)])
            else:
                role = rng.choice(roles)
            out.append(Constraint(ConstraintKind.ROLE_NOT, player=p, role=role))
        elif kind == "role_in":
            p = rng.choice(players)
            chosen = set(rng.sample(roles, rng.randint(1, len(roles))))
            if truth:
                chosen.add(truth.role_of(p))
            out.append(Constraint(ConstraintKind.ROLE_IN, player=p, roles=tuple(sorted(chosen))))
        else:
            team = tuple(rng.sample(players, rng.randint(1, min(3, len(players)))))
            if truth:
                n_evil = sum(
                    config.alignment_of(truth.role_of(p)) is Alignment.EVIL for p in team
                )
                if n_evil == 0:
                    continue
                m = rng.randint(1, n_evil)
            else:
                m = rng.randint(1, len(team))
            out.append(Constraint(ConstraintKind.EVIL_AT_LEAST, team=team, min_count=m))
    return out


def random_soft_constraints(config: GameConfig, rng: random.Random,
                            n_assert: int, n_hypo: int,
                            truth: World | None = None) -> tuple[list[Constraint], list[Constraint]]:
    """Random assertions/hypotheses; assertions are truthful when truth given."""
    players = list(config.players)
    goods = evils = None
    if truth is not None:
        goods = [p for p in players if config.alignment_of(truth.role_of(p)) is Alignment.GOOD]
        evils = [p for p in players if config.alignment_of(truth.role_of(p)) is Alignment.EVIL]
    assertions = []
    for _ in range(n_assert):
        kind = rng.choice(["self", "team", "accuse"])
        if kind == "self":
            s = rng.choice(players)
            role = truth.role_of(s) if truth else rng.choice(list(config.role_names))
            assertions.append(Constraint(ConstraintKind.ASSERT_ROLE_IS, speaker=s, role=role))
        elif kind == "team":
            pool = goods if truth else players
            if not pool:
                continue
            team = tuple(sorted(rng.sample(pool, rng.randint(1, min(2, len(pool))))))
            assertions.append(
                Constraint(ConstraintKind.ASSERT_TEAM_GOOD, speaker=rng.choice(players), team=team)
            )
        else:
            pool = evils if truth else players
            if not pool:
                continue
            assertions.append(
                Constraint(
                    ConstraintKind.ASSERT_ROLE_IN, speaker=rng.choice(players),
                    target=rng.choice(pool), set_label="evil",
                )
            )
    hypotheses = []
    for _ in range(n_hypo):
        kind = rng.choice(["role_in", "team_good", "team_evil"])
        if kind == "role_in":
            hypotheses.append(
                Constraint(
                    ConstraintKind.HYPO_ROLE_IN, speaker=rng.choice(players),
                    target=rng.choice(players), set_label=rng.choice(["good", "evil"]),
                    weight=rng.choice([0.1, 0.2, 0.5]),
                )
            )
        else:
            team = tuple(rng.sample(players, rng.randint(1, 2)))
            hkind = (
                ConstraintKind.HYPO_TEAM_GOOD if kind == "team_good"
                else ConstraintKind.HYPO_TEAM_EVIL
            )
            hypotheses.append(
                Constraint(hkind, speaker=rng.choice(players), team=team,
                           weight=rng.choice([0.1, 0.2, 0.5]))
            )
    return assertions, hypotheses


def truthful_gap_instance(config: GameConfig, rng: random.Random,
                          max_tries: int = 200) -> tuple[list[Constraint], list[Constraint]]:
    """A truthful-assertion instance within the soft=hard regime.

    The soft and hard assertion formulations agree to 1/w_A only while the
    worlds satisfying every assertion stay numerous relative to near-miss
    worlds: the residual is bounded by M^2 * N / (w_A * |A_all|^2), with
    M the hypothesis score ceiling and N the world count. Instances are
    resampled until |A_all|^2 >= M^2 * N so the advertised bound holds.
    """
    table = _table(config)
    n_worlds = world_count(config)
    for _ in range(max_tries):
        truth = random_truth(config, rng)
        assertions, hypotheses = random_soft_constraints(
            config, rng, rng.randint(1, 3), rng.randint(0, 3), truth=truth
        )
        if not assertions:
            continue
        mask = np.ones(n_worlds, dtype=bool)
        for a in assertions:
            mask &= constraint_mask(table, config, a)
        core = int(mask.sum())
        ceiling = 1.0 + sum(h.weight for h in hypotheses)
        if core * core >= ceiling * ceiling * n_worlds:
            return assertions, hypotheses
    raise AssertionError("could not sample a gap instance in the valid regime")


def oracle_enumerate(config: GameConfig) -> list[dict]:
    """Second, independent enumeration: permutations of the token list."""
    tokens = [r.name for r in config.roles for _ in range(r.count)]
    seen = set()
    out = []
    for perm in itertools.permutations(tokens):
        if perm not in seen:
            seen.add(perm)
            out.append(dict(zip(config.players, perm)))
    return out
