"""Random small SCMs, target sets, and policies for property campaigns."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Sequence

from cftwin.interventions import Counterfactual, Policy, Regime
from cftwin.scm import Mechanism, Scm, make_scm


def random_scm(rng: random.Random, *, max_endogenous: int = 4, max_exogenous: int = 3,
               max_domain: int = 2, edge_prob: float = 0.5) -> Scm:
    """A random SCM with binary exogenous inputs and a correlated rational pmf.

    Endogenous variables ``V0, V1, ...`` are created in topological order;
    the last one is the reward. Every endogenous variable reads at least
    one exogenous input so that confounding is common.
    """
    n_endo = rng.randint(2, max_endogenous)
    n_exo = rng.randint(1, max_exogenous)
    endo = [f"V{i}" for i in range(n_endo)]
    exo = [f"U{i}" for i in range(n_exo)]
    domains = {u: (0, 1) for u in exo}
    for v in endo:
        domains[v] = tuple(range(rng.randint(2, max_domain)))
    domains[endo[-1]] = (0, 1)

    mechanisms = {}
    for i, v in enumerate(endo):
        parents = [p for p in endo[:i] if rng.random() < edge_prob]
        us = [u for u in exo if rng.random() < edge_prob] or [rng.choice(exo)]
        parents = tuple(parents + us)
        mechanisms[v] = Mechanism(parents, _random_table(rng, parents, domains, domains[v]))

    pmf = random_pmf(rng, n_exo)
    return make_scm(endo, exo, domains, mechanisms, pmf, endo[-1])


def _random_table(rng, parents, domains, out):
    return {combo: rng.choice(out)
            for combo in itertools.product(*(domains[p] for p in parents))}


def random_pmf(rng: random.Random, n_bits: int, max_weight: int = 6) -> dict:
    """Joint pmf over ``n_bits`` binary variables with random integer weights.

    Weights are drawn independently per joint cell, so the bits are
    correlated in general. Some cells may get zero mass.
    """
    cells = list(itertools.product((0, 1), repeat=n_bits))
    while True:
        weights = [rng.randint(0, max_weight) for _ in cells]
        total = sum(weights)
        if total:
            break
    return {c: Fraction(w, total) for c, w in zip(cells, weights) if w}


def random_targets(rng: random.Random, scm: Scm, *, min_size: int = 1,
                   max_size: int | None = None) -> list[str]:
    """A random ancestors-first target list excluding the reward."""
    cands = [v for v in scm.order if v != scm.reward_var]
    hi = len(cands) if max_size is None else min(max_size, len(cands))
    k = rng.randint(min(min_size, hi), hi)
    chosen = set(rng.sample(cands, k))
    return [v for v in scm.order if v in chosen]


def random_policy(rng: random.Random, domain: Sequence[int]) -> Policy:
    return Policy.deterministic({v: rng.choice(domain) for v in domain})


def random_rho(rng: random.Random, scm: Scm, targets: Sequence[str]) -> Regime:
    return Regime(Counterfactual(t, random_policy(rng, scm.domains[t])) for t in targets)
