"""Exhaustive policy search and the counterfactual-vs-experiment comparison.

Three policy classes are compared on a target set ``I``:

* ``rho``   counterfactual interventions in the original model;
* ``sigma`` input-ignoring soft interventions in the original model;
* ``pi``    soft interventions on the copies in the conditional twin,
  each reading its natural value (``pi_empty``: reading nothing).

Expected reward is linear in each policy row, so deterministic policies
attain every optimum and the search stays finite.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from cftwin.errors import BudgetExceeded
from cftwin.interventions import Counterfactual, Policy, Regime, Soft, deterministic_maps
from cftwin.scm import Scm
from cftwin.semantics import expected_reward
from cftwin.twin import TwinResult, conditional_twin

SEARCH_BUDGET = 10**6
STRICT_TOL = 1e-9
EQUAL_TOL = 1e-12


@dataclass
class Optimum:
    regime: Regime
    value: object
    candidates: int

    def as_dict(self) -> dict:
        return {"policy": self.regime.describe(), "value": float(self.value),
                "candidates": self.candidates}


def _search(scm, choices, build, exact, budget, what):
    """Lexicographic argmax of expected reward over ``product(*choices)``."""
    count = math.prod(len(c) for c in choices)
    if count > budget:
        raise BudgetExceeded(count, budget, what)
    best = None
    best_value = None
    tie = 0 if exact else EQUAL_TOL
    for combo in itertools.product(*choices):
        regime = build(combo)
        value = expected_reward(scm, regime, exact=exact)
        if best is None or value > best_value + tie:
            best, best_value = regime, value
    return Optimum(best, best_value, count)


def optimize_rho(scm: Scm, targets: Sequence[str], *, exact: bool = False,
                 budget: int = SEARCH_BUDGET) -> Optimum:
    """Best deterministic counterfactual intervention on ``targets``."""
    targets = list(targets)
    choices = [list(deterministic_maps(scm.domains[t])) for t in targets]
    return _search(scm, choices,
                   lambda combo: Regime(Counterfactual(t, p) for t, p in zip(targets, combo)),
                   exact, budget, "rho search")


def optimize_rho_empty(scm: Scm, targets: Sequence[str], *, exact: bool = False,
                       budget: int = SEARCH_BUDGET) -> Optimum:
    """Best counterfactual intervention whose rows ignore the natural value."""
    targets = list(targets)
    choices = [[Policy.constant_rows(v, scm.domains[t]) for v in scm.domains[t]]
               for t in targets]
    return _search(scm, choices,
                   lambda combo: Regime(Counterfactual(t, p) for t, p in zip(targets, combo)),
                   exact, budget, "rho_empty search")


def optimize_sigma(scm: Scm, targets: Sequence[str], *, exact: bool = False,
                   budget: int = SEARCH_BUDGET) -> Optimum:
    """Best input-ignoring soft intervention (an experiment) on ``targets``."""
    targets = list(targets)
    choices = [[Policy.constant(v) for v in scm.domains[t]] for t in targets]
    return _search(scm, choices,
                   lambda combo: Regime(Soft(t, p) for t, p in zip(targets, combo)),
                   exact, budget, "sigma search")


def optimize_pi(tw: TwinResult, observe: Sequence[str] | None = None, *,
                exact: bool = False, budget: int = SEARCH_BUDGET) -> Optimum:
    """Best soft intervention on the copies of a conditional twin.

    Copies of targets listed in ``observe`` (default: all) may read their
    natural value; the others get input-ignoring policies.
    """
    targets = list(tw.targets)
    observe = set(targets if observe is None else observe)
    choices = []
    for t in targets:
        dom = tw.derived.domains[t]
        if t in observe:
            choices.append(list(deterministic_maps(dom)))
        else:
            choices.append([Policy.constant(v) for v in dom])

    def build(combo):
        return Regime(Soft(tw.copy_map[t], p, reads=t if t in observe else None)
                      for t, p in zip(targets, combo))

    return _search(tw.derived, choices, build, exact, budget, "pi search")


def value_of_observation(scm: Scm, targets: Sequence[str], n: str, *,
                         exact: bool = False, tw: TwinResult | None = None):
    """Gain in optimal twin reward from letting the copy of ``n`` read ``n``.

    Compares the best policy where every copy reads its natural value with
    the best policy where only the copy of ``n`` is blind.
    """
    tw = tw or conditional_twin(scm, targets)
    full = optimize_pi(tw, exact=exact).value
    blind = optimize_pi(tw, [t for t in tw.targets if t != n], exact=exact).value
    return full - blind


def observation_dseparated(tw: TwinResult, n: str) -> bool:
    """d-separation test sufficient for a zero value of observing ``n``.

    In the twin with the edge ``n -> n'`` cut (the blind policy), checks
    whether ``n`` is d-separated from the reward given ``n'``.
    """
    c = tw.copy_map[n]
    d = tw.derived.diagram.without_edges([(n, c)])
    return d.d_separated({n}, {tw.derived.reward_var}, {c})


def _eq(a, b, exact):
    return a == b if exact else abs(a - b) <= EQUAL_TOL


def _gt(a, b, exact):
    return a > b if exact else a > b + STRICT_TOL


@dataclass
class CorollaryReport:
    rho_star: Optimum
    pi_star: Optimum
    rho_empty_star: Optimum
    pi_empty_star: Optimum
    sigma_star: Optimum
    corollary1: bool
    corollary2: bool
    bridge: bool
    dominance: bool

    @property
    def passed(self) -> bool:
        return self.corollary1 and self.corollary2 and self.bridge and self.dominance


def check_corollaries(scm: Scm, targets: Sequence[str], *, exact: bool = True) -> CorollaryReport:
    """Compute the four optima and check the equalities between them.

    corollary1: best rho in the model equals best pi in the twin.
    corollary2: the same for the input-ignoring classes.
    bridge: the best experiment equals the best input-ignoring rho.
    """
    tw = conditional_twin(scm, targets)
    rho = optimize_rho(scm, targets, exact=exact)
    pi = optimize_pi(tw, exact=exact)
    rho0 = optimize_rho_empty(scm, targets, exact=exact)
    pi0 = optimize_pi(tw, [], exact=exact)
    sigma = optimize_sigma(scm, targets, exact=exact)
    return CorollaryReport(
        rho, pi, rho0, pi0, sigma,
        corollary1=_eq(rho.value, pi.value, exact),
        corollary2=_eq(rho0.value, pi0.value, exact),
        bridge=_eq(sigma.value, rho0.value, exact),
        dominance=rho.value >= sigma.value - (0 if exact else EQUAL_TOL))


@dataclass
class Condition3Report:
    rho_beats_sigma: bool
    pi_beats_pi_empty: bool
    values: dict
    vo_table: dict
    dsep_verdicts: dict
    dsep_implies_zero_vo: dict = field(default_factory=dict)

    @property
    def biconditional(self) -> bool:
        return self.rho_beats_sigma == self.pi_beats_pi_empty

    @property
    def passed(self) -> bool:
        return self.biconditional and all(self.dsep_implies_zero_vo.values())

    @property
    def condition3(self) -> bool:
        return self.pi_beats_pi_empty


def check_condition3(scm: Scm, targets: Sequence[str], *, exact: bool = True) -> Condition3Report:
    """Evaluate both sides of the strict-improvement biconditional.

    Left: best rho strictly beats the best experiment in the model.
    Right: best pi strictly beats the best blind pi in the twin.
    Attaches the value of observing each target and the d-separation
    verdict that is sufficient for that value to vanish.
    """
    targets = list(targets)
    tw = conditional_twin(scm, targets)
    rho = optimize_rho(scm, targets, exact=exact).value
    sigma = optimize_sigma(scm, targets, exact=exact).value
    pi = optimize_pi(tw, exact=exact).value
    pi0 = optimize_pi(tw, [], exact=exact).value
    vo = {}
    dsep = {}
    implied = {}
    for t in targets:
        blind = optimize_pi(tw, [s for s in targets if s != t], exact=exact).value
        vo[t] = pi - blind
        dsep[t] = observation_dseparated(tw, t)
        implied[t] = (not dsep[t]) or _eq(vo[t], 0, exact)
    return Condition3Report(
        rho_beats_sigma=_gt(rho, sigma, exact),
        pi_beats_pi_empty=_gt(pi, pi0, exact),
        values={"rho_star": rho, "sigma_star": sigma, "pi_star": pi, "pi_empty_star": pi0},
        vo_table=vo, dsep_verdicts=dsep, dsep_implies_zero_vo=implied)


def policy_report(scm: Scm, targets: Sequence[str], *, exact: bool = True) -> dict:
    """JSON-ready summary of optima, VO table, d-separation, and the strict-gain test."""
    cor = check_corollaries(scm, targets, exact=exact)
    c3 = check_condition3(scm, targets, exact=exact)

    def num(v):
        return _num_out(v)

    return {
        "targets": list(targets),
        "rho_star": {"policy": cor.rho_star.regime.describe(), "value": num(cor.rho_star.value)},
        "sigma_star": {"policy": cor.sigma_star.regime.describe(),
                       "value": num(cor.sigma_star.value)},
        "pi_star": {"policy": cor.pi_star.regime.describe(), "value": num(cor.pi_star.value)},
        "pi_empty_star": {"policy": cor.pi_empty_star.regime.describe(),
                          "value": num(cor.pi_empty_star.value)},
        "rho_empty_star": {"policy": cor.rho_empty_star.regime.describe(),
                           "value": num(cor.rho_empty_star.value)},
        "corollary1": cor.corollary1,
        "corollary2": cor.corollary2,
        "sigma_equals_rho_empty": cor.bridge,
        "vo": {t: num(v) for t, v in c3.vo_table.items()},
        "dsep": c3.dsep_verdicts,
        "rho_beats_sigma": c3.rho_beats_sigma,
        "condition3": c3.condition3,
        "biconditional": c3.biconditional,
    }


def _num_out(v):
    if isinstance(v, Fraction):
        return {"value": float(v), "exact": f"{v.numerator}/{v.denominator}"}
    return float(v)
