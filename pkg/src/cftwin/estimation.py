"""Trial simulation in a conditional twin and frequency estimators.

Estimators take a :class:`TrialLog` and nothing else; the exact oracles
take the SCM. Keep the two apart: the point of the estimators is that
they only see what an experimenter logging ``(I, I', Y)`` would see.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from cftwin.errors import ModelError, UndefinedQuantity
from cftwin.interventions import Atomic, Counterfactual, Regime
from cftwin.scm import Scm
from cftwin.semantics import evaluate, exact_joint, sample_array
from cftwin.twin import TwinResult, conditional_twin, lift_policy


@dataclass
class TrialLog:
    """One row per trial: natural values, acted values, and the outcome.

    ``natural[:, j]`` is the value of target ``targets[j]`` as realized in
    the conditional twin (downstream of earlier acted copies) and
    ``acted[:, j]`` the value of its copy ``copies[j]``.
    """

    targets: tuple[str, ...]
    copies: tuple[str, ...]
    outcome_var: str
    domains: Mapping[str, tuple[int, ...]]
    natural: np.ndarray
    acted: np.ndarray
    outcome: np.ndarray

    def __len__(self):
        return len(self.outcome)

    def column(self, name: str) -> np.ndarray:
        if name in self.targets:
            return self.natural[:, self.targets.index(name)]
        if name in self.copies:
            return self.acted[:, self.copies.index(name)]
        if name == self.outcome_var:
            return self.outcome
        raise KeyError(name)

    def header(self) -> list[str]:
        return ([f"natural_{t}" for t in self.targets]
                + [f"acted_{c}" for c in self.copies] + ["y"])

    def to_csv(self, fh=None) -> str | None:
        """Write the log as CSV to ``fh``, or return it as a string."""
        own = fh is None
        if own:
            fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.header())
        w.writerows(np.column_stack([self.natural, self.acted, self.outcome]).tolist())
        return fh.getvalue() if own else None

    @classmethod
    def from_csv(cls, fh, outcome_var: str = "Y", domains=None) -> "TrialLog":
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[int(x) for x in r] for r in reader], dtype=np.int64)
        rows = rows.reshape(-1, len(header))
        nat = [h[len("natural_"):] for h in header if h.startswith("natural_")]
        act = [h[len("acted_"):] for h in header if h.startswith("acted_")]
        if header[-1] != "y" or len(nat) != len(act) or len(header) != 2 * len(nat) + 1:
            raise ValueError(f"unexpected trial log header {header}")
        k = len(nat)
        if domains is None:
            domains = {}
            for j, t in enumerate(nat):
                domains[t] = tuple(sorted(set(rows[:, j].tolist())
                                          | set(rows[:, k + j].tolist())))
            domains[outcome_var] = tuple(sorted(set(rows[:, -1].tolist())))
        return cls(tuple(nat), tuple(act), outcome_var, dict(domains),
                   rows[:, :k], rows[:, k:2 * k], rows[:, -1])


@dataclass
class EstimateReport:
    estimand: str
    point: float | None
    numerator: int
    denominator: int
    exact: float | None = None
    cells: list = field(default_factory=list)
    undefined: list = field(default_factory=list)

    @property
    def defined(self) -> bool:
        return self.point is not None and not self.undefined

    @property
    def abs_error(self) -> float | None:
        if self.point is None or self.exact is None:
            return None
        return abs(self.point - float(self.exact))

    def with_exact(self, exact) -> "EstimateReport":
        self.exact = None if exact is None else float(exact)
        return self

    def as_dict(self) -> dict:
        return {"estimand": self.estimand, "point": self.point,
                "numerator": self.numerator, "denominator": self.denominator,
                "exact": self.exact, "abs_error": self.abs_error,
                "undefined": [list(u) for u in self.undefined]}


def simulate_trials(tw: TwinResult, regime: Regime | None, n: int, seed: int,
                    backend: str | None = None) -> TrialLog:
    """Run ``n`` trials of the conditional twin under a soft regime on the copies.

    ``regime`` defaults to the twin's currently lifted policies.
    """
    if regime is None:
        regime = tw.regime()
    copies = set(tw.copies)
    for iv in regime:
        if iv.target not in copies:
            raise ModelError(f"regime targets {iv.target!r}, not a primed copy")
    names, values = sample_array(tw.derived, regime, n, seed, backend)
    idx = {name: i for i, name in enumerate(names)}
    targets = tw.targets
    y = tw.derived.reward_var
    doms = {t: tw.derived.domains[t] for t in targets}
    doms[y] = tw.derived.domains[y]
    return TrialLog(
        targets=targets, copies=tw.copies, outcome_var=y, domains=doms,
        natural=values[:, [idx[t] for t in targets]],
        acted=values[:, [idx[c] for c in tw.copies]],
        outcome=values[:, idx[y]])


def _ratio(estimand, num, den):
    point = None if den == 0 else num / den
    undefined = [("denominator", estimand)] if den == 0 else []
    return EstimateReport(estimand, point, int(num), int(den), undefined=undefined)


def estimate_eq1(log: TrialLog, a: int, y: int = 1) -> EstimateReport:
    """Frequency of ``Y = y`` among trials whose natural action was ``a``.

    The log was generated under the policy, so every row already has
    ``A' = pi(a)``; conditioning on it is implicit.
    """
    if len(log.targets) != 1:
        raise ModelError("the single-action estimator needs a single-target log; "
                         "use naive_multi_estimate or three_factor_estimate")
    mask = log.natural[:, 0] == a
    num = int(np.count_nonzero(mask & (log.outcome == y)))
    den = int(np.count_nonzero(mask))
    t = log.targets[0]
    return _ratio(f"P({log.outcome_var}={y} | {t}={a}) under pi", num, den)


def _acted_mask(acted_col, natural_value, acted_value):
    if acted_value is None:
        return acted_col != natural_value
    return acted_col == acted_value


def naive_multi_estimate(log: TrialLog, a: int, b: int, y: int = 1,
                         a_acted: int | None = None, b_acted: int | None = None,
                         exact=None) -> EstimateReport:
    """Indicator ratio that treats ``(A=a, B=b)`` in the twin as the natural world.

    Counts trials with ``A=a, B=b`` and acted values ``A'``, ``B'`` that
    switched away from them (or equal ``a_acted`` / ``b_acted`` when
    given), and reports the fraction with ``Y=y``. It is biased for the
    counterfactual ``P(Y_{a'b'} = y | a, b)`` whenever the policy on ``A``
    moves ``A``, because ``B`` is then observed downstream of ``A'``.
    """
    if len(log.targets) != 2:
        raise ModelError("the multi-action estimators need a two-target log")
    A, B = log.natural[:, 0], log.natural[:, 1]
    A2, B2 = log.acted[:, 0], log.acted[:, 1]
    cond = ((A == a) & _acted_mask(A2, a, a_acted)
            & (B == b) & _acted_mask(B2, b, b_acted))
    num = int(np.count_nonzero(cond & (log.outcome == y)))
    den = int(np.count_nonzero(cond))
    ta, tb = log.targets
    rep = _ratio(f"naive P({log.outcome_var}={y} | {ta}={a}, {tb}={b}, switched)", num, den)
    return rep.with_exact(exact)


def three_factor_estimate(log: TrialLog, y: int = 1, smoothing: float = 0.0,
                          exact=None) -> EstimateReport:
    """Assemble ``P(Y_rho = y)`` from three indicator-ratio factors.

    For each natural ``a`` and ``b`` (``b`` read in the twin, i.e. after
    ``A'`` acted)::

        P(Y=y | A=a, A'=pi(a), B=b, B'=pi(b))
        * P(B=b | A=a, A'=pi(a))
        * P(A=a)

    summed over ``a, b``. If the logged policy is stochastic the acted
    values are summed out with their empirical frequencies as well; for
    deterministic policies that sum has a single term and the expression
    above is exact. ``smoothing`` adds Laplace pseudo-counts to the
    conditional factors.
    """
    if len(log.targets) != 2:
        raise ModelError("the multi-action estimators need a two-target log")
    n = len(log)
    ta, tb = log.targets
    dom_a, dom_b = log.domains[ta], log.domains[tb]
    dom_y = log.domains[log.outcome_var]
    A, B = log.natural[:, 0], log.natural[:, 1]
    A2, B2 = log.acted[:, 0], log.acted[:, 1]
    Y = log.outcome
    s = smoothing

    total = 0.0
    cells = []
    undefined = []
    for a in dom_a:
        ma = A == a
        n_a = int(np.count_nonzero(ma))
        p_a = n_a / n
        if p_a == 0:
            continue
        for alpha in sorted(set(A2[ma].tolist())):
            m_alpha = ma & (A2 == alpha)
            n_alpha = int(np.count_nonzero(m_alpha))
            p_alpha = n_alpha / n_a
            for b in dom_b:
                m_b = m_alpha & (B == b)
                n_b = int(np.count_nonzero(m_b))
                den_b = n_alpha + s * len(dom_b)
                if den_b == 0:
                    undefined.append(("P(B|A)", a, b))
                    continue
                p_b = (n_b + s) / den_b
                if p_b == 0:
                    continue
                betas = sorted(set(B2[m_b].tolist())) or [None]
                for beta in betas:
                    m_beta = m_b if beta is None else m_b & (B2 == beta)
                    n_beta = int(np.count_nonzero(m_beta))
                    p_beta = n_beta / n_b if n_b else 1.0
                    den_y = n_beta + s * len(dom_y)
                    if den_y == 0:
                        undefined.append(("P(Y|A,B)", a, b))
                        continue
                    p_y = (int(np.count_nonzero(m_beta & (Y == y))) + s) / den_y
                    term = p_y * p_beta * p_b * p_alpha * p_a
                    total += term
                    cells.append({"a": a, "a_acted": alpha, "b": b, "b_acted": beta,
                                  "p_y": p_y, "p_b": p_b, "p_a": p_a, "term": term})
    rep = EstimateReport(f"P({log.outcome_var}_rho={y}) three-factor", total,
                         int(np.count_nonzero(Y == y)), n, cells=cells,
                         undefined=undefined)
    return rep.with_exact(exact)


# exact oracles --------------------------------------------------------


def _single_action(scm, action):
    if action is not None:
        return action
    cands = [n for n in scm.order if n != scm.reward_var]
    if len(cands) != 1:
        raise ModelError(f"cannot infer the action among {cands}; pass action=")
    return cands[0]


def _conv(exact):
    return Fraction if exact else float


def exact_counterfactual_single(scm: Scm, a: int, a_prime: int, y: int = 1,
                                action: str | None = None, exact: bool = False):
    """``P(Y_{a'} = y | A = a)`` by enumeration over exogenous configurations."""
    action = _single_action(scm, action)
    conv = _conv(exact)
    num = conv(0)
    den = conv(0)
    do = Regime([Atomic(action, a_prime)])
    for u, p in scm.u_support():
        if evaluate(scm, u)[action] != a:
            continue
        den += conv(p)
        if evaluate(scm, u, do)[scm.reward_var] == y:
            num += conv(p)
    if den == 0:
        raise UndefinedQuantity(f"P({action}={a}) = 0")
    return num / den


def exact_eq2(scm: Scm, a: int, b: int, y: int, a_prime: int, b_prime: int,
              actions: Sequence[str] = ("A", "B"), exact: bool = False):
    """``P(Y_{a', b'} = y | A = a, B = b)`` with ``A, B`` read in the natural world."""
    ta, tb = actions
    conv = _conv(exact)
    num = conv(0)
    den = conv(0)
    do = Regime([Atomic(ta, a_prime), Atomic(tb, b_prime)])
    for u, p in scm.u_support():
        nat = evaluate(scm, u)
        if nat[ta] != a or nat[tb] != b:
            continue
        den += conv(p)
        if evaluate(scm, u, do)[scm.reward_var] == y:
            num += conv(p)
    if den == 0:
        raise UndefinedQuantity(f"P({ta}={a}, {tb}={b}) = 0")
    return num / den


def _as_policies(scm, rho, targets):
    if isinstance(rho, Regime):
        return {iv.target: iv.policy for iv in rho}
    return {t: rho[t] for t in targets}


def naive_multi_limit(scm: Scm, targets: Sequence[str], rho, a: int, b: int, y: int = 1,
                      a_acted: int | None = None, b_acted: int | None = None,
                      exact: bool = False):
    """Large-sample limit of :func:`naive_multi_estimate`, from the twin's exact joint."""
    ta, tb = targets
    tw = conditional_twin(scm, targets)
    joint = exact_joint(tw.derived, lift_policy(tw, _as_policies(scm, rho, targets)),
                        exact=exact)
    ca, cb = tw.copy_map[ta], tw.copy_map[tb]
    dom_a, dom_b = scm.domains[ta], scm.domains[tb]
    acts_a = [a_acted] if a_acted is not None else [v for v in dom_a if v != a]
    acts_b = [b_acted] if b_acted is not None else [v for v in dom_b if v != b]
    conv = _conv(exact)
    num = conv(0)
    den = conv(0)
    for x, z in itertools.product(acts_a, acts_b):
        ev = {ta: a, ca: x, tb: b, cb: z}
        den += joint.prob(ev)
        num += joint.prob({**ev, scm.reward_var: y})
    if den == 0:
        raise UndefinedQuantity("conditioning event has probability 0 in the twin")
    return num / den


def exact_rho_value(scm: Scm, rho, y: int = 1, targets: Sequence[str] | None = None,
                    exact: bool = False):
    """``P(Y_rho = y)`` in the original model via exact enumeration."""
    if not isinstance(rho, Regime):
        rho = Regime(Counterfactual(t, p) for t, p in rho.items())
    joint = exact_joint(scm, rho, exact=exact)
    return joint.prob({scm.reward_var: y})
