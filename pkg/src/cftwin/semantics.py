"""Evaluation, exact enumeration, and sampling of SCMs under regimes."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from cftwin import kernel
from cftwin.errors import BudgetExceeded, ModelError
from cftwin.interventions import Atomic, Counterfactual, Regime
from cftwin.scm import Scm

DEFAULT_BUDGET = 10**7
SAMPLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class Distribution:
    """Finite joint distribution over ``variables``.

    ``table`` maps value tuples (ordered like ``variables``) to
    probabilities; only cells with positive mass are stored.
    """

    variables: tuple[str, ...]
    table: Mapping[tuple[int, ...], object]

    @property
    def support(self) -> list[dict[str, int]]:
        return [dict(zip(self.variables, k)) for k in self.table]

    @property
    def probs(self) -> list:
        return list(self.table.values())

    def __len__(self):
        return len(self.table)

    def total(self):
        return sum(self.table.values())

    def marginal(self, variables: Sequence[str]) -> "Distribution":
        idx = [self.variables.index(v) for v in variables]
        out: dict = {}
        for key, p in self.table.items():
            k = tuple(key[i] for i in idx)
            out[k] = out.get(k, 0) + p
        return Distribution(tuple(variables), out)

    def rename(self, mapping: Mapping[str, str]) -> "Distribution":
        return Distribution(tuple(mapping.get(v, v) for v in self.variables),
                            dict(self.table))

    def prob(self, event: Mapping[str, int] | None = None, **kw):
        """Probability that every variable in ``event`` takes its given value."""
        event = {**(event or {}), **kw}
        idx = [(self.variables.index(v), val) for v, val in event.items()]
        return sum((p for key, p in self.table.items()
                    if all(key[i] == val for i, val in idx)), 0)

    def conditional(self, target: Mapping[str, int], given: Mapping[str, int]):
        denom = self.prob(given)
        if denom == 0:
            return None
        return self.prob({**given, **target}) / denom

    def diff(self, other: "Distribution", tol: float = 0.0) -> list:
        """Cells whose probabilities differ by more than ``tol``.

        ``other`` must range over the same variables, possibly reordered.
        Returns ``[(cell dict, p_self, p_other), ...]``.
        """
        if set(self.variables) != set(other.variables):
            raise ValueError(f"variable sets differ: {self.variables} vs {other.variables}")
        other = other.marginal(self.variables)
        cells = list(self.table) + [k for k in other.table if k not in self.table]
        out = []
        for k in cells:
            p, q = self.table.get(k, 0), other.table.get(k, 0)
            if abs(p - q) > tol:
                out.append((dict(zip(self.variables, k)), p, q))
        return out

    def equals(self, other: "Distribution", tol: float = 0.0) -> bool:
        return not self.diff(other, tol)


def _bound(scm: Scm, regime: Regime | None) -> Regime:
    if regime is None:
        return Regime()
    return regime.bind(scm)


def evaluate(scm: Scm, u: Mapping[str, int], regime: Regime | None = None,
             policy_noise: Iterable[float] = ()) -> dict[str, int]:
    """Compute every variable for one exogenous configuration.

    Each soft or counterfactual target consumes one element of
    ``policy_noise`` (uniform in [0, 1)) in topological target order.
    Counterfactual targets read their natural value computed from the
    already-intervened parents.
    """
    regime = _bound(scm, regime)
    missing = set(scm.exogenous) - set(u)
    if missing:
        raise ModelError(f"exogenous assignment misses {sorted(missing)}")
    values = {n: u[n] for n in scm.exogenous}
    noise = iter(policy_noise)
    for n in scm.order:
        iv = regime.get(n)
        if isinstance(iv, Atomic):
            values[n] = iv.value
            continue
        mech = scm.mechanisms[n]
        natural = mech.table[tuple(values[p] for p in mech.parents)]
        if iv is None:
            values[n] = natural
            continue
        if isinstance(iv, Counterfactual):
            row = iv.policy.row(natural)
        elif iv.reads is not None:
            row = iv.policy.row(values[iv.reads])
        else:
            row = iv.policy.row()
        try:
            r = next(noise)
        except StopIteration:
            raise ModelError("policy_noise exhausted") from None
        values[n] = kernel.resolve(row, scm.domains[n], r)
    return values


def _branching(scm, regime):
    terms = sum(1 for _, p in scm.exogenous_pmf if p)
    for iv in regime:
        if not isinstance(iv, Atomic):
            terms *= iv.policy.max_branching()
    return terms


def exact_joint(scm: Scm, regime: Regime | None = None, *, exact: bool = False,
                budget: int = DEFAULT_BUDGET, method: str = "auto") -> Distribution:
    """Exact distribution over the endogenous variables under ``regime``.

    Sums over every exogenous configuration and every branch of every
    stochastic policy. With ``exact=True`` all arithmetic is in
    :class:`fractions.Fraction`. ``method`` selects ``"kernel"`` (only for
    deterministic regimes), ``"enumerate"``, or ``"auto"``.
    """
    regime = _bound(scm, regime)
    needed = _branching(scm, regime)
    if needed > budget:
        raise BudgetExceeded(needed, budget)
    if method == "auto":
        method = "kernel" if regime.is_deterministic else "enumerate"
    if method == "kernel":
        if not regime.is_deterministic:
            raise ModelError("the kernel path needs a deterministic regime")
        return _joint_kernel(scm, regime, exact)
    if method == "enumerate":
        return _joint_enumerate(scm, regime, exact)
    raise ValueError(f"unknown method {method!r}")


def _prob(p, exact):
    return Fraction(p) if exact else float(p)


def _joint_kernel(scm, regime, exact):
    enc = kernel.encode(scm, regime)
    rows = np.arange(len(enc.u_probs), dtype=np.int64)
    noise = np.zeros((len(rows), enc.n_noise))
    vals = enc.decode(kernel.forward(enc, rows, noise))
    cols = [enc.names.index(n) for n in scm.endogenous]
    table: dict = {}
    for key, p in zip(map(tuple, vals[:, cols].tolist()), enc.u_probs):
        table[key] = table.get(key, 0) + _prob(p, exact)
    return Distribution(scm.endogenous, table)


def _joint_enumerate(scm, regime, exact):
    order = scm.order
    table: dict = {}
    endo = scm.endogenous

    def visit(i, values, weight):
        if i == len(order):
            key = tuple(values[n] for n in endo)
            table[key] = table.get(key, 0) + weight
            return
        n = order[i]
        iv = regime.get(n)
        if isinstance(iv, Atomic):
            values[n] = iv.value
            visit(i + 1, values, weight)
            return
        mech = scm.mechanisms[n]
        natural = mech.table[tuple(values[p] for p in mech.parents)]
        if iv is None:
            values[n] = natural
            visit(i + 1, values, weight)
            return
        if isinstance(iv, Counterfactual):
            key = natural
        elif iv.reads is not None:
            key = values[iv.reads]
        else:
            key = None
        for v, p in iv.policy.support(key):
            values[n] = v
            visit(i + 1, values, weight * _prob(p, exact))
        del values[n]

    for u, p in scm.u_support():
        visit(0, dict(u), _prob(p, exact))
    return Distribution(endo, table)


def sample_array(scm: Scm, regime: Regime | None, n: int, seed: int,
                 backend: str | None = None) -> tuple[tuple[str, ...], np.ndarray]:
    """Draw ``n`` trials as an integer array.

    Returns ``(names, values)`` where ``names`` lists the exogenous then
    endogenous variables (topological order) and ``values`` has one row per
    trial. Trial ``i`` depends only on ``(seed, i)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    regime = _bound(scm, regime)
    enc = kernel.encode(scm, regime)
    chunks = []
    for start in range(0, n, SAMPLE_CHUNK):
        m = min(SAMPLE_CHUNK, n - start)
        rows, noise = kernel.draw(enc, seed, start, m, backend)
        chunks.append(kernel.forward(enc, rows, noise, backend))
    return enc.names, enc.decode(np.concatenate(chunks))


def sample(scm: Scm, regime: Regime | None, n: int, seed: int) -> list[dict[str, int]]:
    """``n`` i.i.d. total assignments, deterministic in ``seed``."""
    names, values = sample_array(scm, regime, n, seed)
    return [dict(zip(names, row)) for row in values.tolist()]


def expected_reward(scm: Scm, regime: Regime | None = None, *, exact: bool = False,
                    budget: int = DEFAULT_BUDGET):
    joint = exact_joint(scm, regime, exact=exact, budget=budget)
    marg = joint.marginal([scm.reward_var])
    conv = Fraction if exact else float
    return sum((conv(scm.reward_map[k[0]]) * p for k, p in marg.table.items()),
               conv(0))


def observational(scm: Scm, *, exact: bool = False) -> Distribution:
    return exact_joint(scm, None, exact=exact)
