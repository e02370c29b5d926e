"""Policies, interventions, and intervention regimes.

Three intervention kinds act on a target variable ``N``:

* :class:`Atomic` -- ``do(N = v)``; incoming edges are ignored.
* :class:`Soft` -- ``N`` is drawn from a fixed distribution, or from a
  distribution indexed by one named parent (``reads``). It never sees the
  natural value of ``N``.
* :class:`Counterfactual` -- the natural value ``f_N(pa, u)`` is computed
  first, from the already-intervened parents, and ``N`` is drawn from the
  policy row indexed by it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from cftwin.errors import ModelError

IGNORE = "ignore"
NATURAL = "natural"

POLICY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Policy:
    """Stochastic map from an input value to a distribution over a domain.

    ``rows`` maps an input value to ``{output value: probability}``. In
    ``ignore`` mode there is exactly one row, keyed by ``None``.
    """

    mode: str
    rows: Mapping[object, Mapping[int, object]]

    def __post_init__(self):
        if self.mode not in (IGNORE, NATURAL):
            raise ModelError(f"unknown policy mode {self.mode!r}")
        if self.mode == IGNORE and set(self.rows) != {None}:
            raise ModelError("an input-ignoring policy has exactly one row")
        for key, row in self.rows.items():
            if not row:
                raise ModelError(f"policy row {key!r} is empty")
            if any(p < 0 for p in row.values()):
                raise ModelError(f"policy row {key!r} has a negative entry")
            total = sum(row.values())
            exact = all(isinstance(p, (int, Fraction)) for p in row.values())
            if (total != 1) if exact else abs(total - 1) > POLICY_TOLERANCE:
                raise ModelError(f"policy row {key!r} sums to {total}")

    def __hash__(self):
        return hash((self.mode, frozenset(
            (k, frozenset(row.items())) for k, row in self.rows.items())))

    # constructors -----------------------------------------------------

    @classmethod
    def deterministic(cls, mapping: Mapping[int, int]) -> "Policy":
        return cls(NATURAL, {k: {v: 1} for k, v in mapping.items()})

    @classmethod
    def constant(cls, value: int) -> "Policy":
        return cls(IGNORE, {None: {value: 1}})

    @classmethod
    def fixed(cls, dist: Mapping[int, object]) -> "Policy":
        return cls(IGNORE, {None: dict(dist)})

    @classmethod
    def identity(cls, domain: Sequence[int]) -> "Policy":
        return cls.deterministic({v: v for v in domain})

    @classmethod
    def flip(cls, domain: Sequence[int]) -> "Policy":
        """Reverse the domain order; ``x -> 1 - x`` on a binary domain."""
        domain = list(domain)
        return cls.deterministic(dict(zip(domain, reversed(domain))))

    @classmethod
    def uniform(cls, domain: Sequence[int], inputs: Sequence[int] | None = None):
        p = Fraction(1, len(domain))
        row = {v: p for v in domain}
        if inputs is None:
            return cls(IGNORE, {None: row})
        return cls(NATURAL, {k: dict(row) for k in inputs})

    @classmethod
    def constant_rows(cls, value: int, inputs: Sequence[int]) -> "Policy":
        """A natural-value policy that disregards its input."""
        return cls.deterministic({k: value for k in inputs})

    # queries ----------------------------------------------------------

    @property
    def is_deterministic(self) -> bool:
        return all(sum(1 for p in row.values() if p) == 1
                   for row in self.rows.values())

    def row(self, key=None) -> Mapping[int, object]:
        if self.mode == IGNORE:
            return self.rows[None]
        return self.rows[key]

    def support(self, key=None) -> list[tuple[int, object]]:
        return [(v, p) for v, p in self.row(key).items() if p]

    def as_map(self) -> dict:
        """Deterministic policy as ``{input: output}``."""
        if not self.is_deterministic:
            raise ModelError("policy is stochastic")
        return {k: next(v for v, p in row.items() if p)
                for k, row in self.rows.items()}

    def max_branching(self) -> int:
        return max(sum(1 for p in row.values() if p) for row in self.rows.values())

    def exact(self) -> "Policy":
        return Policy(self.mode, {k: {v: Fraction(p) for v, p in row.items()}
                                  for k, row in self.rows.items()})

    def inexact(self) -> "Policy":
        return Policy(self.mode, {k: {v: float(p) for v, p in row.items()}
                                  for k, row in self.rows.items()})

    def describe(self) -> str:
        if self.is_deterministic:
            m = self.as_map()
            if self.mode == IGNORE:
                return f"const:{m[None]}"
            return "{" + ", ".join(f"{k}->{v}" for k, v in m.items()) + "}"
        return repr(dict(self.rows))


@dataclass(frozen=True)
class Atomic:
    target: str
    value: int

    def describe(self):
        return f"do({self.target}={self.value})"


@dataclass(frozen=True)
class Soft:
    target: str
    policy: Policy
    reads: str | None = None

    def __post_init__(self):
        if self.reads is None and self.policy.mode != IGNORE:
            raise ModelError("a soft intervention without `reads` must ignore its input")
        if self.reads is not None and self.policy.mode != NATURAL:
            raise ModelError("a soft intervention reading a parent needs one row per value")

    def describe(self):
        src = f"({self.reads})" if self.reads else "()"
        return f"pi_{self.target}{src}={self.policy.describe()}"


@dataclass(frozen=True)
class Counterfactual:
    target: str
    policy: Policy

    def __post_init__(self):
        if self.policy.mode != NATURAL:
            raise ModelError("a counterfactual intervention reads the natural value")

    def describe(self):
        return f"rho_{self.target}={self.policy.describe()}"


Intervention = Union[Atomic, Soft, Counterfactual]


class Regime:
    """A set of interventions with distinct targets.

    Interventions are kept in the order given; :meth:`bind` validates them
    against an SCM and returns a regime sorted topologically.
    """

    def __init__(self, interventions: Iterable[Intervention] = ()):
        self.interventions = tuple(interventions)
        targets = [iv.target for iv in self.interventions]
        if len(set(targets)) != len(targets):
            raise ModelError(f"duplicate intervention targets {targets}")
        self._by_target = {iv.target: iv for iv in self.interventions}

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(iv.target for iv in self.interventions)

    def __getitem__(self, target) -> Intervention:
        return self._by_target[target]

    def get(self, target):
        return self._by_target.get(target)

    def __contains__(self, target):
        return target in self._by_target

    def __iter__(self):
        return iter(self.interventions)

    def __len__(self):
        return len(self.interventions)

    def __eq__(self, other):
        if not isinstance(other, Regime):
            return NotImplemented
        return self._by_target == other._by_target

    def __hash__(self):
        return hash(frozenset(self._by_target.items()))

    def __repr__(self):
        return "Regime(" + ", ".join(iv.describe() for iv in self.interventions) + ")"

    def describe(self) -> str:
        return "; ".join(iv.describe() for iv in self.interventions) or "(none)"

    @property
    def is_deterministic(self) -> bool:
        return all(isinstance(iv, Atomic) or iv.policy.is_deterministic
                   for iv in self.interventions)

    def bind(self, scm) -> "Regime":
        validate_regime(scm, self)
        order = {n: i for i, n in enumerate(scm.order)}
        return Regime(sorted(self.interventions, key=lambda iv: order[iv.target]))

    def exact(self) -> "Regime":
        return Regime(_convert(iv, "exact") for iv in self.interventions)

    def inexact(self) -> "Regime":
        return Regime(_convert(iv, "inexact") for iv in self.interventions)


def _convert(iv, how):
    if isinstance(iv, Atomic):
        return iv
    policy = getattr(iv.policy, how)()
    if isinstance(iv, Soft):
        return Soft(iv.target, policy, iv.reads)
    return Counterfactual(iv.target, policy)


def validate_regime(scm, regime: Regime) -> None:
    for iv in regime:
        t = iv.target
        if t not in scm.mechanisms:
            raise ModelError(f"intervention target {t!r} is not endogenous")
        if t == scm.reward_var:
            raise ModelError("reward variable cannot be targeted")
        dom = scm.domains[t]
        if isinstance(iv, Atomic):
            if iv.value not in dom:
                raise ModelError(f"do({t}={iv.value}) outside domain {dom}")
            continue
        if isinstance(iv, Counterfactual):
            inputs = dom
        elif iv.reads is not None:
            if iv.reads not in scm.parents(t):
                raise ModelError(f"soft intervention on {t} reads {iv.reads}, "
                                 "which is not a parent")
            inputs = scm.domains[iv.reads]
        else:
            inputs = None
        if inputs is not None and set(iv.policy.rows) != set(inputs):
            raise ModelError(f"policy on {t} must have one row per value of "
                             f"{list(inputs)}, got {sorted(iv.policy.rows)}")
        for key, row in iv.policy.rows.items():
            bad = set(row) - set(dom)
            if bad:
                raise ModelError(f"policy on {t} row {key!r} puts mass on {sorted(bad)} "
                                 f"outside {list(dom)}")


# enumeration helpers -------------------------------------------------


def deterministic_maps(domain: Sequence[int], inputs: Sequence[int] | None = None):
    """All deterministic policies from ``inputs`` (default ``domain``) into ``domain``.

    Yielded in lexicographic order of the output tuple.
    """
    inputs = list(domain if inputs is None else inputs)
    for outs in itertools.product(domain, repeat=len(inputs)):
        yield Policy.deterministic(dict(zip(inputs, outs)))


def counterfactual_regime(scm, policies: Mapping[str, Policy]) -> Regime:
    return Regime(Counterfactual(t, p) for t, p in policies.items()).bind(scm)


def identity_regime(scm, targets: Sequence[str]) -> Regime:
    return counterfactual_regime(
        scm, {t: Policy.identity(scm.domains[t]) for t in targets})


def flip_regime(scm, targets: Sequence[str]) -> Regime:
    return counterfactual_regime(
        scm, {t: Policy.flip(scm.domains[t]) for t in targets})
