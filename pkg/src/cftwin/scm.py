"""Discrete structural causal models with tabular mechanisms."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from cftwin.errors import ModelError
from cftwin.graph import CausalDiagram

PMF_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Mechanism:
    """Deterministic structural function as an exhaustive table.

    ``table`` maps a tuple of parent values (ordered like ``parents``) to
    the child's value.
    """

    parents: tuple[str, ...]
    table: Mapping[tuple[int, ...], int]
    expr: str | None = None

    def __call__(self, *args: int) -> int:
        return self.table[args]

    @classmethod
    def identity(cls, parent: str) -> "Mechanism":
        return cls((parent,), _IdentityTable(), None)


class _IdentityTable(dict):
    """Identity lookup; expanded to a full table when the SCM is built."""

    def __missing__(self, key):
        return key[0]


def as_prob(p):
    if isinstance(p, (Fraction, int)):
        return p
    if isinstance(p, str):
        return Fraction(p)
    return float(p)


@dataclass(frozen=True, eq=False)
class Scm:
    """A structural causal model ``<F, V, U, P(U)>`` over finite domains.

    Build instances with :func:`make_scm`, which derives the diagram from
    the mechanisms' parent lists and validates everything.
    """

    diagram: CausalDiagram
    domains: Mapping[str, tuple[int, ...]]
    mechanisms: Mapping[str, Mechanism]
    exogenous_pmf: tuple[tuple[tuple[int, ...], object], ...]
    reward_var: str
    reward_map: Mapping[int, float]
    metadata: Mapping[str, object] = field(default_factory=dict)

    @property
    def endogenous(self) -> tuple[str, ...]:
        return self.diagram.endogenous

    @property
    def exogenous(self) -> tuple[str, ...]:
        return self.diagram.exogenous

    @property
    def order(self) -> list[str]:
        """Endogenous variables in topological order."""
        exo = set(self.exogenous)
        return [n for n in self.diagram.topological_order() if n not in exo]

    def parents(self, n: str) -> tuple[str, ...]:
        return self.mechanisms[n].parents

    def children(self, n: str) -> tuple[str, ...]:
        return self.diagram.children(n)

    def u_support(self):
        """Yield ``(assignment dict, prob)`` over exogenous configurations with p > 0."""
        names = self.exogenous
        for values, p in self.exogenous_pmf:
            if p:
                yield dict(zip(names, values)), p

    def replace(self, **changes) -> "Scm":
        """Return a revalidated copy with some constructor arguments swapped."""
        kw = dict(endogenous=self.endogenous, exogenous=self.exogenous,
                  domains=self.domains, mechanisms=self.mechanisms,
                  exogenous_pmf=self.exogenous_pmf, reward_var=self.reward_var,
                  reward_map=self.reward_map, metadata=self.metadata)
        kw.update(changes)
        return make_scm(**kw)

    def __repr__(self):
        return (f"Scm(endogenous={list(self.endogenous)}, "
                f"exogenous={list(self.exogenous)}, reward={self.reward_var})")


def make_scm(endogenous: Sequence[str], exogenous: Sequence[str],
             domains: Mapping[str, Sequence[int]],
             mechanisms: Mapping[str, Mechanism],
             exogenous_pmf, reward_var: str,
             reward_map: Mapping[int, float] | None = None,
             metadata: Mapping[str, object] | None = None,
             pmf_tolerance: float = PMF_TOLERANCE) -> Scm:
    """Validate the pieces of an SCM and assemble them.

    ``exogenous_pmf`` is either a mapping from value tuples (ordered like
    ``exogenous``) to probabilities, or a sequence of such pairs.
    Probabilities may be floats, ints, Fractions, or ``"p/q"`` strings.
    """
    endogenous = tuple(endogenous)
    exogenous = tuple(exogenous)
    doms = {}
    for n in exogenous + endogenous:
        if n not in domains:
            raise ModelError(f"no domain for {n}")
        dom = tuple(int(v) for v in domains[n])
        if not dom or len(set(dom)) != len(dom):
            raise ModelError(f"domain of {n} must be nonempty and distinct")
        doms[n] = dom

    missing = set(endogenous) - set(mechanisms)
    if missing:
        raise ModelError(f"no mechanism for {sorted(missing)}")
    extra = set(mechanisms) - set(endogenous)
    if extra:
        raise ModelError(f"mechanisms for undeclared variables {sorted(extra)}")

    edges = []
    mechs = {}
    for n in endogenous:
        mech = mechanisms[n]
        for p in mech.parents:
            if p not in doms:
                raise ModelError(f"mechanism of {n} reads undeclared {p}")
            edges.append((p, n))
        mechs[n] = _materialize(n, mech, doms)
    diagram = CausalDiagram(endogenous, exogenous, edges)

    if isinstance(exogenous_pmf, Mapping):
        pairs = list(exogenous_pmf.items())
    else:
        pairs = list(exogenous_pmf)
    pmf = {}
    for values, p in pairs:
        values = tuple(int(v) for v in values)
        if len(values) != len(exogenous):
            raise ModelError(f"pmf entry {values} has wrong arity")
        for name, v in zip(exogenous, values):
            if v not in doms[name]:
                raise ModelError(f"pmf entry {values}: {name}={v} outside domain")
        p = as_prob(p)
        if p < 0:
            raise ModelError(f"pmf entry {values} is negative")
        if values in pmf:
            raise ModelError(f"pmf entry {values} repeated")
        pmf[values] = p
    if not exogenous and not pmf:
        pmf = {(): 1}
    total = sum(pmf.values())
    if all(isinstance(p, (Fraction, int)) for p in pmf.values()):
        ok = total == 1
    else:
        ok = abs(total - 1) <= pmf_tolerance
    if not ok:
        raise ModelError(f"pmf sums to {float(total)!r}, not 1")
    # canonical order: lexicographic over domain positions
    rank = {name: {v: i for i, v in enumerate(doms[name])} for name in exogenous}
    pmf_items = tuple(sorted(
        pmf.items(),
        key=lambda kv: tuple(rank[n][v] for n, v in zip(exogenous, kv[0]))))

    if reward_var not in endogenous:
        raise ModelError(f"reward variable {reward_var!r} is not endogenous")
    if reward_map is None:
        reward_map = {y: float(y) for y in doms[reward_var]}
    rmap = {}
    for y, r in reward_map.items():
        y = int(y)
        if y not in doms[reward_var]:
            raise ModelError(f"reward map key {y} outside domain of {reward_var}")
        rmap[y] = r
    for y in doms[reward_var]:
        if y not in rmap:
            raise ModelError(f"reward map misses {reward_var}={y}")

    return Scm(diagram, doms, mechs, pmf_items, reward_var, rmap,
               dict(metadata or {}))


def _materialize(name, mech, doms):
    dom = set(doms[name])
    table = {}
    for combo in itertools.product(*(doms[p] for p in mech.parents)):
        try:
            v = mech.table[combo]
        except KeyError:
            raise ModelError(f"mechanism of {name} has no entry for "
                             f"{dict(zip(mech.parents, combo))}") from None
        if v not in dom:
            raise ModelError(f"mechanism of {name} maps "
                             f"{dict(zip(mech.parents, combo))} to {v}, "
                             f"outside {sorted(dom)}")
        table[combo] = int(v)
    return Mechanism(tuple(mech.parents), table, mech.expr)


def tabulate(parents: Sequence[str], fn, domains: Mapping[str, Sequence[int]]):
    """Build a mechanism from a Python callable over parent values."""
    parents = tuple(parents)
    table = {combo: fn(*combo)
             for combo in itertools.product(*(domains[p] for p in parents))}
    return Mechanism(parents, table)
