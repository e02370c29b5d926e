"""Twin graphs, conditional twins, and the counterfactual/soft equivalence.

A conditional twin inserts a primed copy ``I'`` between each targeted
variable ``I`` and its children. ``I`` keeps its parents and exogenous
inputs and becomes the *natural value*; ``I'`` starts as the identity on
``I`` and is later replaced by a soft intervention that reads ``I``. A
counterfactual intervention ``rho`` on ``I`` in the original model is then
reproduced by the soft intervention ``pi = rho`` on ``I'``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from cftwin.errors import ModelError, StructuralError
from cftwin.graph import PRIME, check_user_name, primed
from cftwin.interventions import Counterfactual, Policy, Regime, Soft
from cftwin.scm import Mechanism, Scm
from cftwin.semantics import Distribution, exact_joint


@dataclass(frozen=True)
class TwinResult:
    """A derived SCM plus the correspondence to the model it came from.

    ``copy_map`` sends each source variable to its primed copy; ``lifted``
    holds the policy currently placed on each copy (identity until a
    ``rho`` is bound).
    """

    derived: Scm
    copy_map: Mapping[str, str]
    lifted: Mapping[str, Policy] = field(default_factory=dict)

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(self.copy_map)

    @property
    def copies(self) -> tuple[str, ...]:
        return tuple(self.copy_map[t] for t in self.copy_map)

    def source_of(self, copy: str) -> str:
        for src, c in self.copy_map.items():
            if c == copy:
                return src
        raise KeyError(copy)

    def regime(self) -> Regime:
        """Soft interventions placing each lifted policy on its copy."""
        return Regime(Soft(c, p, reads=self.source_of(c))
                      for c, p in self.lifted.items()).bind(self.derived)

    def bind(self, rho: Regime) -> "TwinResult":
        lifted = lift_policy(self, rho)
        return TwinResult(self.derived, self.copy_map,
                          {iv.target: iv.policy for iv in lifted})

    @classmethod
    def from_scm(cls, derived: Scm, targets: Sequence[str] | None = None) -> "TwinResult":
        """Recover the copy map of a conditional twin from primed names.

        A variable ``X'`` counts as the copy of ``X`` when its only parent
        is ``X``. ``targets`` restricts (and orders) the copies considered.
        """
        found = {}
        for n in derived.order:
            if not n.endswith(PRIME):
                continue
            src = n[:-len(PRIME)]
            if src in derived.mechanisms and derived.parents(n) == (src,):
                found[src] = n
        if targets is not None:
            missing = [t for t in targets if t not in found]
            if missing:
                raise ModelError(f"no primed copy for {missing}")
            found = {t: found[t] for t in targets}
        lifted = {}
        for src, c in found.items():
            table = derived.mechanisms[c].table
            lifted[c] = Policy.deterministic({k[0]: v for k, v in table.items()})
        return cls(derived, found, lifted)


def _check_new_name(scm, name):
    if name in scm.domains:
        raise StructuralError(f"copy name {name!r} already exists in the model")


def twin_graph(scm: Scm, pi: Policy, action: str,
               rows: Sequence[str] | None = None) -> TwinResult:
    """Twin network of ``scm`` with a soft intervention ``pi`` on the copy of ``action``.

    Parameters
    ----------
    scm:
        Source model (row 0).
    pi:
        Policy for ``action'``, indexed by the row-0 value of ``action``.
    action:
        Endogenous variable whose copy receives ``pi``.
    rows:
        Variables to duplicate into row 1. Defaults to every endogenous
        variable. Row-1 copies read row-1 parents where those exist and
        share everything else (including exogenous inputs) with row 0.

    Returns
    -------
    TwinResult
        ``derived`` has ``action'`` as the identity on ``action``;
        ``lifted`` carries ``pi``. Use ``result.regime()`` to evaluate it.
    """
    if action not in scm.mechanisms:
        raise ModelError(f"{action!r} is not an endogenous variable")
    if action == scm.reward_var:
        raise ModelError("reward variable cannot be targeted")
    row = list(scm.order if rows is None else rows)
    if action not in row:
        raise ModelError(f"{action!r} must be among the duplicated variables")
    for n in row:
        if n not in scm.mechanisms:
            raise ModelError(f"{n!r} is not endogenous")
        _check_new_name(scm, primed(n))
    dup = set(row)
    copy_map = {n: primed(n) for n in scm.order if n in dup}

    mechanisms = dict(scm.mechanisms)
    domains = dict(scm.domains)
    for n, c in copy_map.items():
        domains[c] = scm.domains[n]
        if n == action:
            mechanisms[c] = Mechanism.identity(n)
        else:
            mech = scm.mechanisms[n]
            parents = tuple(copy_map.get(p, p) for p in mech.parents)
            mechanisms[c] = Mechanism(parents, mech.table)
    endogenous = list(scm.endogenous) + [copy_map[n] for n in scm.endogenous if n in dup]
    derived = scm.replace(endogenous=endogenous, domains=domains,
                          mechanisms=mechanisms, metadata={})
    return TwinResult(derived, copy_map, {copy_map[action]: pi})


def check_targets(scm: Scm, targets: Sequence[str]) -> list[str]:
    """Validate an ordered target list for :func:`conditional_twin`.

    Targets must be distinct, endogenous, unprimed, exclude the reward
    variable, and be listed ancestors-first.
    """
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise ModelError(f"duplicate targets {targets}")
    for t in targets:
        if t not in scm.mechanisms:
            raise ModelError(f"target {t!r} is not an endogenous variable")
        if t == scm.reward_var:
            raise ModelError("reward variable cannot be targeted")
        check_user_name(t)
        _check_new_name(scm, primed(t))
    for i, earlier in enumerate(targets):
        anc = scm.diagram.ancestors(earlier)
        for later in targets[i + 1:]:
            if later in anc:
                raise ModelError(
                    f"targets out of topological order: {later!r} is an ancestor "
                    f"of {earlier!r} but listed after it")
    return targets


def conditional_twin(scm: Scm, targets: Sequence[str], *, rewire: bool = True) -> TwinResult:
    """Conditional twin of ``scm`` with respect to ``targets``.

    For each target ``I`` in order: add ``I'`` with ``I`` as its only
    parent and an identity mechanism, then make every child of ``I`` read
    ``I'`` instead. ``rewire=False`` skips the second step; it exists only
    to build deliberately broken twins for mutation tests.
    """
    targets = check_targets(scm, targets)
    if not targets:
        return TwinResult(scm, {}, {})
    mechanisms = dict(scm.mechanisms)
    domains = dict(scm.domains)
    endogenous = list(scm.endogenous)
    copy_map = {}
    for t in targets:
        c = primed(t)
        copy_map[t] = c
        if rewire:
            for n, mech in list(mechanisms.items()):
                if t in mech.parents:
                    parents = tuple(c if p == t else p for p in mech.parents)
                    mechanisms[n] = Mechanism(parents, mech.table)
        mechanisms[c] = Mechanism.identity(t)
        domains[c] = scm.domains[t]
        endogenous.insert(endogenous.index(t) + 1, c)
    derived = scm.replace(endogenous=endogenous, domains=domains,
                          mechanisms=mechanisms, metadata={})
    lifted = {c: Policy.identity(scm.domains[t]) for t, c in copy_map.items()}
    return TwinResult(derived, copy_map, lifted)


def lift_policy(tw: TwinResult, rho: Regime | Mapping[str, Policy]) -> Regime:
    """Translate counterfactual interventions on ``I`` into soft ones on ``I'``.

    The lifted policy's row for input ``i`` equals ``rho``'s row for the
    natural value ``i``; it reads ``I``, the copy's only parent.
    """
    if isinstance(rho, Mapping):
        policies = dict(rho)
    else:
        policies = {}
        for iv in rho:
            if not isinstance(iv, Counterfactual):
                raise ModelError(f"can only lift counterfactual interventions, got {iv}")
            policies[iv.target] = iv.policy
    if set(policies) != set(tw.copy_map):
        raise ModelError(f"rho targets {sorted(policies)} do not match twin targets "
                         f"{sorted(tw.copy_map)}")
    return Regime(Soft(tw.copy_map[t], policies[t], reads=t)
                  for t in tw.copy_map).bind(tw.derived)


@dataclass
class VerificationReport:
    statement: str
    passed: bool
    mode: str
    left: Distribution
    right: Distribution
    differing: list

    def __bool__(self):
        return self.passed

    def summary(self) -> str:
        if self.passed:
            return f"{self.statement}: pass ({self.mode})"
        cell, p, q = self.differing[0]
        return (f"{self.statement}: FAIL ({self.mode}); {len(self.differing)} differing "
                f"cell(s), first {cell}: {p} vs {q}")


def _as_regime(scm, rho, targets):
    if isinstance(rho, Regime):
        return rho.bind(scm)
    return Regime(Counterfactual(t, rho[t]) for t in targets).bind(scm)


def _both_sides(scm, targets, rho, exact, twin):
    rho = _as_regime(scm, rho, targets)
    tw = twin if twin is not None else conditional_twin(scm, targets)
    left = exact_joint(scm, rho, exact=exact)
    right = exact_joint(tw.derived, lift_policy(tw, rho), exact=exact)
    return tw, left, right


def verify_lemma1(scm: Scm, targets: Sequence[str], rho, *, exact: bool = True,
                  tol: float = 1e-12, twin: TwinResult | None = None) -> VerificationReport:
    """Check ``P_rho(I) = P_pi(I')`` cell by cell.

    ``rho`` is a regime of counterfactual interventions or a mapping from
    target to policy. ``twin`` overrides the conditional twin (for
    mutation tests).
    """
    targets = list(targets)
    tw, left, right = _both_sides(scm, targets, rho, exact, twin)
    left = left.marginal(targets)
    right = right.marginal([tw.copy_map[t] for t in targets]).rename(
        {c: t for t, c in tw.copy_map.items()})
    diff = left.diff(right, 0 if exact else tol)
    return VerificationReport("lemma1", not diff, "exact" if exact else "float",
                              left, right, diff)


def verify_theorem1(scm: Scm, targets: Sequence[str], rho, *, exact: bool = True,
                    tol: float = 1e-12, twin: TwinResult | None = None,
                    reading: str = "correspondence") -> VerificationReport:
    """Check that the full joint over V under ``rho`` matches the twin under ``pi``.

    ``reading="correspondence"`` compares each untargeted variable with
    itself and each ``I_j`` with ``I_j'``. ``reading="literal"`` drops only
    the first target's natural copy and keeps the natural copies of later
    targets; it agrees with the correspondence reading for one target and
    is generally false for more.
    """
    targets = list(targets)
    tw, left, right = _both_sides(scm, targets, rho, exact, twin)
    if reading == "correspondence":
        mapped = {t: tw.copy_map[t] for t in targets}
    elif reading == "literal":
        mapped = {targets[0]: tw.copy_map[targets[0]]} if targets else {}
    else:
        raise ValueError(f"unknown reading {reading!r}")
    cols = [mapped.get(v, v) for v in scm.endogenous]
    right = right.marginal(cols).rename({c: t for t, c in mapped.items()})
    diff = left.diff(right, 0 if exact else tol)
    return VerificationReport(f"theorem1[{reading}]", not diff,
                              "exact" if exact else "float", left, right, diff)


def collapse_twin(tw: TwinResult) -> Scm:
    """Undo :func:`conditional_twin`: drop the copies and let children read the source."""
    copies = {c: t for t, c in tw.copy_map.items()}
    mechanisms = {}
    for n, mech in tw.derived.mechanisms.items():
        if n in copies:
            continue
        parents = tuple(copies.get(p, p) for p in mech.parents)
        mechanisms[n] = mech if parents == mech.parents else Mechanism(parents, mech.table)
    endogenous = [n for n in tw.derived.endogenous if n not in copies]
    domains = {n: d for n, d in tw.derived.domains.items() if n not in copies}
    return tw.derived.replace(endogenous=endogenous, domains=domains,
                              mechanisms=mechanisms, metadata={})
