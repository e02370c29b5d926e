"""Canonical models shipped with the package.

``FIX-H``
    ``U -> A, U -> Y, A -> Y`` with ``A = U`` and ``Y = A xor U``; every
    arm has interventional value 1/2 while flipping the natural choice
    always wins.
``FIX-HC``
    Conditional twin of ``FIX-H`` with respect to ``A``.
``FIX-G``
    ``A -> B -> Y, A -> Y`` with one exogenous bit feeding all three;
    the best counterfactual policy beats the best experiment by at least 0.2.
``FIX-G2``
    Same shape; the naive two-action ratio is biased by at least 0.05 at
    a designated cell.
``FIX-NULL``
    ``A`` and ``Y`` driven by independent inputs.

Each file carries golden values under ``metadata.goldens``. They are
recomputed by exact enumeration every time a fixture is loaded, and a
mismatch raises. ``scripts/build_fixtures.py`` regenerates them.
"""
from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources

from cftwin.errors import CftwinError
from cftwin.estimation import exact_eq2, exact_rho_value, naive_multi_limit
from cftwin.interventions import Policy, Regime, Soft
from cftwin.io import scm_from_dict
from cftwin.policy import optimize_pi, optimize_rho, optimize_sigma
from cftwin.scm import Scm
from cftwin.semantics import exact_joint
from cftwin.twin import TwinResult

FIXTURES = ("FIX-H", "FIX-HC", "FIX-G", "FIX-G2", "FIX-NULL")


class FixtureError(CftwinError, KeyError):
    pass


def _frac(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def compute_goldens(scm: Scm) -> dict[str, str]:
    """Exact golden values for a fixture, driven by its metadata.

    ``metadata.targets`` names the intervened variables. A fixture with
    ``metadata.twin_of`` is a conditional twin and is scored on its
    copies; ``metadata.cell`` (``a, b, y``) adds the two-action
    comparison at that cell under the flip policy.
    """
    meta = scm.metadata
    targets = list(meta.get("targets", []))
    y = scm.reward_var
    out = {"p_y1_observational": _frac(exact_joint(scm, exact=True).prob({y: 1}))}
    if meta.get("twin_of"):
        tw = TwinResult.from_scm(scm, targets)
        out["pi_star"] = _frac(optimize_pi(tw, exact=True).value)
        out["pi_empty_star"] = _frac(optimize_pi(tw, [], exact=True).value)
        flip = Regime(Soft(tw.copy_map[t], Policy.flip(scm.domains[t]), reads=t)
                      for t in targets)
        out["flip_value"] = _frac(exact_joint(scm, flip, exact=True).prob({y: 1}))
        return out
    if not targets:
        return out
    out["rho_star"] = _frac(optimize_rho(scm, targets, exact=True).value)
    out["sigma_star"] = _frac(optimize_sigma(scm, targets, exact=True).value)
    flips = {t: Policy.flip(scm.domains[t]) for t in targets}
    out["flip_value"] = _frac(exact_rho_value(scm, flips, targets=targets, exact=True))
    cell = meta.get("cell")
    if cell:
        a, b, yv = cell["a"], cell["b"], cell["y"]
        da, db = scm.domains[targets[0]], scm.domains[targets[1]]
        a2, b2 = flip_value(da, a), flip_value(db, b)
        out["naive_limit"] = _frac(naive_multi_limit(scm, targets, flips, a, b, yv,
                                                     exact=True))
        out["eq2"] = _frac(exact_eq2(scm, a, b, yv, a2, b2, targets, exact=True))
        ident = {targets[0]: Policy.identity(da), targets[1]: flips[targets[1]]}
        out["naive_limit_identity_a"] = _frac(naive_multi_limit(
            scm, targets, ident, a, b, yv, a_acted=a, exact=True))
        out["eq2_identity_a"] = _frac(exact_eq2(scm, a, b, yv, a, b2, targets, exact=True))
    return out


def flip_value(domain, v) -> int:
    """Image of ``v`` under the domain-reversing policy."""
    return domain[len(domain) - 1 - domain.index(v)]


def fixture_path(name: str):
    if name not in FIXTURES:
        raise FixtureError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
    return resources.files("cftwin") / "data" / f"{name}.json"


def load_fixture(name: str, verify: bool = True) -> Scm:
    """Load a catalog model; golden values are rechecked unless ``verify=False``."""
    doc = json.loads(fixture_path(name).read_text())
    scm = scm_from_dict(doc)
    if verify:
        stored = scm.metadata.get("goldens", {})
        fresh = compute_goldens(scm)
        bad = {k: (v, fresh.get(k)) for k, v in stored.items() if fresh.get(k) != v}
        if bad or set(stored) != set(fresh):
            raise CftwinError(f"{name}: golden values do not reproduce: {bad or fresh}")
    return scm


def golden(scm: Scm, key: str) -> Fraction:
    return Fraction(scm.metadata["goldens"][key])
