"""Regenerate the fixture files under src/cftwin/data.

FIX-H, FIX-HC and FIX-NULL are written by hand below. FIX-G and FIX-G2
are found by a seeded random search over tables for the shape

    A <- f_A(U, UA),  B <- f_B(A, U, UB),  Y <- f_Y(A, B, U, UY)

where U is a fair shared bit and UA, UB, UY are independent private bits

and frozen once found. Goldens are recomputed for every file.

Usage: python3 scripts/build_fixtures.py [--seed N] [--check]
"""
from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from cftwin.errors import UndefinedQuantity
from cftwin.estimation import exact_eq2, naive_multi_limit
from cftwin.fixtures import compute_goldens
from cftwin.interventions import Policy, flip_regime
from cftwin.io import scm_from_dict, scm_to_dict
from cftwin.policy import optimize_rho, optimize_sigma
from cftwin.scm import Mechanism, make_scm
from cftwin.semantics import exact_joint
from cftwin.twin import conditional_twin, lift_policy

DATA = Path(__file__).resolve().parents[1] / "src" / "cftwin" / "data"
BIN = (0, 1)


def with_metadata(scm, **meta):
    doc = scm_to_dict(scm)
    doc["metadata"] = meta
    scm = scm_from_dict(doc)
    doc["metadata"]["goldens"] = compute_goldens(scm)
    return doc


def fix_h():
    doc = {
        "variables": [{"name": "A", "domain": [0, 1]}, {"name": "Y", "domain": [0, 1]}],
        "exogenous": [{"name": "U", "domain": [0, 1]}],
        "pmf": {"joint": [{"u": {"U": 0}, "p": "1/2"}, {"u": {"U": 1}, "p": "1/2"}]},
        "mechanisms": [{"var": "A", "parents": ["U"], "expr": "U"},
                       {"var": "Y", "parents": ["A", "U"], "expr": "A ^ U"}],
        "reward": {"var": "Y", "map": {"0": 0.0, "1": 1.0}},
    }
    return scm_from_dict(doc)


def fix_null():
    doc = {
        "variables": [{"name": "A", "domain": [0, 1]}, {"name": "Y", "domain": [0, 1]}],
        "exogenous": [{"name": "U", "domain": [0, 1]}, {"name": "UY", "domain": [0, 1]}],
        "pmf": {"joint": [{"u": {"U": u, "UY": w}, "p": p}
                          for (u, w), p in zip(itertools.product(BIN, BIN),
                                               ["3/10", "3/10", "1/5", "1/5"])]},
        "mechanisms": [{"var": "A", "parents": ["U"], "expr": "U"},
                       {"var": "Y", "parents": ["UY"], "expr": "UY"}],
        "reward": {"var": "Y", "map": {"0": 0.0, "1": 1.0}},
    }
    return scm_from_dict(doc)


def random_g(rng):
    """One candidate of the FIX-G shape with random tables and a product pmf."""
    exo = ["U", "UA", "UB", "UY"]
    doms = {n: BIN for n in exo + ["A", "B", "Y"]}

    def table(parents):
        return {c: rng.choice(BIN) for c in itertools.product(BIN, repeat=len(parents))}

    mechs = {
        "A": Mechanism(("U", "UA"), table("UA")),
        "B": Mechanism(("A", "U", "UB"), table("AUB")),
        "Y": Mechanism(("A", "B", "U", "UY"), table("ABUY")),
    }
    ones = [Fraction(1, 2)] + [Fraction(rng.randint(1, 4), 5) for _ in exo[1:]]
    pmf = {}
    for bits in itertools.product(BIN, repeat=len(exo)):
        p = Fraction(1)
        for bit, q in zip(bits, ones):
            p *= q if bit else 1 - q
        pmf[bits] = p
    return make_scm(["A", "B", "Y"], exo, doms, mechs, pmf, "Y")


def cells_positive(scm, targets):
    """Every (natural A, natural B) cell of the flip-both twin has mass."""
    tw = conditional_twin(scm, targets)
    joint = exact_joint(tw.derived, lift_policy(tw, flip_regime(scm, targets)), exact=True)
    return all(joint.prob({"A": a, "B": b}) > 0 for a in BIN for b in BIN)


def search_g(rng, tries=20000):
    for i in range(tries):
        scm = random_g(rng)
        if not cells_positive(scm, ["A", "B"]):
            continue
        gap = (optimize_rho(scm, ["A", "B"], exact=True).value
               - optimize_sigma(scm, ["A", "B"], exact=True).value)
        flip = exact_joint(scm, flip_regime(scm, ["A", "B"]), exact=True).prob({"Y": 1})
        if gap >= Fraction(1, 5) and 0 < flip < 1:
            return scm, i
    raise SystemExit("no FIX-G candidate found")


def search_g2(rng, tries=20000):
    flips = {"A": Policy.flip(BIN), "B": Policy.flip(BIN)}
    for i in range(tries):
        scm = random_g(rng)
        p_obs = exact_joint(scm, exact=True).prob({"Y": 1})
        if not (0 < p_obs < 1 and cells_positive(scm, ["A", "B"])):
            continue
        for a, b in itertools.product(BIN, BIN):
            try:
                naive = naive_multi_limit(scm, ["A", "B"], flips, a, b, 1, exact=True)
                eq2 = exact_eq2(scm, a, b, 1, 1 - a, 1 - b, ["A", "B"], exact=True)
            except UndefinedQuantity:
                continue
            same = exact_eq2(scm, a, b, 1, a, 1 - b, ["A", "B"], exact=True)
            if abs(naive - eq2) >= Fraction(1, 10) and 0 < same < 1:
                return scm, i, {"a": a, "b": b, "y": 1}
    raise SystemExit("no FIX-G2 candidate found")


def build(seed):
    h = fix_h()
    hc = conditional_twin(h, ["A"]).derived
    rng = random.Random(seed)
    g, gi = search_g(rng)
    g2, g2i, cell = search_g2(rng)
    return {
        "FIX-H": with_metadata(h, targets=["A"], description="natural choice equals U; "
                               "reward is A xor U"),
        "FIX-HC": with_metadata(hc, targets=["A"], twin_of="FIX-H",
                                description="conditional twin of FIX-H on A"),
        "FIX-G": with_metadata(g, targets=["A", "B"], search={"seed": seed, "draw": gi},
                               description="shared bit U confounds A, B, Y"),
        "FIX-G2": with_metadata(g2, targets=["A", "B"], cell=cell,
                                search={"seed": seed, "draw_after_fix_g": g2i},
                                description="naive two-action ratio is biased at cell"),
        "FIX-NULL": with_metadata(fix_null(), targets=["A"],
                                  description="A and Y have independent inputs"),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--check", action="store_true",
                    help="compare with the files on disk instead of writing")
    args = ap.parse_args(argv)
    docs = build(args.seed)
    stale = []
    for name, doc in docs.items():
        text = json.dumps(doc, indent=2) + "\n"
        path = DATA / f"{name}.json"
        if args.check:
            if not path.exists() or path.read_text() != text:
                stale.append(name)
        else:
            DATA.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
            print(f"wrote {path.name}: {doc['metadata']['goldens']}")
    if stale:
        print("stale:", ", ".join(stale))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
