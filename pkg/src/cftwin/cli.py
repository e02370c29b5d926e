"""Command-line interface: ``cftwin <command> MODEL [options]``.

``MODEL`` is a JSON model file or the name of a bundled fixture
(``FIX-H``, ``FIX-G``, ...). Exit codes: 0 success, 1 validation or
check failure, 2 budget exceeded or bad usage.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from cftwin import bandit, estimation, policy
from cftwin.errors import BudgetExceeded, CftwinError, UndefinedQuantity
from cftwin.fixtures import FIXTURES, load_fixture
from cftwin.generate import random_policy
from cftwin.interventions import Counterfactual, Policy, Regime
from cftwin.io import ScmFileError, dumps, load_scm
from cftwin.twin import (TwinResult, check_targets, collapse_twin, conditional_twin,
                         verify_lemma1, verify_theorem1)

EXIT_OK, EXIT_FAIL, EXIT_BUDGET = 0, 1, 2


class UsageError(Exception):
    pass


def _out(text: str, path: str | None = None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _load(model: str):
    p = Path(model)
    if not p.exists() and model in FIXTURES:
        return load_fixture(model)
    return load_scm(p)


def _split(s: str | None) -> list[str] | None:
    if s is None:
        return None
    return [t.strip() for t in s.split(",") if t.strip()]


def _targets(scm, arg):
    targets = _split(arg)
    if targets is None:
        targets = list(scm.metadata.get("targets", []))
        if not targets:
            raise UsageError("--targets is required for this model")
    return targets


def _twin_of(scm, targets):
    """Source model and twin, whether ``scm`` is a plain model or already a twin."""
    tw = TwinResult.from_scm(scm)
    if tw.copy_map:
        if targets is not None:
            tw = TwinResult.from_scm(scm, targets)
        return collapse_twin(tw), tw
    return scm, conditional_twin(scm, targets or [])


def parse_policy(text: str, domain) -> Policy:
    """``flip``, ``identity``, ``const:<v>``, or a JSON table file ``{"natural": acted}``."""
    domain = list(domain)
    if text == "flip":
        return Policy.flip(domain)
    if text == "identity":
        return Policy.identity(domain)
    if text.startswith("const:"):
        try:
            v = int(text[len("const:"):])
        except ValueError:
            raise UsageError(f"bad constant in policy {text!r}") from None
        if v not in domain:
            raise UsageError(f"{v} is outside the domain {domain}")
        return Policy.constant_rows(v, domain)
    path = Path(text)
    if not path.exists():
        raise UsageError(f"unknown policy {text!r}; use flip, identity, const:<v>, or a file")
    return _policy_from_json(json.loads(path.read_text()), domain)


def _policy_from_json(table, domain):
    try:
        return Policy.deterministic({int(k): int(v) for k, v in table.items()})
    except (AttributeError, ValueError, TypeError) as err:
        raise UsageError(f"bad policy table {table!r}: {err}") from None


def parse_rho(text: str, scm, targets) -> Regime:
    """The same policy for every target; a JSON file may map target names to tables."""
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        doc = json.loads(path.read_text())
        if set(doc) == set(targets):
            return Regime(Counterfactual(t, _policy_from_json(doc[t], scm.domains[t]))
                          for t in targets)
    return Regime(Counterfactual(t, parse_policy(text, scm.domains[t])) for t in targets)


def _num(x):
    if isinstance(x, Fraction):
        return f"{x} ({float(x):.10g})" if x.denominator != 1 else str(x)
    return format(float(x), ".10g")


# commands -------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        scm = _load(args.model)
    except ScmFileError as err:
        print(f"invalid model {args.model}")
        for path, msg in err.problems:
            print(f"  {path}: {msg}")
        return EXIT_FAIL
    print(f"valid model {args.model}")
    print(f"  exogenous: {', '.join(f'{n}{list(scm.domains[n])}' for n in scm.exogenous)}")
    print(f"  endogenous: {', '.join(f'{n}{list(scm.domains[n])}' for n in scm.endogenous)}")
    print(f"  reward: {scm.reward_var}")
    edges = [f"{p}->{n}" for n in scm.order for p in scm.parents(n)]
    print(f"  edges ({len(edges)}): {' '.join(edges)}")
    return EXIT_OK


def cmd_twin(args) -> int:
    scm = _load(args.model)
    targets = _split(args.targets) or []
    tw = conditional_twin(scm, targets)
    _out(dumps(tw.derived), args.out)
    dest = sys.stderr if not args.out else sys.stdout
    print("copy_map: " + json.dumps(dict(tw.copy_map)), file=dest)
    return EXIT_OK


def cmd_verify(args) -> int:
    scm = _load(args.model)
    targets = _split(args.targets)
    base, auto_tw = _twin_of(scm, targets)
    if targets is None:
        targets = list(auto_tw.targets) or _targets(scm, None)
    check_targets(base, targets)
    tw = auto_tw if list(auto_tw.targets) == targets else conditional_twin(base, targets)
    if args.twin:
        tw = TwinResult.from_scm(_load(args.twin), targets)
    exact = args.mode == "exact"

    if args.policies.startswith("random:"):
        try:
            n = int(args.policies[len("random:"):])
        except ValueError:
            raise UsageError(f"bad policy count in {args.policies!r}") from None
        if n < 1:
            raise UsageError("random:N needs N >= 1")
        rng = random.Random(args.seed)
        regimes = [Regime(Counterfactual(t, random_policy(rng, base.domains[t]))
                          for t in targets) for _ in range(n)]
    else:
        regimes = [parse_rho(args.policies, base, targets)]

    if not targets:
        print("no targets: the twin is the model itself; vacuous pass")
        return EXIT_OK
    ok = True
    print(f"{'policy':<48} {'lemma1':<8} {'theorem1':<8}")
    for rho in regimes:
        l1 = verify_lemma1(base, targets, rho, exact=exact, tol=args.tol, twin=tw)
        t1 = verify_theorem1(base, targets, rho, exact=exact, tol=args.tol, twin=tw)
        print(f"{rho.describe():<48} {'pass' if l1 else 'FAIL':<8} "
              f"{'pass' if t1 else 'FAIL':<8}")
        for rep in (l1, t1):
            if not rep:
                print(f"  {rep.summary()}")
        ok = ok and l1.passed and t1.passed
    print(f"{len(regimes)} policies, mode {args.mode}: {'all pass' if ok else 'FAILURES'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_estimate(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    scm = _load(args.model)
    targets = _split(args.targets)
    base, tw = _twin_of(scm, targets)
    if not tw.copy_map:
        tw = conditional_twin(base, _targets(scm, None))
    targets = list(tw.targets)
    rho = parse_rho(args.rho, base, targets)
    tw = tw.bind(rho)
    log = estimation.simulate_trials(tw, None, args.n, args.seed)
    if args.log_out:
        Path(args.log_out).write_text(log.to_csv())
    y = args.y
    reports = []
    if args.estimator == "eq1":
        if len(targets) != 1:
            raise UsageError("eq1 needs exactly one target")
        t = targets[0]
        pol = rho[t].policy
        for a in base.domains[t]:
            rep = estimation.estimate_eq1(log, a, y)
            acted = [v for v, _ in pol.support(a)]
            try:
                exact = (estimation.exact_counterfactual_single(
                    base, a, acted[0], y, action=t, exact=True) if len(acted) == 1 else None)
            except UndefinedQuantity:
                exact = None
            reports.append(rep.with_exact(exact))
    else:
        if len(targets) != 2:
            raise UsageError(f"{args.estimator} needs exactly two targets")
        if args.estimator == "naive":
            cell = _cell(args.cell, scm.metadata.get("cell") or base.metadata.get("cell"))
            a, b = cell
            pa, pb = (rho[t].policy for t in targets)
            a2 = [v for v, _ in pa.support(a)][0]
            b2 = [v for v, _ in pb.support(b)][0]
            try:
                limit = estimation.naive_multi_limit(base, targets, rho, a, b, y, exact=True)
                eq2 = estimation.exact_eq2(base, a, b, y, a2, b2, targets, exact=True)
            except UndefinedQuantity as err:
                print(f"exact values undefined: {err}")
                limit = eq2 = None
            rep = estimation.naive_multi_estimate(log, a, b, y, exact=eq2)
            reports.append(rep)
            if limit is not None:
                print(f"naive large-sample limit: {_num(limit)}")
                print(f"exact P({base.reward_var}_{{{a2},{b2}}}={y} | {targets[0]}={a}, "
                      f"{targets[1]}={b}): {_num(eq2)}")
        else:
            exact = estimation.exact_rho_value(base, rho, y, exact=True)
            reports.append(estimation.three_factor_estimate(
                log, y, smoothing=args.smoothing, exact=exact))
    ok = True
    for rep in reports:
        print(f"estimand: {rep.estimand}")
        if rep.point is None:
            print(f"  undefined: numerator {rep.numerator}, denominator {rep.denominator}")
            ok = False
        else:
            print(f"  point: {rep.point:.6f}  counts: {rep.numerator}/{rep.denominator}")
        if rep.undefined and rep.point is not None:
            print(f"  partial: undefined cells {rep.undefined}")
        if rep.exact is not None:
            print(f"  exact: {rep.exact:.6f}")
        if rep.abs_error is not None:
            print(f"  abs error: {rep.abs_error:.6f}")
    return EXIT_OK if ok else EXIT_FAIL


def _cell(arg, default):
    if arg:
        parts = _split(arg)
        if len(parts) != 2:
            raise UsageError("--cell takes a,b")
        return int(parts[0]), int(parts[1])
    if default:
        return default["a"], default["b"]
    raise UsageError("--cell is required for the naive estimator")


def cmd_optimize(args) -> int:
    scm = _load(args.model)
    targets = _targets(scm, args.targets)
    budget = args.budget
    _check_budget(scm, targets, budget)
    report = policy.policy_report(scm, targets, exact=not args.float)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _check_budget(scm, targets, budget):
    count = 1
    for t in targets:
        d = len(scm.domains[t])
        count *= d ** d
    if count > budget:
        raise BudgetExceeded(count, budget, "rho search")


def cmd_bandit(args) -> int:
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    if args.horizon < 1:
        raise UsageError("--horizon must be at least 1")
    scm = _load(args.model)
    env = bandit.Environment(scm, exposes_intuition=not args.hide_intuition,
                             action=args.action)
    results = [bandit.run_episode(env, args.agent, args.horizon, args.seed + i)
               for i in range(args.seeds)]
    curve = bandit.regret_curve(results)
    _out(curve.to_csv(), args.out)
    if args.out:
        print(f"final regret vs best counterfactual policy: {curve.mean[-1]:.4f} "
              f"+- {curve.se[-1]:.4f} over {args.seeds} seeds")
    return EXIT_OK


# parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cftwin", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file and summarize it")
    p.add_argument("model")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("twin", help="write the conditional twin of a model")
    p.add_argument("model")
    p.add_argument("--targets", default="", help="comma-separated, ancestors first")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(fn=cmd_twin)

    p = sub.add_parser("verify", help="check twin equivalence for policies")
    p.add_argument("model")
    p.add_argument("--targets")
    p.add_argument("--policies", default="flip",
                   help="flip, identity, const:<v>, a JSON file, or random:N")
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--twin", help="use this twin file instead of building one")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("estimate", help="simulate twin trials and estimate")
    p.add_argument("model")
    p.add_argument("--targets")
    p.add_argument("--rho", default="flip")
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimator", choices=("eq1", "naive", "three-factor"), default="eq1")
    p.add_argument("--y", type=int, default=1)
    p.add_argument("--cell", help="a,b for the naive estimator")
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--log-out", help="write the trial log CSV here")
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("optimize", help="optimal policies, value of observation, strict-gain test")
    p.add_argument("model")
    p.add_argument("--targets")
    p.add_argument("--budget", type=int, default=policy.SEARCH_BUDGET)
    p.add_argument("--float", action="store_true", help="float arithmetic")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("bandit", help="seeded bandit episodes, regret curve CSV")
    p.add_argument("model")
    p.add_argument("--agent", choices=bandit.AGENTS, default="do-ts")
    p.add_argument("--horizon", type=int, default=10000)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--action")
    p.add_argument("--hide-intuition", action="store_true")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_bandit)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as err:
        ap.print_usage(sys.stderr)
        print(f"cftwin {args.command}: error: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except BudgetExceeded as err:
        print(f"budget exceeded: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except CftwinError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
