import inspect
import io
import random
from fractions import Fraction

import numpy as np
import pytest

from cftwin import estimation
from cftwin.errors import ModelError, UndefinedQuantity
from cftwin.estimation import (TrialLog, estimate_eq1, exact_counterfactual_single, exact_eq2,
                               exact_rho_value, naive_multi_estimate, naive_multi_limit,
                               simulate_trials, three_factor_estimate)
from cftwin.fixtures import golden
from cftwin.generate import random_policy
from cftwin.interventions import Policy, flip_regime, identity_regime
from cftwin.semantics import exact_joint, observational
from cftwin.twin import TwinResult, conditional_twin


def _hc_log(fix_hc, policy, n, seed=0):
    tw = TwinResult.from_scm(fix_hc).bind({"A": policy})
    return simulate_trials(tw, None, n, seed)


def test_simulate_flip_and_identity(fix_hc):
    log = _hc_log(fix_hc, Policy.flip((0, 1)), 4, seed=3)
    assert len(log) == 4
    assert np.array_equal(log.acted[:, 0], 1 - log.natural[:, 0])
    log = _hc_log(fix_hc, Policy.identity((0, 1)), 200)
    assert np.array_equal(log.acted, log.natural)


def test_simulate_rejects_non_copy_target(fix_hc):
    tw = TwinResult.from_scm(fix_hc)
    with pytest.raises(ModelError):
        simulate_trials(tw, flip_regime(fix_hc, ["A"]), 10, 0)


def test_simulate_empirical_joint_within_five_se(fix_g):
    tw = conditional_twin(fix_g, ["A", "B"]).bind(flip_regime(fix_g, ["A", "B"]))
    n = 100000
    log = simulate_trials(tw, None, n, 8)
    exact = exact_joint(tw.derived, tw.regime())
    for a, b in [(0, 0), (1, 1), (0, 1)]:
        p = exact.prob(A=a, B=b)
        emp = np.mean((log.column("A") == a) & (log.column("B") == b))
        assert abs(emp - p) <= 5 * np.sqrt(p * (1 - p) / n)


def test_log_csv_round_trip(fix_g):
    tw = conditional_twin(fix_g, ["A", "B"]).bind(flip_regime(fix_g, ["A", "B"]))
    log = simulate_trials(tw, None, 50, 1)
    text = log.to_csv()
    assert text.splitlines()[0] == "natural_A,natural_B,acted_A',acted_B',y"
    back = TrialLog.from_csv(io.StringIO(text))
    assert np.array_equal(back.natural, log.natural)
    assert np.array_equal(back.acted, log.acted)
    assert np.array_equal(back.outcome, log.outcome)


def test_eq1_examples(fix_hc, fix_h):
    log = _hc_log(fix_hc, Policy.flip((0, 1)), 100000)
    rep = estimate_eq1(log, 1, 1)
    assert abs(rep.point - 1.0) < 0.01
    assert rep.point == rep.numerator / rep.denominator
    # identity: the observational conditional
    log = _hc_log(fix_hc, Policy.identity((0, 1)), 20000)
    for a in (0, 1):
        obs = observational(fix_h, exact=True).conditional({"Y": 1}, {"A": a})
        assert estimate_eq1(log, a, 1).point == pytest.approx(float(obs), abs=0.02)


def test_eq1_empty_cell_is_undefined(fix_hc):
    log = _hc_log(fix_hc, Policy.flip((0, 1)), 50)
    rep = estimate_eq1(log, 7, 1)
    assert rep.point is None and not rep.defined
    assert rep.denominator == 0 and rep.undefined


def test_eq1_rejects_two_target_log(fix_g):
    tw = conditional_twin(fix_g, ["A", "B"]).bind(flip_regime(fix_g, ["A", "B"]))
    with pytest.raises(ModelError):
        estimate_eq1(simulate_trials(tw, None, 10, 0), 0)


def test_exact_counterfactual_single_examples(fix_h):
    for a in (0, 1):
        assert exact_counterfactual_single(fix_h, a, 1 - a, 1, exact=True) == 1
        assert exact_counterfactual_single(fix_h, a, a, 1, exact=True) == 0
        obs = observational(fix_h, exact=True).conditional({"Y": 1}, {"A": a})
        assert exact_counterfactual_single(fix_h, a, a, 1, exact=True) == obs
    with pytest.raises(UndefinedQuantity):
        exact_counterfactual_single(fix_h, 5, 0, 1)


@pytest.mark.parametrize("name", ["FIX-H", "FIX-NULL"])
def test_single_action_equivalence_chain(name):
    from cftwin.fixtures import load_fixture
    scm = load_fixture(name)
    obs = observational(scm, exact=True)
    for pol in (Policy.flip((0, 1)), Policy.identity((0, 1)),
                Policy.constant_rows(0, (0, 1)), Policy.constant_rows(1, (0, 1))):
        lhs = exact_rho_value(scm, {"A": pol}, exact=True)
        rhs = sum(exact_counterfactual_single(scm, a, pol.as_map()[a], 1, exact=True)
                  * obs.prob(A=a) for a in (0, 1) if obs.prob(A=a))
        assert lhs == rhs


def test_exact_rho_value_examples(fix_h, fix_g):
    assert exact_rho_value(fix_h, flip_regime(fix_h, ["A"]), exact=True) == 1
    assert exact_rho_value(fix_g, identity_regime(fix_g, ["A", "B"]), exact=True) == \
        observational(fix_g, exact=True).prob(Y=1)
    assert exact_rho_value(fix_g, flip_regime(fix_g, ["A", "B"]), exact=True) == \
        golden(fix_g, "flip_value")


def test_naive_bias_on_confounded_fixture(fix_g2):
    cell = fix_g2.metadata["cell"]
    a, b = cell["a"], cell["b"]
    flips = {"A": Policy.flip((0, 1)), "B": Policy.flip((0, 1))}
    limit = naive_multi_limit(fix_g2, ["A", "B"], flips, a, b, 1, exact=True)
    eq2 = exact_eq2(fix_g2, a, b, 1, 1 - a, 1 - b, exact=True)
    assert abs(limit - eq2) >= Fraction(1, 20)
    tw = conditional_twin(fix_g2, ["A", "B"]).bind(flip_regime(fix_g2, ["A", "B"]))
    rep = naive_multi_estimate(simulate_trials(tw, None, 100000, 2), a, b, 1, exact=eq2)
    assert rep.abs_error > 0.05
    assert abs(rep.point - float(limit)) < 0.02


def test_naive_matches_with_identity_first_policy():
    rng = random.Random(12)
    from cftwin.fixtures import load_fixture
    for name in ("FIX-G", "FIX-G2"):
        scm = load_fixture(name)
        for _ in range(5):
            pol_b = random_policy(rng, (0, 1))
            pols = {"A": Policy.identity((0, 1)), "B": pol_b}
            for a in (0, 1):
                for b in (0, 1):
                    try:
                        limit = naive_multi_limit(scm, ["A", "B"], pols, a, b, 1,
                                                  a_acted=a, b_acted=pol_b.as_map()[b],
                                                  exact=True)
                    except UndefinedQuantity:
                        continue
                    assert limit == exact_eq2(scm, a, b, 1, a, pol_b.as_map()[b], exact=True)


def test_naive_empty_cell(fix_g2):
    tw = conditional_twin(fix_g2, ["A", "B"]).bind(flip_regime(fix_g2, ["A", "B"]))
    rep = naive_multi_estimate(simulate_trials(tw, None, 20, 0), 9, 9, 1)
    assert rep.point is None and rep.undefined


def test_three_factor_examples(fix_g):
    tw = conditional_twin(fix_g, ["A", "B"]).bind(flip_regime(fix_g, ["A", "B"]))
    rep = three_factor_estimate(simulate_trials(tw, None, 100000, 4),
                                exact=golden(fix_g, "flip_value"))
    assert rep.abs_error < 0.01
    ident = conditional_twin(fix_g, ["A", "B"]).bind(identity_regime(fix_g, ["A", "B"]))
    log = simulate_trials(ident, None, 50000, 4)
    # with identity policies the decomposition telescopes to the raw frequency of Y=1
    assert three_factor_estimate(log).point == pytest.approx(np.mean(log.outcome == 1))


def test_three_factor_degenerate_action():
    from cftwin.scm import make_scm, tabulate
    doms = {"U": (0, 1), "A": (0, 1), "B": (0, 1), "Y": (0, 1)}
    scm = make_scm(["A", "B", "Y"], ["U"], doms,
                   {"A": tabulate(["U"], lambda u: 1, doms),
                    "B": tabulate(["A", "U"], lambda a, u: u, doms),
                    "Y": tabulate(["A", "B", "U"], lambda a, b, u: b ^ u ^ a, doms)},
                   {(0,): "1/3", (1,): "2/3"}, "Y")
    tw = conditional_twin(scm, ["A", "B"]).bind(flip_regime(scm, ["A", "B"]))
    rep = three_factor_estimate(simulate_trials(tw, None, 3000, 0))
    assert {c["a"] for c in rep.cells} == {1}
    assert rep.point == pytest.approx(float(exact_rho_value(scm, flip_regime(scm, ["A", "B"]))),
                                      abs=0.03)


def test_three_factor_smoothing(fix_g):
    tw = conditional_twin(fix_g, ["A", "B"]).bind(flip_regime(fix_g, ["A", "B"]))
    log = simulate_trials(tw, None, 30, 0)
    smooth = three_factor_estimate(log, smoothing=1.0)
    assert 0 <= smooth.point <= 1


def test_estimators_see_only_the_log():
    for fn in (estimate_eq1, naive_multi_estimate, three_factor_estimate):
        params = inspect.signature(fn).parameters
        assert "scm" not in params and "tw" not in params
        assert list(params)[0] == "log"
    assert not hasattr(TrialLog, "scm")


def test_report_as_dict(fix_hc):
    rep = estimate_eq1(_hc_log(fix_hc, Policy.flip((0, 1)), 100), 0).with_exact(Fraction(1))
    d = rep.as_dict()
    assert d["exact"] == 1.0 and d["abs_error"] == 0.0
    assert estimation.EstimateReport("x", None, 0, 0).abs_error is None
