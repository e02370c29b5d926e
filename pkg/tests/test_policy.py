import random
from fractions import Fraction

import pytest

from cftwin.errors import BudgetExceeded
from cftwin.generate import random_scm, random_targets
from cftwin.interventions import Policy, deterministic_maps
from cftwin.policy import (check_condition3, check_corollaries, observation_dseparated,
                           optimize_pi, optimize_rho, optimize_rho_empty, optimize_sigma,
                           policy_report, value_of_observation)
from cftwin.scm import make_scm, tabulate
from cftwin.semantics import expected_reward
from cftwin.twin import conditional_twin


def redundant_observation_scm():
    """Two actions that each reveal the same confounder on their own."""
    doms = {"U": (0, 1), "A": (0, 1), "B": (0, 1), "Y": (0, 1)}
    return make_scm(["A", "B", "Y"], ["U"], doms,
                    {"A": tabulate(["U"], lambda u: u, doms),
                     "B": tabulate(["U"], lambda u: u, doms),
                     "Y": tabulate(["A", "B", "U"], lambda a, b, u: int(a ^ b == u), doms)},
                    {(0,): "1/2", (1,): "1/2"}, "Y")


def test_fix_h_optima(fix_h):
    rho = optimize_rho(fix_h, ["A"], exact=True)
    assert rho.value == 1 and rho.candidates == 4
    assert rho.regime["A"].policy.as_map() == {0: 1, 1: 0}
    assert optimize_sigma(fix_h, ["A"], exact=True).value == Fraction(1, 2)
    rep = check_condition3(fix_h, ["A"])
    assert rep.rho_beats_sigma and rep.condition3 and rep.passed


def test_fix_hc_value_of_observation(fix_h):
    assert value_of_observation(fix_h, ["A"], "A", exact=True) == Fraction(1, 2)
    assert not observation_dseparated(conditional_twin(fix_h, ["A"]), "A")


def test_fix_null(fix_null):
    rep = check_condition3(fix_null, ["A"])
    assert not rep.rho_beats_sigma and not rep.condition3
    assert rep.vo_table == {"A": 0}
    assert rep.dsep_verdicts == {"A": True}
    assert rep.passed


def test_flat_reward_zero_value_while_connected(flat):
    rep = check_condition3(flat, ["A"])
    assert rep.vo_table == {"A": 0}
    assert rep.dsep_verdicts == {"A": False}
    assert not rep.condition3 and rep.passed
    assert check_corollaries(flat, ["A"]).passed


def test_fix_g_corollaries(fix_g):
    cor = check_corollaries(fix_g, ["A", "B"])
    assert cor.passed
    assert cor.rho_star.value == Fraction(18, 25)
    assert cor.sigma_star.value == Fraction(1, 2)
    assert cor.rho_star.value - cor.sigma_star.value >= Fraction(1, 5)
    assert check_corollaries(fix_g, ["A", "B"], exact=False).passed


def test_budget_exceeded(fix_g):
    with pytest.raises(BudgetExceeded) as err:
        optimize_rho(fix_g, ["A", "B"], budget=15)
    assert err.value.needed == 16 and err.value.budget == 15
    assert optimize_rho(fix_g, ["A", "B"], budget=16).candidates == 16


def test_lexicographic_ties(fix_null):
    first = next(iter(deterministic_maps((0, 1))))
    opt = optimize_rho(fix_null, ["A"], exact=True)
    assert opt.regime["A"].policy.as_map() == first.as_map()
    assert optimize_sigma(fix_null, ["A"], exact=True).regime["A"].policy == Policy.constant(0)
    tw = conditional_twin(fix_null, ["A"])
    assert optimize_pi(tw, exact=True).regime["A'"].policy.as_map() == first.as_map()


def test_optimum_is_an_argmax(fix_g):
    opt = optimize_rho(fix_g, ["A", "B"], exact=True)
    assert expected_reward(fix_g, opt.regime, exact=True) == opt.value
    assert optimize_rho_empty(fix_g, ["A", "B"], exact=True).candidates == 4


def test_report_json_shape(fix_h):
    rep = policy_report(fix_h, ["A"])
    assert rep["rho_star"]["value"] == {"value": 1.0, "exact": "1/1"}
    assert rep["vo"]["A"]["exact"] == "1/2"
    assert rep["condition3"] and rep["biconditional"]
    assert policy_report(fix_h, ["A"], exact=False)["sigma_star"]["value"] == 0.5


def test_zero_observation_values_do_not_imply_equality():
    scm = redundant_observation_scm()
    rep = check_condition3(scm, ["A", "B"])
    assert rep.vo_table == {"A": 0, "B": 0}
    assert rep.values["pi_star"] == 1 and rep.values["pi_empty_star"] == Fraction(1, 2)
    assert rep.condition3 and rep.rho_beats_sigma and rep.passed


@pytest.mark.parametrize("exact", [True, False])
def test_random_campaign(exact):
    rng = random.Random(2024)
    for _ in range(40):
        scm = random_scm(rng)
        targets = random_targets(rng, scm, max_size=2)
        cor = check_corollaries(scm, targets, exact=exact)
        assert cor.passed
        rep = check_condition3(scm, targets, exact=exact)
        assert rep.biconditional
        assert all(rep.dsep_implies_zero_vo.values())
        for t, vo in rep.vo_table.items():
            assert vo >= (0 if exact else -1e-12)
            if vo > 1e-9:
                assert rep.condition3
