import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cftwin.errors import ModelError
from cftwin.generate import random_rho, random_scm, random_targets
from cftwin.interventions import Counterfactual, Policy, Regime, Soft, flip_regime
from cftwin.semantics import exact_joint, observational
from cftwin.twin import (TwinResult, collapse_twin, conditional_twin, lift_policy,
                         twin_graph, verify_lemma1, verify_theorem1)


def _endo_edges(scm):
    return {(p, c) for p, c in scm.diagram.edges if p in scm.mechanisms}


def test_empty_targets_return_model(fix_g):
    tw = conditional_twin(fix_g, [])
    assert tw.derived is fix_g and not tw.copy_map


def test_two_target_twin_shape(fix_g):
    tw = conditional_twin(fix_g, ["A", "B"])
    d = tw.derived
    assert set(d.endogenous) == {"A", "A'", "B", "B'", "Y"}
    assert _endo_edges(d) == {("A", "A'"), ("A'", "B"), ("B", "B'"),
                              ("A'", "Y"), ("B'", "Y")}
    assert d.parents("A") == fix_g.parents("A")
    assert set(d.parents("B")) - {"A'"} == set(fix_g.parents("B")) - {"A"}
    assert dict(tw.copy_map) == {"A": "A'", "B": "B'"}


def test_single_target_twin_shape(fix_h, fix_hc):
    tw = conditional_twin(fix_h, ["A"])
    assert _endo_edges(tw.derived) == {("A", "A'"), ("A'", "Y")}
    assert ("U", "A") in tw.derived.diagram.edges and ("U", "Y") in tw.derived.diagram.edges
    assert exact_joint(tw.derived, exact=True).equals(exact_joint(fix_hc, exact=True))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_structural_postconditions(seed):
    rng = random.Random(seed)
    scm = random_scm(rng)
    targets = random_targets(rng, scm, min_size=0)
    tw = conditional_twin(scm, targets)
    d = tw.derived
    assert len(d.endogenous) == len(scm.endogenous) + len(targets)
    for t in targets:
        c = tw.copy_map[t]
        assert d.parents(c) == (t,)
        assert d.children(t) == (c,)
        assert set(d.children(c)) == set(scm.children(t))
        assert set(d.parents(t)) == {tw.copy_map.get(p, p) for p in scm.parents(t)}
    for t in targets:
        for v in (0, 1)[:len(scm.domains[t])]:
            assert d.mechanisms[tw.copy_map[t]].table[(v,)] == v
    # identity placeholders: the twin's untargeted marginal is the model's
    joint = exact_joint(d, exact=True).marginal(list(scm.endogenous))
    assert joint.equals(observational(scm, exact=True))


def test_target_errors(fix_g):
    with pytest.raises(ModelError, match="reward variable cannot be targeted"):
        conditional_twin(fix_g, ["A", "Y"])
    with pytest.raises(ModelError, match="'A'.*'B'"):
        conditional_twin(fix_g, ["B", "A"])
    with pytest.raises(ModelError):
        conditional_twin(fix_g, ["A", "A"])
    with pytest.raises(ModelError):
        conditional_twin(fix_g, ["Q"])


def test_lift_policy_examples(fix_h):
    tw = conditional_twin(fix_h, ["A"])
    ident = lift_policy(tw, {"A": Policy.identity((0, 1))})
    assert exact_joint(tw.derived, ident, exact=True).equals(exact_joint(tw.derived, exact=True))
    flip = lift_policy(tw, flip_regime(fix_h, ["A"]))
    assert exact_joint(tw.derived, flip, exact=True).prob(Y=1) == 1
    soft = flip["A'"]
    assert isinstance(soft, Soft) and soft.reads == "A"
    with pytest.raises(ModelError):
        lift_policy(tw, {"B": Policy.identity((0, 1))})


def test_lift_stochastic_policy(fix_g):
    rho = Regime(Counterfactual(t, Policy.uniform((0, 1), (0, 1))) for t in ("A", "B"))
    tw = conditional_twin(fix_g, ["A", "B"])
    lifted = lift_policy(tw, rho)
    assert lifted["A'"].policy.rows == {0: {0: Fraction(1, 2), 1: Fraction(1, 2)},
                                        1: {0: Fraction(1, 2), 1: Fraction(1, 2)}}
    assert (exact_joint(tw.derived, lifted, exact=True).marginal(["Y"])
            .equals(exact_joint(fix_g, rho, exact=True).marginal(["Y"])))
    assert verify_theorem1(fix_g, ["A", "B"], rho).passed


def test_lemma1_examples(fix_h, fix_g):
    rep = verify_lemma1(fix_h, ["A"], flip_regime(fix_h, ["A"]))
    assert rep.passed
    assert rep.left.table == {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}
    for scm, t in ((fix_h, ["A"]), (fix_g, ["A", "B"])):
        ident = {x: Policy.identity(scm.domains[x]) for x in t}
        assert verify_lemma1(scm, t, ident).passed


def test_corrupted_twin_fails_with_named_cell(fix_g):
    broken = conditional_twin(fix_g, ["A", "B"], rewire=False)
    rho = flip_regime(fix_g, ["A", "B"])
    rep = verify_theorem1(fix_g, ["A", "B"], rho, twin=broken)
    assert not rep.passed
    cell, p, q = rep.differing[0]
    assert set(cell) == {"A", "B", "Y"} and p != q
    assert "FAIL" in rep.summary()
    assert not verify_lemma1(fix_g, ["A", "B"], rho, twin=broken).passed


def test_theorem1_two_action_campaign(fix_g):
    rng = random.Random(50)
    for _ in range(50):
        rho = random_rho(rng, fix_g, ["A", "B"])
        assert verify_theorem1(fix_g, ["A", "B"], rho).passed
        assert verify_lemma1(fix_g, ["A", "B"], rho).passed


def test_theorem1_empty_targets(fix_g):
    assert verify_theorem1(fix_g, [], Regime()).passed


def test_literal_reading_differs_for_two_targets(fix_g):
    rho = flip_regime(fix_g, ["A", "B"])
    assert verify_theorem1(fix_g, ["A"], flip_regime(fix_g, ["A"]), reading="literal").passed
    assert not verify_theorem1(fix_g, ["A", "B"], rho, reading="literal").passed


def test_twin_graph_examples(fix_g, fix_h):
    tw = twin_graph(fix_g, Policy.flip((0, 1)), "A")
    assert set(tw.derived.endogenous) == {"A", "B", "Y", "A'", "B'", "Y'"}
    assert tw.derived.parents("A'") == ("A",)
    assert tw.derived.parents("B'") == ("A'", "U", "UB")
    same = twin_graph(fix_g, Policy.identity((0, 1)), "A")
    j = exact_joint(same.derived, same.regime(), exact=True)
    assert j.marginal(["A", "B", "Y"]).equals(
        j.marginal(["A'", "B'", "Y'"]).rename({"A'": "A", "B'": "B", "Y'": "Y"}))
    th = twin_graph(fix_h, Policy.flip((0, 1)), "A")
    jh = exact_joint(th.derived, th.regime(), exact=True)
    assert jh.prob({"Y'": 1}) == 1 and jh.prob(Y=1) == 0


def test_superfluous_variables(fix_g):
    """Y in the conditional twin with the copy of B left as identity matches
    Y' of the full twin with the policy on A."""
    rho_a = Policy.flip((0, 1))
    tw = conditional_twin(fix_g, ["A", "B"])
    lifted = lift_policy(tw, {"A": rho_a, "B": Policy.identity((0, 1))})
    cy = exact_joint(tw.derived, lifted, exact=True).marginal(["Y"])
    full = twin_graph(fix_g, rho_a, "A")
    fy = exact_joint(full.derived, full.regime(), exact=True).marginal(["Y'"])
    assert cy.equals(fy.rename({"Y'": "Y"}))


def test_from_scm_and_collapse(fix_hc, fix_h):
    tw = TwinResult.from_scm(fix_hc)
    assert dict(tw.copy_map) == {"A": "A'"}
    back = collapse_twin(tw)
    assert exact_joint(back, exact=True).equals(exact_joint(fix_h, exact=True))
    with pytest.raises(ModelError):
        TwinResult.from_scm(fix_h, ["A"])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_theorem1_random_models(seed):
    rng = random.Random(seed)
    scm = random_scm(rng)
    targets = random_targets(rng, scm)
    rho = random_rho(rng, scm, targets)
    assert verify_lemma1(scm, targets, rho).passed
    assert verify_theorem1(scm, targets, rho).passed
    assert verify_theorem1(scm, targets, rho, exact=False).passed
