import numpy as np
import pytest

from cftwin.bandit import (AGENTS, ConfigError, Environment, make_agent, regret_curve,
                           run_episode)
from cftwin.errors import ModelError


@pytest.fixture(scope="module")
def env_h(fix_h):
    return Environment(fix_h)


def test_environment_values(env_h):
    assert env_h.action == "A" and env_h.arms == (0, 1)
    assert np.allclose(env_h.do_means, [0.5, 0.5])
    assert env_h.rho_star == 1.0 and env_h.sigma_star == 0.5
    assert np.allclose(env_h.cf_means, [[0, 1], [1, 0]])


def test_environment_needs_one_action(fix_g):
    with pytest.raises(ModelError):
        Environment(fix_g)
    assert Environment(fix_g, action="A").arms == (0, 1)


@pytest.mark.parametrize("kind", AGENTS)
def test_horizon_one(env_h, kind):
    res = run_episode(env_h, kind, 1, 0)
    assert res.horizon == 1 and len(res.regret) == 1
    assert res.regret[0] in (0.0, 1.0)


def test_horizon_zero_rejected(env_h):
    with pytest.raises(ConfigError):
        run_episode(env_h, "do-ts", 0, 0)


def test_unknown_agent(env_h):
    with pytest.raises(ConfigError):
        make_agent("epsilon-greedy", 2, np.random.default_rng(0))


def test_cf_agent_needs_intuition(fix_h):
    hidden = Environment(fix_h, exposes_intuition=False)
    with pytest.raises(ConfigError):
        run_episode(hidden, "cf-ts", 10, 0)
    res = run_episode(hidden, "do-ts", 10, 0)
    assert (res.natural == -1).all()
    assert res.to_csv().splitlines()[1].split(",")[1] == ""


@pytest.mark.parametrize("kind", AGENTS)
def test_same_seed_same_run(env_h, kind):
    a = run_episode(env_h, kind, 300, 5)
    b = run_episode(env_h, kind, 300, 5)
    assert a.to_csv() == b.to_csv()
    assert run_episode(env_h, kind, 300, 6).to_csv() != a.to_csv()


def test_csv_columns(env_h):
    lines = run_episode(env_h, "cf-ts", 5, 1).to_csv().splitlines()
    assert lines[0] == "round,natural,arm,reward,regret"
    assert len(lines) == 6
    assert [int(r.split(",")[0]) for r in lines[1:]] == [1, 2, 3, 4, 5]


def test_regret_is_nondecreasing(env_h):
    for kind in AGENTS:
        res = run_episode(env_h, kind, 500, 2)
        assert (np.diff(res.regret) >= 0).all()
        assert (np.diff(res.regret_own) >= 0).all()


def test_do_agent_own_regret_is_zero_on_flat_do_values(env_h):
    # both do-values are 1/2, so no do-agent loses anything against its own class
    res = run_episode(env_h, "do-ucb", 400, 3)
    assert res.regret_own[-1] == 0


def test_regret_curve(env_h):
    runs = [run_episode(env_h, "uniform", 50, s) for s in range(4)]
    curve = regret_curve(runs)
    assert len(curve.mean) == 50 and curve.rounds[0] == 1
    mat = np.stack([r.regret for r in runs])
    assert np.allclose(curve.mean, mat.mean(0))
    assert np.allclose(curve.se, mat.std(0, ddof=1) / 2)
    assert regret_curve(runs[:1]).se.sum() == 0
    assert curve.to_csv().splitlines()[0] == "round,mean_regret,se_regret"
    with pytest.raises(ValueError):
        regret_curve([])
    with pytest.raises(ValueError):
        regret_curve([runs[0], run_episode(env_h, "uniform", 10, 0)])


def test_context_means(env_h):
    res = run_episode(env_h, "uniform", 2000, 0)
    cm = res.context_means()
    assert cm[(0, 1)] == 1.0 and cm[(0, 0)] == 0.0
