"""Sequential experiments on a single-action model.

Each round draws an exogenous configuration, optionally shows the agent
the natural value of the action (its *intuition*), takes the agent's arm
as the acted copy ``A'``, and pays the reward ``Y`` computed downstream of
``A'``. Do-agents only ever learn ``E[Y | do(x)]``; the counterfactual
agent learns ``E[Y_x | A = a]`` per natural value ``a`` and can therefore
reach the best counterfactual policy.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cftwin.errors import CftwinError, ModelError
from cftwin.interventions import Atomic, Regime
from cftwin.scm import Scm
from cftwin.semantics import evaluate

AGENTS = ("do-ucb", "do-ts", "cf-ts", "uniform")


class ConfigError(CftwinError, ValueError):
    pass


class Environment:
    """Single-action bandit backed by an SCM.

    Parameters
    ----------
    scm:
        Model with one decision variable and a bounded reward.
    exposes_intuition:
        Whether the natural action value is revealed before each choice.
    action:
        Decision variable; inferred when the model has exactly one
        endogenous variable besides the reward.
    """

    def __init__(self, scm: Scm, exposes_intuition: bool = True, action: str | None = None):
        if action is None:
            cands = [n for n in scm.order if n != scm.reward_var]
            if len(cands) != 1:
                raise ModelError(f"cannot infer the action among {cands}; pass action=")
            action = cands[0]
        if action not in scm.mechanisms or action == scm.reward_var:
            raise ModelError(f"{action!r} is not a valid action variable")
        self.scm = scm
        self.action = action
        self.exposes_intuition = exposes_intuition
        self.arms = tuple(scm.domains[action])
        support = list(scm.u_support())
        self.u_probs = np.array([float(p) for _, p in support])
        self.u_probs /= self.u_probs.sum()
        self.natural = np.array([self.arms.index(evaluate(scm, u)[action])
                                 for u, _ in support], dtype=np.int64)
        rmap = scm.reward_map
        self.rewards = np.array([
            [rmap[evaluate(scm, u, Regime([Atomic(action, x)]))[scm.reward_var]]
             for x in self.arms] for u, _ in support])
        lo, hi = min(rmap.values()), max(rmap.values())
        self.reward_range = (lo, hi)

        k = len(self.arms)
        p_nat = np.bincount(self.natural, weights=self.u_probs, minlength=k)
        self.p_natural = p_nat
        # mean reward of arm x given natural value a, and under do(x)
        self.cf_means = np.zeros((k, k))
        for a in range(k):
            mask = self.natural == a
            if p_nat[a] > 0:
                self.cf_means[a] = self.u_probs[mask] @ self.rewards[mask] / p_nat[a]
        self.do_means = self.u_probs @ self.rewards
        self.rho_star = float(p_nat @ self.cf_means.max(axis=1))
        self.sigma_star = float(self.do_means.max())

    def scaled(self, r: float) -> float:
        lo, hi = self.reward_range
        return 0.0 if hi == lo else (r - lo) / (hi - lo)


class _Agent:
    def __init__(self, k, rng):
        self.k = k
        self.rng = rng

    def update(self, context, arm, reward01):
        pass


class UniformRandom(_Agent):
    uses_context = False

    def choose(self, context, t):
        return int(self.rng.integers(self.k))


class DoUCB(_Agent):
    """UCB1 over arms; ignores the intuition."""

    uses_context = False

    def __init__(self, k, rng):
        super().__init__(k, rng)
        self.n = np.zeros(k)
        self.s = np.zeros(k)

    def choose(self, context, t):
        untried = np.flatnonzero(self.n == 0)
        if len(untried):
            return int(untried[0])
        bonus = np.sqrt(2 * math.log(t + 1) / self.n)
        return int(np.argmax(self.s / self.n + bonus))

    def update(self, context, arm, reward01):
        self.n[arm] += 1
        self.s[arm] += reward01


class DoThompson(_Agent):
    """Beta-Bernoulli Thompson sampling over arms; ignores the intuition.

    Non-binary rewards are scaled to [0, 1] and binarized by a coin flip.
    """

    uses_context = False

    def __init__(self, k, rng, contexts=1):
        super().__init__(k, rng)
        self.alpha = np.ones((contexts, k))
        self.beta = np.ones((contexts, k))

    def _row(self, context):
        return 0

    def choose(self, context, t):
        c = self._row(context)
        return int(np.argmax(self.rng.beta(self.alpha[c], self.beta[c])))

    def update(self, context, arm, reward01):
        c = self._row(context)
        win = reward01 >= 1.0 or (reward01 > 0 and self.rng.random() < reward01)
        if win:
            self.alpha[c, arm] += 1
        else:
            self.beta[c, arm] += 1


class CfThompson(DoThompson):
    """Thompson sampling with an independent posterior per (natural value, arm)."""

    uses_context = True

    def __init__(self, k, rng):
        super().__init__(k, rng, contexts=k)

    def _row(self, context):
        return context


_KINDS = {"do-ucb": DoUCB, "do-ts": DoThompson, "cf-ts": CfThompson,
          "uniform": UniformRandom}


@dataclass
class RunResult:
    """Per-round log of one episode.

    ``regret`` is cumulative expected shortfall against the best
    counterfactual policy; ``regret_own`` against the best policy of the
    agent's own class (do-values for agents that ignore the intuition).
    ``natural`` holds -1 where the environment hides the intuition.
    """

    agent: str
    arms: tuple
    natural: np.ndarray
    arm: np.ndarray
    reward: np.ndarray
    regret: np.ndarray
    regret_own: np.ndarray
    true_natural: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.arm)

    def arm_means(self) -> dict:
        """Empirical mean reward of each arm, ``nan`` for unplayed arms."""
        out = {}
        for i, x in enumerate(self.arms):
            m = self.arm == i
            out[x] = float(self.reward[m].mean()) if m.any() else float("nan")
        return out

    def context_means(self) -> dict:
        """Empirical mean reward per (natural value, arm) cell."""
        out = {}
        for i, a in enumerate(self.arms):
            for j, x in enumerate(self.arms):
                m = (self.true_natural == i) & (self.arm == j)
                out[(a, x)] = float(self.reward[m].mean()) if m.any() else float("nan")
        return out

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        if own:
            fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "natural", "arm", "reward", "regret"])
        for t in range(self.horizon):
            nat = "" if self.natural[t] < 0 else self.arms[self.natural[t]]
            w.writerow([t + 1, nat, self.arms[self.arm[t]], _fmt(self.reward[t]),
                        _fmt(self.regret[t])])
        return fh.getvalue() if own else None


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def make_agent(kind: str, k: int, rng):
    try:
        return _KINDS[kind](k, rng)
    except KeyError:
        raise ConfigError(f"unknown agent {kind!r}; choose from {', '.join(AGENTS)}") from None


def run_episode(env: Environment, agent_kind: str, horizon: int, seed: int) -> RunResult:
    """Play ``horizon`` rounds with a freshly seeded agent."""
    if horizon < 1:
        raise ConfigError("horizon must be at least 1")
    rng = np.random.default_rng(seed)
    agent = make_agent(agent_kind, len(env.arms), rng)
    if agent.uses_context and not env.exposes_intuition:
        raise ConfigError(f"agent {agent_kind!r} needs the natural value, but the "
                          "environment does not expose it")
    rows = rng.choice(len(env.u_probs), size=horizon, p=env.u_probs)
    nat = env.natural[rows]
    arms = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    for t in range(horizon):
        context = int(nat[t]) if agent.uses_context else None
        x = agent.choose(context, t)
        r = env.rewards[rows[t], x]
        arms[t] = x
        rewards[t] = r
        agent.update(context, x, env.scaled(r))
    gap = env.cf_means[nat].max(axis=1) - env.cf_means[nat, arms]
    if agent.uses_context:
        own = gap
    else:
        own = env.do_means.max() - env.do_means[arms]
    shown = nat if env.exposes_intuition else np.full(horizon, -1)
    return RunResult(agent_kind, env.arms, shown, arms, rewards,
                     np.cumsum(gap), np.cumsum(own), nat)


@dataclass
class RegretCurve:
    rounds: np.ndarray
    mean: np.ndarray
    se: np.ndarray

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        if own:
            fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "mean_regret", "se_regret"])
        for t, m, s in zip(self.rounds.tolist(), self.mean, self.se):
            w.writerow([t, _fmt(m), _fmt(s)])
        return fh.getvalue() if own else None


def regret_curve(results: Sequence[RunResult], own: bool = False) -> RegretCurve:
    """Mean and standard error of cumulative regret per round across runs."""
    if not results:
        raise ValueError("regret_curve needs at least one result")
    horizons = {r.horizon for r in results}
    if len(horizons) != 1:
        raise ValueError(f"results have different horizons {sorted(horizons)}")
    mat = np.stack([r.regret_own if own else r.regret for r in results])
    mean = mat.mean(axis=0)
    if len(results) > 1:
        se = mat.std(axis=0, ddof=1) / math.sqrt(len(results))
    else:
        se = np.zeros_like(mean)
    return RegretCurve(np.arange(1, mat.shape[1] + 1), mean, se)
