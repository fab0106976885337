"""Greedy policy rollouts and evaluation statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import GridPnP
from .errors import ConfigError
from .nets import MLP


def onehot(idx: int, n: int) -> np.ndarray:
    v = np.zeros(n)
    v[idx] = 1.0
    return v


class HierarchicalActor:
    """Greedy actor over a high-level option head and a low-level action head."""

    def __init__(self, pi_h: MLP, pi_l: MLP, K: int):
        self.pi_h = pi_h
        self.pi_l = pi_l
        self.K = K

    @property
    def n_options(self) -> int:
        return self.K

    def initial_option(self) -> int:
        return self.K  # start sentinel

    def act(self, s: np.ndarray, g: np.ndarray, c_prev: int) -> tuple[int, int]:
        h_logits = self.pi_h.forward(
            np.concatenate([s, onehot(c_prev, self.K + 1), g])
        )
        c = int(np.argmax(h_logits))
        l_logits = self.pi_l.forward(np.concatenate([s, onehot(c, self.K), g]))
        return int(np.argmax(l_logits)), c


class FlatActor:
    """Greedy actor for an option-free policy."""

    def __init__(self, pi: MLP):
        self.pi = pi

    n_options = 0

    def initial_option(self) -> None:
        return None

    def act(self, s, g, c_prev) -> tuple[int, None]:
        return int(np.argmax(self.pi.forward(np.concatenate([s, g])))), None


class TransferActor:
    """High-level option head from an n-object task driving the one-object
    low-level head.

    Options are interpreted as (object, primitive) pairs; the one-object
    policy sees the selected object's feature block in the single-object
    slot and that object's goal slice as its goal.
    """

    def __init__(self, pi_h: MLP, low_pi_l: MLP, n_objects: int):
        self.pi_h = pi_h
        self.low_pi_l = low_pi_l
        self.n = n_objects
        self.K = 2 * n_objects

    @property
    def n_options(self) -> int:
        return self.K

    def initial_option(self) -> int:
        return self.K

    def act(self, s, g, c_prev) -> tuple[int, int]:
        h_logits = self.pi_h.forward(
            np.concatenate([s, onehot(c_prev, self.K + 1), g])
        )
        c = int(np.argmax(h_logits))
        obj, phase = c // 2, c % 2
        s_low = np.concatenate([s[:2], s[2 + 4 * obj : 6 + 4 * obj]])
        g_low = g[2 * obj : 2 * obj + 2]
        l_logits = self.low_pi_l.forward(
            np.concatenate([s_low, onehot(phase, 2), g_low])
        )
        return int(np.argmax(l_logits)), c


@dataclass
class EvalResult:
    returns: np.ndarray  # per-episode return
    option_steps: np.ndarray | None  # total steps per option, or None
    option_fractions: np.ndarray | None  # per-episode fractions (E, K)

    @property
    def mean_return(self) -> float:
        return float(self.returns.mean())

    @property
    def std_return(self) -> float:
        return float(self.returns.std())

    @property
    def occupancy(self) -> np.ndarray | None:
        """Aggregate fraction of all evaluation steps spent in each option."""
        if self.option_steps is None:
            return None
        return self.option_steps / self.option_steps.sum()


def evaluate(env: GridPnP, actor, n_episodes: int, seed: int) -> EvalResult:
    """Greedy rollouts over the full horizon, deterministic in seed."""
    if n_episodes < 1:
        raise ConfigError("n_episodes must be >= 1")
    K = actor.n_options
    returns = np.zeros(n_episodes)
    steps = np.zeros(K, dtype=np.int64) if K else None
    fracs = np.zeros((n_episodes, K)) if K else None
    for e in range(n_episodes):
        state, goal = env.reset(episode_seed=_episode_seed(seed, e))
        c_prev = actor.initial_option()
        total = 0.0
        counts = np.zeros(K, dtype=np.int64) if K else None
        for _ in range(env.spec.horizon):
            s, g = env.featurize(state, goal)
            action, c = actor.act(s, g, c_prev)
            if counts is not None:
                counts[c] += 1
            state, reward = env.step(state, goal, action)
            total += reward
            c_prev = c if c is not None else c_prev
        returns[e] = total
        if counts is not None:
            steps += counts
            fracs[e] = counts / counts.sum()
    return EvalResult(returns=returns, option_steps=steps, option_fractions=fracs)


def evaluate_expert(env: GridPnP, n_episodes: int, seed: int) -> EvalResult:
    """Scripted-expert rollouts through the same episode stream as evaluate()."""
    if n_episodes < 1:
        raise ConfigError("n_episodes must be >= 1")
    from .env import scripted_expert

    returns = np.zeros(n_episodes)
    for e in range(n_episodes):
        state, goal = env.reset(episode_seed=_episode_seed(seed, e))
        total = 0.0
        for _ in range(env.spec.horizon):
            action, _ = scripted_expert(env, state, goal)
            state, reward = env.step(state, goal, action)
            total += reward
        returns[e] = total
    return EvalResult(returns=returns, option_steps=None, option_fractions=None)


def _episode_seed(seed: int, episode: int) -> int:
    return int(np.random.default_rng([seed, episode, 13]).integers(2**62))
