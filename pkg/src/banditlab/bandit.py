"""Linear bandit simulation: ridge state, confidence sets and regret tracking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .actionspace import ActionSpace
from .csvio import write_csv

__all__ = [
    "BanditInstance",
    "DesignState",
    "update_design",
    "confidence_radius",
    "ConfidenceSet",
    "Trajectory",
    "run_episode",
    "default_checkpoints",
    "geometric_checkpoints",
    "REFRESH_EVERY",
]

REFRESH_EVERY = 512


@dataclass(frozen=True)
class BanditInstance:
    """Hidden parameter, Gaussian noise level and action set."""

    theta_star: np.ndarray
    noise_sigma: float
    space: ActionSpace

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float)
        if theta.ndim != 1 or not np.all(np.isfinite(theta)):
            raise ValueError("theta_star must be a finite vector")
        if theta.shape[0] != self.space.dim:
            raise ValueError("theta_star dimension does not match the action space")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be non-negative")
        object.__setattr__(self, "theta_star", theta)

    @property
    def dim(self) -> int:
        return self.space.dim

    def opt_value(self) -> float:
        return self.space.opt_value(self.theta_star)


class DesignState:
    """Regularised Gram matrix ``V + lam I`` with its inverse and the ridge estimate.

    The inverse is maintained with rank-one (Sherman-Morrison) updates and
    recomputed from scratch every ``REFRESH_EVERY`` updates.
    """

    def __init__(self, d: int, lam: float = 1.0):
        if not lam > 0:
            raise ValueError("lambda must be positive")
        self.d = int(d)
        self.lam = float(lam)
        self.gram = lam * np.eye(d)
        self.gram_inv = np.eye(d) / lam
        self.xty = np.zeros(d)
        self.theta_hat = np.zeros(d)
        self.n = 0

    def copy(self) -> "DesignState":
        new = DesignState.__new__(DesignState)
        new.d, new.lam, new.n = self.d, self.lam, self.n
        new.gram = self.gram.copy()
        new.gram_inv = self.gram_inv.copy()
        new.xty = self.xty.copy()
        new.theta_hat = self.theta_hat.copy()
        return new

    def update(self, action, reward: float) -> "DesignState":
        x = np.asarray(action, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"action has shape {x.shape}, expected ({self.d},)")
        if not (np.all(np.isfinite(x)) and math.isfinite(reward)):
            raise ValueError("non-finite action or reward")
        self.gram += np.outer(x, x)
        self.n += 1
        if self.n % REFRESH_EVERY == 0:
            self.refresh()
        else:
            w = self.gram_inv @ x
            self.gram_inv -= np.outer(w, w) / (1.0 + float(x @ w))
        self.xty += reward * x
        self.theta_hat = self.gram_inv @ self.xty
        return self

    def refresh(self) -> None:
        """Exact re-inversion of the Gram matrix."""
        self.gram_inv = np.linalg.inv(self.gram)
        self.gram_inv = 0.5 * (self.gram_inv + self.gram_inv.T)
        self.theta_hat = self.gram_inv @ self.xty

    def lambda_min(self) -> float:
        return float(np.linalg.eigvalsh(self.gram)[0])

    def design(self) -> np.ndarray:
        """Unregularised design matrix ``sum_s a_s a_s^T``."""
        return self.gram - self.lam * np.eye(self.d)


def update_design(state: DesignState, action, reward: float) -> DesignState:
    """Add one observation to ``state`` (in place) and return it."""
    return state.update(action, reward)


def confidence_radius(b: float, lam: float, n: int, d: int, delta: float) -> float:
    """``b sqrt(lam) + sqrt(2 ln(1/delta) + d ln(1 + n/(lam d)))`` for unit Gaussian noise."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if b < 0 or not lam > 0 or n < 0 or d < 1:
        raise ValueError("need b >= 0, lam > 0, n >= 0, d >= 1")
    return b * math.sqrt(lam) + math.sqrt(2.0 * math.log(1.0 / delta) + d * math.log1p(n / (lam * d)))


class ConfidenceSet(NamedTuple):
    """Ellipsoid ``{theta : ||theta - center||_shape <= radius}``."""

    center: np.ndarray
    shape: np.ndarray
    radius: float

    @classmethod
    def from_state(cls, state: DesignState, b: float, delta: float) -> "ConfidenceSet":
        r = confidence_radius(b, state.lam, state.n, state.d, delta)
        return cls(state.theta_hat.copy(), state.gram.copy(), r)

    def contains(self, theta) -> bool:
        y = np.asarray(theta, dtype=float) - self.center
        return float(y @ self.shape @ y) <= self.radius ** 2 * (1 + 1e-12)


@dataclass
class Trajectory:
    actions: np.ndarray
    rewards: np.ndarray
    instantaneous_regret: np.ndarray
    cumulative_regret: np.ndarray
    checkpoints: dict = field(default_factory=dict)
    final_state: DesignState | None = None

    @property
    def n(self) -> int:
        return len(self.rewards)

    def checkpoint_arrays(self):
        rounds = np.array(sorted(self.checkpoints), dtype=int)
        return rounds, np.array([self.checkpoints[r] for r in rounds])

    def csv_header(self):
        d = self.actions.shape[1]
        return ["round"] + [f"a{i}" for i in range(d)] + ["reward", "inst_regret", "cum_regret", "lambda_min"]

    def csv_rows(self):
        for t in range(self.n):
            r = t + 1
            yield [r, *self.actions[t], self.rewards[t], self.instantaneous_regret[t],
                   self.cumulative_regret[t], self.checkpoints.get(r)]

    def to_csv(self, path):
        return write_csv(path, self.csv_header(), list(self.csv_rows()))


def geometric_checkpoints(n: int, count: int = 64, start: int = 16) -> np.ndarray:
    """Up to ``count`` geometrically spaced integer rounds in ``[start, n]``."""
    if n < 1:
        raise ValueError("n must be positive")
    start = min(start, n)
    return np.unique(np.round(np.geomspace(start, n, count)).astype(int))


def default_checkpoints(n: int) -> np.ndarray:
    """Powers of two together with every multiple of ``n / 100``."""
    pows = 2 ** np.arange(int(math.log2(n)) + 1)
    step = max(1, n // 100)
    mult = np.arange(step, n + 1, step)
    return np.unique(np.concatenate([pows, mult, [n]]))


def run_episode(policy, instance: BanditInstance, n: int, rng, checkpoints=None,
                lam: float = 1.0, state: DesignState | None = None) -> Trajectory:
    """Play ``policy`` for ``n`` rounds.

    Each round the policy picks an action (drawing from ``rng`` first if it
    is randomised), then a reward ``<a, theta*> + sigma * N(0, 1)`` is drawn
    from the same generator.  ``lambda_min`` of the regularised Gram matrix is
    recorded at every round listed in ``checkpoints``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    space = instance.space
    d = space.dim
    if getattr(policy, "dim", d) != d:
        raise ValueError("policy and action space dimensions differ")
    state = DesignState(d, lam) if state is None else state
    marks = set(int(c) for c in (default_checkpoints(n) if checkpoints is None else checkpoints))
    theta = instance.theta_star
    sigma = instance.noise_sigma
    best = instance.opt_value()

    actions = np.empty((n, d))
    rewards = np.empty(n)
    inst = np.empty(n)
    record = {}
    for t in range(n):
        a = policy.select(state, space, rng)
        mean = float(a @ theta)
        y = mean + sigma * rng.standard_normal()
        state.update(a, y)
        actions[t] = a
        rewards[t] = y
        gap = best - mean
        if gap < -1e-9:
            raise ArithmeticError(f"action beats the optimum by {-gap:.3e}")
        inst[t] = max(gap, 0.0)
        if t + 1 in marks:
            record[t + 1] = state.lambda_min()
    return Trajectory(actions, rewards, inst, np.cumsum(inst), record, state)
