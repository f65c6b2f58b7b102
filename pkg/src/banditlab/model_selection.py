"""Norm-adaptive OFUL: epoch doubling with a shrinking bound on ``||theta*||``.

Epoch ``i`` lasts ``n_i = 2^(i-1) n1`` rounds at confidence ``delta_i =
delta / 2^(i-1)`` and runs OFUL with the current norm bound ``b_i``.  At the
end of a complete epoch the bound is replaced by the largest norm in that
epoch's confidence ellipsoid.  Each epoch starts from a fresh ridge state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bandit import BanditInstance, ConfidenceSet, DesignState, run_episode
from .csvio import write_csv
from .linalg import trust_region_max_norm
from .policies import OFUL, PolicyConfig

__all__ = [
    "EpochSchedule",
    "epoch_schedule",
    "refine_norm_estimate",
    "ALBReport",
    "alb_run",
    "oracle_oful_regret",
]


@dataclass(frozen=True)
class EpochSchedule:
    n1: int
    delta: float
    lengths: tuple
    deltas: tuple
    truncated: bool = False  # last epoch shorter than its nominal length

    def __len__(self):
        return len(self.lengths)

    @property
    def total(self) -> int:
        return int(sum(self.lengths))


def epoch_schedule(n1: int, delta: float, total_rounds: int | None = None,
                   n_epochs: int | None = None) -> EpochSchedule:
    """Doubling schedule, cut either after ``n_epochs`` or at ``total_rounds``."""
    if n1 < 1:
        raise ValueError("n1 must be positive")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if (total_rounds is None) == (n_epochs is None):
        raise ValueError("give exactly one of total_rounds and n_epochs")
    if n_epochs is not None:
        lengths = [n1 * 2 ** i for i in range(n_epochs)]
        truncated = False
    else:
        lengths, left, i = [], total_rounds, 0
        while left > 0:
            n_i = n1 * 2 ** i
            lengths.append(min(n_i, left))
            left -= lengths[-1]
            i += 1
        truncated = bool(lengths) and lengths[-1] < n1 * 2 ** (len(lengths) - 1)
    deltas = [delta / 2 ** i for i in range(len(lengths))]
    return EpochSchedule(n1, delta, tuple(lengths), tuple(deltas), truncated)


def refine_norm_estimate(conf: ConfidenceSet, mode: str = "exact") -> float:
    """Upper bound on ``||theta||`` over the confidence ellipsoid.

    ``exact`` solves the norm maximisation; ``bound`` uses the cheaper
    ``||center|| + radius / sqrt(lambda_min(shape))``, never smaller.
    """
    center = np.asarray(conf.center, dtype=float)
    shape = np.asarray(conf.shape, dtype=float)
    s_min = float(np.linalg.eigvalsh(0.5 * (shape + shape.T))[0])
    if s_min <= 1e-12:
        raise ValueError("shape must be positive definite")
    if mode == "exact":
        return trust_region_max_norm(center, shape, conf.radius)[1]
    if mode == "bound":
        return float(np.linalg.norm(center)) + conf.radius / math.sqrt(s_min)
    raise ValueError(f"unknown refinement mode {mode!r}")


@dataclass
class ALBReport:
    b_sequence: list          # b_1 = b_init, then one entry per complete epoch
    per_epoch_regret: list
    cumulative_regret: float
    theta_hat_final: np.ndarray
    schedule: EpochSchedule
    epoch_cum_regret: list = field(default_factory=list)

    def csv_header(self):
        return ["epoch", "n_i", "delta_i", "b_i", "epoch_regret", "cum_regret"]

    def csv_rows(self):
        return [[i + 1, n_i, d_i, self.b_sequence[i], r, c]
                for i, (n_i, d_i, r, c) in enumerate(zip(self.schedule.lengths, self.schedule.deltas,
                                                         self.per_epoch_regret, self.epoch_cum_regret))]

    def to_csv(self, path):
        return write_csv(path, self.csv_header(), self.csv_rows())


def alb_run(instance: BanditInstance, b_init: float, n1: int, delta: float, total_rounds: int | None, rng,
            lam: float = 1.0, mode: str = "exact", n_epochs: int | None = None) -> ALBReport:
    """Run norm-adaptive OFUL on ``instance``.

    Either ``total_rounds`` (last epoch truncated) or ``n_epochs`` fixes the
    horizon.  No refinement follows a truncated epoch.
    """
    if b_init < 0:
        raise ValueError("b_init must be non-negative")
    sched = epoch_schedule(n1, delta, total_rounds, n_epochs)
    b = float(b_init)
    b_seq, regrets, cums = [b], [], []
    total = 0.0
    theta_hat = np.zeros(instance.dim)
    for i, (n_i, d_i) in enumerate(zip(sched.lengths, sched.deltas)):
        cfg = PolicyConfig(kind="oful", delta=d_i, b=b)
        state = DesignState(instance.dim, lam)
        traj = run_episode(OFUL(cfg), instance, n_i, rng, checkpoints=[], lam=lam, state=state)
        r = float(traj.cumulative_regret[-1])
        regrets.append(r)
        total += r
        cums.append(total)
        theta_hat = state.theta_hat.copy()
        last_truncated = sched.truncated and i == len(sched) - 1
        if not last_truncated:
            b = refine_norm_estimate(ConfidenceSet.from_state(state, b, d_i), mode)
            b_seq.append(b)
    return ALBReport(b_seq, regrets, total, theta_hat, sched, cums)


def oracle_oful_regret(instance: BanditInstance, n: int, delta: float, rng, lam: float = 1.0) -> float:
    """Cumulative regret of plain OFUL told the true ``||theta*||``."""
    cfg = PolicyConfig(kind="oful", delta=delta, b=float(np.linalg.norm(instance.theta_star)))
    traj = run_episode(OFUL(cfg), instance, n, rng, checkpoints=[], lam=lam)
    return float(traj.cumulative_regret[-1])
