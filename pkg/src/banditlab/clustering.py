"""Clustering agents by their final OFUL estimates, with no forced exploration.

``N`` agents each run OFUL independently against their own cluster's
parameter.  A central step links two agents when their final ridge
estimates are within ``eta`` and reports the connected components of that
graph as clusters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from .actionspace import ActionSpace
from .bandit import BanditInstance, run_episode
from .csvio import render_csv, atomic_write_text
from .policies import OFUL, PolicyConfig

__all__ = [
    "cluster_threshold",
    "separation_condition",
    "edge_cluster",
    "partitions_equal",
    "MultiAgentConfig",
    "ClusterReport",
    "run_multi_agent_clustering",
]


def cluster_threshold(n: int, d: int, delta: float, gamma: float) -> float:
    """Linking threshold ``(4 / n^(1/4)) sqrt(2 d ln(n/delta) / (gamma ln(d/delta)))``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    log_d = math.log(d / delta)
    if log_d <= 0:
        raise ValueError("ln(d/delta) must be positive")
    return 4.0 / n ** 0.25 * math.sqrt(2.0 * d * math.log(n / delta) / (gamma * log_d))


def separation_condition(separation: float, n: int, d: int, delta: float, gamma: float) -> dict:
    """Advisory check that the cluster gap exceeds twice the threshold.

    Uses the same threshold formula as ``cluster_threshold``; returns the
    threshold, the required gap and whether ``separation`` clears it.
    """
    eta = cluster_threshold(n, d, delta, gamma)
    return {"eta": eta, "required": 2.0 * eta, "holds": separation > 2.0 * eta}


def edge_cluster(estimates, eta: float):
    """Connected components of the graph ``i ~ j  iff  ||est_i - est_j|| <= eta``.

    Returns a list of sorted 0-based index lists, ordered by smallest member.
    """
    est = np.asarray(estimates, dtype=float)
    if est.ndim != 2 or len(est) == 0:
        raise ValueError("estimates must be a non-empty (N, d) array")
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if len(est) == 1:
        return [[0]]
    adj = squareform(pdist(est)) <= eta
    _, labels = connected_components(csr_matrix(adj), directed=False)
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _canonical(partition):
    return sorted(tuple(sorted(int(i) for i in block)) for block in partition)


def partitions_equal(a, b) -> bool:
    """Equality of two partitions up to relabelling of the blocks."""
    return _canonical(a) == _canonical(b)


def partition_from_labels(labels):
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


@dataclass
class MultiAgentConfig:
    cluster_params: np.ndarray  # (k, d)
    assignment: np.ndarray      # (N,) cluster index per agent
    n: int
    delta: float = 0.1
    eta: float | None = None    # None: use cluster_threshold with gamma
    gamma: float = 0.5
    b: float | None = None      # OFUL norm bound; None: max ||theta_j||
    lam: float = 1.0

    def __post_init__(self):
        self.cluster_params = np.atleast_2d(np.asarray(self.cluster_params, dtype=float))
        self.assignment = np.asarray(self.assignment, dtype=int)
        k = len(self.cluster_params)
        if self.assignment.ndim != 1 or len(self.assignment) == 0:
            raise ValueError("assignment must be a non-empty vector")
        if self.assignment.min() < 0 or self.assignment.max() >= k:
            raise ValueError("assignment refers to a missing cluster")
        if self.n < 1:
            raise ValueError("n must be positive")
        if k >= 2 and self.separation <= 0:
            raise ValueError("cluster parameters must be distinct")
        if self.eta is not None and self.eta < 0:
            raise ValueError("eta must be non-negative")

    @property
    def N(self) -> int:
        return len(self.assignment)

    @property
    def separation(self) -> float:
        if len(self.cluster_params) < 2:
            return math.inf
        return float(np.min(pdist(self.cluster_params)))

    def threshold(self) -> float:
        if self.eta is not None:
            return float(self.eta)
        return cluster_threshold(self.n, self.cluster_params.shape[1], self.delta, self.gamma)

    def truth(self):
        return partition_from_labels(self.assignment.tolist())


@dataclass
class ClusterReport:
    partition: list
    exact_recovery: bool
    per_agent_regret: np.ndarray
    estimates: np.ndarray
    assignment: np.ndarray
    eta: float
    labels: np.ndarray = field(default=None)

    def csv_header(self):
        d = self.estimates.shape[1]
        return ["agent", "true_cluster", "assigned_cluster"] + [f"theta_hat{j}" for j in range(d)] + ["cum_regret"]

    def csv_rows(self):
        return [[i, int(self.assignment[i]), int(self.labels[i]), *self.estimates[i], self.per_agent_regret[i]]
                for i in range(len(self.assignment))]

    def summary_line(self) -> str:
        blocks = " | ".join(" ".join(str(i) for i in block) for block in self.partition)
        return f"partition: {blocks}; exact_recovery: {'true' if self.exact_recovery else 'false'}; eta: {self.eta!r}"

    def to_csv(self, path):
        text = render_csv(self.csv_header(), self.csv_rows()) + "# " + self.summary_line() + "\n"
        return atomic_write_text(path, text)


def run_multi_agent_clustering(cfg: MultiAgentConfig, space: ActionSpace, noise_sigma: float,
                               seed: int) -> ClusterReport:
    """Independent OFUL agents followed by threshold-graph clustering.

    Agent ``i`` draws from ``numpy.random.default_rng(seed + i)``, so each
    agent's run is identical to a stand-alone OFUL episode with that seed.
    """
    b = cfg.b if cfg.b is not None else float(np.max(np.linalg.norm(cfg.cluster_params, axis=1)))
    policy = OFUL(PolicyConfig(kind="oful", delta=cfg.delta, b=b))
    estimates = np.empty((cfg.N, space.dim))
    regret = np.empty(cfg.N)
    for i, j in enumerate(cfg.assignment):
        inst = BanditInstance(cfg.cluster_params[j], noise_sigma, space)
        traj = run_episode(policy, inst, cfg.n, np.random.default_rng(seed + i), checkpoints=[], lam=cfg.lam)
        estimates[i] = traj.final_state.theta_hat
        regret[i] = traj.cumulative_regret[-1]
    eta = cfg.threshold()
    part = edge_cluster(estimates, eta)
    labels = np.empty(cfg.N, dtype=int)
    for lab, block in enumerate(part):
        labels[block] = lab
    return ClusterReport(part, partitions_equal(part, cfg.truth()), regret, estimates,
                         cfg.assignment.copy(), eta, labels)
