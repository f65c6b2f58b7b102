"""Design-matrix spectrum diagnostics.

Growth of ``lambda_min`` of the Gram matrix along a run, ensemble bands,
Monte-Carlo expected design matrices, eigenvector alignment,
near-optimal-arm counting and the information-inequality quantities
(Pinsker bound, Gaussian KL between two parameters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .actionspace import EpsNeighborhood, UnitSphere, check_disjoint_eps_sets, perturbation_plan
from .bandit import BanditInstance, run_episode
from .linalg import as_sym, eig_sym

__all__ = [
    "SpectralTrace",
    "EnsembleBand",
    "ExponentReport",
    "AlignmentReport",
    "PinskerReport",
    "exponent_estimate",
    "ensemble_band",
    "geometric_mean_trace",
    "mc_expected_design",
    "alignment_check",
    "eps_fraction",
    "neighborhood_eps",
    "bernoulli_kl",
    "pinsker_bound",
    "kl_quadratic_lhs",
    "highprob_reference",
    "highprob_slope",
    "ProofChainReport",
    "proof_chain",
]

THRESHOLD_TOL = 1e-12


def _fit_slope(rounds, lam) -> float:
    x = np.log(rounds)
    y = np.log(lam)
    return float(np.polyfit(x, y, 1)[0])


def _tail(m: int, tail_fraction: float) -> slice:
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    k = max(2, int(math.ceil(tail_fraction * m)))
    return slice(m - min(k, m), m)


@dataclass(frozen=True)
class SpectralTrace:
    """Checkpointed ``lambda_min`` with the two growth-exponent estimators.

    ``raw_exponent[i] = ln(lambda_min[i]) / ln(rounds[i])``; ``fitted_slope``
    is the least-squares slope of ``ln lambda_min`` on ``ln n`` over the last
    ``tail_fraction`` of checkpoints.
    """

    rounds: np.ndarray
    lambda_min: np.ndarray
    raw_exponent: np.ndarray
    fitted_slope: float
    tail_fraction: float = 0.5

    @classmethod
    def from_checkpoints(cls, rounds, lambda_min, tail_fraction: float = 0.5) -> "SpectralTrace":
        rounds = np.asarray(rounds, dtype=int)
        lam = np.asarray(lambda_min, dtype=float)
        if rounds.shape != lam.shape or rounds.ndim != 1:
            raise ValueError("rounds and lambda_min must be matching vectors")
        keep = rounds >= 2
        rounds, lam = rounds[keep], lam[keep]
        if len(rounds) < 2:
            raise ValueError("need at least two checkpoints with n >= 2")
        if np.any(np.diff(rounds) <= 0):
            raise ValueError("rounds must be strictly increasing")
        if np.any(lam <= 0):
            raise ValueError("lambda_min must be positive")
        raw = np.log(lam) / np.log(rounds)
        sl = _tail(len(rounds), tail_fraction)
        return cls(rounds, lam, raw, _fit_slope(rounds[sl], lam[sl]), tail_fraction)

    @classmethod
    def from_trajectory(cls, traj, tail_fraction: float = 0.5) -> "SpectralTrace":
        rounds, lam = traj.checkpoint_arrays()
        return cls.from_checkpoints(rounds, lam, tail_fraction)

    def csv_header(self):
        return ["round", "lambda_min", "raw_exponent"]

    def csv_rows(self):
        return [[int(r), float(v), float(e)] for r, v, e in zip(self.rounds, self.lambda_min, self.raw_exponent)]


class ExponentReport(NamedTuple):
    n0_hat: int | None  # None: threshold never held through the end
    gamma_hat: float
    fitted_slope: float
    final_raw_exponent: float

    def n0_or_inf(self) -> float:
        return math.inf if self.n0_hat is None else float(self.n0_hat)


def exponent_estimate(trace: SpectralTrace, threshold: float = 0.5,
                      tail_fraction: float | None = None) -> ExponentReport:
    """Crossing time, growth constant and slope of a ``lambda_min`` trace.

    ``n0_hat`` is the first checkpoint from which the raw exponent stays at
    or above ``threshold`` for every later checkpoint.  ``gamma_hat`` is
    the minimum of ``lambda_min / sqrt(n)`` over the tail window, which is
    also where the slope is fitted.
    """
    m = len(trace.rounds)
    if m < 5:
        raise ValueError("exponent estimation needs at least 5 checkpoints")
    tf = trace.tail_fraction if tail_fraction is None else tail_fraction
    sl = _tail(m, tf)
    above = trace.raw_exponent >= threshold - THRESHOLD_TOL
    n0 = None
    if above[-1]:
        # first index of the final run of True values
        below = np.flatnonzero(~above)
        n0 = int(trace.rounds[below[-1] + 1 if len(below) else 0])
    gamma = float(np.min(trace.lambda_min[sl] / np.sqrt(trace.rounds[sl])))
    slope = _fit_slope(trace.rounds[sl], trace.lambda_min[sl])
    return ExponentReport(n0, gamma, slope, float(trace.raw_exponent[-1]))


@dataclass(frozen=True)
class EnsembleBand:
    rounds: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    k_sigma: float

    @property
    def lower(self) -> np.ndarray:
        return self.mean - self.k_sigma * self.std

    @property
    def upper(self) -> np.ndarray:
        return self.mean + self.k_sigma * self.std

    def csv_header(self):
        return ["round", "mean", "std", "band_lo", "band_hi"]

    def csv_rows(self):
        return [[int(r), float(m), float(s), float(lo), float(hi)]
                for r, m, s, lo, hi in zip(self.rounds, self.mean, self.std, self.lower, self.upper)]


def _aligned(traces) -> np.ndarray:
    if len(traces) < 2:
        raise ValueError("need at least two traces")
    rounds = traces[0].rounds
    for t in traces[1:]:
        if not np.array_equal(t.rounds, rounds):
            raise ValueError("traces have misaligned checkpoints")
    return rounds


def ensemble_band(traces, k_sigma: float = 3.0) -> EnsembleBand:
    """Per-checkpoint mean and sample standard deviation of the raw exponent."""
    rounds = _aligned(traces)
    raw = np.vstack([t.raw_exponent for t in traces])
    return EnsembleBand(rounds, raw.mean(axis=0), raw.std(axis=0, ddof=1), float(k_sigma))


def geometric_mean_trace(traces, tail_fraction: float | None = None) -> SpectralTrace:
    """Trace of the geometric mean of ``lambda_min`` across trials.

    Its raw exponent equals the mean of the per-trial raw exponents, so
    crossing times read off it agree with the band's mean curve.
    """
    rounds = _aligned(traces)
    lam = np.exp(np.mean(np.log(np.vstack([t.lambda_min for t in traces])), axis=0))
    tf = traces[0].tail_fraction if tail_fraction is None else tail_fraction
    return SpectralTrace.from_checkpoints(rounds, lam, tf)


def mc_expected_design(policy, instance: BanditInstance, n: int, trials: int, master_seed: int,
                       lam: float = 1.0, return_trajectories: bool = False):
    """Average of the unregularised design matrix over seeded trials.

    Trial ``t`` uses ``numpy.random.default_rng(master_seed + t)``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    total = np.zeros((instance.dim, instance.dim))
    trajs = []
    for t in range(trials):
        traj = run_episode(policy, instance, n, np.random.default_rng(master_seed + t), checkpoints=[n], lam=lam)
        total += traj.final_state.design()
        if return_trajectories:
            trajs.append(traj)
    gbar = total / trials
    gbar = 0.5 * (gbar + gbar.T)
    return (gbar, trajs) if return_trajectories else gbar


class AlignmentReport(NamedTuple):
    value: float          # max_{i >= 2} |<v, u_i>|
    subspace_norm: float  # norm of the projection of v on span(u_2..u_d)
    degenerate: bool      # some eigen-gap below 1e-9: value is basis dependent


def alignment_check(gbar, opt_direction) -> AlignmentReport:
    """How far the optimal direction leaks into the non-leading eigenvectors."""
    g = as_sym(gbar, "gbar")
    v = np.asarray(opt_direction, dtype=float)
    v = v / np.linalg.norm(v)
    ed = eig_sym(g)
    if len(v) == 1:
        return AlignmentReport(0.0, 0.0, False)
    proj = ed.eigenvectors[:, 1:].T @ v
    gaps = -np.diff(ed.eigenvalues)
    return AlignmentReport(float(np.max(np.abs(proj))), float(np.linalg.norm(proj)),
                           bool(np.any(gaps < 1e-9)))


def neighborhood_eps(n: int, c: float = 0.1) -> float:
    """Near-optimality width ``c / (0.01 sqrt(n))``; the default gives ``10 / sqrt(n)``."""
    return c / (0.01 * math.sqrt(n))


def eps_fraction(traj, theta, eps: float, space):
    """Number and fraction of played actions that are eps-optimal for ``theta``."""
    if traj.n == 0:
        raise ValueError("empty trajectory")
    hood = EpsNeighborhood.build(space, theta, eps)
    count = int(np.count_nonzero(hood.contains_many(traj.actions)))
    return count, count / traj.n


def bernoulli_kl(p: float, q: float) -> float:
    """KL(Ber(p) || Ber(q)), ``inf`` when ``q`` sits on a boundary ``p`` does not."""
    for v in (p, q):
        if not 0 <= v <= 1:
            raise ValueError("probabilities must lie in [0, 1]")

    def term(a, b):
        if a == 0:
            return 0.0
        if b == 0:
            return math.inf
        return a * math.log(a / b)

    return term(p, q) + term(1 - p, 1 - q)


class PinskerReport(NamedTuple):
    bound: float
    kl: float


def pinsker_bound(z1: float, z2: float) -> PinskerReport:
    """``2 (z1 - z2)^2`` together with the exact Bernoulli KL it lower-bounds."""
    kl = bernoulli_kl(z1, z2)
    return PinskerReport(2.0 * (z1 - z2) ** 2, kl)


def kl_quadratic_lhs(theta, theta_prime, gbar) -> float:
    """``0.5 ||theta - theta'||^2_G``: KL between the two reward processes under unit noise."""
    diff = np.asarray(theta, dtype=float) - np.asarray(theta_prime, dtype=float)
    g = np.asarray(gbar, dtype=float)
    if g.shape != (len(diff), len(diff)):
        raise ValueError("dimension mismatch")
    return 0.5 * float(diff @ g @ diff)


def _check_delta(delta):
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")


def highprob_reference(gamma: float, c_stab: float, d: int, delta: float, n) -> float:
    """High-probability lower curve ``gamma sqrt(n) - (2 + C) sqrt(8 n ln(d/delta))``."""
    _check_delta(delta)
    n = np.asarray(n, dtype=float)
    out = gamma * np.sqrt(n) - (2.0 + c_stab) * np.sqrt(8.0 * n * math.log(d / delta))
    return float(out) if out.ndim == 0 else out


def highprob_slope(gamma: float, c_stab: float, d: int, delta: float) -> float:
    """Coefficient of ``sqrt(n)`` in the high-probability curve."""
    _check_delta(delta)
    return gamma - (2.0 + c_stab) * math.sqrt(8.0 * math.log(d / delta))


@dataclass
class ProofChainReport:
    gbar: np.ndarray
    lambda_min: float
    u_min: np.ndarray
    alignment: AlignmentReport
    eps: float
    alpha: float
    theta: np.ndarray
    theta_prime: np.ndarray
    disjoint: bool
    kl_lhs: float
    z_theta: float
    z_theta_prime: float
    pinsker: PinskerReport

    @property
    def kl_matches_eigen(self) -> float:
        """|LHS - alpha^2 lambda_min / 2|."""
        return abs(self.kl_lhs - 0.5 * self.alpha ** 2 * self.lambda_min)

    def rows(self):
        return [
            ("lambda_min", self.lambda_min),
            ("alignment", self.alignment.value),
            ("alignment_degenerate", self.alignment.degenerate),
            ("eps", self.eps),
            ("alpha", self.alpha),
            ("disjoint", self.disjoint),
            ("kl_lhs", self.kl_lhs),
            ("kl_eigen_gap", self.kl_matches_eigen),
            ("z_theta", self.z_theta),
            ("z_theta_prime", self.z_theta_prime),
            ("pinsker_bound", self.pinsker.bound),
            ("bernoulli_kl", self.pinsker.kl),
        ]


def proof_chain(policy, d: int, n: int, trials: int, master_seed: int, lam: float = 1.0,
                sigma: float = 1.0, eps: float | None = None, perturbed_seed_offset: int = 10_000) -> ProofChainReport:
    """Numerical walk through the lower-bound argument on the unit sphere.

    1. Estimate the expected design matrix for ``theta = e1``.
    2. Take its bottom eigenvector ``u`` and the alignment of ``e1`` with
       the non-leading eigenvectors.
    3. Step ``theta' = theta + alpha u`` with ``alpha`` chosen to make the
       eps-caps of ``theta`` and ``theta'`` disjoint, and test that.
    4. Compare the Gaussian KL ``0.5 ||theta - theta'||^2_G`` with the
       Pinsker lower bound built from the measured fraction of eps-optimal
       plays (for ``theta``) under both parameters.
    """
    space = UnitSphere(d)
    theta = np.zeros(d)
    theta[0] = 1.0
    eps = neighborhood_eps(n) if eps is None else eps
    inst = BanditInstance(theta, sigma, space)
    gbar, trajs = mc_expected_design(policy, inst, n, trials, master_seed, lam, return_trajectories=True)
    ed = eig_sym(gbar)
    u = ed.eigenvectors[:, -1]
    align = alignment_check(gbar, theta)
    plan = perturbation_plan(theta, u, eps)
    theta_p = theta + plan.alpha * u
    disjoint = check_disjoint_eps_sets(space, theta, theta_p, eps)
    lhs = kl_quadratic_lhs(theta, theta_p, gbar)
    z1 = float(np.mean([eps_fraction(t, theta, eps, space)[1] for t in trajs]))
    inst_p = BanditInstance(theta_p, sigma, space)
    z2 = []
    for t in range(trials):
        tr = run_episode(policy, inst_p, n, np.random.default_rng(master_seed + perturbed_seed_offset + t),
                         checkpoints=[], lam=lam)
        z2.append(eps_fraction(tr, theta, eps, space)[1])
    z2 = float(np.mean(z2))
    return ProofChainReport(gbar, float(ed.eigenvalues[-1]), u, align, eps, plan.alpha, theta, theta_p,
                            disjoint, lhs, z1, z2, pinsker_bound(z1, z2))
