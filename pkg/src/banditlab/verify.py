"""Acceptance checks, shared by ``banditlab verify`` and the test suite.

Each check returns a ``CheckResult``; thresholds are the ones the library
promises and are never relaxed here.  Expensive ensembles are cached so the
growth-exponent checks can share trials.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import actionspace as asp
from .bandit import confidence_radius
from .clustering import MultiAgentConfig, cluster_threshold, edge_cluster, partitions_equal
from .config import parse_config
from .harness import (alb_experiment, clustering_experiment, cluster_layout, run_experiment,
                      summarize_ensemble, trace_ensemble)
from .linalg import davis_kahan_check, eig_sym, trust_region_max_norm, weyl_check
from .policies import OFUL, PolicyConfig
from .spectral import pinsker_bound, proof_chain

__all__ = ["CheckResult", "CHECKS", "run_checks", "grid_points"]


class CheckResult(NamedTuple):
    key: str
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} [{self.key}] {self.title}: {self.detail}"


FIG_N = 8192
FIG_TRIALS = 20
FIG_SEED = 0


@lru_cache(maxsize=None)
def _sphere_ts(d: int, workers=None):
    theta = np.zeros(d)
    theta[0] = 1.0
    t0 = time.perf_counter()
    traces = trace_ensemble(asp.UnitSphere(d), theta, PolicyConfig(kind="lints"), FIG_N, FIG_TRIALS, FIG_SEED,
                            workers=workers)
    return summarize_ensemble(traces), time.perf_counter() - t0


def check_sphere_growth(workers=None) -> CheckResult:
    parts, ok, elapsed = [], True, 0.0
    for d in (3, 5):
        summ, secs = _sphere_ts(d, workers)
        elapsed += secs
        final = summ.final_mean_exponent
        lower = summ.min_lower_from(2048)
        ok &= final >= 0.5 and lower >= 0.45
        parts.append(f"d={d} final mean {final:.4f} (>= 0.5), min mean-3sd from n=2048 {lower:.4f} (>= 0.45)")
    ok &= elapsed < 300
    parts.append(f"runtime {elapsed:.1f}s (< 300s)")
    return CheckResult("1", "TS on the sphere: exponent settles above 1/2", bool(ok), "; ".join(parts))


def check_pball_counterexample(workers=None) -> CheckResult:
    d = 5
    traces = trace_ensemble(asp.PNormBall(d, 10.0), np.ones(d), PolicyConfig(kind="lints"), FIG_N, FIG_TRIALS,
                            FIG_SEED, workers=workers)
    summ = summarize_ensemble(traces)
    final = summ.final_mean_exponent
    slope = summ.report.fitted_slope
    ok = 0.05 <= final < 0.5 and 0.05 <= slope < 0.5
    return CheckResult("2", "TS on the p=10 ball: exponent stays below 1/2", bool(ok),
                       f"final mean {final:.4f} in [0.05, 0.5); fitted slope {slope:.4f} in [0.05, 0.5)")


def check_dimension_trend(workers=None) -> CheckResult:
    dims = (3, 5, 10)
    reps = [_sphere_ts(d, workers)[0].report for d in dims]
    n0 = [r.n0_or_inf() for r in reps]
    gam = [r.gamma_hat for r in reps]
    ok = all(a <= b for a, b in zip(n0, n0[1:])) and all(a >= b for a, b in zip(gam, gam[1:]))
    show = ", ".join(f"d={d}: n0={'not reached' if math.isinf(a) else int(a)}, gamma={g:.4f}"
                     for d, a, g in zip(dims, n0, gam))
    return CheckResult("3", "crossing time grows and growth constant shrinks with d", bool(ok), show)


def check_proof_chain(workers=None) -> CheckResult:
    n = 4096
    rep = proof_chain(OFUL(PolicyConfig(kind="oful")), 3, n, 20, FIG_SEED, eps=10 / math.sqrt(n))
    a = rep.alignment.value < 0.2
    b = rep.disjoint
    c = rep.kl_matches_eigen <= 1e-9
    dd = rep.kl_lhs >= rep.pinsker.bound
    detail = (f"(a) alignment {rep.alignment.value:.4f} < 0.2: {a}; "
              f"(b) alpha {rep.alpha:.4f} with eps {rep.eps:.4f} gives disjoint caps: {b}; "
              f"(c) |KL - alpha^2 lambda_min/2| = {rep.kl_matches_eigen:.2e} <= 1e-9: {c}; "
              f"(d) KL {rep.kl_lhs:.3f} >= Pinsker {rep.pinsker.bound:.4f} "
              f"(z={rep.z_theta:.4f}, z'={rep.z_theta_prime:.4f}): {dd}")
    return CheckResult("4", "lower-bound ingredient chain on the OFUL design matrix", bool(a and b and c and dd), detail)


# dense oracles --------------------------------------------------------------


def grid_points(d: int, count: int) -> np.ndarray:
    """Deterministic, nearly even points on the unit circle (d=2) or sphere (d=3)."""
    if d == 2:
        t = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.column_stack([np.cos(t), np.sin(t)])
    if d == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        r = np.sqrt(1 - z * z)
        phi = np.pi * (1 + 5 ** 0.5) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValueError("grid oracle supports d = 2 or 3")


def _surface(space, u):
    if isinstance(space, asp.UnitSphere):
        return u
    if isinstance(space, asp.Ellipsoid):
        return space.center + math.sqrt(space.c) * u @ space.A_half.T
    if isinstance(space, asp.PNormBall):
        return space.radius * u / (np.sum(np.abs(u) ** space.p, axis=1) ** (1 / space.p))[:, None]
    return space.points


def _random_space(rng, d):
    kind = rng.integers(4)
    if kind == 0:
        return asp.UnitSphere(d)
    if kind == 1:
        a = rng.normal(size=(d, d))
        center = rng.normal(size=d) if rng.random() < 0.5 else None
        return asp.Ellipsoid(a @ a.T + 0.3 * np.eye(d), rng.uniform(0.5, 2.0), center)
    if kind == 2:
        return asp.PNormBall(d, rng.uniform(2.0, 12.0), rng.uniform(0.5, 2.0))
    return asp.FiniteSet(rng.normal(size=(int(rng.integers(1, 30)), d)))


def oracle_suite(seed: int = 12345, instances: int = 200) -> dict:
    """Worst discrepancies of every oracle against brute force."""
    rng = np.random.default_rng(seed)
    grids = {2: grid_points(2, 20000), 3: grid_points(3, 200000)}
    lin_err = ucb_err = tr_err = 0.0
    for _ in range(instances):
        d = int(rng.integers(2, 4))
        space = _random_space(rng, d)
        pts = _surface(space, grids[d])
        theta = rng.normal(size=d)
        x = space.linear_argmax(theta)
        lin_err = max(lin_err, abs(float(np.max(pts @ theta)) - float(x @ theta)), space.residual(x))
        a = rng.normal(size=(d, d))
        shape = a @ a.T + 0.2 * np.eye(d)
        center = rng.normal(size=d)
        radius = rng.uniform(0.0, 2.0)
        s_inv = np.linalg.inv(shape)

        def ucb(xs):
            xs = np.atleast_2d(xs)
            return xs @ center + radius * np.sqrt(np.einsum("ij,jk,ik->i", xs, s_inv, xs))

        xu = space.ucb_argmax(center, shape, radius)
        ucb_err = max(ucb_err, abs(float(ucb(pts).max()) - float(ucb(xu)[0])))
        # trust region against the boundary of the confidence ellipsoid
        chol = np.linalg.cholesky(s_inv)
        boundary = center + radius * grids[d] @ chol.T
        _, best = trust_region_max_norm(center, shape, radius)
        brute = float(np.max(np.linalg.norm(boundary, axis=1)))
        tr_err = max(tr_err, abs(best - brute) / max(brute, 1e-12))
    eig_err = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 11))
        a = rng.normal(size=(d, d)) * 10 ** rng.uniform(-2, 2)
        m = a + a.T
        ed = eig_sym(m)
        rel = np.linalg.norm(ed.reconstruct() - m) / max(np.linalg.norm(m), 1e-300)
        orth = np.max(np.abs(ed.eigenvectors.T @ ed.eigenvectors - np.eye(d)))
        eig_err = max(eig_err, rel, orth)
    weyl_ok = dk_ok = True
    dk_count = 0
    for _ in range(500):
        d = int(rng.integers(1, 8))
        a = rng.normal(size=(d, d))
        h = rng.normal(size=(d, d)) * rng.uniform(0.01, 1.0)
        a, h = a + a.T, h + h.T
        weyl_ok &= weyl_check(a, h).holds
        a_big = a + np.diag(np.r_[rng.uniform(5, 20), np.zeros(d - 1)])
        try:
            rep = davis_kahan_check(a_big, h)
        except ValueError:
            continue
        dk_count += 1
        dk_ok &= rep.holds
    return {"linear": lin_err, "ucb": ucb_err, "trust_region": tr_err, "eig": eig_err,
            "weyl": bool(weyl_ok), "davis_kahan": bool(dk_ok), "dk_instances": dk_count}


def check_oracles(workers=None) -> CheckResult:
    r = oracle_suite()
    ok = (r["linear"] <= 1e-3 and r["ucb"] <= 1e-3 and r["trust_region"] <= 1e-3 and r["eig"] <= 1e-9
          and r["weyl"] and r["davis_kahan"])
    detail = (f"linear_argmax max err {r['linear']:.2e}, ucb_argmax {r['ucb']:.2e}, "
              f"trust region rel {r['trust_region']:.2e} (all <= 1e-3); eig_sym {r['eig']:.2e} (<= 1e-9); "
              f"weyl holds: {r['weyl']}; davis-kahan holds: {r['davis_kahan']} on {r['dk_instances']} instances")
    return CheckResult("5", "oracle equivalence suites", bool(ok), detail)


def check_alb(workers=None) -> CheckResult:
    norm = 0.5
    epochs = 6
    results = alb_experiment(3, norm, 10.0, 256, epochs, 50, FIG_SEED, workers=workers)
    # b_i used by epochs 2..6, i.e. the refined estimates
    b = np.array([rep.b_sequence[1:epochs] for rep, _ in results])
    cover = float(np.mean(b >= norm))
    med = np.median(b - norm, axis=0)
    decreasing = bool(np.all(np.diff(med) < 0))
    alb = float(np.mean([rep.cumulative_regret for rep, _ in results]))
    oracle = float(np.mean([o for _, o in results]))
    ok = cover >= 0.95 and decreasing and alb <= 3 * oracle
    detail = (f"b_i >= ||theta*|| in {cover:.1%} of refined (run, epoch) pairs (>= 95%); "
              f"median gaps epochs 2-6 {np.array2string(med, precision=4)} strictly decreasing: {decreasing}; "
              f"mean regret ALB {alb:.1f} vs oracle OFUL {oracle:.1f}, ratio {alb / oracle:.3f} (<= 3)")
    return CheckResult("6", "norm-adaptive OFUL", bool(ok), detail)


def planted_recovery(trials: int = 100, seed: int = 7) -> int:
    """Number of random plantings with Delta > 2 eta and errors < eta/2 that are recovered exactly."""
    rng = np.random.default_rng(seed)
    recovered = 0
    for _ in range(trials):
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, 5))
        agents = int(rng.integers(k, 13))
        eta = rng.uniform(0.05, 2.0)
        # cluster centres with pairwise gap above 2 eta
        centres = []
        while len(centres) < k:
            c = rng.normal(size=d) * 10 * eta
            if all(np.linalg.norm(c - o) > 2 * eta * (1 + 1e-6) for o in centres):
                centres.append(c)
        labels = np.r_[np.arange(k), rng.integers(0, k, agents - k)]
        rng.shuffle(labels)
        noise = rng.normal(size=(agents, d))
        noise *= (rng.uniform(0, 0.5, agents) * eta / np.linalg.norm(noise, axis=1))[:, None]
        est = np.array(centres)[labels] + noise
        truth = [list(np.flatnonzero(labels == j)) for j in range(k)]
        recovered += partitions_equal(edge_cluster(est, eta), truth)
    return recovered


def check_clustering(workers=None) -> CheckResult:
    planted = planted_recovery()
    params, assignment = cluster_layout(2, 2.0, 2, 6)
    mcfg = MultiAgentConfig(params, assignment, 2048, 0.1, eta=1.0)
    reports = clustering_experiment(mcfg, asp.UnitSphere(2), 0.1, 50, FIG_SEED, workers)
    rate = float(np.mean([r.exact_recovery for r in reports]))
    ok = planted == 100 and rate >= 0.95
    return CheckResult("7", "threshold clustering of OFUL estimates", bool(ok),
                       f"planted recovery {planted}/100; simulated exact recovery {rate:.0%} of 50 seeds (>= 95%)")


def check_closed_forms(workers=None) -> CheckResult:
    vals = [
        ("confidence_radius(1,1,100,2,0.1)", confidence_radius(1, 1, 100, 2, 0.1), 4.53113, 1e-5),
        ("cluster_threshold(1e4,2,0.05,0.5)", cluster_threshold(10 ** 4, 2, 0.05, 0.5), 2.0580, 1e-4),
        ("perturbation_alpha_sphere(0.02,1/9)", asp.perturbation_alpha_sphere(0.02, 1 / 9), 0.44567, 1e-5),
        ("pinsker_bound(0.99,0.01)", pinsker_bound(0.99, 0.01).bound, 1.9208, 1e-12),
    ]
    parts, ok = [], True
    for name, got, want, tol in vals:
        good = abs(got - want) <= tol
        ok &= good
        parts.append(f"{name} = {got:.7f} vs {want} +/- {tol:g}: {'ok' if good else 'MISMATCH'}")
    return CheckResult("8", "closed-form regression values", bool(ok), "; ".join(parts))


DETERMINISM_CONFIGS = {
    "trace": "scenario = eigen_trace\nd = 3\nn = 600\ntrials = 3\nmaster_seed = 11\n",
    "pball": "scenario = convex_counterexample\nn = 400\ntrials = 2\nmaster_seed = 5\n",
    "sweep": "scenario = dim_sweep\nsweep.dims = 2,3\nn = 300\ntrials = 2\nmaster_seed = 3\n",
    "alb": "scenario = alb\nalb.runs = 2\nalb.n1 = 64\nalb.epochs = 3\nmaster_seed = 2\n",
    "clustering": "scenario = clustering\nclustering.runs = 2\nn = 256\nclustering.eta = 1.0\nmaster_seed = 4\n",
    "theory": "scenario = verify_theory\nn = 512\ntrials = 3\nchain.eps_c = 0.02\nmaster_seed = 9\n",
}


def check_determinism(workers=None) -> CheckResult:
    mismatched, files = [], 0
    with tempfile.TemporaryDirectory() as tmp:
        for key, text in DETERMINISM_CONFIGS.items():
            cfg = parse_config(f"name = {key}\n" + text)
            a = run_experiment(cfg, Path(tmp) / "a", workers=1, fmt="csv")
            b = run_experiment(cfg, Path(tmp) / "b", workers=2, fmt="csv")
            for pa, pb in zip(a, b):
                files += 1
                if pa.name != pb.name or not filecmp.cmp(pa, pb, shallow=False):
                    mismatched.append(pa.name)
    return CheckResult("9", "byte-identical reruns", not mismatched,
                       f"{files} CSV files compared across two runs (1 vs 2 workers); mismatches: {mismatched or 'none'}")


CHECKS = {
    "1": check_sphere_growth,
    "2": check_pball_counterexample,
    "3": check_dimension_trend,
    "4": check_proof_chain,
    "5": check_oracles,
    "6": check_alb,
    "7": check_clustering,
    "8": check_closed_forms,
    "9": check_determinism,
}

SUITE_ALIASES = {
    "all": tuple(CHECKS),
    "growth": ("1", "2", "3"),
    "theory": ("4",),
    "oracles": ("5",),
    "alb": ("6",),
    "clustering": ("7",),
    "closed_form": ("8",),
    "determinism": ("9",),
}


def resolve_suite(name: str) -> tuple:
    if name in SUITE_ALIASES:
        return SUITE_ALIASES[name]
    keys = tuple(k.strip() for k in name.split(","))
    unknown = [k for k in keys if k not in CHECKS]
    if unknown:
        raise ValueError(f"unknown suite {name!r}; use one of {', '.join(SUITE_ALIASES)} or numbers 1-9")
    return keys


def run_checks(keys, workers=None, echo=print) -> list:
    results = []
    for k in keys:
        res = CHECKS[k](workers)
        echo(res.line())
        results.append(res)
    return results
