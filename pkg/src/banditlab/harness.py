"""Config-driven experiment runner.

Each scenario computes all of its tables in memory first and only then
writes them, each file via a temporary sibling and a rename, so a failing
run leaves no partial output behind.  Trial ``t`` always uses the seed
``master_seed + t`` and results are merged in trial order, so output does
not depend on the number of workers.
"""

from __future__ import annotations

import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bandit import BanditInstance, geometric_checkpoints, run_episode
from .clustering import MultiAgentConfig, run_multi_agent_clustering
from .config import ExperimentConfig
from .csvio import atomic_write_text, render_csv
from .model_selection import alb_run, oracle_oful_regret
from .policies import make_policy
from .spectral import (SpectralTrace, ensemble_band, exponent_estimate, geometric_mean_trace,
                       neighborhood_eps, proof_chain)

__all__ = [
    "run_experiment",
    "trace_ensemble",
    "EnsembleSummary",
    "summarize_ensemble",
    "alb_experiment",
    "clustering_experiment",
    "cluster_layout",
    "map_trials",
    "default_workers",
]

log = logging.getLogger(__name__)

TRIAL_COLUMNS = ["trial", "round", "lambda_min", "raw_exponent"]
SUMMARY_COLUMNS = ["metric", "value"]


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def map_trials(fn, jobs, workers: int | None = None) -> list:
    """``[fn(j) for j in jobs]``, optionally across processes, in job order."""
    jobs = list(jobs)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


# spectral traces ------------------------------------------------------------


def _trace_job(job):
    space, theta, policy_cfg, n, seed, lam, sigma, marks, tail = job
    inst = BanditInstance(theta, sigma, space)
    policy = make_policy(policy_cfg, theta)
    traj = run_episode(policy, inst, n, np.random.default_rng(seed), checkpoints=marks, lam=lam)
    return SpectralTrace.from_trajectory(traj, tail)


def trace_ensemble(space, theta, policy_cfg, n: int, trials: int, master_seed: int, *, lam: float = 1.0,
                   sigma: float = 1.0, checkpoint_count: int = 64, checkpoint_start: int = 16,
                   tail_fraction: float = 0.5, workers: int | None = None) -> list:
    """One ``SpectralTrace`` per trial, trial ``t`` seeded with ``master_seed + t``."""
    marks = geometric_checkpoints(n, checkpoint_count, checkpoint_start)
    theta = np.asarray(theta, dtype=float)
    jobs = [(space, theta, policy_cfg, n, master_seed + t, lam, sigma, marks, tail_fraction)
            for t in range(trials)]
    return map_trials(_trace_job, jobs, workers)


class EnsembleSummary:
    """Band, geometric-mean trace and exponent report of a trace ensemble."""

    def __init__(self, traces, threshold: float = 0.5, k_sigma: float = 3.0):
        self.traces = traces
        self.threshold = threshold
        self.band = ensemble_band(traces, k_sigma)
        self.mean_trace = geometric_mean_trace(traces)
        self.report = exponent_estimate(self.mean_trace, threshold)

    @property
    def final_mean_exponent(self) -> float:
        return float(self.band.mean[-1])

    def min_lower_from(self, start: int) -> float:
        keep = self.band.rounds >= start
        return float(np.min(self.band.lower[keep]))

    def summary_rows(self):
        r = self.report
        return [
            ["trials", len(self.traces)],
            ["final_round", int(self.band.rounds[-1])],
            ["final_mean_raw_exponent", self.final_mean_exponent],
            ["final_band_lo", float(self.band.lower[-1])],
            ["fitted_slope", r.fitted_slope],
            ["n0_hat", r.n0_hat],
            ["gamma_hat", r.gamma_hat],
        ]

    def trial_rows(self):
        rows = []
        for t, tr in enumerate(self.traces):
            rows.extend([t, *row] for row in tr.csv_rows())
        return rows


def summarize_ensemble(traces, threshold: float = 0.5, k_sigma: float = 3.0) -> EnsembleSummary:
    return EnsembleSummary(traces, threshold, k_sigma)


def _ensemble_from_config(cfg: ExperimentConfig, d: int, workers) -> EnsembleSummary:
    traces = trace_ensemble(cfg.space(d), cfg.theta_star(d), cfg.policy_config(), cfg["n"], cfg["trials"],
                            cfg.seed, lam=cfg["lambda"], sigma=cfg["sigma"],
                            checkpoint_count=cfg["checkpoints.count"], checkpoint_start=cfg["checkpoints.start"],
                            tail_fraction=cfg["trace.tail_fraction"], workers=workers)
    return summarize_ensemble(traces, cfg["trace.threshold"], cfg["band.k_sigma"])


# figures --------------------------------------------------------------------


def _svg(draw) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "banditlab", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax)
        ax.axhline(0.5, color="k", lw=0.8, ls="--", label="1/2")
        ax.set_xscale("log")
        ax.set_xlabel("round n")
        ax.set_ylabel("ln lambda_min / ln n")
        ax.legend(loc="lower right")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return buf.getvalue()


def _band_drawer(items):
    def draw(ax):
        for label, band in items:
            line, = ax.plot(band.rounds, band.mean, label=label)
            ax.fill_between(band.rounds, band.lower, band.upper, color=line.get_color(), alpha=0.2)
    return draw


# scenarios ------------------------------------------------------------------


def _trace_scenario(cfg, workers):
    d = cfg["d"]
    summ = _ensemble_from_config(cfg, d, workers)
    tables = {
        "trials": (TRIAL_COLUMNS, summ.trial_rows()),
        "band": (summ.band.csv_header(), summ.band.csv_rows()),
        "summary": (SUMMARY_COLUMNS, summ.summary_rows()),
    }
    figures = {"band": _band_drawer([(f"d={d}", summ.band)])}
    return tables, figures


def _sweep_scenario(cfg, workers):
    rows, band_rows, items = [], [], []
    for d in cfg["sweep.dims"]:
        summ = _ensemble_from_config(cfg, d, workers)
        r = summ.report
        rows.append([d, r.n0_hat, r.gamma_hat, summ.final_mean_exponent, r.fitted_slope])
        band_rows.extend([d, *row] for row in summ.band.csv_rows())
        items.append((f"d={d}", summ.band))
    tables = {
        "sweep": (["d", "n0_hat", "gamma_hat", "final_mean_raw_exponent", "fitted_slope"], rows),
        "bands": (["d", "round", "mean", "std", "band_lo", "band_hi"], band_rows),
    }
    return tables, {"bands": _band_drawer(items)}


def _alb_job(job):
    inst, b_init, n1, delta, epochs, seed, lam, mode = job
    rep = alb_run(inst, b_init, n1, delta, None, np.random.default_rng(seed), lam=lam, mode=mode, n_epochs=epochs)
    oracle = oracle_oful_regret(inst, rep.schedule.total, delta, np.random.default_rng(seed), lam)
    return rep, oracle


def alb_experiment(d: int, theta_norm: float, b_init: float, n1: int, epochs: int, runs: int, master_seed: int,
                   delta: float = 0.1, sigma: float = 1.0, lam: float = 1.0, mode: str = "exact",
                   direction=None, workers: int | None = None):
    """``runs`` seeded ALB runs, each paired with an oracle-norm OFUL run on the same seed."""
    from .actionspace import UnitSphere

    u = np.zeros(d) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        u[0] = 1.0
    theta = theta_norm * u / np.linalg.norm(u)
    inst = BanditInstance(theta, sigma, UnitSphere(d))
    jobs = [(inst, b_init, n1, delta, epochs, master_seed + r, lam, mode) for r in range(runs)]
    return map_trials(_alb_job, jobs, workers)


def _alb_scenario(cfg, workers):
    if cfg["alb.n1"] < 256:
        log.warning("alb.n1 = %d is below 256; early norm estimates may be unreliable", cfg["alb.n1"])
    d = cfg["d"]
    results = alb_experiment(d, cfg["alb.theta_norm"], cfg["alb.b_init"], cfg["alb.n1"], cfg["alb.epochs"],
                             cfg["alb.runs"], cfg.seed, cfg["delta"], cfg["sigma"], cfg["lambda"], cfg["alb.mode"],
                             direction=cfg.theta_star(d), workers=workers)
    epochs, runs = [], []
    for r, (rep, oracle) in enumerate(results):
        epochs.extend([r, *row] for row in rep.csv_rows())
        runs.append([r, rep.cumulative_regret, oracle, rep.b_sequence[-1]])
    tables = {
        "epochs": (["run"] + results[0][0].csv_header(), epochs),
        "runs": (["run", "alb_regret", "oracle_regret", "b_final"], runs),
    }
    return tables, {}


def cluster_layout(k: int, separation: float, d: int, agents: int, params=None):
    """Cluster parameters on a line through the origin and a block assignment of agents."""
    if params:
        p = np.array(params, dtype=float)
    else:
        p = np.zeros((k, d))
        p[:, 0] = (np.arange(k) - (k - 1) / 2.0) * separation
    assignment = (np.arange(agents) * len(p)) // agents
    return p, assignment


def _cluster_job(job):
    mcfg, space, sigma, seed = job
    return run_multi_agent_clustering(mcfg, space, sigma, seed)


def clustering_experiment(mcfg: MultiAgentConfig, space, sigma: float, runs: int, master_seed: int,
                          workers: int | None = None) -> list:
    """Run ``runs`` seeded clustering rounds; run ``r`` uses seeds ``master + r N + i``."""
    jobs = [(mcfg, space, sigma, master_seed + r * mcfg.N) for r in range(runs)]
    return map_trials(_cluster_job, jobs, workers)


def _clustering_scenario(cfg, workers):
    d = cfg["d"]
    params, assignment = cluster_layout(cfg["clustering.k"], cfg["clustering.separation"], d,
                                        cfg["clustering.agents"], cfg["clustering.params"])
    mcfg = MultiAgentConfig(params, assignment, cfg["n"], cfg["delta"], cfg["clustering.eta"],
                            cfg["clustering.gamma"], lam=cfg["lambda"])
    reports = clustering_experiment(mcfg, cfg.space(d), cfg["sigma"], cfg["clustering.runs"], cfg.seed, workers)
    agents, runs = [], []
    for r, rep in enumerate(reports):
        agents.extend([r, *row] for row in rep.csv_rows())
        err = float(np.max(np.linalg.norm(rep.estimates - params[assignment], axis=1)))
        part = "|".join(" ".join(str(i) for i in block) for block in rep.partition)
        runs.append([r, rep.exact_recovery, len(rep.partition), rep.eta, err, part])
    tables = {
        "agents": (["run"] + reports[0].csv_header(), agents),
        "runs": (["run", "exact_recovery", "n_clusters", "eta", "max_estimate_error", "partition"], runs),
    }
    return tables, {}


def _theory_scenario(cfg, workers):
    d, n = cfg["d"], cfg["n"]
    theta = cfg.theta_star(d)
    policy = make_policy(cfg.policy_config(), theta)
    rep = proof_chain(policy, d, n, cfg["trials"], cfg.seed, cfg["lambda"], cfg["sigma"],
                      eps=neighborhood_eps(n, cfg["chain.eps_c"]))
    return {"chain": (SUMMARY_COLUMNS, [list(r) for r in rep.rows()])}, {}


_SCENARIOS = {
    "eigen_trace": _trace_scenario,
    "convex_counterexample": _trace_scenario,
    "dim_sweep": _sweep_scenario,
    "alb": _alb_scenario,
    "clustering": _clustering_scenario,
    "verify_theory": _theory_scenario,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: int | None = None, fmt: str | None = None) -> list:
    """Run the configured scenario and write its CSV (and SVG) files.

    Returns the list of written paths.
    """
    out = Path(out_dir if out_dir is not None else cfg["output.dir"])
    fmt = fmt or cfg["output.format"]
    if fmt not in ("csv", "csv+svg"):
        raise ValueError("format must be csv or csv+svg")
    tables, figures = _SCENARIOS[cfg.scenario](cfg, workers)
    # render everything before touching the output directory
    payload = {f"{cfg.name}_{key}.csv": render_csv(header, rows) for key, (header, rows) in tables.items()}
    if fmt == "csv+svg":
        payload.update({f"{cfg.name}_{key}.svg": _svg(draw) for key, draw in figures.items()})
    return [atomic_write_text(out / fname, text) for fname, text in sorted(payload.items())]
