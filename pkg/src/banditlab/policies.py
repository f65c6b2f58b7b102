"""Action-selection rules: OFUL, linear Thompson sampling and baselines.

Every policy exposes ``select(state, space, rng) -> action``.  Policies hold
only immutable configuration; all mutable information lives in the
``DesignState`` owned by the episode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actionspace import ActionSpace
from .bandit import DesignState, confidence_radius

__all__ = [
    "PolicyConfig",
    "OFUL",
    "LinTS",
    "Uniform",
    "Greedy",
    "oful_select",
    "lints_select",
    "uniform_select",
    "make_policy",
    "POLICY_KINDS",
]

POLICY_KINDS = ("oful", "lints", "uniform", "greedy")


@dataclass(frozen=True)
class PolicyConfig:
    """Parameters shared by the policies.

    ``b`` is the assumed bound on ``||theta*||`` and only enters through the
    confidence radius.  ``ts_scale`` multiplies the Thompson-sampling
    perturbation; pass the string ``"radius"`` to inflate by the current
    confidence radius instead of a constant.  ``radius`` overrides the
    OFUL confidence radius when set.
    """

    kind: str = "oful"
    delta: float = 0.1
    b: float = 1.0
    ts_scale: float | str = 1.0
    radius: float | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind == "ts":
            kind = "lints"
        if kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.b < 0:
            raise ValueError("b must be non-negative")
        if isinstance(self.ts_scale, str):
            if self.ts_scale != "radius":
                raise ValueError("ts_scale must be a number or 'radius'")
        elif self.ts_scale < 0:
            raise ValueError("ts_scale must be non-negative")
        if self.radius is not None and self.radius < 0:
            raise ValueError("radius must be non-negative")

    def current_radius(self, state: DesignState) -> float:
        if self.radius is not None:
            return float(self.radius)
        return confidence_radius(self.b, state.lam, state.n, state.d, self.delta)


def _e1(d):
    e = np.zeros(d)
    e[0] = 1.0
    return e


def oful_select(state: DesignState, space: ActionSpace, cfg: PolicyConfig) -> np.ndarray:
    """Optimistic arm for the current ridge confidence ellipsoid."""
    return space.ucb_argmax(state.theta_hat, state.gram, cfg.current_radius(state))


def lints_select(state: DesignState, space: ActionSpace, cfg: PolicyConfig, rng) -> np.ndarray:
    """Greedy arm for a parameter drawn around the ridge estimate.

    ``theta~ = theta_hat + scale * L z`` with ``L L^T = gram_inv`` obtained
    from an eigendecomposition, so the draw has covariance
    ``scale^2 * gram_inv``.
    """
    scale = cfg.current_radius(state) if cfg.ts_scale == "radius" else float(cfg.ts_scale)
    w, u = np.linalg.eigh(state.gram_inv)
    factor = u * np.sqrt(np.clip(w, 0.0, None))
    for _ in range(2):
        theta = state.theta_hat + scale * (factor @ rng.standard_normal(state.d))
        if np.any(theta):
            return space.linear_argmax(theta)
    return space.linear_argmax(_e1(state.d))


def uniform_select(space: ActionSpace, rng) -> np.ndarray:
    return space.sample(rng)


class OFUL:
    def __init__(self, cfg: PolicyConfig | None = None, **kwargs):
        self.cfg = cfg if cfg is not None else PolicyConfig(kind="oful", **kwargs)

    def select(self, state, space, rng=None):
        return oful_select(state, space, self.cfg)

    def __repr__(self):
        return f"OFUL({self.cfg})"


class LinTS:
    def __init__(self, cfg: PolicyConfig | None = None, **kwargs):
        self.cfg = cfg if cfg is not None else PolicyConfig(kind="lints", **kwargs)

    def select(self, state, space, rng):
        return lints_select(state, space, self.cfg, rng)

    def __repr__(self):
        return f"LinTS({self.cfg})"


class Uniform:
    def select(self, state, space, rng):
        return uniform_select(space, rng)

    def __repr__(self):
        return "Uniform()"


class Greedy:
    """Always plays the best arm for a fixed parameter (typically the truth)."""

    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=float)

    def select(self, state, space, rng=None):
        return space.linear_argmax(self.theta)

    def __repr__(self):
        return f"Greedy({self.theta})"


def make_policy(cfg: PolicyConfig, theta_star=None):
    if cfg.kind == "oful":
        return OFUL(cfg)
    if cfg.kind == "lints":
        return LinTS(cfg)
    if cfg.kind == "uniform":
        return Uniform()
    if theta_star is None:
        raise ValueError("the greedy policy needs the true parameter")
    return Greedy(theta_star)
