"""Action-set geometries with linear and optimistic maximisation oracles.

Four families are supported:

* ``UnitSphere(d)``: the surface ``||x|| = 1``.
* ``Ellipsoid(A, c, center)``: the surface ``(x - center)^T A^{-1} (x - center) = c``.
* ``PNormBall(d, p, radius)``: the solid ball ``||x||_p <= radius`` with ``p >= 2``.
* ``FiniteSet(points)``: a finite list of arms.

Each space exposes ``linear_argmax`` (best arm for a known parameter),
``ucb_argmax`` (best arm for the most favourable parameter in an ellipsoidal
confidence set), ``sample`` and ``residual`` (constraint violation).  The
module also holds the epsilon-optimal neighbourhoods and the perturbation
geometry used to build a nearby parameter whose near-optimal caps are
disjoint from the original ones.
"""

from __future__ import annotations

import itertools
import math
from typing import NamedTuple

import numpy as np

from .linalg import as_sym, trust_region_max_norm

__all__ = [
    "ActionSpace",
    "UnitSphere",
    "Ellipsoid",
    "PNormBall",
    "FiniteSet",
    "EpsNeighborhood",
    "PerturbationPlan",
    "linear_argmax",
    "opt_value",
    "eps_optimal_contains",
    "ucb_argmax",
    "sample_uniform",
    "lch_local_ellipsoid",
    "perturbation_alpha_sphere",
    "perturbation_plan",
    "check_disjoint_eps_sets",
]

MEMBERSHIP_TOL = 1e-8
_ALT_MAX_ITER = 500
_ALT_TOL = 1e-8
_CORNER_SEED_MAX_DIM = 6


def _vector(v, d=None, name="vector") -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if d is not None and a.shape[0] != d:
        raise ValueError(f"{name} has dimension {a.shape[0]}, expected {d}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _nonzero(theta: np.ndarray) -> None:
    if not np.any(theta):
        raise ValueError("theta = 0 has no unique maximiser")


def _e1(d: int) -> np.ndarray:
    x = np.zeros(d)
    x[0] = 1.0
    return x


def _alternating_ucb(space, center, shape, radius, starts):
    """Block-coordinate ascent on <x, theta> over space x confidence ellipsoid.

    Each half-step is a closed form: the x-step is ``linear_argmax(theta)``
    and the theta-step is ``center + radius * S^{-1} x / ||x||_{S^{-1}}``.
    The objective never decreases, so the loop stops once it stalls.
    """
    s_inv = np.linalg.inv(shape)
    best_x, best_val = None, -math.inf
    for x in starts:
        val = -math.inf
        for _ in range(_ALT_MAX_ITER):
            w = s_inv @ x
            wn = math.sqrt(max(float(x @ w), 0.0))
            theta = center + (radius / wn) * w if wn > 0 else center
            new_val = float(x @ theta)
            if not np.any(theta):
                break
            x_new = space.linear_argmax(theta)
            done = np.max(np.abs(x_new - x)) < _ALT_TOL and new_val - val < _ALT_TOL
            x, val = x_new, new_val
            if done:
                break
        w = s_inv @ x
        val = float(x @ center) + radius * math.sqrt(max(float(x @ w), 0.0))
        if val > best_val + 1e-12:
            best_x, best_val = x, val
    return best_x


class ActionSpace:
    """Common interface; concrete geometries override the oracles."""

    dim: int
    kind: str = "abstract"

    def linear_argmax(self, theta) -> np.ndarray:
        raise NotImplementedError

    def opt_value(self, theta) -> float:
        theta = _vector(theta, self.dim, "theta")
        return float(self.linear_argmax(theta) @ theta)

    def ucb_argmax(self, center, shape, radius: float) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng) -> np.ndarray:
        raise NotImplementedError

    def residual(self, x) -> float:
        raise NotImplementedError

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.residual(x) <= tol

    def _check_ucb_args(self, center, shape, radius, check_pd=True):
        # called once per round by OFUL, so kept light; the trust-region
        # solver performs its own positive-definiteness check
        center = _vector(center, self.dim, "center")
        shape = np.asarray(shape, dtype=float)
        if shape.shape != (self.dim, self.dim):
            raise ValueError("shape dimension mismatch")
        if not np.isfinite(shape).all() or np.abs(shape - shape.T).max() > 1e-9 * max(1.0, np.abs(shape).max()):
            raise ValueError("shape must be finite and symmetric")
        if radius < 0:
            raise ValueError("radius must be non-negative")
        if check_pd and np.linalg.eigvalsh(shape)[0] <= 1e-12:
            raise ValueError("shape must be positive definite")
        return center, shape, float(radius)


class UnitSphere(ActionSpace):
    kind = "sphere"

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(d)

    def __repr__(self):
        return f"UnitSphere({self.dim})"

    def linear_argmax(self, theta):
        theta = _vector(theta, self.dim, "theta")
        _nonzero(theta)
        return theta / np.linalg.norm(theta)

    def opt_value(self, theta):
        return float(np.linalg.norm(_vector(theta, self.dim, "theta")))

    def ucb_argmax(self, center, shape, radius):
        # max_{||x||=1} <x, theta> = ||theta||, so the joint problem is the
        # norm maximisation over the confidence ellipsoid
        center, shape, radius = self._check_ucb_args(center, shape, radius, check_pd=False)
        theta, norm = trust_region_max_norm(center, shape, radius)
        if norm <= 0:
            return _e1(self.dim)
        return theta / norm

    def sample(self, rng):
        g = rng.standard_normal(self.dim)
        return g / np.linalg.norm(g)

    def residual(self, x):
        return abs(float(np.linalg.norm(_vector(x, self.dim, "x"))) - 1.0)


class Ellipsoid(ActionSpace):
    """Surface ``(x - center)^T A^{-1} (x - center) = c``."""

    kind = "ellipsoid"

    def __init__(self, A, c: float = 1.0, center=None):
        A = as_sym(A, "A")
        vals, vecs = np.linalg.eigh(A)
        if vals[0] <= 0:
            raise ValueError("A must be positive definite")
        if not c > 0:
            raise ValueError("c must be positive")
        self.A = A
        self.c = float(c)
        self.dim = A.shape[0]
        self.center = np.zeros(self.dim) if center is None else _vector(center, self.dim, "center")
        self.A_inv = np.linalg.inv(A)
        self.A_half = (vecs * np.sqrt(vals)) @ vecs.T
        self.A_neg_half = (vecs / np.sqrt(vals)) @ vecs.T

    def __repr__(self):
        return f"Ellipsoid(dim={self.dim}, c={self.c})"

    def linear_argmax(self, theta):
        theta = _vector(theta, self.dim, "theta")
        _nonzero(theta)
        a_theta = self.A @ theta
        return self.center + math.sqrt(self.c) * a_theta / math.sqrt(float(theta @ a_theta))

    def ucb_argmax(self, center, shape, radius):
        center, shape, radius = self._check_ucb_args(center, shape, radius)
        if radius == 0:
            if not np.any(center):
                return self.linear_argmax(_e1(self.dim))
            return self.linear_argmax(center)
        if not np.any(self.center):
            # whiten: phi = A^{1/2} theta turns the objective into ||phi||
            w_shape = self.A_neg_half @ shape @ self.A_neg_half
            phi, norm = trust_region_max_norm(self.A_half @ center, w_shape, radius)
            theta = self.A_neg_half @ phi if norm > 0 else _e1(self.dim)
            return self.linear_argmax(theta)
        starts = [self.linear_argmax(_e1(self.dim))]
        if np.any(center):
            starts = [self.linear_argmax(center), self.linear_argmax(-center)] + starts
        return _alternating_ucb(self, center, shape, radius, starts)

    def sample(self, rng):
        g = rng.standard_normal(self.dim)
        u = g / np.linalg.norm(g)
        return self.center + math.sqrt(self.c) * (self.A_half @ u)

    def residual(self, x):
        y = _vector(x, self.dim, "x") - self.center
        return abs(float(y @ self.A_inv @ y) / self.c - 1.0)

    def whiten(self, theta) -> np.ndarray:
        """Map a parameter to the unit-sphere picture: ``A^{1/2} theta``."""
        return self.A_half @ _vector(theta, self.dim, "theta")


class PNormBall(ActionSpace):
    """Solid ball ``||x||_p <= radius``; its optima lie on the boundary."""

    kind = "pball"

    def __init__(self, d: int, p: float, radius: float = 1.0):
        if d < 1:
            raise ValueError("dimension must be positive")
        if not p >= 2:
            raise ValueError("p must be at least 2")
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.dim = int(d)
        self.p = float(p)
        self.q = self.p / (self.p - 1.0)
        self.radius = float(radius)
        # fixed extra starting point for the alternating UCB search
        self._probe = self.sample(np.random.default_rng(0))
        # large p makes the boundary nearly flat between sign-pattern corners,
        # each of which can trap the ascent; in low dimension seed them all
        self._extra_starts = []
        if self.dim <= _CORNER_SEED_MAX_DIM:
            signs = np.array(list(itertools.product((1.0, -1.0), repeat=self.dim)))
            corners = self.radius * signs / self.dim ** (1.0 / self.p)
            axes = self.radius * np.vstack([np.eye(self.dim), -np.eye(self.dim)])
            self._extra_starts = list(corners) + list(axes)

    def __repr__(self):
        return f"PNormBall({self.dim}, p={self.p:g}, radius={self.radius:g})"

    def norm(self, x) -> float:
        return float(np.sum(np.abs(x) ** self.p) ** (1.0 / self.p))

    def linear_argmax(self, theta):
        # Hoelder equality case for the dual exponent q
        theta = _vector(theta, self.dim, "theta")
        _nonzero(theta)
        a = np.abs(theta) / np.max(np.abs(theta))
        w = a ** (self.q - 1.0)
        x = np.sign(theta) * w / np.sum(a ** self.q) ** (1.0 / self.p)
        return self.radius * x

    def opt_value(self, theta):
        theta = _vector(theta, self.dim, "theta")
        return self.radius * float(np.sum(np.abs(theta) ** self.q) ** (1.0 / self.q))

    def ucb_argmax(self, center, shape, radius):
        """Approximate: best of alternating ascent from four fixed starts."""
        center, shape, radius = self._check_ucb_args(center, shape, radius)
        if radius == 0:
            return self.linear_argmax(center if np.any(center) else _e1(self.dim))
        starts = []
        if np.any(center):
            starts += [self.linear_argmax(center), self.linear_argmax(-center)]
        starts += [self.linear_argmax(_e1(self.dim)), self._probe] + self._extra_starts
        return _alternating_ucb(self, center, shape, radius, starts)

    def sample(self, rng):
        # generalised normal: |g| = Gamma(1/p)^(1/p), random sign
        mag = rng.gamma(1.0 / self.p, 1.0, size=self.dim) ** (1.0 / self.p)
        sign = np.where(rng.random(self.dim) < 0.5, -1.0, 1.0)
        g = sign * mag
        return self.radius * g / self.norm(g)

    def residual(self, x):
        return max(0.0, self.norm(_vector(x, self.dim, "x")) - self.radius)


class FiniteSet(ActionSpace):
    kind = "finite"

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a non-empty (k, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        self.points = pts
        self.dim = pts.shape[1]

    def __repr__(self):
        return f"FiniteSet(k={len(self.points)}, d={self.dim})"

    def linear_argmax(self, theta):
        theta = _vector(theta, self.dim, "theta")
        _nonzero(theta)
        # np.argmax returns the lowest index among ties
        return self.points[int(np.argmax(self.points @ theta))].copy()

    def ucb_argmax(self, center, shape, radius):
        center, shape, radius = self._check_ucb_args(center, shape, radius)
        s_inv = np.linalg.inv(shape)
        widths = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", self.points, s_inv, self.points), 0.0))
        return self.points[int(np.argmax(self.points @ center + radius * widths))].copy()

    def sample(self, rng):
        return self.points[int(rng.integers(len(self.points)))].copy()

    def residual(self, x):
        x = _vector(x, self.dim, "x")
        return float(np.min(np.linalg.norm(self.points - x, axis=1)))


# functional front-ends ------------------------------------------------------


def linear_argmax(space: ActionSpace, theta) -> np.ndarray:
    """Best arm for a known parameter. Raises ``ValueError`` for ``theta = 0``."""
    return space.linear_argmax(theta)


def opt_value(space: ActionSpace, theta) -> float:
    return space.opt_value(theta)


def ucb_argmax(space: ActionSpace, center, shape, radius: float) -> np.ndarray:
    """argmax over arms of the largest reward any parameter in the confidence set allows."""
    return space.ucb_argmax(center, shape, radius)


def sample_uniform(space: ActionSpace, rng) -> np.ndarray:
    return space.sample(rng)


class EpsNeighborhood(NamedTuple):
    """Arms whose reward under ``theta`` is within ``eps`` of the best."""

    theta: np.ndarray
    eps: float
    opt_value: float

    def contains(self, x) -> bool:
        return float(np.asarray(x) @ self.theta) >= self.opt_value - self.eps

    def contains_many(self, xs) -> np.ndarray:
        return np.asarray(xs) @ self.theta >= self.opt_value - self.eps

    @classmethod
    def build(cls, space: ActionSpace, theta, eps: float) -> "EpsNeighborhood":
        if eps < 0:
            raise ValueError("eps must be non-negative")
        theta = _vector(theta, space.dim, "theta")
        return cls(theta, float(eps), space.opt_value(theta))


def eps_optimal_contains(space: ActionSpace, theta, eps: float, x) -> bool:
    if space.residual(x) > MEMBERSHIP_TOL:
        raise ValueError("x is not on the action space")
    return EpsNeighborhood.build(space, theta, eps).contains(x)


def lch_local_ellipsoid(x_star, grad, quad, *, f=None, level=None) -> Ellipsoid:
    """Complete the square of a second-order surface model around ``x_star``.

    For a surface ``{f = level}`` whose exact expansion at ``x_star`` is
    ``f(x* + y) = level + grad.y + y^T quad y``, the surface equals the
    ellipsoid ``(x - a)^T M^{-1} (x - a) = 1`` with

        a = x* - quad^{-1} grad / 2,   M^{-1} = 4 quad / (grad^T quad^{-1} grad).

    ``quad`` is the quadratic-form coefficient, i.e. half the Hessian.
    When ``f`` and ``level`` are supplied, ``x_star`` must lie on the
    surface within 1e-6.
    """
    x_star = _vector(x_star, name="x_star")
    d = x_star.shape[0]
    grad = _vector(grad, d, "grad")
    quad = as_sym(quad, "quad")
    if quad.shape[0] != d:
        raise ValueError("quad dimension mismatch")
    if np.linalg.eigvalsh(quad)[0] <= 0:
        raise ValueError("quad must be positive definite")
    if not np.any(grad):
        raise ValueError("grad must be nonzero")
    if f is not None:
        if level is None:
            raise ValueError("level is required together with f")
        gap = abs(float(f(x_star)) - level)
        if gap > 1e-6:
            raise ValueError(f"x_star is off the surface by {gap:.3e}")
    q_inv_g = np.linalg.solve(quad, grad)
    scale = float(grad @ q_inv_g)
    a = x_star - 0.5 * q_inv_g
    m_inv = 4.0 * quad / scale
    y = x_star - a
    if abs(float(y @ m_inv @ y) - 1.0) > 1e-9:
        raise ArithmeticError("completed-square ellipsoid does not pass through x_star")
    return Ellipsoid(np.linalg.inv(m_inv), 1.0, a)


class PerturbationPlan(NamedTuple):
    eps: float
    psi: float
    delta_angle: float
    alpha: float
    direction: np.ndarray


def perturbation_alpha_sphere(eps: float, alignment: float) -> float:
    """Step length along a near-orthogonal direction that separates epsilon-caps.

    With ``psi = arccos(1 - eps)`` the cap half-angle and
    ``delta = arcsin(alignment)`` the tilt of the direction towards the
    parameter, ``alpha = sin(2 psi) / cos(delta + 2 psi)``.  Moving a unit
    parameter by ``alpha`` rotates it by at least ``2 psi`` for every
    alignment in ``[0, alignment]``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 <= alignment < 1:
        raise ValueError("alignment must lie in [0, 1)")
    psi = math.acos(1.0 - eps)
    delta = math.asin(alignment)
    if delta + 2.0 * psi >= math.pi / 2:
        raise ValueError("degenerate geometry: delta + 2 psi >= pi/2")
    return math.sin(2.0 * psi) / math.cos(delta + 2.0 * psi)


def perturbation_plan(theta, direction, eps: float) -> PerturbationPlan:
    """Full perturbation geometry for a unit-sphere parameter and direction."""
    theta = _vector(theta, name="theta")
    u = _vector(direction, theta.shape[0], "direction")
    u = u / np.linalg.norm(u)
    alignment = min(abs(float(u @ theta)) / float(np.linalg.norm(theta)), 1.0)
    alpha = perturbation_alpha_sphere(eps, alignment)
    return PerturbationPlan(float(eps), math.acos(1.0 - eps), math.asin(alignment), alpha, u)


def _cap_angle(eps: float, norm: float) -> float:
    return math.acos(max(-1.0, 1.0 - eps / norm))


def _angle(u, v) -> float:
    cos = float(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.acos(min(1.0, max(-1.0, cos)))


def check_disjoint_eps_sets(space: ActionSpace, theta, theta_prime, eps: float,
                            n_samples: int = 10_000, rng=None) -> bool:
    """Whether the eps-optimal sets of two parameters are disjoint.

    Exact for spheres (angular test), ellipsoids (the same test after
    whitening) and finite sets (enumeration).  For p-norm balls the test is
    Monte-Carlo over boundary samples and is one-sided: ``True`` only means
    no common point was found.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    theta = _vector(theta, space.dim, "theta")
    theta_prime = _vector(theta_prime, space.dim, "theta_prime")
    _nonzero(theta)
    _nonzero(theta_prime)
    if isinstance(space, (UnitSphere, Ellipsoid)):
        scale = 1.0
        if isinstance(space, Ellipsoid):
            theta, theta_prime = space.whiten(theta), space.whiten(theta_prime)
            scale = math.sqrt(space.c)
        e = eps / scale
        limit = _cap_angle(e, np.linalg.norm(theta)) + _cap_angle(e, np.linalg.norm(theta_prime))
        return _angle(theta, theta_prime) > limit
    a = EpsNeighborhood.build(space, theta, eps)
    b = EpsNeighborhood.build(space, theta_prime, eps)
    if isinstance(space, FiniteSet):
        return not np.any(a.contains_many(space.points) & b.contains_many(space.points))
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    rng = np.random.default_rng(0) if rng is None else rng
    u, v = theta / np.linalg.norm(theta), theta_prime / np.linalg.norm(theta_prime)
    cands = [space.linear_argmax(theta), space.linear_argmax(theta_prime)]
    if np.any(u + v):
        cands.append(space.linear_argmax(u + v))
    pts = np.vstack([np.array(cands)] + [space.sample(rng)[None, :] for _ in range(n_samples)])
    return not np.any(a.contains_many(pts) & b.contains_many(pts))
