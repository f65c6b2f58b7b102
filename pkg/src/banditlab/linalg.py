"""Dense symmetric linear algebra and perturbation bounds.

Everything here works on small (d <= ~50) dense symmetric matrices held as
plain ``numpy`` arrays.  ``eig_sym`` is a cyclic Jacobi solver; the
``method="lapack"`` switch exists for the per-round hot paths of the
simulators, where a Python-level Jacobi sweep would dominate run time.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "EigenDecomposition",
    "as_sym",
    "eig_sym",
    "lambda_min",
    "weyl_check",
    "WeylReport",
    "davis_kahan_check",
    "DavisKahanReport",
    "matrix_azuma_tail",
    "trust_region_max_norm",
]

SYM_TOL = 1e-9


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted descending, eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def as_sym(m, name="matrix") -> np.ndarray:
    """Validate ``m`` as a finite symmetric square matrix and return a float copy."""
    a = np.array(m, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > SYM_TOL * scale:
        raise ValueError(f"{name} is not symmetric (tolerance {SYM_TOL})")
    return 0.5 * (a + a.T)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # first nonzero coordinate of every column positive
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        cutoff = 1e-12 * np.max(np.abs(col))
        k = int(np.argmax(np.abs(col) > cutoff))
        if col[k] < 0:
            vecs[:, j] = -col
    return vecs


def _sorted(vals: np.ndarray, vecs: np.ndarray) -> EigenDecomposition:
    order = np.argsort(-vals, kind="stable")
    return EigenDecomposition(vals[order], _fix_signs(vecs[:, order].copy()))


def _jacobi(a: np.ndarray, tol: float, max_sweeps: int):
    d = a.shape[0]
    v = np.eye(d)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(d), v
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.diag(a).copy(), v


def eig_sym(m, method: str = "jacobi", tol: float = 1e-12, max_sweeps: int = 100) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues come back in non-increasing order.  Each eigenvector is
    normalised so that its first nonzero coordinate is positive, which makes
    results reproducible across runs and methods (up to degenerate
    eigenspaces, where any orthonormal basis is valid).

    Parameters
    ----------
    m : array_like, shape (d, d)
    method : {"jacobi", "lapack"}
        ``"jacobi"`` runs cyclic Jacobi rotations until the off-diagonal
        Frobenius norm drops below ``tol * ||m||_F``.  ``"lapack"`` defers to
        ``numpy.linalg.eigh``.
    """
    a = as_sym(m)
    if method == "jacobi":
        vals, vecs = _jacobi(a, tol, max_sweeps)
    elif method == "lapack":
        vals, vecs = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _sorted(vals, vecs)


def lambda_min(m) -> float:
    """Smallest eigenvalue (LAPACK), no validation beyond what eigvalsh does."""
    return float(np.linalg.eigvalsh(m)[0])


class WeylReport(NamedTuple):
    holds: bool
    slack_per_index: np.ndarray


def weyl_check(a, h) -> WeylReport:
    """Check lambda_i(A + H) <= lambda_i(A) + lambda_max(H) for every i."""
    a = as_sym(a, "a")
    h = as_sym(h, "h")
    if a.shape != h.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {h.shape}")
    la = eig_sym(a).eigenvalues
    lh = eig_sym(h).eigenvalues
    lah = eig_sym(a + h).eigenvalues
    slack = la + lh[0] - lah
    return WeylReport(bool(np.all(slack >= -1e-9)), slack)


class DavisKahanReport(NamedTuple):
    bound: float
    alignment: float
    holds: bool
    separation: float


def davis_kahan_check(a, h) -> DavisKahanReport:
    """Top eigenvector of A against the trailing eigenvectors of A + H.

    ``alignment`` is the spectral norm of ``u1(A)^T [u2~ ... ud~]`` and
    ``bound`` is ``||H|| / delta`` with ``delta = lambda_1(A) - lambda_2(A + H)``.
    Raises ``ValueError`` if the separation is not positive.
    """
    a = as_sym(a, "a")
    h = as_sym(h, "h")
    if a.shape != h.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {h.shape}")
    d = a.shape[0]
    ea = eig_sym(a)
    eah = eig_sym(a + h)
    if d == 1:
        return DavisKahanReport(0.0, 0.0, True, math.inf)
    sep = float(ea.eigenvalues[0] - eah.eigenvalues[1])
    if sep <= 0:
        raise ValueError(f"eigenvalue separation must be positive, got {sep}")
    h_norm = float(np.max(np.abs(eig_sym(h).eigenvalues)))
    bound = h_norm / sep
    # the norm of a row vector is its Euclidean length; invariant to the
    # basis chosen inside degenerate trailing eigenspaces
    alignment = float(np.linalg.norm(ea.eigenvectors[:, 0] @ eah.eigenvectors[:, 1:]))
    return DavisKahanReport(bound, alignment, alignment <= bound + 1e-9, sep)


def matrix_azuma_tail(t: float, sigma_sq: float, d: int) -> float:
    """Tail bound d * exp(-t^2 / (8 sigma^2)) on P(lambda_min(sum of martingale diffs) <= -t).

    Not clamped to [0, 1].
    """
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    return d * math.exp(-(t * t) / (8.0 * sigma_sq))


def _bottom_direction(q: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # deterministic unit vector in span(q[:, idx]): projection of the first
    # standard basis vector that is not orthogonal to the subspace
    basis = q[:, idx]
    for k in range(q.shape[0]):
        proj = basis @ basis[k, :]
        nrm = np.linalg.norm(proj)
        if nrm > 1e-8:
            return proj / nrm
    raise AssertionError("empty eigenspace")


def trust_region_max_norm(center, shape, radius: float, *, tol: float = 1e-10):
    """Maximise ||theta|| over the ellipsoid ||theta - center||_shape <= radius.

    Works in the eigenbasis of ``shape`` where the stationarity condition
    reduces to a scalar secular equation in the multiplier.  The root is
    found by safeguarded Newton steps inside a shrinking bisection bracket.
    When ``center`` has no component on the bottom eigenspace of ``shape``
    and the secular equation has no root below the bottom eigenvalue (the
    "hard case"), the remaining budget is spent along that eigenspace.

    Returns
    -------
    maximizer : ndarray
    max_norm : float
    """
    c0 = np.asarray(center, dtype=float)
    s_mat = np.asarray(shape, dtype=float)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    s, q = np.linalg.eigh(0.5 * (s_mat + s_mat.T))
    if not s[0] > 1e-12:
        raise ValueError(f"shape must be positive definite (lambda_min={s[0]:.3e})")
    if radius == 0:
        return c0.copy(), float(np.linalg.norm(c0))

    c = q.T @ c0
    r2 = radius * radius
    s_min = s[0]
    bottom = s <= s_min * (1.0 + 1e-12)
    cc = c * c
    hard = float(np.sum(cc[bottom])) <= 1e-30 * max(1.0, float(np.sum(cc)))

    rest = ~bottom
    if hard:
        sr = s[rest]
        phi_edge = float(np.sum(sr * cc[rest] * (s_min / (sr - s_min)) ** 2)) if rest.any() else 0.0
        if phi_edge <= r2:
            y = np.zeros_like(c)
            y[rest] = s_min * c[rest] / (sr - s_min)
            z = q @ y + _bottom_direction(q, np.flatnonzero(bottom)) * math.sqrt((r2 - phi_edge) / s_min)
            theta = c0 + z
            return theta, float(np.linalg.norm(theta))
        # root lies strictly below s_min; only the non-bottom terms matter
        s_act, cc_act = sr, cc[rest]
    else:
        s_act, cc_act = s, cc

    # plain floats: the vectors are short and numpy call overhead dominates
    terms = list(zip(s_act.tolist(), cc_act.tolist()))

    def phi_and_grad(t):
        acc = dacc = 0.0
        for si, ci in terms:
            g = 1.0 / (si - t)
            w = si * ci * g * g
            acc += w
            dacc += w * si * g
        return t * t * acc, 2.0 * t * dacc

    # phi increases from 0 to +inf on (0, s_min); Newton runs on
    # psi = phi^(-1/2) - 1/radius, which is close to linear near the root.
    # The root of the bottom term alone is an upper bound on the true root.
    lo, hi = 0.0, s_min
    s0, c0_abs = float(s_act[0]), math.sqrt(float(cc_act[0]))
    t = min(s0 * radius / (radius + math.sqrt(s0) * c0_abs), s_min * (1.0 - 1e-15))
    if not t > 0:
        t = 0.5 * s_min
    for _ in range(200):
        phi, dphi = phi_and_grad(t)
        if abs(phi - r2) <= 1e-14 * r2:
            break
        if phi > r2:
            hi = t
        else:
            lo = t
        if hi - lo <= tol * s_min:
            break
        sq = math.sqrt(phi)
        t_new = t - (1.0 / sq - 1.0 / radius) / (-0.5 * dphi / (phi * sq)) if dphi > 0 else lo
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-15 * s_min:
            break
        t = t_new
    y = t * c / (s - t) if not hard else np.where(rest, t * c / np.where(rest, s - t, 1.0), 0.0)
    # land exactly on the boundary; for vanishing radius the step tends to s^-1 c
    if not np.any(y):
        y = c / s
    y = y / np.max(np.abs(y))
    y *= radius / math.sqrt(float(np.sum(s * y * y)))
    theta = c0 + q @ y
    return theta, float(np.linalg.norm(theta))
