import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditlab.linalg import (davis_kahan_check, eig_sym, lambda_min, matrix_azuma_tail, trust_region_max_norm,
                              weyl_check)


def random_sym(rng, d):
    m = rng.standard_normal((d, d))
    return 0.5 * (m + m.T)


def test_eig_diagonal():
    res = eig_sym(np.diag([1.0, 3.0]))
    np.testing.assert_allclose(res.eigenvalues, [3.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(np.abs(res.eigenvectors), [[0, 1], [1, 0]], atol=1e-14)


def test_eig_two_by_two_closed_form():
    res = eig_sym(np.array([[10.0, 1.0], [1.0, 0.0]]))
    expected = [(10 + math.sqrt(104)) / 2, (10 - math.sqrt(104)) / 2]
    np.testing.assert_allclose(res.eigenvalues, expected, atol=1e-12)
    np.testing.assert_allclose(res.eigenvalues, [10.09902, -0.09902], atol=1e-5)


def test_eig_identity_sign_convention():
    res = eig_sym(np.eye(4))
    np.testing.assert_allclose(res.eigenvalues, np.ones(4))
    np.testing.assert_allclose(res.eigenvectors.T @ res.eigenvectors, np.eye(4), atol=1e-14)
    for k in range(4):
        col = res.eigenvectors[:, k]
        assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0


def test_eig_rejects_bad_input():
    with pytest.raises(ValueError):
        eig_sym(np.array([[1.0, np.nan], [np.nan, 1.0]]))
    with pytest.raises(ValueError):
        eig_sym(np.array([[1.0, 1e-6], [0.0, 1.0]]))


def test_eig_random_reconstruction_and_lapack_agreement():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        d = int(rng.integers(1, 11))
        m = random_sym(rng, d)
        res = eig_sym(m)
        scale = max(1.0, np.linalg.norm(m))
        assert np.linalg.norm(res.reconstruct() - m) <= 1e-10 * scale
        np.testing.assert_allclose(res.eigenvectors.T @ res.eigenvectors, np.eye(d), atol=1e-10)
        assert np.all(np.diff(res.eigenvalues) <= 1e-12)
        np.testing.assert_allclose(res.eigenvalues, np.sort(np.linalg.eigvalsh(m))[::-1], atol=1e-10 * scale)
    m = random_sym(rng, 6)
    np.testing.assert_allclose(eig_sym(m, method="lapack").eigenvalues, eig_sym(m).eigenvalues, atol=1e-12)


def test_lambda_min():
    assert lambda_min(np.diag([5.0, 2.0, 7.0])) == pytest.approx(2.0)


def test_weyl_examples():
    rep = weyl_check(np.diag([5.0, 2.0]), np.zeros((2, 2)))
    assert rep.holds
    np.testing.assert_allclose(rep.slack_per_index, 0.0, atol=1e-12)

    rep = weyl_check(np.diag([10.0, 0.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert rep.holds
    assert rep.slack_per_index[1] == pytest.approx(1 - (10 - math.sqrt(104)) / 2, abs=1e-12)
    assert rep.slack_per_index[1] == pytest.approx(1.09902, abs=1e-5)

    rep = weyl_check(np.eye(2), np.eye(2))
    np.testing.assert_allclose(rep.slack_per_index, 0.0, atol=1e-12)


def test_weyl_dimension_mismatch():
    with pytest.raises(ValueError):
        weyl_check(np.eye(2), np.eye(3))


def test_davis_kahan_examples():
    rep = davis_kahan_check(np.diag([10.0, 0.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))
    sep = 10 - (10 - math.sqrt(104)) / 2
    assert rep.bound == pytest.approx(1 / sep, abs=1e-12)
    # second eigenvector of [[10,1],[1,0]] is proportional to (1, lambda_2 - 10)
    lam2 = (10 - math.sqrt(104)) / 2
    assert rep.alignment == pytest.approx(1 / math.hypot(1, lam2 - 10), abs=1e-12)
    assert rep.bound == pytest.approx(0.09902, abs=1e-5)
    assert rep.alignment == pytest.approx(0.09853, abs=1e-5)
    assert rep.holds

    rep = davis_kahan_check(np.diag([3.0, 1.0]), np.zeros((2, 2)))
    assert rep.alignment == pytest.approx(0.0, abs=1e-14)
    assert rep.bound == 0.0 and rep.holds

    rep = davis_kahan_check(100 * np.diag([1.0, 0.0]), np.diag([0.0, 5.0]))
    assert rep.alignment == pytest.approx(0.0, abs=1e-14)
    assert rep.bound == pytest.approx(5 / 95)
    assert rep.holds


def test_davis_kahan_needs_separation():
    with pytest.raises(ValueError):
        davis_kahan_check(np.diag([1.0, 0.0]), np.diag([0.0, 2.0]))


def test_weyl_and_davis_kahan_random():
    rng = np.random.default_rng(11)
    for _ in range(300):
        d = int(rng.integers(2, 7))
        a = random_sym(rng, d)
        h = 0.3 * random_sym(rng, d)
        assert weyl_check(a, h).holds
        try:
            rep = davis_kahan_check(a, h)
        except ValueError:
            continue
        assert rep.holds


def test_matrix_azuma_tail():
    assert matrix_azuma_tail(0.0, 1.0, 3) == 3.0
    assert matrix_azuma_tail(4.0, 1.0, 2) == pytest.approx(2 * math.exp(-2))
    assert matrix_azuma_tail(4.0, 1.0, 2) == pytest.approx(0.27067, abs=1e-5)
    assert matrix_azuma_tail(1e6, 1.0, 5) == 0.0
    with pytest.raises(ValueError):
        matrix_azuma_tail(1.0, 0.0, 2)


def test_trust_region_examples():
    theta, norm = trust_region_max_norm([3.0, 4.0], np.eye(2), 1.0)
    assert norm == pytest.approx(6.0, abs=1e-10)
    np.testing.assert_allclose(theta, [3.6, 4.8], atol=1e-9)

    theta, norm = trust_region_max_norm([1.0, 0.0], np.diag([4.0, 1.0]), 2.0)
    assert norm == pytest.approx(math.sqrt(16 / 3), abs=1e-9)
    np.testing.assert_allclose(np.abs(theta), [4 / 3, 4 * math.sqrt(2) / 3], atol=1e-8)

    theta, norm = trust_region_max_norm([0.0, 0.0], np.diag([4.0, 1.0]), 2.0)
    assert norm == pytest.approx(2.0, abs=1e-10)
    np.testing.assert_allclose(np.abs(theta), [0.0, 2.0], atol=1e-9)


def test_trust_region_rejects_non_pd():
    with pytest.raises(ValueError):
        trust_region_max_norm([1.0, 0.0], np.diag([1.0, -1.0]), 1.0)


def boundary_grid_max(center, shape, radius, count=200_000, seed=0):
    # points on the ellipsoid boundary: center + radius * shape^{-1/2} z, |z| = 1
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, len(center)))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    w, u = np.linalg.eigh(shape)
    pts = center + radius * (z @ (u / np.sqrt(w)).T)
    return np.linalg.norm(pts, axis=1).max()


def test_trust_region_matches_grid_oracle():
    rng = np.random.default_rng(5)
    for _ in range(30):
        d = int(rng.integers(2, 4))
        b = rng.standard_normal((d, d))
        shape = b @ b.T + 0.2 * np.eye(d)
        center = rng.standard_normal(d)
        radius = float(rng.uniform(0.1, 2.0))
        _, norm = trust_region_max_norm(center, shape, radius)
        ref = boundary_grid_max(center, shape, radius)
        assert norm >= ref - 1e-9
        assert norm == pytest.approx(ref, rel=1e-3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=5), st.floats(0, 3))
def test_trust_region_isotropic_and_bounds(center, radius):
    center = np.array(center)
    d = len(center)
    _, norm = trust_region_max_norm(center, np.eye(d), radius)
    assert norm == pytest.approx(np.linalg.norm(center) + radius, abs=1e-10)

    shape = np.diag(np.linspace(0.5, 3.0, d))
    theta, norm = trust_region_max_norm(center, shape, radius)
    c = np.linalg.norm(center)
    assert norm >= c - 1e-12
    assert norm <= c + radius / math.sqrt(0.5) + 1e-8
    diff = theta - center
    assert diff @ shape @ diff <= radius ** 2 * (1 + 1e-8) + 1e-12
