import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditlab import actionspace as asp
from banditlab.bandit import BanditInstance, DesignState, run_episode
from banditlab.policies import (OFUL, Greedy, LinTS, PolicyConfig, Uniform, lints_select, make_policy, oful_select,
                                uniform_select)


def forced_state(theta_hat, gram):
    st_ = DesignState(len(theta_hat))
    st_.gram = np.asarray(gram, dtype=float)
    st_.gram_inv = np.linalg.inv(st_.gram)
    st_.theta_hat = np.asarray(theta_hat, dtype=float)
    return st_


def test_config_validation():
    assert PolicyConfig(kind="TS").kind == "lints"
    for bad in (dict(kind="eps-greedy"), dict(delta=0.0), dict(b=-1.0), dict(ts_scale=-1.0),
                dict(ts_scale="big"), dict(radius=-1.0)):
        with pytest.raises(ValueError):
            PolicyConfig(**bad)


def test_oful_examples():
    sphere = asp.UnitSphere(2)
    np.testing.assert_allclose(oful_select(DesignState(2), sphere, PolicyConfig()), [1.0, 0.0])
    state = forced_state([1.0, 0.0], np.diag([4.0, 1.0]))
    x = oful_select(state, sphere, PolicyConfig(radius=2.0))
    np.testing.assert_allclose(np.abs(x), [0.57735, 0.81650], atol=1e-5)
    state = forced_state([0.3, -0.7], np.diag([4.0, 1.0]))
    np.testing.assert_allclose(oful_select(state, sphere, PolicyConfig(radius=0.0)), sphere.linear_argmax([0.3, -0.7]))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 2 ** 31))
def test_oful_argmax_scale_invariant(kappa, seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((3, 3))
    gram = b @ b.T + np.eye(3)
    theta_hat = rng.standard_normal(3)
    radius = float(rng.uniform(0.1, 3.0))
    sphere = asp.UnitSphere(3)
    x1 = oful_select(forced_state(theta_hat, gram), sphere, PolicyConfig(radius=radius))
    x2 = oful_select(forced_state(kappa * theta_hat, gram), sphere, PolicyConfig(radius=kappa * radius))
    np.testing.assert_allclose(x1, x2, atol=1e-7)


def test_lints_zero_scale_is_greedy():
    state = forced_state([0.2, 0.9], np.diag([3.0, 2.0]))
    x = lints_select(state, asp.UnitSphere(2), PolicyConfig(kind="lints", ts_scale=0.0), np.random.default_rng(0))
    np.testing.assert_allclose(x, asp.UnitSphere(2).linear_argmax([0.2, 0.9]))


def test_lints_sample_covariance_matches_gram_inv():
    # capture the sampled parameter through a recording action space
    class Recorder(asp.UnitSphere):
        def __init__(self, d):
            super().__init__(d)
            self.seen = []

        def linear_argmax(self, theta):
            self.seen.append(np.array(theta))
            return super().linear_argmax(theta)

    gram = np.array([[3.0, 1.0, 0.0], [1.0, 2.0, 0.5], [0.0, 0.5, 1.5]])
    state = forced_state([0.5, -0.2, 0.1], gram)
    space = Recorder(3)
    rng = np.random.default_rng(1)
    cfg = PolicyConfig(kind="lints", ts_scale=1.0)
    for _ in range(100_000):
        lints_select(state, space, cfg, rng)
    cov = np.cov(np.array(space.seen).T)
    np.testing.assert_allclose(cov, state.gram_inv, rtol=0.03, atol=0.03 * np.abs(state.gram_inv).max())


def test_lints_radius_inflation():
    state = forced_state([0.0, 0.0], np.eye(2))
    state.n = 50
    cfg = PolicyConfig(kind="lints", ts_scale="radius", b=1.0)
    assert cfg.current_radius(state) > 1.0
    x = lints_select(state, asp.UnitSphere(2), cfg, np.random.default_rng(0))
    assert asp.UnitSphere(2).residual(x) < 1e-12


def test_lints_deterministic():
    state = forced_state([0.1, 0.2, 0.3], np.eye(3) * 2)
    cfg = PolicyConfig(kind="lints")
    a = lints_select(state, asp.PNormBall(3, 6.0), cfg, np.random.default_rng(9))
    b = lints_select(state, asp.PNormBall(3, 6.0), cfg, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)


def test_uniform_examples():
    rng = np.random.default_rng(0)
    s = asp.UnitSphere(2)
    xs = np.array([uniform_select(s, rng) for _ in range(100_000)])
    np.testing.assert_allclose(np.linalg.norm(xs, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(xs.T @ xs / len(xs), np.eye(2) / 2, atol=0.02)
    assert uniform_select(asp.FiniteSet([[3.0, 4.0]]), rng).tolist() == [3.0, 4.0]


@pytest.mark.parametrize("space", [asp.UnitSphere(3), asp.Ellipsoid(np.diag([2.0, 1.0, 0.5])),
                                   asp.PNormBall(3, 10.0), asp.FiniteSet(np.eye(3))])
def test_policies_stay_on_space(space):
    theta = np.array([0.4, 0.3, -0.5])
    inst = BanditInstance(theta, 1.0, space)
    for policy in (OFUL(), LinTS(), Uniform(), Greedy(theta)):
        traj = run_episode(policy, inst, 60, np.random.default_rng(0))
        assert max(space.residual(a) for a in traj.actions) < 1e-8


@pytest.mark.parametrize("policy", [OFUL(), LinTS()])
def test_policies_concentrate_on_sphere(policy):
    n = 4096
    theta = np.array([1.0, 0.0, 0.0])
    inst = BanditInstance(theta, 1.0, asp.UnitSphere(3))
    traj = run_episode(policy, inst, n, np.random.default_rng(4))
    eps = 10 / math.sqrt(n)
    assert np.mean(traj.actions @ theta >= 1 - eps) > 0.5


def test_make_policy():
    assert isinstance(make_policy(PolicyConfig(kind="oful")), OFUL)
    assert isinstance(make_policy(PolicyConfig(kind="ts")), LinTS)
    assert isinstance(make_policy(PolicyConfig(kind="uniform")), Uniform)
    assert isinstance(make_policy(PolicyConfig(kind="greedy"), np.ones(2)), Greedy)
    with pytest.raises(ValueError):
        make_policy(PolicyConfig(kind="greedy"))
