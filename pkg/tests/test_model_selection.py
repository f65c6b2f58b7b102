import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditlab import actionspace as asp
from banditlab.bandit import BanditInstance, ConfidenceSet
from banditlab.model_selection import alb_run, epoch_schedule, oracle_oful_regret, refine_norm_estimate


def half_e1(d):
    theta = np.zeros(d)
    theta[0] = 0.5
    return theta


def test_refine_examples():
    assert refine_norm_estimate(ConfidenceSet(np.array([3.0, 4.0]), np.eye(2), 1.0)) == pytest.approx(6.0)
    conf = ConfidenceSet(np.array([3.0, 4.0]), 4 * np.eye(2), 2.0)
    assert refine_norm_estimate(conf, mode="bound") == pytest.approx(6.0)
    conf = ConfidenceSet(np.array([3.0, 4.0]), np.diag([3.0, 1.0]), 0.0)
    assert refine_norm_estimate(conf, "exact") == pytest.approx(5.0)
    assert refine_norm_estimate(conf, "bound") == pytest.approx(5.0)
    with pytest.raises(ValueError):
        refine_norm_estimate(ConfidenceSet(np.zeros(2), np.diag([1.0, 0.0]), 1.0))
    with pytest.raises(ValueError):
        refine_norm_estimate(conf, "loose")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.0, 5.0))
def test_exact_never_exceeds_bound(seed, radius):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((3, 3))
    conf = ConfidenceSet(rng.standard_normal(3), b @ b.T + 0.05 * np.eye(3), radius)
    assert refine_norm_estimate(conf, "exact") <= refine_norm_estimate(conf, "bound") + 1e-8


def test_epoch_schedule():
    s = epoch_schedule(100, 0.1, total_rounds=700)
    assert s.lengths == (100, 200, 400)
    np.testing.assert_allclose(s.deltas, [0.1, 0.05, 0.025])
    assert not s.truncated and s.total == 700
    s = epoch_schedule(100, 0.1, total_rounds=500)
    assert s.lengths == (100, 200, 200) and s.truncated
    s = epoch_schedule(64, 0.2, n_epochs=6)
    for i in range(5):
        assert s.lengths[i + 1] == 2 * s.lengths[i]
        assert s.deltas[i + 1] == s.deltas[i] / 2
    with pytest.raises(ValueError):
        epoch_schedule(100, 0.1)
    with pytest.raises(ValueError):
        epoch_schedule(0, 0.1, total_rounds=10)


@pytest.mark.parametrize("d", [2, 3])
def test_alb_noiseless_converges(d):
    rep = alb_run(BanditInstance(half_e1(d), 0.0, asp.UnitSphere(d)), 10.0, 256, 0.1, None,
                  np.random.default_rng(0), n_epochs=4)
    b = np.array(rep.b_sequence)
    assert b[0] == 10.0
    assert np.all(np.diff(b[1:]) < 0)
    assert np.all(b >= 0.5)
    assert abs(b[-1] - 0.5) < 0.2


def test_alb_with_true_bound_stays_above_truth():
    rep = alb_run(BanditInstance(half_e1(3), 0.0, asp.UnitSphere(3)), 0.5, 256, 0.1, None,
                  np.random.default_rng(0), n_epochs=4)
    b = np.array(rep.b_sequence)
    assert b[0] == 0.5
    assert np.all(b >= 0.5)
    assert np.all(np.diff(b[1:]) < 0)


def test_alb_truncated_epoch_and_csv(tmp_path):
    inst = BanditInstance(half_e1(2), 1.0, asp.UnitSphere(2))
    rep = alb_run(inst, 10.0, 100, 0.1, 500, np.random.default_rng(1))
    assert len(rep.per_epoch_regret) == 3
    assert len(rep.b_sequence) == 3  # no refinement after the truncated epoch
    assert rep.cumulative_regret == pytest.approx(sum(rep.per_epoch_regret))
    lines = rep.to_csv(tmp_path / "alb.csv").read_text().splitlines()
    assert lines[0] == "epoch,n_i,delta_i,b_i,epoch_regret,cum_regret"
    assert len(lines) == 4
    assert lines[3].split(",")[:3] == ["3", "200", "0.025000000000000001"]


def test_alb_deterministic():
    inst = BanditInstance(half_e1(3), 1.0, asp.UnitSphere(3))
    a = alb_run(inst, 10.0, 64, 0.1, None, np.random.default_rng(3), n_epochs=3)
    b = alb_run(inst, 10.0, 64, 0.1, None, np.random.default_rng(3), n_epochs=3)
    assert a.b_sequence == b.b_sequence
    np.testing.assert_array_equal(a.theta_hat_final, b.theta_hat_final)


def test_alb_rate_shape_and_regret():
    inst = BanditInstance(half_e1(3), 1.0, asp.UnitSphere(3))
    runs, epochs = 8, 5
    gaps, alb_regret, oracle = [], [], []
    for r in range(runs):
        rep = alb_run(inst, 10.0, 256, 0.1, None, np.random.default_rng(r), n_epochs=epochs)
        gaps.append(np.array(rep.b_sequence) - 0.5)
        alb_regret.append(rep.cumulative_regret)
        oracle.append(oracle_oful_regret(inst, rep.schedule.total, 0.1, np.random.default_rng(r)))
    med = np.median(gaps, axis=0)
    assert np.mean(np.array(gaps)[:, 1:] >= 0) >= 0.95
    assert np.all(np.diff(med[1:]) < 0)
    # gap after epoch i (index i) against the epoch-1 gap scaled by 4 i / 2^(i/4)
    for i in range(4, epochs + 1):
        assert med[i] <= med[1] * 4 * i / 2 ** (i / 4)
    assert np.mean(alb_regret) <= 3 * np.mean(oracle)
