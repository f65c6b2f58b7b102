import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditlab import actionspace as asp
from banditlab.bandit import BanditInstance, run_episode
from banditlab.clustering import (MultiAgentConfig, cluster_threshold, edge_cluster, partitions_equal,
                                  run_multi_agent_clustering, separation_condition)
from banditlab.policies import OFUL, PolicyConfig


def test_threshold_examples():
    expected = 4 / 10 * math.sqrt(2 * 2 * math.log(1e4 / 0.05) / (0.5 * math.log(2 / 0.05)))
    assert cluster_threshold(10_000, 2, 0.05, 0.5) == pytest.approx(expected, rel=1e-14)
    assert cluster_threshold(10_000, 2, 0.05, 0.5) == pytest.approx(2.0580, abs=1e-4)
    assert cluster_threshold(10 ** 30, 2, 0.05, 0.5) < 1e-5
    ratio = cluster_threshold(5000, 3, 0.1, 0.5) / cluster_threshold(5000, 3, 0.1, 1.0)
    assert ratio == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        cluster_threshold(100, 1, 1.0, 0.5)


def test_separation_condition_uses_same_threshold():
    adv = separation_condition(3.0, 10_000, 2, 0.05, 0.5)
    assert adv["eta"] == cluster_threshold(10_000, 2, 0.05, 0.5)
    assert adv["holds"] == (3.0 > 2 * adv["eta"])


def test_edge_cluster_examples():
    assert edge_cluster([[0, 0], [0.1, 0], [5, 5]], 0.5) == [[0, 1], [2]]
    assert edge_cluster([[0, 0], [0.4, 0], [0.8, 0]], 0.5) == [[0, 1, 2]]
    assert edge_cluster([[0, 0], [0.4, 0], [0.8, 0]], 0.0) == [[0], [1], [2]]
    assert edge_cluster([[1.0, 2.0]], 0.3) == [[0]]
    with pytest.raises(ValueError):
        edge_cluster([[0, 0]], -1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 12), st.floats(0.0, 3.0))
def test_edge_cluster_is_partition(seed, n, eta):
    est = np.random.default_rng(seed).standard_normal((n, 2))
    part = edge_cluster(est, eta)
    assert sorted(i for block in part for i in block) == list(range(n))
    assert [b[0] for b in part] == sorted(b[0] for b in part)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 4), st.integers(1, 4))
def test_planted_estimates_recover_truth(seed, k, per_cluster):
    # centres Delta apart, estimates within eta/2: no cross links, and each cluster is a clique
    rng = np.random.default_rng(seed)
    eta = 1.0
    delta = 2 * eta + 0.1
    centres = np.array([[delta * j, 0.0] for j in range(k)])
    labels = np.repeat(np.arange(k), per_cluster)
    offsets = rng.standard_normal((len(labels), 2))
    offsets *= (0.49 * eta * rng.uniform(size=len(labels)) / np.linalg.norm(offsets, axis=1))[:, None]
    est = centres[labels] + offsets
    truth = [list(np.flatnonzero(labels == j)) for j in range(k)]
    assert partitions_equal(edge_cluster(est, eta), truth)


def test_partitions_equal_up_to_relabelling():
    assert partitions_equal([[0, 1], [2]], [[2], [1, 0]])
    assert not partitions_equal([[0, 1], [2]], [[0], [1, 2]])


def test_config_validation():
    with pytest.raises(ValueError):
        MultiAgentConfig([[1.0, 0.0], [1.0, 0.0]], [0, 1], 100)
    with pytest.raises(ValueError):
        MultiAgentConfig([[1.0, 0.0]], [0, 1], 100)
    with pytest.raises(ValueError):
        MultiAgentConfig([[1.0, 0.0]], [0], 100, eta=-1.0)


def test_single_cluster_and_huge_eta():
    space = asp.UnitSphere(2)
    cfg = MultiAgentConfig([[0.8, 0.2]], [0, 0, 0, 0], 1024, eta=0.5)
    rep = run_multi_agent_clustering(cfg, space, 0.1, seed=0)
    assert rep.exact_recovery and rep.partition == [[0, 1, 2, 3]]
    cfg = MultiAgentConfig([[1.0, 0.0], [-1.0, 0.0]], [0, 1, 0, 1], 64, eta=100.0)
    assert run_multi_agent_clustering(cfg, space, 0.1, seed=0).partition == [[0, 1, 2, 3]]


def test_six_agents_two_clusters():
    cfg = MultiAgentConfig([[1.0, 0.0], [-1.0, 0.0]], [0, 0, 0, 1, 1, 1], 2048, eta=1.0)
    assert cfg.separation == 2.0
    rep = run_multi_agent_clustering(cfg, asp.UnitSphere(2), 0.1, seed=11)
    assert rep.exact_recovery
    assert np.max(np.linalg.norm(rep.estimates - cfg.cluster_params[cfg.assignment], axis=1)) < 0.5


def test_agent_equals_standalone_oful():
    params = np.array([[0.6, 0.3, 0.0], [-0.2, 0.5, 0.4]])
    cfg = MultiAgentConfig(params, [0, 1, 1], 300, eta=0.5, b=1.0)
    space = asp.UnitSphere(3)
    rep = run_multi_agent_clustering(cfg, space, 1.0, seed=40)
    for i, j in enumerate(cfg.assignment):
        traj = run_episode(OFUL(PolicyConfig(b=1.0)), BanditInstance(params[j], 1.0, space), 300,
                           np.random.default_rng(40 + i), checkpoints=[])
        assert rep.per_agent_regret[i] == traj.cumulative_regret[-1]
        np.testing.assert_array_equal(rep.estimates[i], traj.final_state.theta_hat)


def test_recovery_rate_monotone_in_n():
    params = np.array([[0.5, 0.0], [-0.5, 0.0]])
    rates = []
    for n in (32, 128, 512):
        cfg = MultiAgentConfig(params, [0, 0, 1, 1], n, eta=0.5)
        rates.append(np.mean([run_multi_agent_clustering(cfg, asp.UnitSphere(2), 1.0, 1000 * s).exact_recovery
                              for s in range(50)]))
    assert rates[0] <= rates[1] <= rates[2]


def test_report_csv(tmp_path):
    cfg = MultiAgentConfig([[1.0, 0.0], [-1.0, 0.0]], [0, 1], 50, eta=1.0)
    rep = run_multi_agent_clustering(cfg, asp.UnitSphere(2), 0.1, seed=0)
    lines = rep.to_csv(tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "agent,true_cluster,assigned_cluster,theta_hat0,theta_hat1,cum_regret"
    assert len(lines) == 4
    assert lines[-1].startswith("# partition: ")
