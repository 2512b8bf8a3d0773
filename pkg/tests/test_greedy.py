import json
import math

import numpy as np
import pytest

from subprop.cluster import cluster_pool
from subprop.greedy import BruteForceLimitError, brute_force, greedy_lazy, greedy_naive
from subprop.objective import Objective, ObjectiveParams, ScratchObjective
from subprop.simgraph import build_graph
from subprop.synth import SynthConfig, generate

from _instances import random_problem

BOUND = 1 - 1 / math.e


def check_result(result, pool, graph, clusters, params):
    assert len(result.order) == min(params.K, len(pool))
    assert len(set(result.order)) == len(result.order)
    assert all(b <= a + 1e-12 for a, b in zip(result.gains, result.gains[1:]))
    assert all(b >= a for a, b in zip(result.trace, result.trace[1:]))
    assert all(b > a for a, b, g in zip(result.trace, result.trace[1:], result.gains[1:]) if g > 1e-9)
    diffs = np.diff([0.0] + result.trace)
    assert np.allclose(diffs, result.gains, rtol=0, atol=1e-9)
    scratch = ScratchObjective(pool, graph, clusters, params)
    pos = [pool.index_of[i] for i in result.order]
    for k, value in enumerate(result.trace, start=1):
        assert value == pytest.approx(scratch.value(pos[:k]), abs=1e-12)


@pytest.mark.parametrize("seed", range(25))
def test_lazy_equals_naive(seed):
    rng = np.random.default_rng(seed)
    n, L, K = int(rng.integers(5, 120)), int(rng.integers(1, 5)), int(rng.integers(1, 11))
    pool, graph, clusters = random_problem(seed, n, L)
    params = ObjectiveParams(3.9, 2.0, K)
    lazy = greedy_lazy(pool, graph, clusters, params)
    naive = greedy_naive(pool, graph, clusters, params)
    assert lazy.order == naive.order
    assert lazy.gains == naive.gains
    assert lazy.evaluations <= naive.evaluations
    check_result(lazy, pool, graph, clusters, params)


def test_full_budget_is_a_permutation():
    pool, graph, clusters = random_problem(1, 12, 2)
    params = ObjectiveParams(K=12)
    for algo in (greedy_naive, greedy_lazy):
        r = algo(pool, graph, clusters, params)
        assert sorted(r.order) == sorted(pool.ids.tolist())
    over = greedy_lazy(pool, graph, clusters, ObjectiveParams(K=50))
    assert len(over.order) == 12


def test_first_pick_is_argmax_gain():
    pool, graph, clusters = random_problem(4, 40, 3)
    params = ObjectiveParams(K=1)
    state = Objective(pool, graph, clusters, params).state()
    gains = state.gains(np.arange(len(pool)))
    expected = int(pool.ids[np.argmax(gains)])
    assert greedy_lazy(pool, graph, clusters, params).order == [expected]
    assert greedy_naive(pool, graph, clusters, params).order == [expected]
    assert brute_force(pool, graph, clusters, params).order == [expected]


def test_reward_leaders_picked_first():
    # alpha = 0 and a huge beta: one dominant reward per layer wins in sqrt order
    pool, _ = generate(SynthConfig(seed=5, num_objects=3, num_layers=3, background_tiles=6))
    graph = build_graph(pool)
    clusters = cluster_pool(pool, graph)
    leaders = {}
    for k, (layer, r) in enumerate(zip(pool.layers, pool.rewards)):
        if layer not in leaders or r > pool.rewards[leaders[layer]]:
            leaders[layer] = k
    ranked = sorted(leaders.values(), key=lambda k: -pool.rewards[k])
    result = greedy_naive(pool, graph, clusters, ObjectiveParams(0.0, 1e6, 3))
    assert result.order == [int(pool.ids[k]) for k in ranked]


@pytest.mark.parametrize("seed", range(20))
def test_greedy_within_bound_of_oracle(seed):
    rng = np.random.default_rng(seed)
    n, L, K = int(rng.integers(5, 13)), int(rng.integers(1, 5)), int(rng.integers(1, 5))
    pool, graph, clusters = random_problem(seed + 500, n, L)
    params = ObjectiveParams(3.9, 2.0, K)
    opt = brute_force(pool, graph, clusters, params)
    g = greedy_lazy(pool, graph, clusters, params)
    assert opt.trace[0] >= g.trace[-1] - 1e-9
    assert g.trace[-1] >= BOUND * opt.trace[0] - 1e-9


def test_brute_force_full_set():
    pool, graph, clusters = random_problem(2, 8, 2)
    params = ObjectiveParams(K=8)
    opt = brute_force(pool, graph, clusters, params)
    scratch = ScratchObjective(pool, graph, clusters, params)
    assert sorted(opt.order) == sorted(pool.ids.tolist())
    assert opt.trace[0] == pytest.approx(scratch.value(range(8)), abs=1e-12)


def test_brute_force_guard():
    pool, graph, clusters = random_problem(2, 60, 2)
    with pytest.raises(BruteForceLimitError, match="smaller"):
        brute_force(pool, graph, clusters, ObjectiveParams(K=10))


def test_deterministic_serialisation():
    pool, graph, clusters = random_problem(9, 50, 3)
    params = ObjectiveParams(K=6)
    a = json.dumps(greedy_lazy(pool, graph, clusters, params).to_dict(), sort_keys=True)
    b = json.dumps(greedy_lazy(pool, graph, clusters, params).to_dict(), sort_keys=True)
    assert a == b
    doc = json.loads(a)
    assert set(doc) == {"algorithm", "order", "gains", "trace", "evaluations", "params"}
    assert doc["params"] == {"alpha": 3.9, "beta": 2.0, "K": 6}


def test_lazy_uses_fewer_evaluations_on_large_pool():
    pool, _ = generate(SynthConfig(seed=0, grid=(96, 96), num_objects=6, num_layers=4,
                                   parts_per_object=3, background_tiles=120,
                                   feature_noise_std=0.02, reward_noise_std=0.05))
    graph = build_graph(pool)
    clusters = cluster_pool(pool, graph)
    params = ObjectiveParams(K=20)
    lazy = greedy_lazy(pool, graph, clusters, params)
    naive = greedy_naive(pool, graph, clusters, params)
    assert lazy.order == naive.order
    assert lazy.evaluations < naive.evaluations
