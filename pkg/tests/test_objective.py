import math

import numpy as np
import pytest

from subprop.objective import (Objective, ObjectiveParams, ScratchObjective, SelectionError,
                               coverage_gain, diversity_gain, objective_gain, reward_gain)
from subprop.pool import RegionMask, Segment, SegmentPool
from subprop.cluster import ClusterAssignment
from subprop.simgraph import build_graph

from _instances import random_problem


class LoopOracle:
    """F from its definition with plain dicts and loops."""

    def __init__(self, pool, graph, clusters):
        self.n = len(pool)
        self.w = {}
        for i in range(self.n):
            nbr, wt = graph.neighbors(i)
            for j, v in zip(nbr.tolist(), wt.tolist()):
                self.w[i, j] = v
        self.layer = pool.layers.tolist()
        self.r = pool.rewards.tolist()
        self.cl = list(zip(clusters.layer.tolist(), clusters.cluster.tolist()))

    def weight(self, i, j):
        return 1.0 if i == j else self.w.get((i, j), 0.0)

    def H(self, A):
        return sum(max((self.weight(i, j) for j in A), default=0.0) for i in range(self.n))

    def D(self, A):
        total = 0.0
        for key in set(self.cl[j] for j in A):
            mass = 0.0
            for j in A:
                if self.cl[j] == key:
                    members = [i for i in range(self.n) if self.layer[i] == self.layer[j]]
                    mass += sum(self.weight(i, j) for i in members) / len(members)
            total += math.sqrt(mass)
        return total

    def R(self, A):
        total = 0.0
        for l in set(self.layer[j] for j in A):
            total += math.sqrt(sum(self.r[j] for j in A if self.layer[j] == l))
        return total

    def F(self, A, alpha, beta):
        return self.H(A) + alpha * self.D(A) + beta * self.R(A)


def tiny_problem(rewards=(0.81, 0.81, 0.81, 0.5), layers=(0, 0, 1, 1)):
    grid = (4, 4)
    masks = [RegionMask.from_rect(*grid, 0, 0, 2, 2), RegionMask.from_rect(*grid, 2, 0, 4, 2),
             RegionMask.from_rect(*grid, 0, 0, 1, 1), RegionMask.from_rect(*grid, 3, 3, 4, 4)]
    feats = np.array([[0.0], [0.5], [0.2], [3.0]])
    segs = tuple(Segment(k, layers[k], feats[k], rewards[k], masks[k]) for k in range(4))
    pool = SegmentPool(segs, max(layers) + 1, 1, grid)
    graph = build_graph(pool, M=1)
    clusters = ClusterAssignment(pool.layers, np.zeros(4, dtype=np.int64), (1,) * pool.num_layers)
    return pool, graph, clusters


def test_first_coverage_gain_is_self_plus_neighbours():
    pool, graph, clusters = tiny_problem()
    state = Objective(pool, graph, clusters).state()
    for a in range(4):
        assert coverage_gain(state, a) == pytest.approx(1.0 + graph.neighbors(a)[1].sum(), abs=1e-15)


def test_isolated_segment_gains_only_itself():
    pool, graph, clusters = tiny_problem()
    assert graph.degree(3) == 0  # the far corner touches nothing
    state = Objective(pool, graph, clusters).state()
    state.apply(0)
    assert coverage_gain(state, 3) == 1.0


def test_diversity_gain_first_in_cluster_and_positive_mass():
    pool, graph, clusters = tiny_problem()
    obj = Objective(pool, graph, clusters)
    assert np.all(obj.q > 0)
    state = obj.state()
    for a in range(4):
        assert diversity_gain(state, a) == pytest.approx(math.sqrt(obj.q[a]), rel=1e-15)


def test_reward_gain_examples():
    pool, graph, clusters = tiny_problem()
    state = Objective(pool, graph, clusters).state()
    assert reward_gain(state, 0) == pytest.approx(0.9, abs=1e-15)
    state.apply(0)
    same_layer, fresh_layer = reward_gain(state, 1), reward_gain(state, 2)
    assert fresh_layer > same_layer
    assert same_layer == pytest.approx(math.sqrt(1.62) - 0.9, abs=1e-15)


def test_zero_weights_reduce_to_coverage():
    pool, graph, clusters = tiny_problem()
    state = Objective(pool, graph, clusters, ObjectiveParams(0.0, 0.0, 4)).state()
    state.apply(1)
    for a in (0, 2, 3):
        assert objective_gain(state, a) == coverage_gain(state, a)


def test_errors():
    pool, graph, clusters = tiny_problem()
    state = Objective(pool, graph, clusters, ObjectiveParams(K=1)).state()
    state.apply(0)
    with pytest.raises(SelectionError, match="already selected"):
        state.gain(0)
    with pytest.raises(SelectionError, match="capacity"):
        state.apply(1)
    with pytest.raises(SelectionError):
        ObjectiveParams(alpha=-1.0)
    with pytest.raises(SelectionError):
        ObjectiveParams(K=0)


@pytest.mark.parametrize("seed", range(12))
def test_incremental_matches_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    n, L = int(rng.integers(5, 30)), int(rng.integers(1, 5))
    pool, graph, clusters = random_problem(seed, n, L)
    alpha, beta = 3.9, 2.0
    oracle = LoopOracle(pool, graph, clusters)
    scratch = ScratchObjective(pool, graph, clusters, ObjectiveParams(alpha, beta, n))
    state = Objective(pool, graph, clusters, ObjectiveParams(alpha, beta, n)).state()
    A = []
    for a in rng.permutation(n)[: min(n, 8)].tolist():
        cov, div, rew = state.coverage_gain(a), state.diversity_gain(a), state.reward_gain(a)
        gain = state.gain(a)
        before_cover = state.cover.copy()
        assert cov == pytest.approx(oracle.H(A + [a]) - oracle.H(A), abs=1e-12)
        assert div == pytest.approx(oracle.D(A + [a]) - oracle.D(A), abs=1e-12)
        assert rew == pytest.approx(oracle.R(A + [a]) - oracle.R(A), abs=1e-12)
        f_before = state.value()
        state.apply(a)
        A.append(a)
        assert np.all(state.cover >= before_cover)
        assert state.cover.sum() - before_cover.sum() == pytest.approx(cov, abs=1e-12)
        assert state.value() - f_before == pytest.approx(gain, abs=1e-12)
        assert state.value() == pytest.approx(oracle.F(A, alpha, beta), abs=1e-12)
        assert scratch.value(A) == pytest.approx(oracle.F(A, alpha, beta), abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_diminishing_returns_sampled(seed):
    rng = np.random.default_rng(seed)
    n, L = int(rng.integers(5, 40)), int(rng.integers(1, 5))
    pool, graph, clusters = random_problem(seed + 100, n, L)
    obj = Objective(pool, graph, clusters, ObjectiveParams(3.9, 2.0, n))
    for _ in range(50):
        perm = rng.permutation(n)
        b_size = int(rng.integers(0, n))
        a_size = int(rng.integers(0, b_size + 1))
        small, big = obj.state(), obj.state()
        for k in perm[:a_size]:
            small.apply(k)
        for k in perm[:b_size]:
            big.apply(k)
        a = int(perm[b_size])
        assert small.gain(a) >= big.gain(a) - 1e-9
        assert small.coverage_gain(a) >= big.coverage_gain(a) - 1e-9
        assert small.diversity_gain(a) >= big.diversity_gain(a) - 1e-9
        assert small.reward_gain(a) >= big.reward_gain(a) - 1e-9


def test_scratch_batch_values_match_single():
    pool, graph, clusters = random_problem(3, 15, 3)
    scratch = ScratchObjective(pool, graph, clusters)
    subsets = np.array([[0, 3, 5], [1, 2, 14], [4, 7, 9]])
    for row, value in zip(subsets, scratch.values(subsets)):
        assert value == pytest.approx(scratch.value(row.tolist()), abs=1e-12)
