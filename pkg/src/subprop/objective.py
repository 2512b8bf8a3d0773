"""The proposal-selection objective and its incremental evaluation.

    F(A) = H(A) + alpha * D(A) + beta * R(A)

    H(A) = sum_i max_{j in A} w_ij                          weighted coverage
    D(A) = sum_{t,l} sqrt( sum_{j in P_t^l & A} q_j )      single-layer diversity
    R(A) = sum_l sqrt( sum_{j in V^l & A} r_j )             multi-layer reward

with ``q_j = (1/|V^l|) * sum_{i in V^l} w_ij``.  Self-similarity is taken
as ``w_jj = 1``; all other weights come from the edge-masked graph and are
zero between non-adjacent segments.

:class:`SelectionState` caches ``cover[i] = max_{j in A} w_ij`` and the
per-cluster / per-layer partial sums, so a marginal gain costs ``O(deg(a))``.
:class:`ScratchObjective` recomputes F from a dense weight matrix and is
the reference the incremental path is checked against.
"""
from dataclasses import dataclass, asdict
import math

import numpy as np

DEFAULT_ALPHA = 3.9
DEFAULT_BETA = 2.0
DEFAULT_K = 100


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveParams:
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    K: int = DEFAULT_K

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise SelectionError(f"alpha must be a finite number >= 0, got {self.alpha}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise SelectionError(f"beta must be a finite number >= 0, got {self.beta}")
        if isinstance(self.K, bool) or not isinstance(self.K, int) or self.K < 1:
            raise SelectionError(f"K must be an integer >= 1, got {self.K!r}")

    def to_dict(self):
        return asdict(self)


def _sqrt(x):
    return np.sqrt(np.maximum(x, 0.0))


def diversity_mass(graph, layers):
    """q_j: self weight plus same-layer neighbour weights, over the layer size."""
    n = graph.n
    rows = np.repeat(np.arange(n), np.diff(graph.indptr))
    same = layers[rows] == layers[graph.indices]
    inner = np.bincount(rows[same], weights=graph.weights[same], minlength=n)
    sizes = np.bincount(layers)
    return (1.0 + inner) / sizes[layers]


class Objective:
    """Static data of one selection problem: graph, layers, rewards, clusters."""

    def __init__(self, pool, graph, clusters, params=None):
        self.params = params or ObjectiveParams()
        self.n = len(pool)
        self.ids = pool.ids
        self.layers = pool.layers
        self.num_layers = pool.num_layers
        self.rewards = pool.rewards
        self.indptr = graph.indptr
        self.indices = graph.indices
        self.weights = graph.weights
        self.cluster = clusters.global_index
        self.num_clusters = clusters.num_clusters
        if len(self.cluster) != self.n:
            raise SelectionError("cluster assignment does not cover the pool")
        self.q = diversity_mass(graph, self.layers)

    def state(self):
        return SelectionState(self)


class SelectionState:
    """Selected set plus the caches behind O(deg) marginal gains.

    Gains read a frozen state and may run concurrently; :meth:`apply`
    mutates and must not overlap any reader.
    """

    def __init__(self, objective):
        self.objective = objective
        self.selected = []
        self.is_selected = np.zeros(objective.n, dtype=bool)
        self.cover = np.zeros(objective.n)
        self.cluster_mass = np.zeros(objective.num_clusters)
        self.layer_reward = np.zeros(objective.num_layers)

    def copy(self):
        other = SelectionState.__new__(SelectionState)
        other.objective = self.objective
        other.selected = list(self.selected)
        other.is_selected = self.is_selected.copy()
        other.cover = self.cover.copy()
        other.cluster_mass = self.cluster_mass.copy()
        other.layer_reward = self.layer_reward.copy()
        return other

    # ------------------------------------------------------------- values

    def coverage_value(self):
        return float(self.cover.sum())

    def diversity_value(self):
        return float(_sqrt(self.cluster_mass).sum())

    def reward_value(self):
        return float(_sqrt(self.layer_reward).sum())

    def value(self):
        p = self.objective.params
        return self.coverage_value() + p.alpha * self.diversity_value() + p.beta * self.reward_value()

    # -------------------------------------------------------------- gains

    def _check(self, cands):
        cands = np.atleast_1d(np.asarray(cands, dtype=np.int64))
        if self.is_selected[cands].any():
            a = cands[self.is_selected[cands]][0]
            raise SelectionError(f"segment at position {a} is already selected")
        return cands

    def coverage_gains(self, cands):
        obj = self.objective
        cands = self._check(cands)
        starts = obj.indptr[cands]
        lens = obj.indptr[cands + 1] - starts
        total = int(lens.sum())
        pos = np.repeat(starts - (np.cumsum(lens) - lens), lens) + np.arange(total)
        terms = np.maximum(obj.weights[pos] - self.cover[obj.indices[pos]], 0.0)
        owner = np.repeat(np.arange(len(cands)), lens)
        nbr = np.bincount(owner, weights=terms, minlength=len(cands))
        return nbr + np.maximum(1.0 - self.cover[cands], 0.0)

    def diversity_gains(self, cands):
        obj = self.objective
        cands = self._check(cands)
        s = self.cluster_mass[obj.cluster[cands]]
        return _sqrt(s + obj.q[cands]) - _sqrt(s)

    def reward_gains(self, cands):
        obj = self.objective
        cands = self._check(cands)
        u = self.layer_reward[obj.layers[cands]]
        return _sqrt(u + obj.rewards[cands]) - _sqrt(u)

    def gains(self, cands):
        """Marginal gain of F for each candidate position."""
        p = self.objective.params
        return (self.coverage_gains(cands) + p.alpha * self.diversity_gains(cands)
                + p.beta * self.reward_gains(cands))

    def coverage_gain(self, a):
        return float(self.coverage_gains([a])[0])

    def diversity_gain(self, a):
        return float(self.diversity_gains([a])[0])

    def reward_gain(self, a):
        return float(self.reward_gains([a])[0])

    def gain(self, a):
        return float(self.gains([a])[0])

    # ------------------------------------------------------------- update

    def apply(self, a):
        obj = self.objective
        a = int(a)
        self._check([a])
        if len(self.selected) >= obj.params.K:
            raise SelectionError(f"capacity K={obj.params.K} reached")
        lo, hi = obj.indptr[a], obj.indptr[a + 1]
        nbr = obj.indices[lo:hi]
        self.cover[nbr] = np.maximum(self.cover[nbr], obj.weights[lo:hi])
        self.cover[a] = 1.0
        self.cluster_mass[obj.cluster[a]] += obj.q[a]
        self.layer_reward[obj.layers[a]] += obj.rewards[a]
        self.is_selected[a] = True
        self.selected.append(a)
        return self


# module-level spellings of the state methods
def coverage_value(state):
    return state.coverage_value()


def coverage_gain(state, a):
    return state.coverage_gain(a)


def diversity_value(state):
    return state.diversity_value()


def diversity_gain(state, a):
    return state.diversity_gain(a)


def reward_value(state):
    return state.reward_value()


def reward_gain(state, a):
    return state.reward_gain(a)


def objective_gain(state, a):
    return state.gain(a)


def apply(state, a):
    return state.apply(a)


class ScratchObjective:
    """Direct evaluation of H, D, R and F on arbitrary subsets.

    Builds the dense weight matrix (unit diagonal) once; every value is
    recomputed from the formulas with no incremental state.
    """

    def __init__(self, pool, graph, clusters, params=None):
        self.params = params or ObjectiveParams()
        self.n = len(pool)
        self.layers = pool.layers
        self.num_layers = pool.num_layers
        self.rewards = pool.rewards
        self.cluster = clusters.global_index
        self.num_clusters = clusters.num_clusters
        w = graph.to_dense()
        np.fill_diagonal(w, 1.0)
        self.w = w
        same = self.layers[:, None] == self.layers[None, :]
        sizes = np.bincount(self.layers, minlength=self.num_layers)
        self.q = (w * same).sum(axis=0) / sizes[self.layers]

    def coverage(self, subset):
        subset = list(subset)
        if not subset:
            return 0.0
        return float(self.w[:, subset].max(axis=1).sum())

    def diversity(self, subset):
        mass = np.zeros(self.num_clusters)
        for j in subset:
            mass[self.cluster[j]] += self.q[j]
        return float(np.sqrt(mass).sum())

    def reward(self, subset):
        mass = np.zeros(self.num_layers)
        for j in subset:
            mass[self.layers[j]] += self.rewards[j]
        return float(np.sqrt(mass).sum())

    def value(self, subset, alpha=None, beta=None):
        alpha = self.params.alpha if alpha is None else alpha
        beta = self.params.beta if beta is None else beta
        return self.coverage(subset) + alpha * self.diversity(subset) + beta * self.reward(subset)

    def values(self, subsets):
        """F for each row of an (m, k) integer array of subsets."""
        subsets = np.asarray(subsets, dtype=np.int64)
        m = len(subsets)
        if subsets.shape[1] == 0:
            return np.zeros(m)
        h = self.w[:, subsets].max(axis=2).sum(axis=0)
        rows = np.repeat(np.arange(m), subsets.shape[1])
        flat = subsets.ravel()
        cmass = np.zeros((m, self.num_clusters))
        np.add.at(cmass, (rows, self.cluster[flat]), self.q[flat])
        lmass = np.zeros((m, self.num_layers))
        np.add.at(lmass, (rows, self.layers[flat]), self.rewards[flat])
        p = self.params
        return h + p.alpha * np.sqrt(cmass).sum(axis=1) + p.beta * np.sqrt(lmass).sum(axis=1)
