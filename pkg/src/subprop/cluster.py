"""Exemplar clusters within each layer.

Each layer is partitioned by picking exemplars greedily under a
facility-location score on dense within-layer similarities, then attaching
every segment to its most similar exemplar.
"""
from dataclasses import dataclass
import heapq
import json
import math

import numpy as np

from .pool import PoolError, dumps

DEFAULT_COARSE_THRESHOLD = 8


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """``cluster[k]`` is the within-layer cluster index of pool position ``k``."""

    layer: np.ndarray
    cluster: np.ndarray
    clusters_per_layer: tuple

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.clusters_per_layer)[:-1]]).astype(np.int64)

    @property
    def global_index(self):
        """Cluster index unique across layers, for flat per-cluster arrays."""
        return self.offsets[self.layer] + self.cluster

    @property
    def num_clusters(self):
        return int(sum(self.clusters_per_layer))

    def members(self, layer, t):
        return np.flatnonzero((self.layer == layer) & (self.cluster == t))


@dataclass(frozen=True)
class ClusterPolicy:
    coarse_threshold: int = DEFAULT_COARSE_THRESHOLD
    per_layer: tuple = None  # explicit T_l overrides the default rule

    def clusters_for(self, layer, size):
        if self.per_layer is not None:
            if len(self.per_layer) <= layer:
                raise PoolError(f"cluster policy lists {len(self.per_layer)} layers, need layer {layer}")
            t = self.per_layer[layer]
            if isinstance(t, bool) or not isinstance(t, int) or t < 1:
                raise PoolError(f"cluster policy: T for layer {layer} must be a positive integer, got {t!r}")
            return t
        if size <= self.coarse_threshold:
            return size
        return math.isqrt(size - 1) + 1  # ceil(sqrt(size))


def dense_layer_similarity(features, sigma):
    """Dense Gaussian similarity with unit diagonal, ignoring the edge predicate."""
    n = len(features)
    d2 = np.zeros((n, n))
    for col in features.T:
        diff = col[:, None] - col[None, :]
        d2 += diff * diff
    w = np.exp(-d2 / np.outer(sigma, sigma))
    np.fill_diagonal(w, 1.0)
    return w


def facility_location_score(sim, exemplars):
    if len(exemplars) == 0:
        return 0.0
    return float(sim[:, list(exemplars)].max(axis=1).sum())


def greedy_exemplars(sim, T):
    """Lazy greedy facility location; returns exemplar columns in pick order.

    Ties go to the lowest column index.  ``sim`` must be symmetric.
    """
    n = sim.shape[0]
    if not 1 <= T <= n:
        raise PoolError(f"cannot pick {T} exemplars from {n} segments")
    cover = np.zeros(n)

    def gain(k):
        return float(np.maximum(sim[k] - cover, 0.0).sum())

    heap = [(-gain(k), k, 0) for k in range(n)]
    heapq.heapify(heap)
    picked = []
    step = 0
    while len(picked) < T:
        neg, k, seen = heapq.heappop(heap)
        if seen == step:
            picked.append(k)
            cover = np.maximum(cover, sim[k])
            step += 1
            continue
        heapq.heappush(heap, (-gain(k), k, step))
    return picked


def cluster_layer(pool, graph, layer, T):
    """Partition one layer into ``T`` exemplar clusters.

    Returns ``(members, labels, exemplars)``: pool positions of the layer,
    their cluster index in ``[0, T)``, and the exemplar positions ordered by
    cluster index (cluster ``t`` is led by ``exemplars[t]``).
    """
    members = pool.layer_members(layer)
    if T > len(members):
        raise PoolError(f"layer {layer}: T={T} exceeds its {len(members)} segments")
    sim = dense_layer_similarity(pool.features[members], graph.local_scales[members])
    picked = sorted(greedy_exemplars(sim, T))
    # argmax returns the first maximum, i.e. the lowest exemplar column
    labels = np.argmax(sim[:, picked], axis=1)
    labels[picked] = np.arange(len(picked))
    return members, labels, members[picked]


def cluster_pool(pool, graph, policy=None):
    policy = policy or ClusterPolicy()
    cluster = np.zeros(len(pool), dtype=np.int64)
    counts = []
    for layer in range(pool.num_layers):
        size = len(pool.layer_members(layer))
        T = policy.clusters_for(layer, size)
        members, labels, _ = cluster_layer(pool, graph, layer, T)
        cluster[members] = labels
        counts.append(T)
    return ClusterAssignment(pool.layers.copy(), cluster, tuple(counts))


def assignment_to_dict(pool, assignment):
    return {
        "assignments": {
            str(int(sid)): [int(l), int(t)]
            for sid, l, t in zip(pool.ids, assignment.layer, assignment.cluster)
        },
        "clusters_per_layer": list(assignment.clusters_per_layer),
    }


def assignment_from_dict(pool, doc):
    """Read a cluster file; cluster indices may be arbitrary labels per layer."""
    raw = doc.get("assignments") if isinstance(doc, dict) else None
    if not isinstance(raw, dict):
        raise PoolError("cluster file: expected an 'assignments' object")
    layer = np.full(len(pool), -1, dtype=np.int64)
    label = np.full(len(pool), -1, dtype=np.int64)
    for key, value in raw.items():
        try:
            sid = int(key)
        except ValueError:
            raise PoolError(f"cluster file: bad segment id {key!r}") from None
        if sid not in pool.index_of:
            raise PoolError(f"cluster file: segment {sid} is not in the pool")
        k = pool.index_of[sid]
        if not isinstance(value, list) or len(value) != 2:
            raise PoolError(f"cluster file: segment {sid}: expected [layer, cluster]")
        if value[0] != pool.layers[k]:
            raise PoolError(f"cluster file: segment {sid}: layer {value[0]} != pool layer {pool.layers[k]}")
        layer[k], label[k] = value
    missing = np.flatnonzero(label < 0)
    if len(missing):
        raise PoolError(f"cluster file: segment {int(pool.ids[missing[0]])} has no cluster")
    # relabel to dense 0..T_l-1 per layer, keeping the order of the given labels
    cluster = np.zeros(len(pool), dtype=np.int64)
    counts = []
    for l in range(pool.num_layers):
        members = np.flatnonzero(layer == l)
        uniq, inverse = np.unique(label[members], return_inverse=True)
        cluster[members] = inverse
        counts.append(len(uniq))
    return ClusterAssignment(layer, cluster, tuple(counts))


def save_assignment(pool, assignment, path, meta=None):
    doc = assignment_to_dict(pool, assignment)
    if meta is not None:
        doc["meta"] = meta
    with open(path, "w") as fh:
        fh.write(dumps(doc))


def load_assignment(pool, path):
    with open(path) as fh:
        return assignment_from_dict(pool, json.load(fh))
