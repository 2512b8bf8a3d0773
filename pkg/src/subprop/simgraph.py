"""Sparse similarity graph over a segment pool.

Segments are joined when they overlap (different layers) or adjoin (same
layer).  Edge weights are Gaussian in feature distance with self-tuning
local scales: ``w_ij = exp(-d(x_i, x_j)**2 / (sigma_i * sigma_j))`` where
``sigma_i`` is the distance from segment ``i`` to its M'th nearest neighbour
in feature space.

Vertices are pool positions (``pool.segments[k]``), not segment ids.
"""
from dataclasses import dataclass
import hashlib
import json

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .pool import PoolError, dumps

SIGMA_FLOOR = 1e-9
DEFAULT_M = 7
DEFAULT_DILATION = 1


@dataclass(frozen=True, eq=False)
class SimilarityGraph:
    """Symmetric CSR adjacency with sorted column indices and no diagonal."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    local_scales: np.ndarray

    def neighbors(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def degree(self, i):
        return int(self.indptr[i + 1] - self.indptr[i])

    @property
    def num_edges(self):
        return len(self.indices) // 2

    def edge_list(self):
        """Unordered edges as (i, j, w) with i < j, sorted."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows < self.indices
        return rows[keep], self.indices[keep], self.weights[keep]

    def to_dense(self):
        out = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        out[rows, self.indices] = self.weights
        return out


def _incidence(pool):
    """Sparse (segments x cells) 0/1 matrix."""
    w, h = pool.grid
    cells = [s.mask.cells() for s in pool.segments]
    rows = np.repeat(np.arange(len(cells)), [len(c) for c in cells])
    cols = np.concatenate(cells)
    data = np.ones(len(cols), dtype=np.int32)
    return sp.csr_matrix((data, (rows, cols)), shape=(len(cells), w * h))


def _grid_ball(width, height, radius):
    """(cells x cells) 0/1 matrix of 4-connected (Manhattan) distance <= radius."""
    n = width * height
    idx = np.arange(n, dtype=np.int64)
    x, y = idx % width, idx // width
    rows, cols = [], []
    for dy in range(-radius, radius + 1):
        span = radius - abs(dy)
        for dx in range(-span, span + 1):
            ok = (x + dx >= 0) & (x + dx < width) & (y + dy >= 0) & (y + dy < height)
            rows.append(idx[ok])
            cols.append(idx[ok] + dy * width + dx)
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    return sp.csr_matrix((np.ones(len(rows), dtype=np.int32), (rows, cols)), shape=(n, n))


def build_edges(pool, adjacency_dilation=DEFAULT_DILATION):
    """Return unordered edges as two aligned index arrays ``(i, j)`` with ``i < j``.

    Different-layer pairs are joined when their masks share a cell.
    Same-layer pairs are joined when both masks, each dilated by
    ``adjacency_dilation`` cells in 4-connectivity, share a cell.
    """
    if adjacency_dilation < 0:
        raise ValueError("adjacency_dilation must be >= 0")
    inc = _incidence(pool)
    layers = pool.layers

    overlap = (inc @ inc.T).tocoo()
    keep = (overlap.row < overlap.col) & (layers[overlap.row] != layers[overlap.col])
    pairs = [np.column_stack([overlap.row[keep], overlap.col[keep]])]

    if adjacency_dilation > 0:
        dil = inc @ _grid_ball(*pool.grid, adjacency_dilation)
        dil.data[:] = 1
    else:
        dil = inc
    for layer in range(pool.num_layers):
        members = pool.layer_members(layer)
        block = dil[members]
        touch = (block @ block.T).tocoo()
        keep = touch.row < touch.col
        pairs.append(np.column_stack([members[touch.row[keep]], members[touch.col[keep]]]))

    pairs = np.concatenate(pairs).astype(np.int64)
    if len(pairs) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    pairs = np.unique(pairs, axis=0)
    return pairs[:, 0], pairs[:, 1]


def local_scales(features, M=DEFAULT_M):
    """Distance from each row to its M'th nearest other row (Euclidean)."""
    features = np.asarray(features, dtype=np.float64)
    n = len(features)
    if M < 1:
        raise ValueError("M must be >= 1")
    if M >= n:
        raise PoolError(f"M={M} needs at least {M + 1} segments, pool has {n}; lower M")
    tree = cKDTree(features)
    # k = M + 1 counts the query point itself, which sits at distance 0
    _, nbr = tree.query(features, k=M + 1)
    far = nbr[:, M]
    sigma = np.sqrt(((features - features[far]) ** 2).sum(axis=1))
    return np.where(sigma > 0, sigma, SIGMA_FLOOR)


def local_scale(pool, i, M=DEFAULT_M):
    """Local scale of the segment with id ``i``."""
    n = len(pool)
    if M >= n:
        raise PoolError(f"M={M} needs at least {M + 1} segments, pool has {n}; lower M")
    k = pool.index_of[i]
    x = pool.features
    d = np.sort(np.sqrt(((x - x[k]) ** 2).sum(axis=1)))
    # d[0] is the segment's own zero distance
    return float(d[M]) if d[M] > 0 else SIGMA_FLOOR


def gaussian_weights(features, sigma, i, j):
    diff = features[i] - features[j]
    d2 = (diff * diff).sum(axis=-1)
    return np.exp(-d2 / (sigma[i] * sigma[j]))


def build_graph(pool, M=DEFAULT_M, adjacency_dilation=DEFAULT_DILATION):
    sigma = local_scales(pool.features, M)
    i, j = build_edges(pool, adjacency_dilation)
    w = gaussian_weights(pool.features, sigma, i, j)
    return _symmetric_graph(len(pool), i, j, w, sigma)


def _symmetric_graph(n, i, j, w, sigma):
    # each unordered pair is weighted once and mirrored, so w_ij == w_ji bitwise
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    vals = np.concatenate([w, w])
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return SimilarityGraph(n, indptr, cols.astype(np.int64), vals.astype(np.float64),
                           np.asarray(sigma, dtype=np.float64))


# ----------------------------------------------------------------- caching

def graph_cache_key(pool_bytes, M, adjacency_dilation):
    h = hashlib.sha256()
    h.update(pool_bytes)
    h.update(json.dumps({"M": M, "adjacency_dilation": adjacency_dilation}, sort_keys=True).encode())
    return h.hexdigest()


def graph_to_dict(graph, key=None):
    i, j, w = graph.edge_list()
    return {
        "key": key,
        "n": graph.n,
        "edges": [[int(a), int(b), float(c)] for a, b, c in zip(i, j, w)],
        "local_scales": [float(s) for s in graph.local_scales],
    }


def graph_from_dict(doc):
    edges = np.array(doc["edges"], dtype=np.float64).reshape(-1, 3)
    i = edges[:, 0].astype(np.int64)
    j = edges[:, 1].astype(np.int64)
    return _symmetric_graph(int(doc["n"]), i, j, edges[:, 2], np.array(doc["local_scales"]))


def save_graph(graph, path, key=None):
    with open(path, "w") as fh:
        fh.write(dumps(graph_to_dict(graph, key)))


def load_graph(path, key=None):
    """Load a cached graph; returns None when ``key`` is given and differs."""
    with open(path) as fh:
        doc = json.load(fh)
    if key is not None and doc.get("key") != key:
        return None
    return graph_from_dict(doc)
