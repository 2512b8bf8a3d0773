"""Greedy maximisation of the selection objective under |A| <= K.

``greedy_naive`` re-scores every unselected segment at each step.
``greedy_lazy`` keeps stale gains in a max-heap and re-scores only the
top, which is valid because gains can only shrink as A grows.  Both break
ties toward the lowest segment id and return the same order.
``brute_force`` enumerates subsets and exists to check the other two.
"""
from dataclasses import dataclass, field
import heapq
import itertools
import math

import numpy as np

from .objective import Objective, ObjectiveParams, ScratchObjective, SelectionError

# stale heap keys are inflated by this much per elapsed step, so rounding
# noise in a re-scored gain can never let a wrong candidate through
STALE_EPS = 1e-12
BRUTE_FORCE_LIMIT = 10**6


class BruteForceLimitError(SelectionError):
    pass


@dataclass
class SelectionResult:
    algorithm: str
    order: list
    gains: list
    trace: list
    evaluations: int
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "order": [int(x) for x in self.order],
            "gains": [float(x) for x in self.gains],
            "trace": [float(x) for x in self.trace],
            "evaluations": int(self.evaluations),
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["algorithm"], list(doc["order"]), list(doc.get("gains", [])),
                   list(doc.get("trace", [])), int(doc.get("evaluations", 0)),
                   dict(doc.get("params", {})))


def _setup(pool, graph, clusters, params):
    params = params or ObjectiveParams()
    return Objective(pool, graph, clusters, params), min(params.K, len(pool)), params


def greedy_naive(pool, graph, clusters, params=None):
    objective, budget, params = _setup(pool, graph, clusters, params)
    state = objective.state()
    gains, trace, evaluations = [], [], 0
    for _ in range(budget):
        cands = np.flatnonzero(~state.is_selected)
        g = state.gains(cands)
        evaluations += len(cands)
        best = int(np.argmax(g))  # first maximum == lowest id
        state.apply(cands[best])
        gains.append(float(g[best]))
        trace.append(state.value())
    return SelectionResult("naive", objective.ids[state.selected].tolist(), gains, trace,
                           evaluations, params.to_dict())


def greedy_lazy(pool, graph, clusters, params=None):
    objective, budget, params = _setup(pool, graph, clusters, params)
    state = objective.state()
    n = objective.n
    first = state.gains(np.arange(n))
    evaluations = n
    # entries: (-(gain - eps*step), -gain, position, step)
    heap = [(-g, -g, k, 0) for k, g in enumerate(first.tolist())]
    heapq.heapify(heap)
    gains, trace = [], []
    step = 0
    while step < budget:
        _, neg_gain, k, seen = heapq.heappop(heap)
        if seen == step:
            state.apply(k)
            gains.append(-neg_gain)
            trace.append(state.value())
            step += 1
            continue
        g = state.gain(k)
        evaluations += 1
        heapq.heappush(heap, (-(g - STALE_EPS * step), -g, k, step))
    return SelectionResult("lazy", objective.ids[state.selected].tolist(), gains, trace,
                           evaluations, params.to_dict())


def brute_force(pool, graph, clusters, params=None, limit=BRUTE_FORCE_LIMIT, chunk=20000):
    """Exhaustive maximiser of F over all subsets of size 1..K."""
    params = params or ObjectiveParams()
    n = len(pool)
    budget = min(params.K, n)
    count = sum(math.comb(n, k) for k in range(1, budget + 1))
    if count > limit:
        raise BruteForceLimitError(
            f"brute force would evaluate {count} subsets (limit {limit}); use a smaller pool or K")
    scratch = ScratchObjective(pool, graph, clusters, params)
    best_val, best_set = -np.inf, None
    for k in range(1, budget + 1):
        for block in _combination_blocks(n, k, chunk):
            vals = scratch.values(block)
            i = int(np.argmax(vals))
            if vals[i] > best_val:
                best_val, best_set = float(vals[i]), block[i]
    order = pool.ids[np.sort(best_set)].tolist()
    return SelectionResult("oracle", order, [], [best_val], count, params.to_dict())


def _combination_blocks(n, k, chunk):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


ALGORITHMS = {"naive": greedy_naive, "lazy": greedy_lazy, "oracle": brute_force}
