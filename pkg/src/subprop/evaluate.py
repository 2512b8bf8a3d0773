"""Proposal quality against ground truth.

BSS (best segmentation overlap) of an object is the largest Jaccard index
between its mask and any of the first ``k`` proposals.  J_i averages BSS
over instances, J_c over the instances of each class, and recall@0.5 is
the fraction of objects whose BSS reaches one half.
"""
from dataclasses import dataclass, field
import io

import numpy as np

from .pool import PoolError, mask_intersection_area

RECALL_THRESHOLD = 0.5


def jaccard(a, b):
    inter = mask_intersection_area(a, b)
    union = a.area + b.area - inter
    if union == 0:
        raise PoolError("jaccard of two empty masks is undefined")
    return inter / union


@dataclass
class Metrics:
    budget: int
    per_object_bss: dict
    j_instance: float
    j_class: dict
    j_class_mean: float
    recall_at_half: float
    auc_budget: float = None
    budget_curve: list = field(default_factory=list)

    def to_dict(self):
        return {
            "budget": self.budget,
            "per_object_bss": {str(k): v for k, v in self.per_object_bss.items()},
            "j_instance": self.j_instance,
            "j_class": dict(self.j_class),
            "j_class_mean": self.j_class_mean,
            "recall_at_half": self.recall_at_half,
            "auc_budget": self.auc_budget,
            "budget_curve": [list(row) for row in self.budget_curve],
        }


def _proposal_masks(selection, pool):
    masks = []
    for sid in selection:
        k = pool.index_of.get(int(sid))
        if k is None:
            raise PoolError(f"selection names segment {sid}, which is not in the pool")
        masks.append(pool.segments[k].mask)
    return masks


def overlap_table(selection, pool, gt):
    """Jaccard of every (proposal, object) pair, shape (len(selection), #objects)."""
    masks = _proposal_masks(selection, pool)
    table = np.zeros((len(masks), len(gt.objects)))
    for i, m in enumerate(masks):
        for j, obj in enumerate(gt.objects):
            table[i, j] = jaccard(m, obj.mask)
    return table


def _metrics_from_bss(gt, bss, budget):
    per_object = {o.instance: float(b) for o, b in zip(gt.objects, bss)}
    by_class = {}
    for o, b in zip(gt.objects, bss):
        by_class.setdefault(o.label, []).append(float(b))
    j_class = {c: float(np.mean(v)) for c, v in sorted(by_class.items())}
    return Metrics(
        budget=budget,
        per_object_bss=per_object,
        j_instance=float(np.mean(bss)),
        j_class=j_class,
        j_class_mean=float(np.mean(list(j_class.values()))),
        recall_at_half=float(np.mean(bss >= RECALL_THRESHOLD)),
    )


def score_selection(selection, pool, gt, k=None):
    """Metrics of the first ``k`` proposals of an ordered selection."""
    k = len(selection) if k is None else k
    if k < 1:
        raise ValueError("budget k must be >= 1")
    if k > len(selection):
        raise ValueError(f"budget k={k} exceeds the {len(selection)} selected proposals")
    bss = overlap_table(selection[:k], pool, gt).max(axis=0)
    return _metrics_from_bss(gt, bss, k)


def budget_curve(selection, pool, gt, k_max=None, step=1):
    """Recall and J_i at k = step, 2*step, ..., k_max, plus the normalised area.

    Returns ``(rows, auc)`` with rows ``(k, recall_at_half, j_instance)``.
    The area is the trapezoid rule over recall against ``k / k_max``,
    divided by the width of the sampled range so it lies in [0, 1].
    """
    k_max = len(selection) if k_max is None else k_max
    if step < 1:
        raise ValueError("step must be >= 1")
    if k_max < 1 or k_max > len(selection):
        raise ValueError(f"k_max={k_max} must lie in [1, {len(selection)}]")
    table = overlap_table(selection[:k_max], pool, gt)
    running = np.maximum.accumulate(table, axis=0)
    ks = list(range(step, k_max + 1, step))
    if ks[-1] != k_max:
        ks.append(k_max)
    rows = []
    for k in ks:
        bss = running[k - 1]
        rows.append((k, float(np.mean(bss >= RECALL_THRESHOLD)), float(np.mean(bss))))
    x = np.array(ks, dtype=float) / k_max
    y = np.array([r[1] for r in rows])
    if len(x) == 1:
        auc = float(y[0])
    else:
        auc = float(np.sum((y[1:] + y[:-1]) * np.diff(x)) / 2.0 / (x[-1] - x[0]))
    return rows, auc


def curve_csv(rows):
    out = io.StringIO()
    out.write("k,recall_at_half,j_instance\n")
    for k, recall, ji in rows:
        out.write(f"{k},{recall!r},{ji!r}\n")
    return out.getvalue()
