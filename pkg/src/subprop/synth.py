"""Seeded synthetic multi-layer segment pools with ground truth.

Objects are non-overlapping axis-aligned rectangles.  Each object has a
*home* layer where it appears exactly once as a whole segment; larger
objects live in coarser layers.  Coarser than home it is merged with a
margin of surrounding background, finer than home it is cut into strips.
Whatever an object layer leaves uncovered is background, tiled more
finely in finer layers, so every layer is a full partition of the grid.

All randomness comes from :class:`subprop.rng.SplitMix64`, so a config
always reproduces the same pool on any platform.
"""
from dataclasses import dataclass, asdict
import math

import numpy as np

from .pool import GroundTruth, GroundTruthObject, RegionMask, Segment, SegmentPool
from .rng import SplitMix64

PLACEMENT_RETRIES = 1000
FEATURE_DIM = 6


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    grid: tuple = (64, 64)
    num_objects: int = 3
    num_layers: int = 3
    parts_per_object: int = 2
    background_tiles: int = 16
    reward_noise_std: float = 0.0
    feature_noise_std: float = 0.0
    num_classes: int = 3

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        checks = [
            (len(self.grid) == 2 and min(self.grid) >= 1, "grid must be two positive integers"),
            (self.num_objects >= 1, "num_objects must be >= 1"),
            (self.num_layers >= 2, "num_layers must be >= 2"),
            (self.parts_per_object >= 1, "parts_per_object must be >= 1"),
            (self.background_tiles >= 1, "background_tiles must be >= 1"),
            (self.reward_noise_std >= 0, "reward_noise_std must be >= 0"),
            (self.feature_noise_std >= 0, "feature_noise_std must be >= 0"),
            (self.num_classes >= 1, "num_classes must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise SynthError(msg)

    def to_dict(self):
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d


def _margin(w, h):
    # expanded area is roughly twice the object area
    return max(1, round(0.21 * (w + h) / 2))


def _place(cfg, rng):
    width, height = cfg.grid
    min_side = max(4, max(2, cfg.parts_per_object) + cfg.num_layers)
    max_side = max(min_side, int(min(width, height) / (2 * math.sqrt(cfg.num_objects) + 1)))
    if min_side + 2 * _margin(min_side, min_side) > min(width, height):
        raise SynthError(f"grid {cfg.grid} too small for objects of side {min_side}")
    rects, expanded = [], []
    for i in range(cfg.num_objects):
        for _ in range(PLACEMENT_RETRIES):
            w = rng.randint(min_side, min(max_side, width - 1))
            h = rng.randint(min_side, min(max_side, height - 1))
            x0 = rng.randint(0, width - w)
            y0 = rng.randint(0, height - h)
            m = _margin(w, h)
            ex = (max(0, x0 - m), max(0, y0 - m), min(width, x0 + w + m), min(height, y0 + h + m))
            if all(ex[2] <= e[0] or e[2] <= ex[0] or ex[3] <= e[1] or e[3] <= ex[1] for e in expanded):
                rects.append((x0, y0, x0 + w, y0 + h))
                expanded.append(ex)
                break
        else:
            raise SynthError(f"could not place object {i} after {PLACEMENT_RETRIES} attempts")
    return rects, expanded


def _home_layers(rects, num_layers):
    areas = [(x1 - x0) * (y1 - y0) for x0, y0, x1, y1 in rects]
    order = sorted(range(len(rects)), key=lambda i: (-areas[i], i))
    home = [0] * len(rects)
    for rank, i in enumerate(order):
        home[i] = rank * num_layers // len(rects)
    return home


def _strips(rect, parts):
    x0, y0, x1, y1 = rect
    if x1 - x0 >= y1 - y0:
        cuts = np.linspace(x0, x1, parts + 1).astype(int)
        return [(cuts[k], y0, cuts[k + 1], y1) for k in range(parts)]
    cuts = np.linspace(y0, y1, parts + 1).astype(int)
    return [(x0, cuts[k], x1, cuts[k + 1]) for k in range(parts)]


def _layer_labels(cfg, layer, rects, expanded, home):
    """Label image of one layer and the source object of each label (-1 = background)."""
    width, height = cfg.grid
    labels = np.full((height, width), -1, dtype=np.int64)
    source = []
    for i, rect in enumerate(rects):
        if layer < home[i]:
            pieces = [expanded[i]]
        elif layer == home[i]:
            pieces = [rect]
        else:
            pieces = _strips(rect, max(2, cfg.parts_per_object) + layer - home[i] - 1)
        for x0, y0, x1, y1 in pieces:
            labels[y0:y1, x0:x1] = len(source)
            source.append(i)
    tiles = round(1 + (cfg.background_tiles - 1) * layer / (cfg.num_layers - 1))
    tx = min(width, math.isqrt(tiles - 1) + 1)
    ty = min(height, -(-tiles // tx))
    xcut = np.searchsorted(np.linspace(0, width, tx + 1)[1:-1], np.arange(width), side="right")
    ycut = np.searchsorted(np.linspace(0, height, ty + 1)[1:-1], np.arange(height), side="right")
    tile = ycut[:, None] * tx + xcut[None, :]
    bg = labels < 0
    used, dense = np.unique(tile[bg], return_inverse=True)
    labels[bg] = len(source) + dense
    source.extend([-1] * len(used))
    return labels, source


def _runs_by_label(labels, count):
    flat = labels.ravel()
    starts = np.r_[0, np.flatnonzero(np.diff(flat)) + 1]
    lengths = np.diff(np.r_[starts, len(flat)])
    owner = flat[starts]
    order = np.argsort(owner, kind="stable")
    split = np.searchsorted(owner[order], np.arange(1, count))
    runs = np.column_stack([starts[order], lengths[order]])
    return np.split(runs, split)


def generate(cfg):
    """Return ``(SegmentPool, GroundTruth)`` for a config."""
    rng = SplitMix64(cfg.seed)
    width, height = cfg.grid
    rects, expanded = _place(cfg, rng)
    home = _home_layers(rects, cfg.num_layers)
    colors = [[rng.random() for _ in range(3)] for _ in rects]
    background_color = [rng.random() for _ in range(3)]
    classes = [f"class{rng.randint(0, cfg.num_classes - 1)}" for _ in rects]

    object_labels = np.full((height, width), -1, dtype=np.int64)
    for i, (x0, y0, x1, y1) in enumerate(rects):
        object_labels[y0:y1, x0:x1] = i
    object_area = np.bincount(object_labels[object_labels >= 0], minlength=len(rects))
    ys, xs = np.mgrid[0:height, 0:width]

    segments = []
    for layer in range(cfg.num_layers):
        labels, source = _layer_labels(cfg, layer, rects, expanded, home)
        count = len(source)
        area = np.bincount(labels.ravel(), minlength=count)
        cx = np.bincount(labels.ravel(), weights=(xs.ravel() + 0.5), minlength=count) / area / width
        cy = np.bincount(labels.ravel(), weights=(ys.ravel() + 0.5), minlength=count) / area / height
        on_obj = object_labels.ravel() >= 0
        inter = np.zeros((count, len(rects)))
        np.add.at(inter, (labels.ravel()[on_obj], object_labels.ravel()[on_obj]), 1.0)
        iou = inter / (area[:, None] + object_area[None, :] - inter)
        best = iou.max(axis=1)
        for k, runs in enumerate(_runs_by_label(labels, count)):
            color = colors[source[k]] if source[k] >= 0 else background_color
            base = [cx[k], cy[k], math.sqrt(area[k] / (width * height))] + color
            feature = np.array([v + rng.normal(0.0, cfg.feature_noise_std) for v in base])
            reward = min(1.0, max(0.0, best[k] + rng.normal(0.0, cfg.reward_noise_std)))
            segments.append(Segment(len(segments), layer, feature, float(reward),
                                    RegionMask(width, height, runs)))

    pool = SegmentPool(tuple(segments), cfg.num_layers, FEATURE_DIM, (width, height))
    gt = GroundTruth(tuple(
        GroundTruthObject(i, classes[i], RegionMask.from_rect(width, height, *rect))
        for i, rect in enumerate(rects)), (width, height))
    return pool, gt
