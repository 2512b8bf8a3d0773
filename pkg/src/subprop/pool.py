"""Segment pools, run-length region masks and ground truth files.

A pool holds every segment of one image across all layers of a
hierarchical segmentation.  Masks are run-length encoded over a row-major
``width x height`` grid as sorted, non-overlapping ``(start, length)`` runs.
"""
from dataclasses import dataclass, field
from functools import cached_property
import json
import math

import numpy as np


class PoolError(ValueError):
    """Raised when a pool or ground-truth document fails validation."""


@dataclass(frozen=True, eq=False)
class RegionMask:
    width: int
    height: int
    runs: np.ndarray  # (k, 2) int64, columns start and length

    def __post_init__(self):
        runs = np.asarray(self.runs, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "runs", runs)

    @property
    def grid(self):
        return (self.width, self.height)

    @property
    def area(self):
        return int(self.runs[:, 1].sum())

    def __eq__(self, other):
        if not isinstance(other, RegionMask):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.runs, other.runs)

    __hash__ = None

    def __repr__(self):
        return f"RegionMask({self.width}x{self.height}, runs={self.runs.tolist()})"

    def cells(self):
        """Flat row-major indices of every cell in the mask, ascending."""
        if len(self.runs) == 0:
            return np.empty(0, dtype=np.int64)
        starts, lengths = self.runs[:, 0], self.runs[:, 1]
        offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
        return offsets + np.arange(lengths.sum(), dtype=np.int64)

    def to_array(self):
        out = np.zeros(self.width * self.height, dtype=bool)
        out[self.cells()] = True
        return out.reshape(self.height, self.width)

    @classmethod
    def from_cells(cls, width, height, cells):
        cells = np.unique(np.asarray(cells, dtype=np.int64))
        if len(cells) == 0:
            return cls(width, height, np.empty((0, 2), dtype=np.int64))
        breaks = np.flatnonzero(np.diff(cells) != 1) + 1
        starts = cells[np.r_[0, breaks]]
        ends = cells[np.r_[breaks - 1, len(cells) - 1]] + 1
        return cls(width, height, np.column_stack([starts, ends - starts]))

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array, dtype=bool)
        height, width = array.shape
        return cls.from_cells(width, height, np.flatnonzero(array.ravel()))

    @classmethod
    def from_rect(cls, width, height, x0, y0, x1, y1):
        """Axis-aligned rectangle covering columns [x0, x1) and rows [y0, y1)."""
        rows = np.arange(y0, y1, dtype=np.int64)
        runs = np.column_stack([rows * width + x0, np.full(len(rows), x1 - x0)])
        return cls(width, height, runs)

    def to_json(self):
        return {"runs": self.runs.tolist()}


def mask_area(m):
    return m.area


def mask_intersection_area(a, b):
    """Number of cells shared by two masks, by a linear merge over their runs."""
    if a.grid != b.grid:
        raise PoolError(f"grid mismatch: {a.grid} vs {b.grid}")
    ra, rb = a.runs.tolist(), b.runs.tolist()
    i = j = total = 0
    while i < len(ra) and j < len(rb):
        sa, la = ra[i]
        sb, lb = rb[j]
        ea, eb = sa + la, sb + lb
        overlap = min(ea, eb) - max(sa, sb)
        if overlap > 0:
            total += overlap
        if ea <= eb:
            i += 1
        else:
            j += 1
    return total


@dataclass(frozen=True, eq=False)
class Segment:
    id: int
    layer: int
    feature: np.ndarray
    reward: float
    mask: RegionMask


@dataclass(frozen=True, eq=False)
class SegmentPool:
    """All segments of one image.  Segments are kept sorted by id."""

    segments: tuple
    num_layers: int
    feature_dim: int
    grid: tuple

    def __len__(self):
        return len(self.segments)

    @cached_property
    def ids(self):
        return np.array([s.id for s in self.segments], dtype=np.int64)

    @cached_property
    def layers(self):
        return np.array([s.layer for s in self.segments], dtype=np.int64)

    @cached_property
    def features(self):
        return np.array([s.feature for s in self.segments], dtype=np.float64).reshape(
            len(self.segments), self.feature_dim)

    @cached_property
    def rewards(self):
        return np.array([s.reward for s in self.segments], dtype=np.float64)

    @cached_property
    def index_of(self):
        return {int(s.id): k for k, s in enumerate(self.segments)}

    def layer_members(self, layer):
        return np.flatnonzero(self.layers == layer)


@dataclass(frozen=True)
class GroundTruthObject:
    instance: object
    label: str
    mask: RegionMask = field(compare=False)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    objects: tuple
    grid: tuple


# ---------------------------------------------------------------- validation

def _fail(where, fieldname, msg):
    raise PoolError(f"{where}: field '{fieldname}': {msg}")


def _as_int(value, where, fieldname, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(where, fieldname, f"expected integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(where, fieldname, f"must be >= {minimum}, got {value}")
    return value


def _parse_grid(doc, where):
    grid = doc.get("grid")
    if not isinstance(grid, list) or len(grid) != 2:
        _fail(where, "grid", "expected [width, height]")
    w = _as_int(grid[0], where, "grid", 1)
    h = _as_int(grid[1], where, "grid", 1)
    return w, h


def _parse_mask(obj, grid, where):
    if not isinstance(obj, dict) or not isinstance(obj.get("runs"), list):
        _fail(where, "mask", "expected {'runs': [[start, length], ...]}")
    runs = []
    for run in obj["runs"]:
        if not isinstance(run, list) or len(run) != 2:
            _fail(where, "mask", f"malformed run {run!r}")
        start = _as_int(run[0], where, "mask", 0)
        length = _as_int(run[1], where, "mask", 1)
        runs.append((start, length))
    if not runs:
        _fail(where, "mask", "mask is empty")
    runs.sort()
    ncells = grid[0] * grid[1]
    for (s0, l0), (s1, _) in zip(runs, runs[1:]):
        if s0 + l0 > s1:
            _fail(where, "mask", f"runs overlap at cell {s1}")
    last_start, last_len = runs[-1]
    if last_start + last_len > ncells:
        _fail(where, "mask", f"run ends at {last_start + last_len}, outside grid of {ncells} cells")
    return RegionMask(grid[0], grid[1], np.array(runs, dtype=np.int64))


def logistic(s):
    return 1.0 / (1.0 + math.exp(-s)) if s >= 0 else math.exp(s) / (1.0 + math.exp(s))


REWARD_TRANSFORMS = {"none": None, "logistic": logistic}


def pool_from_dict(doc, reward_transform="none"):
    if not isinstance(doc, dict):
        raise PoolError("pool document must be a JSON object")
    transform = REWARD_TRANSFORMS[reward_transform]
    grid = _parse_grid(doc, "pool")
    num_layers = _as_int(doc.get("num_layers"), "pool", "num_layers", 1)
    feature_dim = _as_int(doc.get("feature_dim"), "pool", "feature_dim", 1)
    raw = doc.get("segments")
    if not isinstance(raw, list) or not raw:
        _fail("pool", "segments", "expected a non-empty list")
    segments, seen = [], set()
    for k, item in enumerate(raw):
        if not isinstance(item, dict):
            _fail(f"segment #{k}", "segments", "expected an object")
        sid = _as_int(item.get("id"), f"segment #{k}", "id", 0)
        where = f"segment {sid}"
        if sid in seen:
            _fail(where, "id", "duplicate id")
        seen.add(sid)
        layer = _as_int(item.get("layer"), where, "layer", 0)
        if layer >= num_layers:
            _fail(where, "layer", f"must be < num_layers={num_layers}, got {layer}")
        feature = item.get("feature")
        if not isinstance(feature, list) or len(feature) != feature_dim:
            _fail(where, "feature", f"expected {feature_dim} numbers")
        try:
            feature = np.array(feature, dtype=np.float64)
        except (TypeError, ValueError):
            _fail(where, "feature", "non-numeric entry")
        if not np.all(np.isfinite(feature)):
            _fail(where, "feature", "non-finite entry")
        reward = item.get("reward")
        if isinstance(reward, bool) or not isinstance(reward, (int, float)) or not math.isfinite(reward):
            _fail(where, "reward", f"expected a finite number, got {reward!r}")
        reward = float(reward)
        if transform is not None:
            reward = transform(reward)
        if reward < 0:
            _fail(where, "reward", f"must be >= 0, got {reward}")
        mask = _parse_mask(item.get("mask"), grid, where)
        feature.flags.writeable = False
        segments.append(Segment(sid, layer, feature, reward, mask))
    counts = np.bincount([s.layer for s in segments], minlength=num_layers)
    for layer in np.flatnonzero(counts == 0):
        _fail("pool", "num_layers", f"layer {layer} has no segments")
    segments.sort(key=lambda s: s.id)
    return SegmentPool(tuple(segments), num_layers, feature_dim, grid)


def pool_to_dict(pool):
    return {
        "grid": list(pool.grid),
        "num_layers": pool.num_layers,
        "feature_dim": pool.feature_dim,
        "segments": [
            {
                "id": s.id,
                "layer": s.layer,
                "feature": [float(x) for x in s.feature],
                "reward": float(s.reward),
                "mask": s.mask.to_json(),
            }
            for s in sorted(pool.segments, key=lambda s: s.id)
        ],
    }


def gt_from_dict(doc, grid=None):
    if not isinstance(doc, dict):
        raise PoolError("ground-truth document must be a JSON object")
    gt_grid = _parse_grid(doc, "ground truth")
    if grid is not None and tuple(grid) != gt_grid:
        _fail("ground truth", "grid", f"{gt_grid} does not match pool grid {tuple(grid)}")
    raw = doc.get("objects")
    if not isinstance(raw, list) or not raw:
        _fail("ground truth", "objects", "expected a non-empty list")
    objects, seen = [], set()
    for k, item in enumerate(raw):
        if not isinstance(item, dict) or "instance" not in item:
            _fail(f"object #{k}", "instance", "missing")
        inst = item["instance"]
        if inst in seen:
            _fail(f"object {inst}", "instance", "duplicate instance id")
        seen.add(inst)
        label = item.get("class")
        if not isinstance(label, str):
            _fail(f"object {inst}", "class", "expected a string")
        objects.append(GroundTruthObject(inst, label, _parse_mask(item.get("mask"), gt_grid, f"object {inst}")))
    return GroundTruth(tuple(objects), gt_grid)


def gt_to_dict(gt):
    return {
        "grid": list(gt.grid),
        "objects": [
            {"instance": o.instance, "class": o.label, "mask": o.mask.to_json()}
            for o in gt.objects
        ],
    }


def dumps(doc):
    """Canonical JSON text: sorted keys, compact separators, trailing newline."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise PoolError(f"{path}: parse failure: {exc}") from None


def load_pool(path, reward_transform="none"):
    return pool_from_dict(_read_json(path), reward_transform)


def save_pool(pool, path, meta=None):
    doc = pool_to_dict(pool)
    if meta is not None:
        doc["meta"] = meta
    with open(path, "w") as fh:
        fh.write(dumps(doc))


def load_ground_truth(path, grid=None):
    return gt_from_dict(_read_json(path), grid)


def save_ground_truth(gt, path, meta=None):
    doc = gt_to_dict(gt)
    if meta is not None:
        doc["meta"] = meta
    with open(path, "w") as fh:
        fh.write(dumps(doc))
