"""Random selection problems shared by the test modules."""
import numpy as np

from subprop.cluster import ClusterPolicy, cluster_pool
from subprop.pool import RegionMask, Segment, SegmentPool
from subprop.simgraph import build_graph


def random_mask(rng, width, height):
    x0, x1 = sorted(rng.choice(width + 1, size=2, replace=False))
    y0, y1 = sorted(rng.choice(height + 1, size=2, replace=False))
    return RegionMask.from_rect(width, height, x0, y0, x1, y1)


def random_pool(seed, n, num_layers, grid=(12, 12), feature_dim=4):
    rng = np.random.default_rng(seed)
    layers = rng.permutation(np.arange(n) % num_layers)
    features = rng.normal(size=(n, feature_dim))
    if n > 3:
        features[1] = features[0]  # duplicate features exercise the sigma floor
    rewards = rng.uniform(0, 1, size=n)
    rewards[rng.random(n) < 0.1] = 0.0
    ids = rng.choice(10 * n, size=n, replace=False)
    segments = tuple(sorted(
        (Segment(int(ids[k]), int(layers[k]), features[k], float(rewards[k]), random_mask(rng, *grid))
         for k in range(n)), key=lambda s: s.id))
    return SegmentPool(segments, num_layers, feature_dim, grid)


def random_problem(seed, n, num_layers, grid=(12, 12)):
    """Pool, graph and a random-size clustering of every layer."""
    pool = random_pool(seed, n, num_layers, grid)
    graph = build_graph(pool, M=min(7, n - 1))
    rng = np.random.default_rng(seed + 10_000)
    sizes = [len(pool.layer_members(l)) for l in range(num_layers)]
    policy = ClusterPolicy(per_layer=tuple(int(rng.integers(1, s + 1)) for s in sizes))
    return pool, graph, cluster_pool(pool, graph, policy)


def fixture_config(**overrides):
    """The seed-0 evaluation fixture used for pinned metric snapshots."""
    from subprop.synth import SynthConfig

    base = dict(seed=0, grid=(64, 64), num_objects=4, num_layers=4, parts_per_object=2,
                background_tiles=24, reward_noise_std=0.1, feature_noise_std=0.02)
    base.update(overrides)
    return SynthConfig(**base)


def large_fixture_config():
    """The seed-0 pool of 505 segments used for the lazy-speedup check."""
    from subprop.synth import SynthConfig

    return SynthConfig(seed=0, grid=(128, 128), num_objects=8, num_layers=4, parts_per_object=3,
                       background_tiles=215, reward_noise_std=0.1, feature_noise_std=0.02)
