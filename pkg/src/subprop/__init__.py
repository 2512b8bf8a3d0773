"""Submodular ranking of multi-layer segment pools into object proposals."""
from .pool import (GroundTruth, GroundTruthObject, PoolError, RegionMask, Segment, SegmentPool,
                   load_ground_truth, load_pool, mask_area, mask_intersection_area,
                   save_ground_truth, save_pool)
from .simgraph import SimilarityGraph, build_edges, build_graph, local_scale, local_scales
from .cluster import ClusterAssignment, ClusterPolicy, cluster_layer, cluster_pool
from .objective import Objective, ObjectiveParams, ScratchObjective, SelectionError, SelectionState
from .greedy import SelectionResult, brute_force, greedy_lazy, greedy_naive
from .evaluate import Metrics, budget_curve, jaccard, score_selection
from .synth import SynthConfig, generate

__version__ = "0.1.0"
