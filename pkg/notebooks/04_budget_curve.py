"""
Recall as the budget grows
==========================

Sweep k over a fixed greedy order and print the recall curve and its
normalised area.
"""
from subprop import ObjectiveParams, build_graph, cluster_pool, generate, greedy_lazy
from subprop.evaluate import budget_curve, curve_csv
from subprop.synth import SynthConfig

pool, gt = generate(SynthConfig(seed=1, num_objects=5, num_layers=4, background_tiles=30,
                                reward_noise_std=0.05, feature_noise_std=0.02))
graph = build_graph(pool)
order = greedy_lazy(pool, graph, cluster_pool(pool, graph), ObjectiveParams(K=40)).order

rows, auc = budget_curve(order, pool, gt, 40, 5)
print(curve_csv(rows), end="")
print(f"area under the recall curve: {auc:.3f}")
