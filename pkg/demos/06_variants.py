"""Mini ablation: compare model variants on one dataset.

Variants strip one mechanism each: no-dual folds both encoder stages into
one, no-hier replaces learned relation fusion with uniform averaging,
no-global drops the dataset-wide relation weighting. The CLI's `ablate`
subcommand runs this same comparison across seeds with worker pools.

At this toy scale the ordering between variants is noise - ablation
claims need the larger planted dataset and the 5-seed protocol in
tests/test_acceptance.py. This demo only shows the harness.
"""
import time

import numpy as np

import duograph as dg

graph, tasks = dg.generate(dg.SynthConfig(
    n_papers=200, n_authors=100, noise=2.0, venue_scale=2.0, field_scale=0.5,
    p_cite_within_field=0.0, seed=5))
cls_tasks = [t for t in tasks if t.name != "ad"]

rows = []
for variant in dg.VARIANTS:
    scores = []
    for seed in (0, 1, 2):
        config = dg.ModelConfig(input_dim=graph.feature_dim, hidden_dim=12,
                                num_layers=2, dropout=0.0, epochs=100,
                                lr_max=5e-3, seed=seed, variant=variant)
        t0 = time.time()
        _, result = dg.train(graph, cls_tasks, config)
        scores.append(result.best_val_ndcg)
    rows.append((variant, float(np.mean(scores)), float(np.std(scores)),
                 time.time() - t0))

print(f"{'variant':10s} {'val ndcg':>9s} {'std':>7s} {'s/run':>6s}")
for variant, mean, std, dt in rows:
    print(f"{variant:10s} {mean:9.4f} {std:7.4f} {dt:6.1f}")
