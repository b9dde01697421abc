"""Look inside a trained model: which relations does it actually use?

forward(collect=True) returns per-edge attention and the relation-fusion
records. Fusion coefficients tell you, per node type and layer, how much
each relation contributed; the mix value says how far the model leans on
its global (dataset-wide) relation weighting versus per-node scores.
"""
import numpy as np

import duograph as dg
from duograph.graph import NodeType

graph, tasks = dg.generate(dg.SynthConfig(n_papers=150, n_authors=70, seed=2))
pv = [t for t in tasks if t.name == "pv"]
config = dg.ModelConfig(input_dim=graph.feature_dim, hidden_dim=12,
                        num_layers=2, dropout=0.1, epochs=80, lr_max=5e-3,
                        seed=2)
ps, _ = dg.train(graph, pv, config)

_, records = dg.forward(graph, config, ps, collect=True)

print("relation mixture per (layer, node type, stage):")
for rec in records.fusion:
    live = rec.mask.any(axis=1)
    mean_coeff = rec.coeff[live].mean(axis=0)
    parts = ", ".join(f"{r}={c:.2f}" for r, c in zip(rec.relations, mean_coeff))
    mix = f" mix={rec.mix:.2f}" if rec.mix is not None else ""
    print(f"  layer {rec.layer} {rec.target_type.label} {rec.stage:5s}{mix}  {parts}")

# per-edge attention is available too; summarize how peaked it is
print("\nattention concentration (max weight per target, averaged):")
for rec in records.attention:
    if rec.alpha.size == 0:
        continue
    starts = rec.offsets[:-1]
    peak = np.maximum.reduceat(rec.alpha, starts).mean()
    print(f"  layer {rec.layer} {rec.stage:5s} {rec.relation:18s} "
          f"-> {rec.target_type.label}: {peak:.3f}")
