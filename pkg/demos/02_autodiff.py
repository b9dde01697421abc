"""Tour of the reverse-mode tensor engine.

Ops executed inside a Tape context record themselves; backward() walks the
tape once in reverse and accumulates gradients. The engine is 2-D float64
only and deliberately small: matmul, elementwise math, segment reductions,
masked softmax, layer norm - the pieces attention needs and nothing else.
"""
import numpy as np

from duograph import ops
from duograph.tensor import Tape, Tensor, backward

# chain rule through leaky(x @ w), checked against central differences
rng = np.random.default_rng(0)
x = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
w = Tensor(rng.standard_normal((3, 2)), requires_grad=True)

with Tape() as tape:
    y = ops.sum_all(ops.leaky_relu(ops.matmul(x, w), slope=0.2))
backward(tape, y)

def loss_at(xv):
    z = xv @ w.data
    return float(np.where(z > 0, z, 0.2 * z).sum())

h = 1e-6
i, j = 2, 1
bumped = x.data.copy(); bumped[i, j] += h
dipped = x.data.copy(); dipped[i, j] -= h
fd = (loss_at(bumped) - loss_at(dipped)) / (2 * h)
print(f"analytic dy/dx[{i},{j}] = {x.grad[i, j]:.8f}, central difference = {fd:.8f}")

# segment softmax: the core of per-edge attention. Edge scores form a
# column grouped by target node via offsets; each group normalizes
# independently and gradients flow through the normalization.
scores = Tensor(np.array([[1.0], [2.0], [0.5], [3.0], [3.0]]), requires_grad=True)
offsets = np.array([0, 2, 5])  # node 0 owns edges 0:2, node 1 owns 2:5
with Tape() as tape:
    alpha = ops.segment_softmax(scores, offsets)
    sq = ops.sum_all(ops.mul(alpha, alpha))
print("alpha:", np.round(alpha.data[:, 0], 4))
print("per-node sums:", np.add.reduceat(alpha.data[:, 0], offsets[:-1]))
backward(tape, sq)
print("d sum(alpha^2) / d scores:", np.round(scores.grad[:, 0], 4))

# layer norm keeps zero mean and unit variance per row
z = Tensor(rng.standard_normal((2, 5)), requires_grad=True)
gain = Tensor(np.ones((1, 5)), requires_grad=True)
bias = Tensor(np.zeros((1, 5)), requires_grad=True)
with Tape() as tape:
    out = ops.layer_norm(z, gain, bias)
print("normalized row means:", np.round(out.data.mean(axis=1), 12))
print("normalized row stds: ", np.round(out.data.std(axis=1), 6))

# a tape refuses to run backward twice; gradients never double-count
try:
    backward(tape, ops.sum_all(out))
    backward(tape, ops.sum_all(out))
except Exception as err:
    print("second backward:", type(err).__name__)
