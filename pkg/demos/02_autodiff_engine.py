"""A tour of the tensor engine: forward ops, backward, Adam.

The engine is intentionally tiny: conv2d, linear, relu, sigmoid, the
stable BCE-with-logits, and a few glue ops, with reverse-mode autodiff
over an explicit compute graph. Everything here is verifiable against
finite differences.
"""

import numpy as np

from evoke.tensor import (
    Adam,
    Prng,
    Tensor,
    backward,
    bce_with_logits,
    kaiming_init,
    linear,
    relu,
    trace,
    tsum,
)

# --- backward basics
x = Tensor(np.array([2.0, -2.0]), requires_grad=True, dtype=np.float64)
loss = tsum(relu(x))
graph = backward(loss)
print("d sum(relu(x)) / dx at [2, -2]:", x.grad, "(relu subgradient at 0 is 0)")
print("graph nodes walked once each:", [n.op for n in graph])

# --- finite-difference spot check of the BCE loss
z = Tensor(np.array([[0.3, -1.2]]), requires_grad=True, dtype=np.float64)
t = Tensor(np.array([[1.0, 0.25]]), dtype=np.float64)
backward(bce_with_logits(z, t))
eps = 1e-6
fd = np.zeros((1, 2))
for j in range(2):
    zp, zm = z.data.copy(), z.data.copy()
    zp[0, j] += eps
    zm[0, j] -= eps
    fd[0, j] = (
        float(bce_with_logits(Tensor(zp, dtype=np.float64), t).data)
        - float(bce_with_logits(Tensor(zm, dtype=np.float64), t).data)
    ) / (2 * eps)
print("\nBCE gradient (autodiff):      ", np.round(z.grad, 8))
print("BCE gradient (central diff):  ", np.round(fd, 8))

# --- Adam on a toy least-squares-ish objective via BCE
rng = Prng(0)
features = Tensor(rng.derive("x").normal((64, 8), dtype=np.float32))
labels = Tensor((rng.derive("y").uniform(0, 1, (64, 2)) > 0.5).astype(np.float32))
weight = kaiming_init(rng.derive("w"), (2, 8), name="w")
bias = Tensor(np.zeros(2, dtype=np.float32), requires_grad=True, name="b")
opt = Adam([("w", weight), ("b", bias)], lr=1e-2)

print("\ntraining a 2-label linear probe with Adam:")
for step in range(60):
    loss = bce_with_logits(linear(features, weight, bias), labels)
    opt.zero_grad()
    backward(loss)
    opt.step()
    if step % 15 == 0 or step == 59:
        print(f"  step {step:3d}  loss {float(loss.data):.4f}")
