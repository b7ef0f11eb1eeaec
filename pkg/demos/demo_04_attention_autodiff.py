"""The attention block and the autodiff underneath it.

Everything trains through a small reverse-mode Tensor: build a loss,
call backward(), and compare one analytic gradient against a finite
difference.
"""

import numpy as np

from omnievent.autodiff import Tensor
from omnievent.blocks import BlockParams, encoder_block, grad_check, params_of

gen = np.random.default_rng(0)
p = BlockParams.from_rng(gen, channels=16, n_heads=4)
x = Tensor(np.random.default_rng(1).normal(size=(64, 16)))

y = encoder_block(x, p)
print(f"encoder block: {x.shape} -> {y.shape} "
      f"({sum(t.data.size for t in params_of(p))} parameters)")

loss = (y * y).mean()
loss.backward()
g = p.qkv.weight.grad
print(f"d loss / d qkv.weight: shape {g.shape}, |g|_max {np.abs(g).max():.3e}")

# central differences agree with the backward pass
small = BlockParams.from_rng(np.random.default_rng(2), channels=4, n_heads=2)
xs = Tensor(np.random.default_rng(3).normal(size=(8, 4)))


def small_loss():
    out = encoder_block(xs, small)
    return (out * out).mean()


err = grad_check(small_loss, params_of(small), eps=1e-5)
print(f"finite-difference check over every parameter: max rel err {err:.2e}")
assert err < 1e-4
