"""Dense building blocks: embedding, patch self-attention, MLP, grad check.

Parameters live in small dataclasses of autodiff Tensors; every container
yields ``(name, tensor)`` pairs for checkpointing and optimizers.  Blocks
are pre-norm residual: ``x + Attn(LN(x))`` then ``x + MLP(LN(x))``.  No
positional encoding — coordinates enter through the embedded features,
order through patch membership.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    check_finite,
    layer_norm,
    linear,
    parameter,
    softmax,
)
from .errors import ParameterError


def glorot(gen, fan_in, fan_out, shape=None, dtype=np.float64):
    """uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return gen.uniform(-a, a, size=shape if shape else (fan_in, fan_out)).astype(dtype)


@dataclass
class LinearParams:
    weight: Tensor  # (in, out)
    bias: Tensor  # (out,)

    @classmethod
    def from_rng(cls, gen, n_in, n_out, dtype=np.float64):
        return cls(
            weight=parameter(glorot(gen, n_in, n_out, dtype=dtype)),
            bias=parameter(np.zeros(n_out, dtype=dtype)),
        )

    def named(self, prefix):
        yield f"{prefix}.weight", self.weight
        yield f"{prefix}.bias", self.bias

    def __call__(self, x):
        return linear(x, self.weight, self.bias)


@dataclass
class NormParams:
    gamma: Tensor
    beta: Tensor

    @classmethod
    def from_channels(cls, c, dtype=np.float64):
        return cls(
            gamma=parameter(np.ones(c, dtype=dtype)),
            beta=parameter(np.zeros(c, dtype=dtype)),
        )

    def named(self, prefix):
        yield f"{prefix}.gamma", self.gamma
        yield f"{prefix}.beta", self.beta

    def __call__(self, x):
        return layer_norm(x, self.gamma, self.beta)


@dataclass
class BlockParams:
    """One pre-norm self-attention block: LN, fused QKV, proj, LN, MLP."""

    norm1: NormParams
    qkv: LinearParams  # (C, 3C)
    proj: LinearParams  # (C, C)
    norm2: NormParams
    fc1: LinearParams  # (C, ratio*C)
    fc2: LinearParams  # (ratio*C, C)
    n_heads: int

    @classmethod
    def from_rng(cls, gen, channels, n_heads, mlp_ratio=4, dtype=np.float64):
        if channels % n_heads != 0:
            raise ParameterError(
                f"heads must divide channels, got {n_heads} and {channels}"
            )
        hidden = mlp_ratio * channels
        return cls(
            norm1=NormParams.from_channels(channels, dtype),
            qkv=LinearParams.from_rng(gen, channels, 3 * channels, dtype),
            proj=LinearParams.from_rng(gen, channels, channels, dtype),
            norm2=NormParams.from_channels(channels, dtype),
            fc1=LinearParams.from_rng(gen, channels, hidden, dtype),
            fc2=LinearParams.from_rng(gen, hidden, channels, dtype),
            n_heads=n_heads,
        )

    def named(self, prefix):
        yield from self.norm1.named(f"{prefix}.norm1")
        yield from self.qkv.named(f"{prefix}.qkv")
        yield from self.proj.named(f"{prefix}.proj")
        yield from self.norm2.named(f"{prefix}.norm2")
        yield from self.fc1.named(f"{prefix}.fc1")
        yield from self.fc2.named(f"{prefix}.fc2")


def params_of(container):
    """Flat tensor list from anything exposing ``named(prefix)``."""
    return [t for _, t in container.named("p")]


def embed(points, lin: LinearParams):
    """Per-point linear lift of the 5 input features to C0 channels."""
    x = points if isinstance(points, Tensor) else Tensor(np.asarray(points))
    if x.shape[-1] != lin.weight.shape[0]:
        raise ParameterError(
            f"embedding expects {lin.weight.shape[0]} input features, got {x.shape[-1]}"
        )
    return lin(x)


def attention(x, p: BlockParams):
    """Multi-head self-attention over an (n, C) patch."""
    n, c = x.shape
    d = c // p.n_heads
    qkv = p.qkv(x)  # (n, 3C)
    qkv = qkv.reshape(n, 3, p.n_heads, d).transpose(1, 2, 0, 3)  # (3, H, n, d)
    q, k, v = qkv[0], qkv[1], qkv[2]
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(d))  # (H, n, n)
    attn = softmax(scores, axis=-1)
    out = (attn @ v).transpose(1, 0, 2).reshape(n, c)
    return p.proj(out)


def mlp(x, p: BlockParams):
    return p.fc2(p.fc1(x).relu())


def encoder_block(x, p: BlockParams):
    """Pre-norm residual attention + MLP; shape-preserving."""
    check_finite(x)
    x = x + attention(p.norm1(x), p)
    return x + mlp(p.norm2(x), p)


def attention_rows(x, p: BlockParams):
    """The (H, n, n) softmax matrix, for diagnostics and tests."""
    n, c = x.shape
    d = c // p.n_heads
    qkv = p.qkv(x).reshape(n, 3, p.n_heads, d).transpose(1, 2, 0, 3)
    scores = (qkv[0] @ qkv[1].swapaxes(-1, -2)) * (1.0 / np.sqrt(d))
    return softmax(scores, axis=-1)


def grad_check(loss_fn, params, eps=1e-5):
    """Max relative error between reverse-mode and central differences.

    ``loss_fn`` must rebuild the graph on each call and return a scalar
    Tensor; ``params`` are the tensors to perturb (their ``.data`` is
    twiddled in place).  Keep it 64-bit and small — every parameter costs
    two forward passes.
    """
    total = sum(p.data.size for p in params)
    if total > 10_000:
        raise ParameterError(f"{total} parameters is too many for grad_check")
    for p in params:
        p.zero_grad()
    loss_fn().backward()
    analytic = [
        p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params
    ]
    worst = 0.0
    for p, ref in zip(params, analytic):
        flat = p.data.ravel()
        ref = ref.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = float(loss_fn().data)
            flat[i] = orig - eps
            lo = float(loss_fn().data)
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * eps)
            err = abs(ref[i] - numeric) / max(abs(ref[i]), abs(numeric), 1e-6)
            worst = max(worst, err)
    return worst
