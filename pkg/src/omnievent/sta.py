"""Cross-branch attention fusion.

Couples the spatial and temporal branch features through repeated mutual
cross-attention, then fuses both with the joint branch and projects to
the output width.  All features at this stage are (B, C, N).

The cross-attention unit: 1-wide convolutions produce Q (from the
context operand) and K, V1 (from the enhanced operand), V2 (context);
``E = Q^T K / sqrt(C)`` is refined by two learned square maps along the
last axis with ReLUs, row-softmaxed into A, and the channel-concatenated
``[V2, V1]`` is mixed through A and projected back to C channels.  The
first square map is applied in the associativity-rearranged order
``Q^T (K W1)``, which is the same linear map at a fraction of the flops.

Sequence lengths of both operands must match; the unit is undefined
otherwise.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, concat, softmax
from .blocks import LinearParams
from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class StaConfig:
    channels: int = 64  # per-branch width C
    seq_len: int = 4096  # N, shared by both operands
    rounds: int = 4
    out_channels: int = 128

    def __post_init__(self):
        if self.channels < 1 or self.seq_len < 1 or self.rounds < 0:
            raise ParameterError("channels/seq_len must be >= 1, rounds >= 0")
        if self.out_channels != 2 * self.channels:
            raise ParameterError(
                f"out_channels must equal 2*channels, got {self.out_channels}"
            )


@dataclass
class CrossAttentionParams:
    q: LinearParams  # (C, C), applied to the context operand
    k: LinearParams  # (C, C)
    v1: LinearParams  # (C, C), enhanced operand values
    v2: LinearParams  # (C, C), context operand values
    fc1: LinearParams  # (N, N), first square map on E
    fc2: LinearParams  # (N, N)
    proj: LinearParams  # (2C, C)

    @classmethod
    def from_rng(cls, gen, c, n, dtype=np.float64):
        return cls(
            q=LinearParams.from_rng(gen, c, c, dtype),
            k=LinearParams.from_rng(gen, c, c, dtype),
            v1=LinearParams.from_rng(gen, c, c, dtype),
            v2=LinearParams.from_rng(gen, c, c, dtype),
            fc1=LinearParams.from_rng(gen, n, n, dtype),
            fc2=LinearParams.from_rng(gen, n, n, dtype),
            proj=LinearParams.from_rng(gen, 2 * c, c, dtype),
        )

    def named(self, prefix):
        for part in ("q", "k", "v1", "v2", "fc1", "fc2", "proj"):
            yield from getattr(self, part).named(f"{prefix}.{part}")


@dataclass
class StaParams:
    rounds: list  # [(s_unit, t_unit), ...] — unshared per round
    g_s: CrossAttentionParams
    g_t: CrossAttentionParams
    final1: LinearParams  # (2C, 4C)
    final2: LinearParams  # (4C, 2C)

    @classmethod
    def from_rng(cls, gen, cfg: StaConfig, dtype=np.float64):
        c, n = cfg.channels, cfg.seq_len
        return cls(
            rounds=[
                (
                    CrossAttentionParams.from_rng(gen, c, n, dtype),
                    CrossAttentionParams.from_rng(gen, c, n, dtype),
                )
                for _ in range(cfg.rounds)
            ],
            g_s=CrossAttentionParams.from_rng(gen, c, n, dtype),
            g_t=CrossAttentionParams.from_rng(gen, c, n, dtype),
            final1=LinearParams.from_rng(gen, 2 * c, 4 * c, dtype),
            final2=LinearParams.from_rng(gen, 4 * c, 2 * c, dtype),
        )

    def named(self, prefix="sta"):
        for r, (s_unit, t_unit) in enumerate(self.rounds):
            yield from s_unit.named(f"{prefix}.round{r}.s")
            yield from t_unit.named(f"{prefix}.round{r}.t")
        yield from self.g_s.named(f"{prefix}.gs")
        yield from self.g_t.named(f"{prefix}.gt")
        yield from self.final1.named(f"{prefix}.final1")
        yield from self.final2.named(f"{prefix}.final2")


def _as_bcn(f, name):
    t = f if isinstance(f, Tensor) else Tensor(np.asarray(f))
    if t.ndim != 3:
        raise ShapeError(f"{name} must be (B, C, N), got {t.shape}")
    return t


def cross_attention(f_x, f_y, p: CrossAttentionParams):
    """Enhance ``f_x`` with context ``f_y``; output (B, C, N_x)."""
    f_x = _as_bcn(f_x, "f_x")
    f_y = _as_bcn(f_y, "f_y")
    if f_x.shape != f_y.shape:
        raise ParameterError(
            f"operand shapes must match, got {f_x.shape} vs {f_y.shape}"
        )
    if f_x.shape[2] != p.fc1.weight.shape[0]:
        raise ShapeError(
            f"params built for N={p.fc1.weight.shape[0]}, input has N={f_x.shape[2]}"
        )
    c = f_x.shape[1]
    x_t = f_x.swapaxes(1, 2)  # (B, N, C)
    y_t = f_y.swapaxes(1, 2)
    q = p.q(y_t)
    k = p.k(x_t)
    v1 = p.v1(x_t)
    v2 = p.v2(y_t)
    # FC1 fused into the score product: (Q Kt / sqrt(C)) W1 == Q (Kt W1) / sqrt(C)
    kw = k.swapaxes(1, 2) @ p.fc1.weight  # (B, C, N) @ (N, N)
    h = ((q @ kw) * (1.0 / np.sqrt(c)) + p.fc1.bias).relu()  # (B, N_y, N_x)
    e2 = p.fc2(h).relu()
    a = softmax(e2, axis=-1)  # rows (per y position) sum to 1
    v_cat = concat([v2, v1], axis=-1).swapaxes(1, 2)  # (B, 2C, N_y)
    mixed = v_cat @ a  # (B, 2C, N_x)
    return p.proj(mixed.swapaxes(1, 2)).swapaxes(1, 2)  # (B, C, N_x)


def attention_map(f_x, f_y, p: CrossAttentionParams):
    """The row-stochastic A matrix, for tests and diagnostics."""
    f_x = _as_bcn(f_x, "f_x")
    f_y = _as_bcn(f_y, "f_y")
    c = f_x.shape[1]
    q = p.q(f_y.swapaxes(1, 2))
    kw = p.k(f_x.swapaxes(1, 2)).swapaxes(1, 2) @ p.fc1.weight
    h = ((q @ kw) * (1.0 / np.sqrt(c)) + p.fc1.bias).relu()
    return softmax(p.fc2(h).relu(), axis=-1)


def mutual_rounds(f_s, f_t, params: StaParams, rounds=None):
    """Alternating residual enhancement; the T update sees the fresh S."""
    f_s = _as_bcn(f_s, "f_s")
    f_t = _as_bcn(f_t, "f_t")
    active = params.rounds if rounds is None else params.rounds[:rounds]
    for s_unit, t_unit in active:
        f_s = f_s + cross_attention(f_s, f_t, s_unit)
        f_t = f_t + cross_attention(f_t, f_s, t_unit)
    return f_s, f_t


def st_interaction(f_s4, f_t4, f_st, params: StaParams):
    """Fuse both enhanced branches with the joint branch; (B, N, 2C) out."""
    g_s = cross_attention(f_st, f_s4, params.g_s)
    g_t = cross_attention(f_st, f_t4, params.g_t)
    both = concat([g_s, g_t], axis=1)  # (B, 2C, N)
    h = both.swapaxes(1, 2)  # (B, N, 2C)
    return params.final2(params.final1(h).relu())


def sta_forward(f_s, f_t, f_st, params: StaParams):
    """Full fusion stack: mutual rounds then joint interaction."""
    f_s4, f_t4 = mutual_rounds(f_s, f_t, params)
    return st_interaction(f_s4, f_t4, _as_bcn(f_st, "f_st"), params)
