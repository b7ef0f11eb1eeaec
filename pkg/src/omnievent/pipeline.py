"""End-to-end composition: events -> fused batch -> branches -> fusion -> grid.

Each branch is a U-shape over its curve serialization: encoder stages
run patch attention and coarsen by code-shift pooling; decoder stages
unpool, add the encoder skip, and refine at the finer level, reusing the
encoder's serialization of that level.  Every stage draws its own curve
order from a deterministic per-(branch, stage) stream, so a fixed seed
fixes the whole computation.

All feature math goes through autodiff Tensors; running under
``no_grad`` gives the inference path, and the same functions back the
training smoke tests.
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from .autodiff import Tensor, concat, gather_rows, no_grad, parameter, segment_max
from .blocks import BlockParams, LinearParams, embed, encoder_block
from .errors import ParameterError, ShapeError
from .events import fuse, sample_and_normalize, validate_events
from .serialize import (
    BRANCH_AXES,
    BRANCHES,
    _BRANCH_ID,
    patch_offsets_for,
    pool_plan,
    select_order,
    serialize_codes,
)
from .sfc import encode, quantize
from .sta import StaParams, sta_forward
from .tensorize import tensorize

_STA_STREAM = 3  # after the three branch ids


@dataclass
class StageParams:
    entry: LinearParams | None  # channel projection into the stage
    blocks: list  # BlockParams, applied in order within each patch

    def named(self, prefix):
        if self.entry is not None:
            yield from self.entry.named(f"{prefix}.entry")
        for i, b in enumerate(self.blocks):
            yield from b.named(f"{prefix}.block{i}")


@dataclass
class BranchParams:
    embed: LinearParams
    enc: list  # StageParams per level, fine to coarse
    dec: list  # StageParams per level 0..L-2; forward walks them coarse to fine
    skip: list  # LinearParams | None per decoder level

    @classmethod
    def from_rng(cls, gen, cfg, dtype=np.float64):
        if len(cfg.dec_depths) != len(cfg.enc_depths) - 1:
            raise ParameterError(
                "decoder must mirror the encoder: one stage per pooling level"
            )
        emb = LinearParams.from_rng(gen, cfg.in_channels, cfg.enc_channels[0], dtype)
        enc = []
        for i, depth in enumerate(cfg.enc_depths):
            entry = (
                None
                if i == 0
                else LinearParams.from_rng(
                    gen, cfg.enc_channels[i - 1], cfg.enc_channels[i], dtype
                )
            )
            blocks = [
                BlockParams.from_rng(
                    gen, cfg.enc_channels[i], cfg.enc_heads[i], cfg.mlp_ratio, dtype
                )
                for _ in range(depth)
            ]
            enc.append(StageParams(entry, blocks))
        dec, skip = [None] * len(cfg.dec_depths), [None] * len(cfg.dec_depths)
        for i in reversed(range(len(cfg.dec_depths))):  # construction = forward order
            coarser = (
                cfg.enc_channels[-1]
                if i == len(cfg.dec_depths) - 1
                else cfg.dec_channels[i + 1]
            )
            entry = LinearParams.from_rng(gen, coarser, cfg.dec_channels[i], dtype)
            blocks = [
                BlockParams.from_rng(
                    gen, cfg.dec_channels[i], cfg.dec_heads[i], cfg.mlp_ratio, dtype
                )
                for _ in range(cfg.dec_depths[i])
            ]
            dec[i] = StageParams(entry, blocks)
            if cfg.enc_channels[i] != cfg.dec_channels[i]:
                skip[i] = LinearParams.from_rng(
                    gen, cfg.enc_channels[i], cfg.dec_channels[i], dtype
                )
        return cls(embed=emb, enc=enc, dec=dec, skip=skip)

    def named(self, prefix):
        yield from self.embed.named(f"{prefix}.embed")
        for i, s in enumerate(self.enc):
            yield from s.named(f"{prefix}.enc{i}")
        for i, s in enumerate(self.dec):
            yield from s.named(f"{prefix}.dec{i}")
        for i, s in enumerate(self.skip):
            if s is not None:
                yield from s.named(f"{prefix}.skip{i}")


@dataclass
class PipelineParams:
    branches: dict  # branch name -> BranchParams
    sta: StaParams
    pre_map: LinearParams  # identity-initialized 1-wide map before scatter

    @classmethod
    def from_config(cls, cfg, dtype=np.float32):
        branches = {
            b: BranchParams.from_rng(
                rng.stream(cfg.seed, rng.PARAMS, _BRANCH_ID[b]),
                cfg.branches[b],
                dtype,
            )
            for b in BRANCHES
        }
        sta = StaParams.from_rng(
            rng.stream(cfg.seed, rng.PARAMS, _STA_STREAM), cfg.sta, dtype
        )
        c_out = cfg.sta.out_channels
        pre_map = LinearParams(
            weight=parameter(np.eye(c_out, dtype=dtype)),
            bias=parameter(np.zeros(c_out, dtype=dtype)),
        )
        return cls(branches=branches, sta=sta, pre_map=pre_map)

    def named(self, prefix="pipeline"):
        for b in BRANCHES:
            yield from self.branches[b].named(f"{prefix}.{b}")
        yield from self.sta.named(f"{prefix}.sta")
        yield from self.pre_map.named(f"{prefix}.ft.pre_map")


def _run_blocks(xs, offsets, blocks):
    """Apply a stage's block stack independently inside each patch."""
    if not blocks:
        return xs
    pieces = []
    for lo, hi in zip(offsets[:-1], offsets[1:]):
        seg = xs[int(lo) : int(hi)]
        for blk in blocks:
            seg = encoder_block(seg, blk)
        pieces.append(seg)
    return pieces[0] if len(pieces) == 1 else concat(pieces, axis=0)


def branch_forward(batch, cfg, params, seed):
    """One branch, batch points in -> (N, C_out) features in point order."""
    dtype = params.embed.weight.dtype
    pts = np.asarray(batch.points, dtype=np.float64)
    x = embed(Tensor(pts.astype(dtype)), params.embed)
    cells = quantize(pts[:, BRANCH_AXES[cfg.branch]], cfg.grid_size, cfg.bits)

    levels = len(cfg.enc_depths)
    sers, plans, skips = [], [], []
    shift = 0
    for i in range(levels):
        order = select_order(i, cfg, seed)
        codes = encode(cells, order) >> np.int64(shift)
        ser = serialize_codes(codes, order, cfg.enc_patch[i])
        sers.append(ser)
        xs = gather_rows(x, ser.perm)
        if params.enc[i].entry is not None:
            xs = params.enc[i].entry(xs)
        xs = _run_blocks(xs, ser.patch_offsets, params.enc[i].blocks)
        if i == levels - 1:
            x = xs
            break
        skips.append(xs)
        starts, gid_sorted = pool_plan(ser, cfg.y_schedule[i])
        plans.append((starts, gid_sorted))
        x = segment_max(xs, starts)  # group order = next level's input order
        cells = cells[ser.perm[starts]]  # representative carries the position
        shift += cfg.y_schedule[i]

    for i in reversed(range(levels - 1)):
        # x leaves the coarser stage in ITS sorted order; unpooling indexes
        # groups, i.e. that level's input order — undo the sort first
        x = gather_rows(x, np.argsort(sers[i + 1].perm))
        starts, gid_sorted = plans[i]
        up = params.dec[i].entry(gather_rows(x, gid_sorted))
        skip = skips[i] if params.skip[i] is None else params.skip[i](skips[i])
        xs = up + skip
        offsets = patch_offsets_for(len(gid_sorted), cfg.dec_patch[i])
        x = _run_blocks(xs, offsets, params.dec[i].blocks)

    # undo the level-0 sort so the three branches align point-for-point
    return gather_rows(x, np.argsort(sers[0].perm))


def pipeline_forward(batch, cfg, params):
    """All three branches + cross fusion; (N, out_channels) in point order."""
    if batch.M != cfg.sta.seq_len:
        raise ShapeError(
            f"batch has {batch.M} points but the fusion stage expects "
            f"{cfg.sta.seq_len}"
        )
    feats = {}
    for b in BRANCHES:
        f = branch_forward(batch, cfg.branches[b], params.branches[b], cfg.seed)
        feats[b] = f.reshape(1, f.shape[0], f.shape[1]).swapaxes(1, 2)  # (1, C, N)
    out = sta_forward(feats["S"], feats["T"], feats["ST"], params.sta)
    return out.reshape(out.shape[1], out.shape[2])


def run_pipeline(events, cfg, params=None, dtype=np.float32):
    """Inference: raw events to the final GridTensor, deterministically."""
    validate_events(events, cfg.geometry)
    fused = fuse(events, cfg.T)
    batch = sample_and_normalize(
        fused,
        cfg.M,
        cfg.geometry,
        cfg.seed,
        T=cfg.T,
        normalize_h_by_H=cfg.normalize_h_by_H,
    )
    if params is None:
        params = PipelineParams.from_config(cfg, dtype)
    with no_grad():
        out = pipeline_forward(batch, cfg, params)
        return tensorize(
            events, batch, out, reduce=cfg.reduce, pre_map=params.pre_map
        )
