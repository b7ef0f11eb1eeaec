"""Structural half of the curve-attention stack.

Routes a normalized batch into one of three branches — ``S`` (spatial,
2-D), ``T`` (temporal, 1-D), ``ST`` (joint, 3-D) — then sorts points
along a per-stage space-filling curve, cuts the sorted run into fixed
patches, and coarsens between stages by right-shifting curve codes and
max-pooling points that collide.

Stage-to-stage bookkeeping works on quantized full-resolution cells: at
stage ``l`` the effective code is ``encode(cells, order_l) >> Y_l`` where
``Y_l`` is the cumulative shift applied so far, so every stage may pick a
fresh curve while resolution still halves per pooling step.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ParameterError, ShapeError
from .sfc import CurveOrder, encode, quantize

BRANCHES = ("S", "T", "ST")

# which point columns each branch serializes: (x1, x2), (x3,), (x1, x2, x3)
BRANCH_AXES = {"S": (0, 1), "T": (2,), "ST": (0, 1, 2)}

_BRANCH_ID = {"S": 0, "T": 1, "ST": 2}

SPATIAL_ORDERS = ("hilbert", "hilbert-trans")
ALL_ORDERS = ("z", "z-trans", "hilbert", "hilbert-trans")


@dataclass(frozen=True)
class BranchConfig:
    """Per-branch stage layout; defaults follow the reference model sizes."""

    branch: str
    orders: tuple = SPATIAL_ORDERS
    enc_depths: tuple = (2, 2, 2)
    enc_channels: tuple = (64, 128, 256)
    enc_heads: tuple = (4, 8, 16)
    enc_patch: tuple = (512, 512, 512)
    dec_depths: tuple = (2, 2)
    dec_channels: tuple = (64, 128)
    dec_heads: tuple = (4, 8)
    dec_patch: tuple = (512, 512)
    stride: tuple = (2, 2)
    y_schedule: tuple = (5, 3)
    mlp_ratio: int = 4
    in_channels: int = 5
    bits: int = 10

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise ParameterError(f"branch must be one of {BRANCHES}, got {self.branch}")
        allowed = ALL_ORDERS if self.branch == "ST" else SPATIAL_ORDERS
        if not self.orders or not set(self.orders) <= set(allowed):
            raise ParameterError(
                f"{self.branch} branch orders must be a non-empty subset of {allowed}"
            )
        n = len(self.enc_depths)
        if not (len(self.enc_channels) == len(self.enc_heads) == len(self.enc_patch) == n):
            raise ParameterError("encoder stage lists must share one length")
        if len(self.y_schedule) != n - 1 or len(self.stride) != n - 1:
            raise ParameterError("need one stride/shift per stage transition")
        m = len(self.dec_depths)
        if not (len(self.dec_channels) == len(self.dec_heads) == len(self.dec_patch) == m):
            raise ParameterError("decoder stage lists must share one length")
        if any(y < 1 for y in self.y_schedule):
            raise ParameterError("shift amounts must be >= 1")
        if self.mlp_ratio < 1:
            raise ParameterError("mlp_ratio must be >= 1")

    @property
    def dims(self):
        return len(BRANCH_AXES[self.branch])

    @property
    def grid_size(self):
        return 2.0**-self.bits

    def order_for(self, kind):
        return CurveOrder(kind, self.dims, self.bits)


def branch_defaults(branch):
    """Reference stage layout for each branch."""
    if branch in ("S", "T"):
        return BranchConfig(branch=branch)
    return BranchConfig(
        branch="ST",
        orders=ALL_ORDERS,
        enc_depths=(2, 2, 2, 6, 2),
        enc_channels=(32, 64, 128, 256, 512),
        enc_heads=(2, 4, 8, 16, 32),
        enc_patch=(512,) * 5,
        dec_depths=(2, 2, 2, 2),
        dec_channels=(64, 64, 128, 256),
        dec_heads=(4, 4, 8, 16),
        dec_patch=(512,) * 4,
        stride=(2, 2, 2, 2),
        y_schedule=(5, 3, 3, 3),
    )


@dataclass
class SerializedBatch:
    """Points sorted along one curve and cut into consecutive patches."""

    order_used: CurveOrder
    codes: np.ndarray  # (N,) int64, input order
    perm: np.ndarray  # (N,) int64, argsort of codes (stable)
    patch_offsets: np.ndarray  # (n_patches + 1,) boundaries into sorted order

    @property
    def n_points(self):
        return len(self.codes)

    @property
    def n_patches(self):
        return len(self.patch_offsets) - 1

    @property
    def sorted_codes(self):
        return self.codes[self.perm]

    def patch_slices(self):
        for i in range(self.n_patches):
            yield slice(self.patch_offsets[i], self.patch_offsets[i + 1])

    def patch_of(self):
        """Patch id per sorted position."""
        ids = np.zeros(self.n_points, dtype=np.int64)
        np.add.at(ids, self.patch_offsets[1:-1], 1)
        return np.cumsum(ids)


@dataclass
class PoolMap:
    """Grouping produced by one shift-pool step.

    ``group_id`` indexes groups in ascending shifted-code order;
    ``rep_index`` points at each group's first member along the curve,
    which stands in as the merged point's position downstream.
    """

    group_id: np.ndarray  # (N,) int64, input order
    rep_index: np.ndarray  # (G,) int64, input-order index of representative
    n_groups: int


def select_order(layer_index, branch, seed):
    """Uniform, per-layer deterministic choice among the branch's curves."""
    if layer_index < 0:
        raise ParameterError("layer_index must be non-negative")
    gen = rng.stream(seed, rng.ORDERS, _BRANCH_ID[branch.branch], layer_index)
    kind = branch.orders[int(gen.integers(len(branch.orders)))]
    return branch.order_for(kind)


def patch_offsets_for(n, patch_size):
    """[0, p, 2p, ..., n]; the final patch keeps the remainder."""
    if patch_size < 1:
        raise ParameterError("patch_size must be >= 1")
    cuts = np.arange(0, n, patch_size, dtype=np.int64)
    return np.append(cuts, n)


def serialize(batch, order, branch, patch_size=None):
    """Sort the branch's coordinate projection along ``order``.

    Ties (equal codes) keep input order, so the permutation is unique
    and runs are deterministic.  ``patch_size`` defaults to the first
    encoder stage's value.
    """
    points = batch.points if hasattr(batch, "points") else np.asarray(batch, np.float64)
    if points.ndim != 2 or points.shape[1] < 3:
        raise ShapeError(f"expected (N, >=3) points, got {points.shape}")
    cells = quantize(points[:, BRANCH_AXES[branch.branch]], branch.grid_size, branch.bits)
    codes = encode(cells, order)
    return serialize_codes(codes, order, patch_size or branch.enc_patch[0])


def serialize_codes(codes, order, patch_size):
    """Serialization core for precomputed codes (stage reuse path)."""
    perm = np.argsort(codes, kind="stable")
    return SerializedBatch(
        order_used=order,
        codes=codes,
        perm=perm,
        patch_offsets=patch_offsets_for(len(codes), patch_size),
    )


def pool_plan(serialized, y):
    """Run boundaries of codes merged by ``>> y``, in sorted order.

    Returns ``(starts, gid_sorted)``: segment start offsets into the
    sorted sequence and the group id of every sorted position.
    """
    if y < 1:
        raise ParameterError(f"shift must be >= 1, got {y}")
    shifted = serialized.sorted_codes >> np.int64(y)
    # sorted full codes keep equal shifted values consecutive, so groups
    # are exactly the runs
    new_run = np.empty(len(shifted), dtype=bool)
    new_run[0] = True
    np.not_equal(shifted[1:], shifted[:-1], out=new_run[1:])
    return np.nonzero(new_run)[0], np.cumsum(new_run) - 1


def grid_pool(serialized, features, y):
    """Merge points whose codes collide after ``>> y``; max over features.

    Returns the pooled feature matrix (ascending shifted-code order) and
    the PoolMap needed to unpool or to carry positions forward.
    """
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[0] != serialized.n_points:
        raise ShapeError(
            f"features {features.shape} do not match {serialized.n_points} points"
        )
    if serialized.n_points == 0:
        if y < 1:
            raise ParameterError(f"shift must be >= 1, got {y}")
        empty = np.empty(0, dtype=np.int64)
        return features.copy(), PoolMap(group_id=empty, rep_index=empty, n_groups=0)
    perm = serialized.perm
    starts, gid_sorted = pool_plan(serialized, y)
    group_id = np.empty_like(gid_sorted)
    group_id[perm] = gid_sorted
    pooled = np.maximum.reduceat(features[perm], starts, axis=0)
    return pooled, PoolMap(
        group_id=group_id, rep_index=perm[starts], n_groups=len(starts)
    )


def unpool(pooled, pool_map):
    """Broadcast each group's pooled feature back to its members."""
    pooled = np.asarray(pooled)
    if pooled.ndim != 2 or pooled.shape[0] != pool_map.n_groups:
        raise ShapeError(
            f"pooled {pooled.shape} does not match {pool_map.n_groups} groups"
        )
    return pooled[pool_map.group_id]


def receptive_field(P, y, L):
    """Points reachable after L shift-pool stages of patch attention."""
    if P < 1 or y < 1 or L < 0:
        raise ParameterError("require P >= 1, y >= 1, L >= 0")
    return int(P) << (int(y) * int(L))
