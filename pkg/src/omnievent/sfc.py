"""Space-filling-curve codec.

Maps integer grid cells to 1-D curve codes and back.  Four curve families
are supported: ``z`` (bit interleaving), ``hilbert`` (Gray-code walk), and
their ``-trans`` variants which traverse the same curve with the axes
cyclically permuted.  Codes are int64; ``dims * bits`` must stay below 63
so every code fits without overflow.

Conventions, pinned by tests:

* z-order interleaves axis 0 into the least-significant bit, so in 2-D
  ``(x=1, y=1) -> 3`` and ``(x=1, y=0) -> 1``.
* hilbert at one bit per axis visits ``(0,0), (0,1), (1,1), (1,0)`` in
  code order ``0..3``.
* ``-trans`` permutes axes ``(x, y, z) -> (y, z, x)`` before encoding
  (``(x, y) -> (y, x)`` in 2-D; identity in 1-D).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RangeError, ShapeError

CURVE_KINDS = ("z", "z-trans", "hilbert", "hilbert-trans")

MAX_BITS = 21  # 3 * 21 = 63: the widest code an int64 can hold


@dataclass(frozen=True)
class CurveOrder:
    """A curve family instantiated for a grid of ``2**bits`` per axis."""

    kind: str
    dims: int
    bits: int

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ParameterError(f"unknown curve kind {self.kind!r}")
        if not 1 <= self.dims <= 3:
            raise ParameterError(f"dims must be 1..3, got {self.dims}")
        if not 1 <= self.bits <= MAX_BITS:
            raise ParameterError(f"bits must be 1..{MAX_BITS}, got {self.bits}")
        if self.dims * self.bits > 63:
            raise ParameterError(
                f"dims*bits = {self.dims * self.bits} exceeds int64 capacity"
            )

    @property
    def side(self):
        return 1 << self.bits

    @property
    def n_cells(self):
        return 1 << (self.dims * self.bits)


def quantize(coords, grid_size, bits):
    """Snap normalized coordinates onto the integer grid.

    ``cell = floor(coord / grid_size)`` clamped to ``[0, 2**bits - 1]``.
    With ``grid_size = 2**-bits`` this maps [0, 1) onto the full grid and
    the boundary value 1.0 onto the last cell.
    """
    if grid_size <= 0:
        raise ParameterError(f"grid_size must be positive, got {grid_size}")
    coords = np.asarray(coords, dtype=np.float64)
    if not np.all(np.isfinite(coords)):
        raise RangeError("non-finite coordinate")
    cells = np.floor(coords / grid_size).astype(np.int64)
    return np.clip(cells, 0, (1 << bits) - 1)


def encode(cells, order):
    """Encode grid cells (..., dims) into int64 curve codes (...)."""
    cells = np.asarray(cells, dtype=np.int64)
    if cells.ndim == 0 or cells.shape[-1] != order.dims:
        raise ShapeError(
            f"expected trailing axis of size {order.dims}, got shape {cells.shape}"
        )
    if cells.size and (cells.min() < 0 or cells.max() >= order.side):
        raise RangeError(f"cell outside [0, {order.side}) for {order.bits}-bit grid")
    axes = [cells[..., i] for i in range(order.dims)]
    axes = _permute(axes, order.kind)
    if order.kind.startswith("hilbert"):
        axes = _axes_to_transpose(axes, order.bits)
        return _pack_transpose(axes, order.bits)
    return _interleave(axes)


def decode(codes, order):
    """Invert :func:`encode`; returns cells with shape ``codes.shape + (dims,)``."""
    codes = np.asarray(codes, dtype=np.int64)
    if codes.size and (codes.min() < 0 or codes.max() >= order.n_cells):
        raise RangeError(f"code outside [0, 2**{order.dims * order.bits})")
    if order.kind.startswith("hilbert"):
        axes = _unpack_transpose(codes, order.dims, order.bits)
        axes = _transpose_to_axes(axes, order.bits)
    else:
        axes = _deinterleave(codes, order.dims, order.bits)
    axes = _unpermute(axes, order.kind)
    return np.stack(axes, axis=-1)


def _permute(axes, kind):
    # -trans traverses the same curve over cyclically shifted axes.
    if kind.endswith("-trans") and len(axes) > 1:
        return axes[1:] + axes[:1]
    return axes


def _unpermute(axes, kind):
    if kind.endswith("-trans") and len(axes) > 1:
        return axes[-1:] + axes[:-1]
    return axes


# -- z-order ----------------------------------------------------------------
# Parallel-prefix bit spreading; masks are the textbook magic constants
# widened to 64 bits.


def _spread2(x):
    x = x & np.int64(0xFFFFFFFF)
    x = (x | (x << 16)) & np.int64(0x0000FFFF0000FFFF)
    x = (x | (x << 8)) & np.int64(0x00FF00FF00FF00FF)
    x = (x | (x << 4)) & np.int64(0x0F0F0F0F0F0F0F0F)
    x = (x | (x << 2)) & np.int64(0x3333333333333333)
    x = (x | (x << 1)) & np.int64(0x5555555555555555)
    return x


def _compact2(x):
    x = x & np.int64(0x5555555555555555)
    x = (x | (x >> 1)) & np.int64(0x3333333333333333)
    x = (x | (x >> 2)) & np.int64(0x0F0F0F0F0F0F0F0F)
    x = (x | (x >> 4)) & np.int64(0x00FF00FF00FF00FF)
    x = (x | (x >> 8)) & np.int64(0x0000FFFF0000FFFF)
    x = (x | (x >> 16)) & np.int64(0x00000000FFFFFFFF)
    return x


def _spread3(x):
    x = x & np.int64(0x1FFFFF)
    x = (x | (x << 32)) & np.int64(0x001F00000000FFFF)
    x = (x | (x << 16)) & np.int64(0x001F0000FF0000FF)
    x = (x | (x << 8)) & np.int64(0x100F00F00F00F00F)
    x = (x | (x << 4)) & np.int64(0x10C30C30C30C30C3)
    x = (x | (x << 2)) & np.int64(0x1249249249249249)
    return x


def _compact3(x):
    x = x & np.int64(0x1249249249249249)
    x = (x | (x >> 2)) & np.int64(0x10C30C30C30C30C3)
    x = (x | (x >> 4)) & np.int64(0x100F00F00F00F00F)
    x = (x | (x >> 8)) & np.int64(0x001F0000FF0000FF)
    x = (x | (x >> 16)) & np.int64(0x001F00000000FFFF)
    x = (x | (x >> 32)) & np.int64(0x00000000001FFFFF)
    return x


def _interleave(axes):
    n = len(axes)
    if n == 1:
        return axes[0].copy()
    spread = _spread2 if n == 2 else _spread3
    code = np.zeros_like(axes[0])
    for i, ax in enumerate(axes):  # axis i lands at bit offset i
        code |= spread(ax) << np.int64(i)
    return code


def _deinterleave(codes, n, bits):
    if n == 1:
        return [codes.copy()]
    compact = _compact2 if n == 2 else _compact3
    mask = np.int64((1 << bits) - 1)
    return [compact(codes >> np.int64(i)) & mask for i in range(n)]


# -- hilbert ----------------------------------------------------------------
# Skilling's transpose-form transform, vectorized over the cell array.  The
# "transpose" X holds one int per axis whose bit j belongs to output bit
# plane j; packing puts axis 0 in the most significant slot of each plane.


def _axes_to_transpose(axes, bits):
    X = [ax.copy() for ax in axes]
    n = len(X)
    m = np.int64(1) << (bits - 1)
    q = m
    while q > 1:
        p = q - np.int64(1)
        for i in range(n):
            # where bit q is set: invert low bits of X[0];
            # elsewhere: exchange low bits of X[0] and X[i]
            hi = (X[i] & q) != 0
            t = np.where(hi, np.int64(0), (X[0] ^ X[i]) & p)
            X[0] = np.where(hi, X[0] ^ p, X[0] ^ t)
            X[i] = X[i] ^ t
        q >>= 1
    # Gray-code the planes
    for i in range(1, n):
        X[i] = X[i] ^ X[i - 1]
    t = np.zeros_like(X[0])
    q = m
    while q > 1:
        t = np.where((X[n - 1] & q) != 0, t ^ (q - np.int64(1)), t)
        q >>= 1
    for i in range(n):
        X[i] = X[i] ^ t
    return X


def _transpose_to_axes(X, bits):
    X = [x.copy() for x in X]
    n = len(X)
    m = np.int64(1) << (bits - 1)
    # undo excess Gray work
    t = X[n - 1] >> 1
    for i in range(n - 1, 0, -1):
        X[i] = X[i] ^ X[i - 1]
    X[0] = X[0] ^ t
    q = np.int64(2)
    while q != (m << 1):
        p = q - np.int64(1)
        for i in range(n - 1, -1, -1):
            hi = (X[i] & q) != 0
            if i == 0:
                X[0] = np.where(hi, X[0] ^ p, X[0])
            else:
                t = np.where(hi, np.int64(0), (X[0] ^ X[i]) & p)
                X[0] ^= t
                X[i] ^= t
                X[0] = np.where(hi, X[0] ^ p, X[0])
        q <<= 1
    return X


def _pack_transpose(X, bits):
    n = len(X)
    if n == 1:
        return X[0].copy()
    spread = _spread2 if n == 2 else _spread3
    code = np.zeros_like(X[0])
    for i, x in enumerate(X):  # axis 0 is most significant within a plane
        code |= spread(x) << np.int64(n - 1 - i)
    return code


def _unpack_transpose(codes, n, bits):
    if n == 1:
        return [codes.copy()]
    compact = _compact2 if n == 2 else _compact3
    mask = np.int64((1 << bits) - 1)
    return [compact(codes >> np.int64(n - 1 - i)) & mask for i in range(n)]
