"""Reverse-mode automatic differentiation over numpy arrays.

Covers exactly the ops the attention pipeline needs — broadcast
arithmetic, batched matmul, softmax, layer norm, relu, reshape/transpose,
concatenation, row gather/scatter, and segmented max — each op recording
a backward closure on a small graph that :meth:`Tensor.backward` walks in
reverse topological order.

Gradients accumulate into ``.grad`` as plain arrays.  Dtype follows the
inputs: float64 for verification work, float32 for the run mode.  Inside
:func:`no_grad` no graph is retained.
"""

import contextlib

import numpy as np

from .errors import NumericError, ShapeError

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad and _grad_enabled
        self._parents = _parents if self.requires_grad else ()
        self._backward = _backward if self.requires_grad else None

    # -- plumbing -------------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, grad={self.requires_grad})"

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def accumulate(self, grad):
        if self.grad is None:
            self.grad = np.zeros_like(self.data, dtype=self.data.dtype)
        self.grad += grad

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without a seed needs a scalar")
            grad = np.ones_like(self.data)
        topo, seen = [], set()

        def visit(t):
            if id(t) in seen or not t.requires_grad:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            topo.append(t)

        visit(self)
        self.accumulate(np.asarray(grad, dtype=self.data.dtype))
        for t in reversed(topo):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(np.asarray(other, self.dtype))
        out_data = self.data + other.data

        def bw(g):
            if self.requires_grad:
                self.accumulate(_unbroadcast(g, self.shape))
            if other.requires_grad:
                other.accumulate(_unbroadcast(g, other.shape))

        return Tensor(
            out_data, self.requires_grad or other.requires_grad, (self, other), bw
        )

    __radd__ = __add__

    def __neg__(self):
        def bw(g):
            self.accumulate(-g)

        return Tensor(-self.data, self.requires_grad, (self,), bw)

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(np.asarray(other, self.dtype))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(np.asarray(other, self.dtype))
        out_data = self.data * other.data

        def bw(g):
            if self.requires_grad:
                self.accumulate(_unbroadcast(g * other.data, self.shape))
            if other.requires_grad:
                other.accumulate(_unbroadcast(g * self.data, other.shape))

        return Tensor(
            out_data, self.requires_grad or other.requires_grad, (self, other), bw
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return self * other**-1.0
        return self * (1.0 / other)

    def __pow__(self, exponent):
        out_data = self.data**exponent

        def bw(g):
            self.accumulate(g * exponent * self.data ** (exponent - 1))

        return Tensor(out_data, self.requires_grad, (self,), bw)

    def __matmul__(self, other):
        a, b = self, other
        out_data = a.data @ b.data

        def bw(g):
            if a.requires_grad:
                ga = g @ np.swapaxes(b.data, -1, -2)
                a.accumulate(_unbroadcast(ga, a.shape))
            if b.requires_grad:
                gb = np.swapaxes(a.data, -1, -2) @ g
                b.accumulate(_unbroadcast(gb, b.shape))

        return Tensor(out_data, a.requires_grad or b.requires_grad, (a, b), bw)

    # -- shape ops ------------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        prev = self.shape

        def bw(g):
            self.accumulate(g.reshape(prev))

        return Tensor(self.data.reshape(shape), self.requires_grad, (self,), bw)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inv = np.argsort(axes)

        def bw(g):
            self.accumulate(g.transpose(inv))

        return Tensor(self.data.transpose(axes), self.requires_grad, (self,), bw)

    def swapaxes(self, a, b):
        def bw(g):
            self.accumulate(np.swapaxes(g, a, b))

        return Tensor(np.swapaxes(self.data, a, b), self.requires_grad, (self,), bw)

    def __getitem__(self, key):
        # basic slicing only; gather_rows covers integer-array indexing
        def bw(g):
            full = np.zeros_like(self.data)
            full[key] = g
            self.accumulate(full)

        return Tensor(self.data[key], self.requires_grad, (self,), bw)

    # -- reductions -----------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)

        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self.accumulate(np.broadcast_to(g, self.shape).copy())

        return Tensor(out_data, self.requires_grad, (self,), bw)

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            n = self.data.size
        elif isinstance(axis, tuple):
            n = int(np.prod([self.shape[a] for a in axis]))
        else:
            n = self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) / n

    # -- nonlinearities ---------------------------------------------------------

    def relu(self):
        mask = self.data > 0

        def bw(g):
            self.accumulate(g * mask)

        return Tensor(self.data * mask, self.requires_grad, (self,), bw)


def to_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype) if dtype else np.asarray(x))


def parameter(data):
    return Tensor(np.asarray(data), requires_grad=True)


def softmax(t, axis=-1):
    """Shift-invariant softmax along ``axis``."""
    shifted = t.data - t.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        inner = (g * out_data).sum(axis=axis, keepdims=True)
        t.accumulate(out_data * (g - inner))

    return Tensor(out_data, t.requires_grad, (t,), bw)


def layer_norm(t, gamma, beta, eps=1e-5):
    """Normalize the trailing axis to zero mean / unit variance, then affine."""
    mu = t.data.mean(axis=-1, keepdims=True)
    centered = t.data - mu
    var = (centered**2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out_data = gamma.data * xhat + beta.data
    n = t.shape[-1]

    def bw(g):
        if gamma.requires_grad:
            gamma.accumulate((g * xhat).reshape(-1, n).sum(axis=0))
        if beta.requires_grad:
            beta.accumulate(g.reshape(-1, n).sum(axis=0))
        if t.requires_grad:
            gx = g * gamma.data
            t.accumulate(
                inv
                * (
                    gx
                    - gx.mean(axis=-1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=-1, keepdims=True)
                )
            )

    req = t.requires_grad or gamma.requires_grad or beta.requires_grad
    return Tensor(out_data, req, (t, gamma, beta), bw)


def linear(x, weight, bias=None):
    """``x @ weight + bias`` with weight shaped (in, out)."""
    out = x @ weight
    return out if bias is None else out + bias


def concat(tensors, axis=0):
    datas = [t.data for t in tensors]
    out_data = np.concatenate(datas, axis=axis)
    sizes = [d.shape[axis] for d in datas]
    bounds = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t.accumulate(g[tuple(idx)])

    req = any(t.requires_grad for t in tensors)
    return Tensor(out_data, req, tuple(tensors), bw)


def gather_rows(t, index):
    """Pick rows (axis 0) by integer index; repeated rows accumulate grads."""
    index = np.asarray(index, dtype=np.int64)

    def bw(g):
        full = np.zeros_like(t.data)
        np.add.at(full, index, g)
        t.accumulate(full)

    return Tensor(t.data[index], t.requires_grad, (t,), bw)


def segment_max(t, starts):
    """Max over row segments [starts[i], starts[i+1]); axis 0.

    The gradient flows to each segment's first attaining row per column
    (deterministic subgradient choice).
    """
    starts = np.asarray(starts, dtype=np.int64)
    if t.ndim != 2:
        raise ShapeError("segment_max expects (N, C)")
    n, c = t.shape
    out_data = np.maximum.reduceat(t.data, starts, axis=0)

    def bw(g):
        seg_id = np.zeros(n, dtype=np.int64)
        seg_id[starts[1:]] = 1
        seg_id = np.cumsum(seg_id)
        hit = t.data == out_data[seg_id]  # every max-attaining row
        pos = np.where(hit, np.arange(n)[:, None], n)
        first = np.minimum.reduceat(pos, starts, axis=0)  # (G, C)
        full = np.zeros_like(t.data)
        np.add.at(full, (first, np.broadcast_to(np.arange(c), first.shape)), g)
        t.accumulate(full)

    return Tensor(out_data, t.requires_grad, (t,), bw)


def segment_sum(t, starts):
    """Sum over row segments [starts[i], starts[i+1]); axis 0."""
    starts = np.asarray(starts, dtype=np.int64)
    if t.ndim != 2:
        raise ShapeError("segment_sum expects (N, C)")
    out_data = np.add.reduceat(t.data, starts, axis=0)
    n = t.shape[0]

    def bw(g):
        seg_id = np.zeros(n, dtype=np.int64)
        seg_id[starts[1:]] = 1
        t.accumulate(g[np.cumsum(seg_id)])

    return Tensor(out_data, t.requires_grad, (t,), bw)


def scatter_rows(t, index, n_rows):
    """Place row i of ``t`` at ``index[i]`` in an (n_rows, C) zero matrix.

    Indices must be unique — this is the inverse of a row gather, not an
    accumulating scatter.
    """
    index = np.asarray(index, dtype=np.int64)
    out_data = np.zeros((n_rows,) + t.shape[1:], dtype=t.dtype)
    out_data[index] = t.data

    def bw(g):
        t.accumulate(g[index])

    return Tensor(out_data, t.requires_grad, (t,), bw)


def check_finite(t, label="input"):
    data = t.data if isinstance(t, Tensor) else t
    if not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite values in {label}")
    return t
