"""Brute-force reference implementations.

Slow, obvious versions of the fast paths, used by tests and benchmarks.
Nothing in the production pipeline imports this module, and nothing here
shares helpers with the code it checks — each oracle is a from-scratch
second implementation.
"""

import math

import numpy as np


def group_events_oracle(events, T, t_span=None):
    """Hash-map fusion: walk the stream once, bucket by (h, w, segment).

    Returns the same record layout as the fast path, rows sorted by
    (h, w, segment).
    """
    from .events import FUSED_DTYPE

    if len(events) == 0:
        return np.empty(0, dtype=FUSED_DTYPE)
    if t_span is None:
        t_span = (float(events["t"].min()), float(events["t"].max()))
    t0, t1 = t_span
    span = t1 - t0
    groups = {}
    for rec in events:
        t, p = float(rec["t"]), int(rec["p"])
        if span <= 0:
            seg = 0
        else:
            seg = min(max(math.floor(T * (t - t0) / span), 0), T - 1)
        key = (int(rec["h"]), int(rec["w"]), seg)
        acc = groups.setdefault(key, [0.0, 0, 0])
        acc[0] += t
        acc[1] += p
        acc[2] += 1
    out = np.empty(len(groups), dtype=FUSED_DTYPE)
    for i, key in enumerate(sorted(groups)):
        t_sum, p_acc, c = groups[key]
        out[i] = (key[0], key[1], t_sum / c, p_acc, c)
    return out


def matmul_oracle(a, b):
    """Triple-loop 2-D matrix product."""
    a, b = np.asarray(a), np.asarray(b)
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m), dtype=np.result_type(a, b))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for kk in range(k):
                acc += a[i, kk] * b[kk, j]
            out[i, j] = acc
    return out


def softmax_rows_oracle(scores):
    """Row-wise softmax with explicit scalar loops and max shift."""
    scores = np.asarray(scores, dtype=np.float64)
    out = np.zeros_like(scores)
    for i in range(scores.shape[0]):
        row = scores[i]
        m = row.max()
        exps = [math.exp(v - m) for v in row]
        z = sum(exps)
        out[i] = [e / z for e in exps]
    return out


def layer_norm_oracle(x, gamma, beta, eps=1e-5):
    """Per-row normalization, scalar arithmetic."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    c = x.shape[-1]
    flat = x.reshape(-1, c)
    res = out.reshape(-1, c)
    for i in range(flat.shape[0]):
        mu = sum(flat[i]) / c
        var = sum((v - mu) ** 2 for v in flat[i]) / c
        inv = 1.0 / math.sqrt(var + eps)
        for j in range(c):
            res[i, j] = gamma[j] * (flat[i, j] - mu) * inv + beta[j]
    return out


def attention_oracle(x, qkv_w, qkv_b, proj_w, proj_b, n_heads):
    """Per-head attention with explicit loops.

    Mirrors the fused-QKV layout: output column ``which*H*d + h*d + k``
    of the QKV projection is (q|k|v)[head h, dim k].
    """
    x = np.asarray(x, dtype=np.float64)
    n, c = x.shape
    d = c // n_heads
    fused = matmul_oracle(x, qkv_w) + np.asarray(qkv_b)
    merged = np.zeros((n, c))
    for h in range(n_heads):
        q = fused[:, h * d : (h + 1) * d]
        k = fused[:, c + h * d : c + (h + 1) * d]
        v = fused[:, 2 * c + h * d : 2 * c + (h + 1) * d]
        scores = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                scores[i, j] = sum(q[i] * k[j]) / math.sqrt(d)
        attn = softmax_rows_oracle(scores)
        for i in range(n):
            for kk in range(d):
                merged[i, h * d + kk] = sum(attn[i, j] * v[j, kk] for j in range(n))
    return matmul_oracle(merged, proj_w) + np.asarray(proj_b)


def encoder_block_oracle(x, p):
    """Full pre-norm block recomputed with the loop oracles above."""
    x = np.asarray(x, dtype=np.float64)
    h = layer_norm_oracle(x, p.norm1.gamma.data, p.norm1.beta.data)
    h = attention_oracle(
        h, p.qkv.weight.data, p.qkv.bias.data, p.proj.weight.data, p.proj.bias.data,
        p.n_heads,
    )
    x = x + h
    h = layer_norm_oracle(x, p.norm2.gamma.data, p.norm2.beta.data)
    h = matmul_oracle(h, p.fc1.weight.data) + p.fc1.bias.data
    h = np.where(h > 0, h, 0.0)
    h = matmul_oracle(h, p.fc2.weight.data) + p.fc2.bias.data
    return x + h


def cross_attention_oracle(f_x, f_y, p):
    """Loop re-derivation of the cross-attention rule, unfused.

    Takes the same parameter container as the fast path but only reads
    raw arrays; computes E explicitly before the first square map.
    """
    f_x = np.asarray(f_x, dtype=np.float64)
    f_y = np.asarray(f_y, dtype=np.float64)
    b, c, n = f_x.shape
    out = np.zeros((b, c, n))

    def conv1(f, lin):  # per-position linear over (C, N)
        w, bias = lin.weight.data, lin.bias.data
        r = np.zeros((w.shape[1], n))
        for pos in range(n):
            for j in range(w.shape[1]):
                r[j, pos] = sum(f[i, pos] * w[i, j] for i in range(w.shape[0])) + bias[j]
        return r

    for bi in range(b):
        q = conv1(f_y[bi], p.q)
        k = conv1(f_x[bi], p.k)
        v1 = conv1(f_x[bi], p.v1)
        v2 = conv1(f_y[bi], p.v2)
        e = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                e[i, j] = sum(q[:, i] * k[:, j]) / math.sqrt(c)
        h = np.maximum(matmul_oracle(e, p.fc1.weight.data) + p.fc1.bias.data, 0.0)
        e2 = np.maximum(matmul_oracle(h, p.fc2.weight.data) + p.fc2.bias.data, 0.0)
        a = softmax_rows_oracle(e2)
        cat = np.concatenate([v2, v1], axis=0)  # (2C, N)
        mixed = matmul_oracle(cat, a)  # (2C, N)
        out[bi] = (matmul_oracle(mixed.T, p.proj.weight.data) + p.proj.bias.data).T
    return out


def hilbert_recursive_oracle(cells, b):
    """Hilbert index of 2-D cells by explicit quadrant recursion.

    Defines the orientation convention the codec must follow: at every
    scale the quadrants are visited in the order lower-left, upper-left,
    upper-right, lower-right (a U lying on its side), so at ``b=1`` the
    cells (0,0), (0,1), (1,1), (1,0) get codes 0..3.

    Scalar recursion over points; fine for b <= 8, unusable beyond.
    """
    cells = np.asarray(cells, dtype=np.int64)
    single = cells.ndim == 1
    pts = np.atleast_2d(cells)
    out = np.empty(len(pts), dtype=np.int64)
    for k, (x, y) in enumerate(pts):
        out[k] = _hilbert_quadrant(int(x), int(y), 1 << b)
    return int(out[0]) if single else out


def _hilbert_quadrant(x, y, side):
    if side == 1:
        return 0
    half = side >> 1
    rx = 1 if x >= half else 0
    ry = 1 if y >= half else 0
    quadrant = (3 * rx) ^ ry
    if ry == 0:
        if rx == 1:
            x, y = side - 1 - x, side - 1 - y
        x, y = y, x
    # only the low bits identify the point inside the sub-square
    x &= half - 1
    y &= half - 1
    return quadrant * half * half + _hilbert_quadrant(x, y, half)


def scatter_oracle(pixels, features, H, W, reduce="max"):
    """Hash-map scatter: bucket feature rows by pixel, reduce per bucket.

    Max is order-free and comparable bitwise; the mean accumulates
    left-to-right in input order, which can differ from a pairwise
    segment sum by a few ulp.
    """
    features = np.asarray(features)
    buckets = {}
    for (h, w), row in zip(pixels, features):
        buckets.setdefault((int(h), int(w)), []).append(row)
    out = np.zeros((H, W, features.shape[1]), dtype=features.dtype)
    for (h, w), rows in buckets.items():
        if reduce == "max":
            acc = rows[0].copy()
            for row in rows[1:]:
                acc = np.maximum(acc, row)
        else:
            acc = rows[0].astype(features.dtype, copy=True)
            for row in rows[1:]:
                acc += row
            acc *= features.dtype.type(1.0 / len(rows))
        out[h, w] = acc
    return out


def statistical_channels_oracle(events, H, W, t_span=None):
    """Single pass over the raw stream, per-pixel dicts for each channel."""
    out = np.zeros((H, W, 4), dtype=np.float64)
    if len(events) == 0:
        return out
    if t_span is None:
        t_span = (float(events["t"].min()), float(events["t"].max()))
    t0, t1 = t_span
    span = t1 - t0
    counts = {1: {}, -1: {}}
    latest = {1: {}, -1: {}}
    for rec in events:
        key = (int(rec["h"]), int(rec["w"]))
        p = int(rec["p"])
        counts[p][key] = counts[p].get(key, 0) + 1
        prev = latest[p].get(key)
        t = float(rec["t"])
        if prev is None or t > prev:
            latest[p][key] = t
    for k, p in ((0, 1), (1, -1)):
        for (h, w), n in counts[p].items():
            out[h, w, k] = n
        for (h, w), t in latest[p].items():
            out[h, w, 2 + k] = (t - t0) / span if span > 0 else 1.0
    return out


KNN_METRICS = {"spatial": (0, 1), "temporal": (2,), "euclidean3d": (0, 1, 2)}


def knn_oracle(points, K, metric="euclidean3d", chunk=512):
    """Exact brute-force K nearest neighbors under a branch metric.

    ``points`` is the (N, 5) normalized matrix; the metric picks which
    coordinate columns measure distance.  Self is excluded; ties broken
    by index (so duplicates of a point come first).  Returns (N, K)
    neighbor indices.
    """
    from .errors import ParameterError

    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if metric not in KNN_METRICS:
        raise ParameterError(f"unknown metric {metric!r}")
    if not 1 <= K <= n - 1:
        raise ParameterError(f"K must be in [1, N-1] = [1, {n - 1}], got {K}")
    coords = points[:, KNN_METRICS[metric]]
    out = np.empty((n, K), dtype=np.int64)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        diff = coords[lo:hi, None, :] - coords[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        # stable sort on distance = ties resolved by smaller index
        order = np.argsort(dist, axis=1, kind="stable")
        for r in range(hi - lo):
            row = order[r]
            out[lo + r] = row[row != lo + r][:K]
    return out
