"""Neighborhood-construction benchmarks: curve patches vs brute-force KNN.

Times only ever feed relative comparisons (ratios, orderings) so results
stay meaningful across machines.  Synthetic clouds are mixtures of
spatial Gaussian clusters drifting over time — dense in space, sparse in
time, like real event streams.
"""

import csv
import io
import time
import tracemalloc
from dataclasses import dataclass, fields

import numpy as np

from . import rng
from .errors import ParameterError
from .oracles import knn_oracle
from .serialize import BranchConfig, serialize

PATCH_SWEEP = (16, 32, 64, 128, 256, 512, 1024)


@dataclass
class BenchRow:
    scenario: str
    n: int
    param: int  # K for neighborhoods, p for patches
    seconds: float
    mem_bytes: int
    groups: int
    spatial_spread: float
    temporal_spread: float


@dataclass
class BenchReport:
    rows: list

    def __post_init__(self):
        for r in self.rows:
            if r.seconds < 0 or not np.isfinite(r.spatial_spread):
                raise ParameterError(f"malformed benchmark row: {r}")

    def to_csv(self):
        buf = io.StringIO()
        names = [f.name for f in fields(BenchRow)]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for r in self.rows:
            writer.writerow([getattr(r, n) for n in names])
        return buf.getvalue()

    def format_table(self):
        names = [f.name for f in fields(BenchRow)]
        cells = [names] + [
            [
                f"{getattr(r, n):.6f}"
                if isinstance(getattr(r, n), float)
                else str(getattr(r, n))
                for n in names
            ]
            for r in self.rows
        ]
        widths = [max(len(row[i]) for row in cells) for i in range(len(names))]
        lines = [
            "  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells
        ]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)


def synthetic_cloud(n, seed, n_clusters=8):
    """Drifting Gaussian blobs in the normalized (x1, x2, x3) cube."""
    gen = rng.stream(seed, rng.BENCH)
    centers = gen.uniform(0.15, 0.85, size=(n_clusters, 2))
    drift = gen.uniform(-0.25, 0.25, size=(n_clusters, 2))
    member = gen.integers(0, n_clusters, size=n)
    t = gen.uniform(0.0, 1.0, size=n)
    xy = (
        centers[member]
        + drift[member] * t[:, None]
        + gen.normal(0.0, 0.03, size=(n, 2))
    )
    pts = np.empty((n, 5), dtype=np.float64)
    pts[:, :2] = np.clip(xy, 0.0, 1.0)
    pts[:, 2] = t
    pts[:, 3] = gen.choice([-1.0, 1.0], size=n)
    pts[:, 4] = 1.0
    return pts


def _timed(fn, repeats):
    """Best-of-N wall time plus the peak traced allocation."""
    best, result = np.inf, None
    tracemalloc.start()
    tracemalloc.reset_peak()
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    return best, peak, result


def _group_spread(points, groups):
    """Mean distance to the group centroid, spatially and temporally.

    ``groups`` is an iterable of index arrays; empty groups are skipped.
    """
    sp, tp = [], []
    for idx in groups:
        if len(idx) == 0:
            continue
        xy = points[idx, :2]
        t = points[idx, 2]
        sp.append(np.linalg.norm(xy - xy.mean(axis=0), axis=1).mean())
        tp.append(np.abs(t - t.mean()).mean())
    return float(np.mean(sp)), float(np.mean(tp))


def _patch_groups(serialized):
    return [serialized.perm[s] for s in serialized.patch_slices()]


def bench_patch_vs_knn(sizes, K=512, p=512, seed=0, repeats=3):
    """Time curve serialization+partition against brute-force KNN.

    One "serialize" and one "knn" row per N; groups column reports patch
    count / neighborhood count.  Locality metrics are computed outside
    the timed region.
    """
    cfg = BranchConfig(branch="ST")
    order = cfg.order_for("hilbert")
    rows = []
    for n in sizes:
        pts = synthetic_cloud(n, seed)

        secs, mem, ser = _timed(
            lambda: serialize(pts, order, cfg, patch_size=p), repeats
        )
        sp, tp = _group_spread(pts, _patch_groups(ser))
        rows.append(
            BenchRow("serialize", n, p, secs, mem, ser.n_patches, sp, tp)
        )

        secs, mem, nbrs = _timed(
            lambda: knn_oracle(pts, min(K, n - 1), "euclidean3d"), repeats
        )
        sp, tp = _group_spread(pts, nbrs)
        rows.append(BenchRow("knn", n, min(K, n - 1), secs, mem, n, sp, tp))
    return BenchReport(rows)


def sweep_patch_sizes(n=4096, sizes=PATCH_SWEEP, seed=0, repeats=1):
    """Locality row per patch size: how spread grows with coarser patches."""
    cfg = BranchConfig(branch="ST")
    order = cfg.order_for("hilbert")
    pts = synthetic_cloud(n, seed)
    rows = []
    for p in sizes:
        secs, mem, ser = _timed(
            lambda: serialize(pts, order, cfg, patch_size=p), repeats
        )
        sp, tp = _group_spread(pts, _patch_groups(ser))
        rows.append(BenchRow("sweep", n, p, secs, mem, ser.n_patches, sp, tp))
    return BenchReport(rows)
