"""Event-stream model: synthesis, fusion, sampling, normalization.

Raw events are structured arrays with fields ``t`` (seconds, f64),
``h``/``w`` (pixel indices, u16), ``p`` (polarity, +1/-1, i8) — the same
packed little-endian layout the binary event container uses on disk.

A batch flows through ``fuse`` (merge events sharing a pixel and temporal
segment), ``sample_and_normalize`` (draw exactly M points and map them to
dimensionless coordinates), producing the (M, 5) float matrix the
downstream branches consume: columns ``x1 = h/W``, ``x2 = w/W``,
``x3`` = time rescaled to [0, 1], raw ``p_acc``, raw ``c``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import NumericError, ParameterError, RangeError, ShapeError

# Packed on purpose: itemsize 13, matching the on-disk record layout.
EVENT_DTYPE = np.dtype([("t", "<f8"), ("h", "<u2"), ("w", "<u2"), ("p", "<i1")])

FUSED_DTYPE = np.dtype(
    [("h", "<i4"), ("w", "<i4"), ("t_avg", "<f8"), ("p_acc", "<i8"), ("c", "<i8")]
)


@dataclass(frozen=True)
class CameraGeometry:
    """Sensor size plus the log-intensity trigger threshold."""

    H: int
    W: int
    tau: float = 0.2

    def __post_init__(self):
        if self.H < 1 or self.W < 1:
            raise ParameterError(f"sensor must be at least 1x1, got {self.H}x{self.W}")
        if not self.tau > 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")


@dataclass
class EventBatch:
    """Exactly M normalized points plus the context they came from."""

    points: np.ndarray  # (M, 5) float64: x1, x2, x3, p_acc, c
    geometry: CameraGeometry
    M: int
    T: int | None = None
    t_span: tuple[float, float] | None = None
    pixels: np.ndarray | None = None  # (M, 2) int64 source (h, w), for scatter

    def __post_init__(self):
        if self.points.shape != (self.M, 5):
            raise ShapeError(
                f"batch must be ({self.M}, 5), got {self.points.shape}"
            )
        if self.pixels is not None and self.pixels.shape != (self.M, 2):
            raise ShapeError(
                f"pixels must be ({self.M}, 2), got {self.pixels.shape}"
            )


def make_events(t, h, w, p):
    """Pack parallel coordinate arrays into the event record dtype."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty(t.shape[0], dtype=EVENT_DTYPE)
    out["t"] = t
    out["h"] = np.asarray(h)
    out["w"] = np.asarray(w)
    out["p"] = np.asarray(p)
    return out


def validate_events(events, geometry=None):
    """Check the Event invariants; raises on the first violation."""
    if events.dtype != EVENT_DTYPE:
        raise ShapeError(f"expected event records, got dtype {events.dtype}")
    if len(events) == 0:
        return events
    if not np.all(np.isfinite(events["t"])):
        raise NumericError("non-finite timestamp")
    if events["t"].min() < 0:
        raise RangeError("negative timestamp")
    if not np.all(np.abs(events["p"]) == 1):
        raise RangeError("polarity must be +1 or -1")
    if geometry is not None:
        if events["h"].max() >= geometry.H or events["w"].max() >= geometry.W:
            raise RangeError("pixel index outside sensor geometry")
    return events


def synth_events(frames, timestamps, geometry):
    """Run the threshold trigger over a log-intensity frame sequence.

    A pixel fires whenever its value drifts more than ``tau`` from the
    value at its previous trigger (the first frame seeds the reference,
    emitting nothing); polarity is the drift's sign and the reference
    then jumps to the current value.  One event per pixel per frame at
    most.  Events within a frame are emitted in row-major pixel order.
    """
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    timestamps = np.asarray(timestamps, dtype=np.float64)
    if len(frames) < 2:
        raise ParameterError("need at least two frames")
    if len(frames) != len(timestamps):
        raise ShapeError("one timestamp per frame required")
    if np.any(np.diff(timestamps) <= 0):
        raise ParameterError("timestamps must be strictly increasing")
    if timestamps[0] < 0:
        raise RangeError("negative timestamp")
    shape = (geometry.H, geometry.W)
    for f in frames:
        if f.shape != shape:
            raise ShapeError(f"frame shape {f.shape} does not match sensor {shape}")

    ref = frames[0].copy()
    chunks = []
    for f, ts in zip(frames[1:], timestamps[1:]):
        diff = f - ref
        trig = np.abs(diff) > geometry.tau  # strict, per the trigger rule
        if trig.any():
            hh, ww = np.nonzero(trig)
            pol = np.where(diff[trig] > 0, 1, -1).astype(np.int8)
            chunks.append(make_events(np.full(hh.shape, ts), hh, ww, pol))
            ref[trig] = f[trig]
    if not chunks:
        return np.empty(0, dtype=EVENT_DTYPE)
    return np.concatenate(chunks)


def segment_index(t, T, t_span):
    """Temporal segment of each timestamp: floor(T*(t-t0)/span), clamped."""
    t0, t1 = t_span
    span = t1 - t0
    if span <= 0:
        return np.zeros(np.shape(t), dtype=np.int64)
    seg = np.floor(T * (np.asarray(t, dtype=np.float64) - t0) / span).astype(np.int64)
    return np.clip(seg, 0, T - 1)


def fuse(events, T, t_span=None):
    """Merge events sharing a pixel and temporal segment.

    Returns one record per occupied (pixel, segment) cell with the mean
    timestamp, signed polarity sum, and member count, sorted by
    (h, w, segment).  Conserves mass: sum of counts equals len(events).
    """
    if not 1 <= T <= 1 << 20:  # upper cap keeps the composite key exact
        raise ParameterError(f"T must be in [1, 2**20], got {T}")
    if len(events) == 0:
        return np.empty(0, dtype=FUSED_DTYPE)
    t = events["t"]
    if t_span is None:
        t_span = (float(t.min()), float(t.max()))
    seg = segment_index(t, T, t_span)

    h = events["h"].astype(np.int64)
    w = events["w"].astype(np.int64)
    # composite key sorts by (h, w, segment); strides keep it collision-free
    key = (h * (w.max() + 1) + w) * T + seg
    uniq, inverse = np.unique(key, return_inverse=True)

    c = np.bincount(inverse, minlength=len(uniq))
    p_acc = np.bincount(inverse, weights=events["p"].astype(np.float64))
    t_sum = np.bincount(inverse, weights=t)

    out = np.empty(len(uniq), dtype=FUSED_DTYPE)
    out["h"] = (uniq // T) // (w.max() + 1)
    out["w"] = (uniq // T) % (w.max() + 1)
    out["t_avg"] = t_sum / c
    out["p_acc"] = np.round(p_acc).astype(np.int64)
    out["c"] = c
    return out


def normalize_points(fused, geometry, t_span, normalize_h_by_H=False):
    """Map fused events to the dimensionless (x1, x2, x3, p_acc, c) rows.

    Both pixel axes divide by sensor width (isotropic scale; flip
    ``normalize_h_by_H`` for the aspect-preserving alternative).  Time is
    rescaled so the span endpoints hit 0 and 1; a zero-length span maps
    everything to 0.
    """
    t0, t1 = t_span
    span = t1 - t0
    pts = np.empty((len(fused), 5), dtype=np.float64)
    pts[:, 0] = fused["h"] / (geometry.H if normalize_h_by_H else geometry.W)
    pts[:, 1] = fused["w"] / geometry.W
    pts[:, 2] = 0.0 if span <= 0 else (fused["t_avg"] - t0) / span
    pts[:, 3] = fused["p_acc"]
    pts[:, 4] = fused["c"]
    return pts


def sample_and_normalize(
    fused, M, geometry, seed, t_span=None, T=None, normalize_h_by_H=False
):
    """Draw exactly M fused events and normalize them into an EventBatch.

    Uniform without replacement when enough points exist, with
    replacement otherwise (duplicates are benign downstream).  The draw
    is deterministic in ``seed``.
    """
    if M < 1:
        raise ParameterError(f"M must be at least 1, got {M}")
    if len(fused) == 0:
        raise ParameterError("cannot sample from an empty batch")
    if t_span is None:
        t_span = (float(fused["t_avg"].min()), float(fused["t_avg"].max()))
    gen = rng.stream(seed, rng.SAMPLING)
    idx = gen.choice(len(fused), size=M, replace=len(fused) < M)
    picked = fused[idx]
    pts = normalize_points(picked, geometry, t_span, normalize_h_by_H)
    pixels = np.stack(
        [picked["h"].astype(np.int64), picked["w"].astype(np.int64)], axis=1
    )
    return EventBatch(
        points=pts, geometry=geometry, M=M, T=T, t_span=t_span, pixels=pixels
    )
