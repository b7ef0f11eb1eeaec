"""Grid tensorization: point features back onto the sensor plane.

Sampled point features are scattered to their source pixels with a
per-pixel reduction (max by default), yielding dense learned channels;
four statistical channels computed from the *raw* pre-sampling stream
(per-polarity counts and normalized latest timestamps) are appended to
compensate for what sampling dropped.  The scatter is differentiable:
an optional 1-wide linear pre-map and the feature inputs both receive
gradients, so the grid can sit under a training objective.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, gather_rows, scatter_rows, segment_max, segment_sum
from .errors import ParameterError, ShapeError
from .events import CameraGeometry, validate_events

STAT_CHANNELS = ("pos_count", "neg_count", "pos_latest", "neg_latest")

REDUCTIONS = ("max", "mean")


@dataclass
class GridTensor:
    """Dense H x W x C_out grid: learned channels then the 4 statistical ones."""

    data: np.ndarray
    geometry: CameraGeometry
    channel_names: tuple[str, ...]

    def __post_init__(self):
        expected = (self.geometry.H, self.geometry.W, len(self.channel_names))
        if self.data.shape != expected:
            raise ShapeError(f"grid must be {expected}, got {self.data.shape}")

    @property
    def n_learned(self):
        return len(self.channel_names) - len(STAT_CHANNELS)


def scatter(batch, features, reduce="max", pre_map=None, geometry=None):
    """Scatter per-point features to their (h, w) pixels, reducing collisions.

    ``features`` is (M, C) — a Tensor keeps the result differentiable, a
    plain array comes back as one.  Pixels no point maps to stay zero.
    ``pre_map``, when given, is a callable applied to the features before
    scattering (the learned 1-wide map; identity when omitted).
    """
    geometry = geometry if geometry is not None else batch.geometry
    if reduce not in REDUCTIONS:
        raise ParameterError(f"reduce must be one of {REDUCTIONS}, got {reduce!r}")
    if batch.pixels is None:
        raise ParameterError("batch carries no source pixels to scatter to")
    was_array = not isinstance(features, Tensor)
    f = Tensor(np.asarray(features)) if was_array else features
    if f.ndim != 2 or f.shape[0] != batch.M:
        raise ShapeError(f"features must be ({batch.M}, C), got {f.shape}")
    if pre_map is not None:
        f = pre_map(f)

    h, w = geometry.H, geometry.W
    n_cells = h * w
    if batch.M == 0:
        zero = np.zeros((h, w, f.shape[1]), dtype=f.dtype)
        return zero if was_array else Tensor(zero)

    pid = batch.pixels[:, 0] * w + batch.pixels[:, 1]
    if pid.min() < 0 or pid.max() >= n_cells:
        raise ShapeError("pixel index outside sensor geometry")
    order = np.argsort(pid, kind="stable")
    spid = pid[order]
    new_run = np.empty(len(spid), dtype=bool)
    new_run[0] = True
    new_run[1:] = spid[1:] != spid[:-1]
    starts = np.nonzero(new_run)[0]

    fs = gather_rows(f, order)
    if reduce == "max":
        pooled = segment_max(fs, starts)
    else:
        counts = np.diff(np.append(starts, len(spid)))
        pooled = segment_sum(fs, starts) * (1.0 / counts)[:, None]
    grid = scatter_rows(pooled, spid[starts], n_cells).reshape(h, w, f.shape[1])
    return grid.data if was_array else grid


def statistical_channels(events, geometry, t_span=None):
    """Per-pixel (pos count, neg count, latest pos ts, latest neg ts).

    Timestamps normalize to [0, 1] over the stream's span (or the given
    one); a zero-length span puts 1.0 at occupied pixels.  Computed on
    the full raw stream — never the sampled subset.
    """
    validate_events(events, geometry)
    h, w = geometry.H, geometry.W
    out = np.zeros((h, w, 4), dtype=np.float64)
    if len(events) == 0:
        return out
    t = events["t"]
    if t_span is None:
        t_span = (float(t.min()), float(t.max()))
    t0, t1 = t_span
    span = t1 - t0

    pid = events["h"].astype(np.int64) * w + events["w"].astype(np.int64)
    for k, mask in ((0, events["p"] > 0), (1, events["p"] < 0)):
        out[..., k] = np.bincount(pid[mask], minlength=h * w).reshape(h, w)
        latest = np.full(h * w, -np.inf)
        np.maximum.at(latest, pid[mask], t[mask])
        occupied = latest > -np.inf
        scaled = (latest - t0) / span if span > 0 else np.ones_like(latest)
        out[..., 2 + k] = np.where(occupied, scaled, 0.0).reshape(h, w)
    return out


def tensorize(events, batch, features, reduce="max", pre_map=None, t_span=None):
    """Full grid assembly: scattered learned channels + statistical channels.

    ``events`` is the raw stream the batch was sampled from; statistical
    channels always reflect it in full.  Returns a GridTensor whose dtype
    follows the features.
    """
    data = features.data if isinstance(features, Tensor) else np.asarray(features)
    learned = scatter(batch, data, reduce=reduce, pre_map=pre_map)
    stats = statistical_channels(events, batch.geometry, t_span)
    grid = np.concatenate([learned, stats.astype(learned.dtype)], axis=-1)
    names = tuple(f"f{i}" for i in range(learned.shape[-1])) + STAT_CHANNELS
    return GridTensor(data=grid, geometry=batch.geometry, channel_names=names)
