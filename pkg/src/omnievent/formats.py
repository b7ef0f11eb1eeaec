"""On-disk containers: event CSV, EVT1 event records, OMNX/OMNT tensors.

All binary layouts are little-endian with 4-byte ASCII magics:

* ``EVT1`` — u32 count, then packed records (f64 t, u16 h, u16 w, i8 p).
* ``OMNX`` — one tensor: u8 dtype code, u8 rank, u32 dims[], row-major
  payload.
* ``OMNT`` — named tensor set: u32 count, then per tensor a u16-length
  utf-8 name followed by the OMNX-style dtype/rank/dims/payload.

Dtype codes: 1 = f32, 2 = f64, 3 = i64.  Event CSV carries a ``t,h,w,p``
header and one event per row; fused CSV uses ``h,w,t_avg,p_acc,c``.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .events import EVENT_DTYPE, FUSED_DTYPE, make_events

EVT1_MAGIC = b"EVT1"
OMNX_MAGIC = b"OMNX"
OMNT_MAGIC = b"OMNT"

_CODE_TO_DTYPE = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<i8")}
_DTYPE_TO_CODE = {v: k for k, v in _CODE_TO_DTYPE.items()}

EVENT_CSV_HEADER = ["t", "h", "w", "p"]
FUSED_CSV_HEADER = ["h", "w", "t_avg", "p_acc", "c"]


# -- event CSV ---------------------------------------------------------------


def event_rows(events):
    """CSV field lists, one per event; ``repr`` keeps timestamps lossless."""
    for rec in events:
        yield [repr(float(rec["t"])), int(rec["h"]), int(rec["w"]), int(rec["p"])]


def write_events_csv(path, events):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_CSV_HEADER)
        writer.writerows(event_rows(events))


def read_events_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected 't,h,w,p' header")
        if [c.strip() for c in header] != EVENT_CSV_HEADER:
            raise FormatError(f"{path}: expected header 't,h,w,p', got {header!r}")
        t, h, w, p = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                t.append(float(row[0]))
                h.append(int(row[1]))
                w.append(int(row[2]))
                p.append(int(row[3]))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if any(v < 0 or v >= 1 << 16 for v in h + w):
        raise FormatError(f"{path}: pixel index outside the u16 record range")
    return make_events(t, h, w, p)


# -- fused CSV ---------------------------------------------------------------


def fused_rows(fused):
    for rec in fused:
        yield [
            int(rec["h"]),
            int(rec["w"]),
            repr(float(rec["t_avg"])),
            int(rec["p_acc"]),
            int(rec["c"]),
        ]


def write_fused_csv(path, fused):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FUSED_CSV_HEADER)
        writer.writerows(fused_rows(fused))


def read_fused_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != FUSED_CSV_HEADER:
            raise FormatError(
                f"{path}: expected header 'h,w,t_avg,p_acc,c', got {header!r}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append(
                    (int(row[0]), int(row[1]), float(row[2]), int(row[3]), int(row[4]))
                )
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    return np.array(rows, dtype=FUSED_DTYPE)


# -- EVT1 --------------------------------------------------------------------


def write_evt1(path, events):
    if events.dtype != EVENT_DTYPE:
        raise FormatError(f"expected event records, got dtype {events.dtype}")
    with open(path, "wb") as fh:
        fh.write(EVT1_MAGIC)
        fh.write(struct.pack("<I", len(events)))
        fh.write(events.tobytes())


def read_evt1(path):
    blob = Path(path).read_bytes()
    if len(blob) < 8 or blob[:4] != EVT1_MAGIC:
        raise FormatError(f"{path}: not an EVT1 file")
    (count,) = struct.unpack_from("<I", blob, 4)
    expected = 8 + count * EVENT_DTYPE.itemsize
    if len(blob) != expected:
        raise FormatError(
            f"{path}: truncated or oversized payload "
            f"({len(blob)} bytes, header implies {expected})"
        )
    return np.frombuffer(blob, dtype=EVENT_DTYPE, count=count, offset=8).copy()


# -- OMNX / OMNT -------------------------------------------------------------


def _dtype_code(array):
    key = array.dtype.newbyteorder("<")
    if key not in _DTYPE_TO_CODE:
        raise FormatError(f"no dtype code for {array.dtype}")
    return _DTYPE_TO_CODE[key]


def _pack_tensor(array):
    code = _dtype_code(array)
    # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d,
    # and tobytes() emits C order for any layout anyway
    array = np.asarray(array, dtype=_CODE_TO_DTYPE[code])
    if array.ndim > 255:
        raise FormatError("rank exceeds u8")
    if any(d >= 1 << 32 for d in array.shape):
        raise FormatError("dimension exceeds u32")
    head = struct.pack("<BB", code, array.ndim)
    head += struct.pack(f"<{array.ndim}I", *array.shape)
    return head + array.tobytes()


def _unpack_tensor(blob, offset, path):
    if offset + 2 > len(blob):
        raise FormatError(f"{path}: truncated tensor header")
    code, rank = struct.unpack_from("<BB", blob, offset)
    offset += 2
    if code not in _CODE_TO_DTYPE:
        raise FormatError(f"{path}: unknown dtype code {code}")
    if offset + 4 * rank > len(blob):
        raise FormatError(f"{path}: truncated dims")
    dims = struct.unpack_from(f"<{rank}I", blob, offset)
    offset += 4 * rank
    dtype = _CODE_TO_DTYPE[code]
    n = int(np.prod(dims, dtype=np.int64)) if rank else 1
    nbytes = n * dtype.itemsize
    if offset + nbytes > len(blob):
        raise FormatError(f"{path}: truncated payload")
    array = np.frombuffer(blob, dtype=dtype, count=n, offset=offset).reshape(dims)
    return array.copy(), offset + nbytes


def write_omnx(path, array):
    """Single-tensor output container."""
    with open(path, "wb") as fh:
        fh.write(OMNX_MAGIC)
        fh.write(_pack_tensor(array))


def read_omnx(path):
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != OMNX_MAGIC:
        raise FormatError(f"{path}: not an OMNX file")
    array, end = _unpack_tensor(blob, 4, path)
    if end != len(blob):
        raise FormatError(f"{path}: {len(blob) - end} trailing bytes")
    return array


def write_omnt(path, tensors):
    """Named-tensor checkpoint; ``tensors`` is an ordered name->array map."""
    with open(path, "wb") as fh:
        fh.write(OMNT_MAGIC)
        fh.write(struct.pack("<I", len(tensors)))
        for name, array in tensors.items():
            encoded = name.encode("utf-8")
            if len(encoded) >= 1 << 16:
                raise FormatError(f"tensor name too long: {name[:32]}...")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(_pack_tensor(array))


def read_omnt(path):
    blob = Path(path).read_bytes()
    if len(blob) < 8 or blob[:4] != OMNT_MAGIC:
        raise FormatError(f"{path}: not an OMNT file")
    (count,) = struct.unpack_from("<I", blob, 4)
    offset = 8
    tensors = {}
    for _ in range(count):
        if offset + 2 > len(blob):
            raise FormatError(f"{path}: truncated name header")
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        if offset + name_len > len(blob):
            raise FormatError(f"{path}: truncated name")
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        if name in tensors:
            raise FormatError(f"{path}: duplicate tensor name {name!r}")
        tensors[name], offset = _unpack_tensor(blob, offset, path)
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} trailing bytes")
    return tensors
