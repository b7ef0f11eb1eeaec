"""Flat text configuration for the pipeline.

One ``key = value`` pair per line, ``#`` comments, dotted keys, a closed
schema: anything unknown is rejected with its line number.  Tuples are
comma-separated.  Defaults reproduce the reference branch tables, so an
empty config is a valid one.
"""

from dataclasses import dataclass, replace

from .errors import ConfigError, OmniEventError
from .events import CameraGeometry
from .serialize import BRANCHES, branch_defaults
from .sta import StaConfig


def _int(s):
    return int(s, 0)


def _float(s):
    return float(s)


def _bool(s):
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _str(s):
    return s


def _ints(s):
    if s in ("()", "none"):  # single-stage branches need empty dec lists
        return ()
    return tuple(int(part.strip(), 0) for part in s.split(","))


def _strs(s):
    return tuple(part.strip() for part in s.split(","))


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"must be one of {options}, got {s!r}")
        return s

    return parse


_BRANCH_FIELDS = {
    "orders": _strs,
    "enc_depths": _ints,
    "enc_channels": _ints,
    "enc_heads": _ints,
    "enc_patch": _ints,
    "dec_depths": _ints,
    "dec_channels": _ints,
    "dec_heads": _ints,
    "dec_patch": _ints,
    "stride": _ints,
    "y_schedule": _ints,
    "mlp_ratio": _int,
    "in_channels": _int,
    "bits": _int,
}

SCHEMA = {
    "geometry.H": _int,
    "geometry.W": _int,
    "geometry.tau": _float,
    "T": _int,
    "M": _int,
    "seed": _int,
    "normalize_h_by_H": _bool,
    "sta.channels": _int,
    "sta.rounds": _int,
    "ft.reduce": _choice("max", "mean"),
    "paths.input": _str,
    "paths.output": _str,
}
for _b in BRANCHES:
    for _f, _p in _BRANCH_FIELDS.items():
        SCHEMA[f"branch.{_b}.{_f}"] = _p


@dataclass(frozen=True)
class PipelineConfig:
    geometry: CameraGeometry
    T: int
    M: int
    seed: int
    normalize_h_by_H: bool
    branches: dict  # branch name -> BranchConfig
    sta: StaConfig
    reduce: str
    input_path: str | None = None
    output_path: str | None = None


def parse_config_text(text):
    """Flat file -> ordered {key: (raw value, line number)}; syntax only."""
    items = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in items:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        items[key] = (value, lineno)
    return items


def build_config(items=None):
    """Typed PipelineConfig from parsed items (omitted keys keep defaults)."""
    items = items or {}
    values = {}
    for key, (raw, lineno) in items.items():
        try:
            values[key] = SCHEMA[key](raw)
        except ValueError as e:
            raise ConfigError(f"bad value for {key!r}: {e}", lineno) from e

    branches = {b: branch_defaults(b) for b in BRANCHES}
    overrides = {b: {} for b in BRANCHES}
    first_line = {}
    for key, (raw, lineno) in items.items():
        if not key.startswith("branch."):
            continue
        _, b, f = key.split(".")
        overrides[b][f] = values[key]
        first_line.setdefault(b, lineno)
    for b, fields in overrides.items():
        if not fields:
            continue
        try:  # one replace per branch: stage-list lengths must agree jointly
            branches[b] = replace(branches[b], **fields)
        except (OmniEventError, ValueError) as e:
            raise ConfigError(
                f"invalid branch {b} configuration: {e}", first_line[b]
            ) from e

    def get(key, default):
        return values.get(key, default)

    m = get("M", 4096)
    sta_channels = get("sta.channels", 64)
    try:
        geometry = CameraGeometry(
            H=get("geometry.H", 64),
            W=get("geometry.W", 64),
            tau=get("geometry.tau", 0.2),
        )
        sta = StaConfig(
            channels=sta_channels,
            seq_len=m,
            rounds=get("sta.rounds", 4),
            out_channels=2 * sta_channels,
        )
        cfg = PipelineConfig(
            geometry=geometry,
            T=get("T", 8),
            M=m,
            seed=get("seed", 0),
            normalize_h_by_H=get("normalize_h_by_H", False),
            branches=branches,
            sta=sta,
            reduce=get("ft.reduce", "max"),
            input_path=get("paths.input", None),
            output_path=get("paths.output", None),
        )
    except OmniEventError as e:
        raise ConfigError(str(e)) from e
    if cfg.T < 1 or cfg.M < 1:
        raise ConfigError(f"T and M must be >= 1, got T={cfg.T}, M={cfg.M}")
    for b, bc in branches.items():
        if bc.dec_channels:
            want = bc.dec_channels[0]
        else:
            want = bc.enc_channels[-1]
        if want != sta_channels:
            raise ConfigError(
                f"branch {b} outputs {want} channels but sta.channels is "
                f"{sta_channels}"
            )
    return cfg


def load_config(text):
    return build_config(parse_config_text(text))


DEFAULT_CONFIG = load_config("")
