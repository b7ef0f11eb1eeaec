"""Command-line front end.

Subcommands cover the whole artifact path: synthesize or ingest event
streams (CSV / EVT1), fuse them, inspect curve codes and serializations,
run the full pipeline down to an OMNX grid tensor, self-check the build,
and benchmark scaling behaviour.

Configuration comes from an optional flat ``key = value`` file; dedicated
flags and ``--set key=value`` override file values, and ``OMNIEVENT_SEED``
serves as the seed fallback when neither mentions one.  Exit codes:
0 success, 1 failed self-checks, 2 bad configuration, 3 I/O failure.
"""

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .autodiff import Tensor
from .bench import PATCH_SWEEP, bench_patch_vs_knn, sweep_patch_sizes
from .blocks import (
    BlockParams,
    LinearParams,
    embed,
    encoder_block,
    grad_check,
    params_of,
)
from .config import SCHEMA, build_config, parse_config_text
from .errors import ConfigError, FormatError, OmniEventError, ParameterError
from .events import fuse, normalize_points, synth_events
from .formats import (
    EVENT_CSV_HEADER,
    FUSED_CSV_HEADER,
    event_rows,
    fused_rows,
    read_events_csv,
    read_evt1,
    write_events_csv,
    write_evt1,
    write_fused_csv,
    write_omnx,
)
from .pipeline import run_pipeline
from .serialize import ALL_ORDERS, pool_plan, receptive_field, serialize
from .sfc import CurveOrder, decode, encode
from .sta import StaConfig, StaParams, sta_forward


# -- configuration plumbing ----------------------------------------------------


def _effective_config(args):
    """File config + --set/flag overrides + OMNIEVENT_SEED fallback."""
    if getattr(args, "config", None):
        items = parse_config_text(Path(args.config).read_text())
    else:
        items = {}
    for kv in getattr(args, "set", None) or ():
        key, eq, value = kv.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key or not value:
            raise ConfigError(f"--set expects key=value, got {kv!r}")
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r} (from --set)")
        items[key] = (value, None)  # flag origin: no line to blame
    for key, attr in (
        ("seed", "seed"),
        ("T", "T"),
        ("M", "M"),
        ("paths.input", "input"),
        ("paths.output", "output"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            items[key] = (str(value), None)
    if "seed" not in items:
        env = os.environ.get("OMNIEVENT_SEED")
        if env is not None and env.strip():
            try:
                int(env.strip(), 0)
            except ValueError:
                raise ConfigError(
                    f"OMNIEVENT_SEED must be an integer, got {env!r}"
                ) from None
            items["seed"] = (env.strip(), None)
    return build_config(items)


def _require(value, what):
    if not value:
        raise ConfigError(f"{what} path required (--{'in' if what == 'input' else 'out'} or paths.{what})")
    return value


def _read_events(path):
    if Path(path).suffix == ".evt1":
        return read_evt1(path)
    return read_events_csv(path)


def _write_events(path, events):
    if path is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(EVENT_CSV_HEADER)
        writer.writerows(event_rows(events))
    elif Path(path).suffix == ".evt1":
        write_evt1(path, events)
    else:
        write_events_csv(path, events)


def _status(msg, artifact_on_stdout):
    # keep stdout clean when it carries the artifact itself
    print(msg, file=sys.stderr if artifact_on_stdout else sys.stdout)


# -- subcommands ---------------------------------------------------------------


def cmd_synth(args):
    cfg = _effective_config(args)
    geo = cfg.geometry
    if args.scene == "ramp":
        # one pixel stepping 0 -> 1.5tau -> 3.0tau: triggers at the second
        # and third frames, both positive
        frames = [np.zeros((geo.H, geo.W)) for _ in range(3)]
        px = (geo.H // 2, geo.W // 2)
        frames[1][px] = 1.5 * geo.tau
        frames[2][px] = 3.0 * geo.tau
        times = [0.0, 0.5, 1.0]
    else:  # a bright square sweeping the frame, one pixel per step
        n = max(args.frames, 2)
        side = max(geo.H // 4, 1)
        frames, times = [], np.linspace(0.0, 1.0, n).tolist()
        for i in range(n):
            img = np.zeros((geo.H, geo.W))
            top = i % max(geo.H - side, 1)
            left = i % max(geo.W - side, 1)
            img[top : top + side, left : left + side] = 2.0 * geo.tau
            frames.append(img)
    events = synth_events(frames, times, geo)
    _write_events(cfg.output_path, events)
    _status(
        f"synth {args.scene}: {len(events)} events"
        + (f" -> {cfg.output_path}" if cfg.output_path else ""),
        cfg.output_path is None,
    )
    return 0


def cmd_fuse(args):
    cfg = _effective_config(args)
    events = _read_events(_require(cfg.input_path, "input"))
    fused = fuse(events, cfg.T)
    if cfg.output_path is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(FUSED_CSV_HEADER)
        writer.writerows(fused_rows(fused))
    else:
        write_fused_csv(cfg.output_path, fused)
    _status(
        f"fused {len(events)} events into {len(fused)} cells (T={cfg.T})"
        + (f" -> {cfg.output_path}" if cfg.output_path else ""),
        cfg.output_path is None,
    )
    return 0


def cmd_serialize(args):
    cfg = _effective_config(args)
    events = _read_events(_require(cfg.input_path, "input"))
    if len(events) == 0:
        raise ParameterError("no events to serialize")
    fused = fuse(events, cfg.T)
    t_span = (float(events["t"].min()), float(events["t"].max()))
    pts = normalize_points(fused, cfg.geometry, t_span, cfg.normalize_h_by_H)
    bc = cfg.branches[args.branch]
    order = bc.order_for(args.order)
    ser = serialize(pts, order, bc, patch_size=args.patch_size)

    n = ser.n_points
    ranks = np.arange(n, dtype=np.int64)
    patch = np.searchsorted(ser.patch_offsets, ranks, side="right") - 1
    header = ["rank", "index", "code", "patch"]
    columns = [ranks, ser.perm, ser.sorted_codes, patch]
    if args.shift:
        _, gid_sorted = pool_plan(ser, args.shift)
        header.append("group")
        columns.append(gid_sorted)
    rows = np.stack(columns, axis=1)

    if cfg.output_path is None:
        shown = rows[: args.limit]
        widths = [max(len(h), 12) for h in header]
        print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
        for row in shown:
            print("  ".join(str(int(v)).rjust(w) for v, w in zip(row, widths)))
        if len(shown) < n:
            print(f"... ({n - len(shown)} more rows; --out writes them all)")
    else:
        with open(cfg.output_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows([int(v) for v in row] for row in rows)
    _status(
        f"order={order.kind} dims={order.dims} bits={order.bits} "
        f"points={n} patches={ser.n_patches}"
        + (f" -> {cfg.output_path}" if cfg.output_path else ""),
        cfg.output_path is None,
    )
    return 0


def _parse_cells(raw):
    cells = []
    for item in raw:
        try:
            cells.append(tuple(int(part, 0) for part in item.split(",")))
        except ValueError:
            raise ParameterError(f"bad cell {item!r}, expected h,w or x,y,z") from None
    if len({len(c) for c in cells}) != 1:
        raise ParameterError("all cells must share one arity")
    return np.array(cells, dtype=np.int64)


def cmd_encode(args):
    cells = _parse_cells(args.cells)
    order = CurveOrder(args.order, cells.shape[1], args.bits)
    for cell, code in zip(cells, encode(cells, order)):
        print(f"{','.join(str(int(v)) for v in cell)} -> {int(code)}")
    return 0


def cmd_decode(args):
    try:
        codes = np.array([int(c, 0) for c in args.codes], dtype=np.int64)
    except ValueError:
        raise ParameterError("codes must be integers") from None
    order = CurveOrder(args.order, args.dims, args.bits)
    for code, cell in zip(codes, decode(codes, order)):
        print(f"{int(code)} -> {','.join(str(int(v)) for v in cell)}")
    return 0


def cmd_tensorize(args):
    cfg = _effective_config(args)
    events = _read_events(_require(cfg.input_path, "input"))
    out_path = _require(cfg.output_path, "output")
    grid = run_pipeline(events, cfg)
    write_omnx(out_path, grid.data)
    h, w, c = grid.data.shape
    print(
        f"wrote {out_path}: {h}x{w}x{c} {grid.data.dtype} grid "
        f"({grid.n_learned} learned + {c - grid.n_learned} statistical channels)"
    )
    return 0


def cmd_selfcheck(args):
    del args
    checks = []

    def run(name, fn):
        try:
            checks.append((name, True, fn()))
        except Exception as e:  # report every failure, crash on none
            checks.append((name, False, f"{type(e).__name__}: {e}"))

    def bijection(kind, dims, bits):
        def check():
            order = CurveOrder(kind, dims, bits)
            codes = np.arange(1 << (dims * bits), dtype=np.int64)
            if not np.array_equal(encode(decode(codes, order), order), codes):
                raise AssertionError("round-trip mismatch")
            return f"{len(codes)} codes"

        return check

    for kind in ("z", "hilbert"):
        for dims, bits in ((2, 10), (3, 6)):
            run(f"codec bijection {kind} {dims}-d b={bits}", bijection(kind, dims, bits))

    def enc_grad():
        p = BlockParams.from_rng(np.random.default_rng(5), channels=8, n_heads=2)
        x = Tensor(np.random.default_rng(6).normal(size=(32, 8)))
        target = np.random.default_rng(7).normal(size=(32, 8))

        def loss():
            r = encoder_block(x, p) - Tensor(target)
            return (r * r).mean()

        err = grad_check(loss, params_of(p), eps=1e-5)
        if not err < 1e-4:
            raise AssertionError(f"max rel err {err:.3e}")
        return f"max rel err {err:.1e}"

    run("gradients encoder_block C=8 N=32", enc_grad)

    def sta_grad():
        sta_cfg = StaConfig(channels=4, seq_len=8, rounds=1, out_channels=8)
        params = StaParams.from_rng(np.random.default_rng(8), sta_cfg)
        gen = np.random.default_rng(9)
        fs, ft, fst = (Tensor(gen.normal(size=(1, 4, 8))) for _ in range(3))
        target = gen.normal(size=(1, 8, 8))

        def loss():
            r = sta_forward(fs, ft, fst, params) - Tensor(target)
            return (r * r).mean()

        err = grad_check(loss, params_of(params), eps=1e-5)
        if not err < 1e-4:
            raise AssertionError(f"max rel err {err:.3e}")
        return f"max rel err {err:.1e}"

    run("gradients sta C=4 N=8", sta_grad)

    def embed_grad():
        lin = LinearParams.from_rng(np.random.default_rng(10), 5, 8)
        pts = Tensor(np.random.default_rng(11).normal(size=(16, 5)))

        def loss():
            e = embed(pts, lin)
            return (e * e).mean()

        err = grad_check(loss, [lin.weight, lin.bias], eps=1e-6)
        if not err < 1e-4:
            raise AssertionError(f"max rel err {err:.3e}")
        return f"max rel err {err:.1e}"

    run("gradients embed 5->8", embed_grad)

    width = max(len(name) for name, _, _ in checks)
    for name, ok, detail in checks:
        print(f"{'ok  ' if ok else 'FAIL'} {name:<{width}}  {detail}")
    passed = sum(ok for _, ok, _ in checks)
    print(f"selfcheck: {passed}/{len(checks)} passed")
    return 0 if passed == len(checks) else 1


def cmd_bench(args):
    cfg = _effective_config(args)
    if args.mode == "scaling":
        sizes = tuple(int(s) for s in (args.sizes or "2048,4096,8192").split(","))
        report = bench_patch_vs_knn(
            sizes, K=args.K, p=args.patch_size, seed=cfg.seed, repeats=args.repeats
        )
    else:
        sizes = (
            tuple(int(s) for s in args.sizes.split(",")) if args.sizes else PATCH_SWEEP
        )
        report = sweep_patch_sizes(
            n=args.n, sizes=sizes, seed=cfg.seed, repeats=args.repeats
        )
    print(report.format_table())
    if cfg.output_path:
        Path(cfg.output_path).write_text(report.to_csv())
        print(f"wrote {cfg.output_path}")
    return 0


def cmd_info(args):
    cfg = _effective_config(args)
    geo = cfg.geometry
    print(f"omnievent {__version__}")
    print(f"geometry : {geo.H} x {geo.W}, tau={geo.tau}")
    print(f"stream   : T={cfg.T} segments, M={cfg.M} sampled points, seed={cfg.seed}")
    print(
        f"sta      : channels={cfg.sta.channels} -> out={cfg.sta.out_channels}, "
        f"rounds={cfg.sta.rounds}"
    )
    print(f"ft       : reduce={cfg.reduce}")
    print()
    print("receptive field per pooling level (points reachable by patch attention):")
    for b in ("S", "T", "ST"):
        bc = cfg.branches[b]
        shifts = [0]
        for y in bc.y_schedule:
            shifts.append(shifts[-1] + y)
        rf = [receptive_field(bc.enc_patch[i], 1, s) for i, s in enumerate(shifts)]
        chain = " -> ".join(str(v) for v in rf)
        print(f"  branch {b:<2} (p={bc.enc_patch[0]}, shifts={list(bc.y_schedule)}): {chain}")
    return 0


# -- parser --------------------------------------------------------------------


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="flat 'key = value' configuration file")
    common.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one configuration key (repeatable)",
    )
    common.add_argument(
        "--seed", help="RNG seed; overrides the config file, OMNIEVENT_SEED is the fallback"
    )
    common.add_argument(
        "--threads",
        type=int,
        default=1,
        help="stage parallelism cap; this implementation runs stages serially (default 1)",
    )

    io = argparse.ArgumentParser(add_help=False)
    io.add_argument("-i", "--in", dest="input", metavar="FILE", help="input events (.csv or .evt1)")
    io.add_argument("-o", "--out", dest="output", metavar="FILE", help="output artifact path")

    parser = argparse.ArgumentParser(
        prog="omnievent",
        description="event-stream serialization and attention toolkit",
        epilog="exit codes: 0 success, 1 failed checks, 2 bad configuration, 3 I/O failure",
    )
    parser.add_argument("--version", action="version", version=f"omnievent {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser(
        "synth", parents=[common, io], help="generate synthetic events from a toy scene"
    )
    p.add_argument("--scene", choices=("ramp", "square"), default="ramp",
                   help="ramp: one pixel crossing the threshold twice; square: a sweeping bright square")
    p.add_argument("--frames", type=int, default=16, help="frame count for --scene square")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fuse", parents=[common, io], help="fuse events per (pixel, temporal segment)")
    p.add_argument("--T", help="temporal segment count")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser(
        "serialize", parents=[common, io],
        help="order fused events along a space-filling curve and dump the layout",
    )
    p.add_argument("--T", help="temporal segment count")
    p.add_argument("--branch", choices=("S", "T", "ST"), default="ST",
                   help="coordinate projection to serialize (default ST)")
    p.add_argument("--order", choices=ALL_ORDERS, default="hilbert", help="curve kind")
    p.add_argument("--patch-size", type=int, help="override the branch patch size")
    p.add_argument("--shift", type=int, default=0,
                   help="also report pooling group ids for this code shift")
    p.add_argument("--limit", type=int, default=20, help="stdout row limit (default 20)")
    p.set_defaults(func=cmd_serialize)

    p = sub.add_parser("encode", parents=[common], help="map grid cells to curve codes")
    p.add_argument("--order", choices=ALL_ORDERS, default="hilbert", help="curve kind")
    p.add_argument("--bits", type=int, default=10, help="bits per axis (default 10)")
    p.add_argument("cells", nargs="+", metavar="CELL", help="comma-separated cell, e.g. 3,5")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="map curve codes back to grid cells")
    p.add_argument("--order", choices=ALL_ORDERS, default="hilbert", help="curve kind")
    p.add_argument("--bits", type=int, default=10, help="bits per axis (default 10)")
    p.add_argument("--dims", type=int, default=2, help="cell arity (default 2)")
    p.add_argument("codes", nargs="+", metavar="CODE", help="integer curve code")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser(
        "tensorize", parents=[common, io],
        help="full pipeline: events file -> grid tensor (OMNX)",
    )
    p.add_argument("--T", help="temporal segment count")
    p.add_argument("--M", help="sampled point count")
    p.set_defaults(func=cmd_tensorize)

    p = sub.add_parser(
        "selfcheck", parents=[common],
        help="codec bijection and gradient checks; nonzero exit on failure",
    )
    p.set_defaults(func=cmd_selfcheck)

    p = sub.add_parser("bench", parents=[common, io], help="timing and locality benchmarks")
    p.add_argument("--mode", choices=("scaling", "patchsweep"), default="scaling",
                   help="scaling: serialization vs brute KNN over point count; "
                   "patchsweep: group locality over patch size")
    p.add_argument("--sizes", help="comma list: point counts (scaling) or patch sizes (patchsweep)")
    p.add_argument("--n", type=int, default=4096, help="point count for patchsweep")
    p.add_argument("--K", type=int, default=512, help="neighbour count for the KNN baseline")
    p.add_argument("--patch-size", type=int, default=512, help="patch size for scaling mode")
    p.add_argument("--repeats", type=int, default=1, help="best-of-N timing repeats")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser(
        "info", parents=[common],
        help="print the effective configuration and per-branch receptive fields",
    )
    p.set_defaults(func=cmd_info)

    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as e:
        print(f"io error: {e}", file=sys.stderr)
        return 3
    except OmniEventError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
