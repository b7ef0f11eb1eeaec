"""Release acceptance suite: one test per gate, strictest stated tolerances.

Run ``pytest tests/test_acceptance.py -v`` to get a single pass/fail line
per criterion.  Each test prints its measured numbers, which pytest shows
on failure (or under ``-s``).
"""

import time
from pathlib import Path

import numpy as np

from omnievent.autodiff import Tensor, no_grad
from omnievent.bench import bench_patch_vs_knn
from omnievent.blocks import (
    BlockParams,
    LinearParams,
    embed,
    encoder_block,
    grad_check,
    params_of,
)
from omnievent.cli import main as cli_main
from omnievent.config import load_config
from omnievent.events import fuse, make_events, sample_and_normalize
from omnievent.formats import read_omnx
from omnievent.optim import Adam
from omnievent.oracles import group_events_oracle
from omnievent.pipeline import PipelineParams, pipeline_forward
from omnievent.serialize import grid_pool, receptive_field, serialize_codes
from omnievent.sfc import CurveOrder, decode, encode
from omnievent.sta import (
    StaConfig,
    StaParams,
    cross_attention,
    mutual_rounds,
    st_interaction,
    sta_forward,
)
from omnievent.tensorize import scatter

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def test_c01_codec_exhaustive_bijection():
    t0 = time.perf_counter()
    checked = 0
    for kind in ("z", "hilbert"):
        for dims, bits in ((2, 10), (3, 6)):
            order = CurveOrder(kind, dims, bits)
            codes = np.arange(1 << (dims * bits), dtype=np.int64)
            assert np.array_equal(encode(decode(codes, order), order), codes), (
                f"{kind} {dims}-d b={bits} round trip failed"
            )
            checked += len(codes)
    elapsed = time.perf_counter() - t0
    print(f"c01: {checked} codes round-tripped in {elapsed:.2f}s")
    assert elapsed < 10.0


def test_c02_hilbert_adjacency_full_grid():
    order = CurveOrder("hilbert", 2, 8)
    cells = decode(np.arange(1 << 16, dtype=np.int64), order)
    step = np.abs(np.diff(cells, axis=0)).sum(axis=1)
    violations = int(np.count_nonzero(step != 1))
    print(f"c02: {len(step)} consecutive pairs, {violations} violations")
    assert violations == 0


def test_c03_fusion_matches_grouping_oracle():
    gen = np.random.default_rng(303)
    for i in range(100):
        n = int(gen.integers(1, 10_001))
        T = int(gen.integers(1, 33))
        ev = make_events(
            np.sort(gen.uniform(0.0, 1.0, n)),
            gen.integers(0, 64, n),
            gen.integers(0, 64, n),
            gen.choice([-1, 1], n),
        )
        got = fuse(ev, T)
        want = group_events_oracle(ev, T)
        assert len(got) == len(want), f"instance {i}: row count"
        for field in ("h", "w", "p_acc", "c"):
            np.testing.assert_array_equal(got[field], want[field])
        np.testing.assert_allclose(got["t_avg"], want["t_avg"], rtol=1e-12, atol=0.0)
    print("c03: 100 random instances matched the oracle")


def test_c04_receptive_field_formula_and_info(capsys):
    assert receptive_field(512, 5, 2) == 524288
    assert cli_main(["info"]) == 0
    out = capsys.readouterr().out
    assert "branch S  (p=512, shifts=[5, 3]): 512 -> 16384 -> 131072" in out
    assert "branch T  (p=512, shifts=[5, 3]): 512 -> 16384 -> 131072" in out
    assert (
        "branch ST (p=512, shifts=[5, 3, 3, 3]): "
        "512 -> 16384 -> 131072 -> 1048576 -> 8388608"
    ) in out


def test_c05_dense_grid_pooling_count():
    side = np.arange(1 << 8, dtype=np.int64)
    cells = np.stack(np.meshgrid(side, side, indexing="ij"), axis=-1).reshape(-1, 2)
    order = CurveOrder("hilbert", 2, 8)
    ser = serialize_codes(encode(cells, order), order, patch_size=512)
    _, pool_map = grid_pool(ser, np.zeros((len(cells), 1)), y=5)
    print(f"c05: {len(cells)} cells -> {pool_map.n_groups} groups")
    assert pool_map.n_groups == len(cells) // 32


def test_c06_gradient_checks():
    t0 = time.perf_counter()
    worst = {}

    p = BlockParams.from_rng(np.random.default_rng(60), channels=8, n_heads=2)
    x = Tensor(np.random.default_rng(61).normal(size=(32, 8)))
    block_target = np.random.default_rng(62).normal(size=(32, 8))

    def block_loss():
        r = encoder_block(x, p) - Tensor(block_target)
        return (r * r).mean()

    worst["encoder_block C=8 N=32"] = grad_check(block_loss, params_of(p), eps=1e-5)

    cfg = StaConfig(channels=4, seq_len=8, rounds=1, out_channels=8)
    params = StaParams.from_rng(np.random.default_rng(63), cfg)
    gen = np.random.default_rng(64)
    fx, fy, fst = (Tensor(gen.normal(size=(1, 4, 8))) for _ in range(3))
    ca_target = gen.normal(size=(1, 4, 8))
    si_target = gen.normal(size=(1, 8, 8))

    def ca_loss():
        r = cross_attention(fx, fy, params.g_s) - Tensor(ca_target)
        return (r * r).mean()

    worst["cross_attention C=4 N=8"] = grad_check(
        ca_loss, [t for _, t in params.g_s.named("g")], eps=1e-5
    )

    def mr_loss():
        a, b = mutual_rounds(fx, fy, params)
        return (a * a).mean() + (b * b).mean()

    round_params = [
        t
        for s_unit, t_unit in params.rounds
        for unit in (s_unit, t_unit)
        for _, t in unit.named("r")
    ]
    worst["mutual_rounds C=4 N=8"] = grad_check(mr_loss, round_params, eps=1e-5)

    def si_loss():
        r = st_interaction(fx, fy, fst, params) - Tensor(si_target)
        return (r * r).mean()

    si_params = (
        [t for _, t in params.g_s.named("a")]
        + [t for _, t in params.g_t.named("b")]
        + [t for _, t in params.final1.named("c")]
        + [t for _, t in params.final2.named("d")]
    )
    worst["st_interaction C=4 N=8"] = grad_check(si_loss, si_params, eps=1e-5)

    lin = LinearParams.from_rng(np.random.default_rng(65), 5, 8)
    pts = Tensor(np.random.default_rng(66).normal(size=(16, 5)))

    def embed_loss():
        e = embed(pts, lin)
        return (e * e).mean()

    worst["embed 5->8"] = grad_check(embed_loss, [lin.weight, lin.bias], eps=1e-6)

    elapsed = time.perf_counter() - t0
    for name, err in worst.items():
        print(f"c06: {name}: max rel err {err:.3e}")
        assert err < 1e-4, f"{name}: max rel err {err:.3e}"
    print(f"c06: all gradient checks in {elapsed:.1f}s")
    assert elapsed < 60.0


def test_c07_sta_default_shape_contract():
    cfg = StaConfig()  # channels 64, seq_len 4096, rounds 4 -> out 128
    params = StaParams.from_rng(np.random.default_rng(70), cfg)
    gen = np.random.default_rng(71)
    with no_grad():
        for b in (1, 4):
            fs, ft, fst = (Tensor(gen.normal(size=(b, 64, 4096))) for _ in range(3))
            out = sta_forward(fs, ft, fst, params)
            assert out.shape == (b, 4096, 128), f"B={b}: got {out.shape}"
            assert np.all(np.isfinite(out.data))
    print("c07: output (B, 4096, 128) for B in {1, 4}")


def _stage1(b):
    lines = [
        f"branch.{b}.enc_depths = 1",
        f"branch.{b}.enc_channels = 8",
        f"branch.{b}.enc_heads = 2",
        f"branch.{b}.enc_patch = 512",
    ]
    lines += [
        f"branch.{b}.{field} = ()"
        for field in ("dec_depths", "dec_channels", "dec_heads", "dec_patch",
                      "stride", "y_schedule")
    ]
    return "\n".join(lines)


# one stage per branch at C=8; the T branch keeps the fusion stage's
# three-operand signature satisfied
SMOKE_CFG = "\n".join(
    ["geometry.H = 32", "geometry.W = 32", "T = 8", "M = 256", "seed = 8",
     "sta.channels = 8", "sta.rounds = 1"]
    + [_stage1(b) for b in ("S", "T", "ST")]
)


def _motion_events(direction, seed, n=200, size=32):
    """A noisy blob drifting horizontally; ``direction`` flips the sweep."""
    gen = np.random.default_rng(seed)
    t = np.sort(gen.uniform(0.0, 1.0, n))
    drift = direction * (t - 0.5) * 20.0
    w = np.clip(np.round(size / 2 + drift + gen.normal(0, 1.5, n)), 0, size - 1)
    h = np.clip(np.round(size / 2 + gen.normal(0, 1.5, n)), 0, size - 1)
    return make_events(t, h.astype(int), w.astype(int), gen.choice([-1, 1], n))


def test_c08_end_to_end_trainability_smoke():
    t0 = time.perf_counter()
    cfg = load_config(SMOKE_CFG)
    params = PipelineParams.from_config(cfg, dtype=np.float64)

    batches = []
    for direction, seed in ((+1, 81), (-1, 82)):
        fused = fuse(_motion_events(direction, seed), cfg.T)
        batches.append(
            sample_and_normalize(fused, cfg.M, cfg.geometry, cfg.seed, T=cfg.T)
        )
    targets = (1.0, -1.0)

    def total_loss():
        total = None
        for batch, target in zip(batches, targets):
            feats = pipeline_forward(batch, cfg, params)
            grid = scatter(batch, feats, reduce=cfg.reduce, pre_map=params.pre_map)
            d = grid.mean() - target
            term = d * d
            total = term if total is None else total + term
        return total

    opt = Adam(params_of(params), lr=1e-2)
    first = achieved = None
    for step in range(201):  # up to 200 updates; check before each and once after
        loss = total_loss()
        now = float(loss.data)
        if first is None:
            first = now
        if now <= 0.5 * first:
            achieved = step
            break
        if step < 200:
            opt.zero_grad()
            loss.backward()
            opt.step()
    elapsed = time.perf_counter() - t0
    print(f"c08: loss {first:.4f} -> {now:.4f} at step {achieved} in {elapsed:.0f}s")
    assert achieved is not None, (
        f"loss only reached {now:.4f} from {first:.4f} within 200 steps"
    )
    assert elapsed < 300.0


def test_c09_complexity_ordering():
    report = bench_patch_vs_knn((2048, 4096, 8192), K=512, p=512, seed=9, repeats=3)
    seconds = {"serialize": [], "knn": []}
    for row in report.rows:
        seconds[row.scenario].append(row.seconds)
    ser_ratios = [b / a for a, b in zip(seconds["serialize"], seconds["serialize"][1:])]
    knn_ratios = [b / a for a, b in zip(seconds["knn"], seconds["knn"][1:])]
    print(f"c09: serialize doubling ratios {ser_ratios}, knn {knn_ratios}")
    assert all(r <= 2.5 for r in ser_ratios), ser_ratios
    assert all(r >= 3.5 for r in knn_ratios), knn_ratios


def test_c10_cli_tensorize_determinism(tmp_path, capsys):
    src = FIXTURES / "ten_events.csv"
    a, b = tmp_path / "a.omnx", tmp_path / "b.omnx"
    assert cli_main(["tensorize", "-i", str(src), "-o", str(a)]) == 0
    assert cli_main(["tensorize", "-i", str(src), "-o", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    grid = read_omnx(str(a))
    assert grid.shape == (64, 64, 128 + 4)
    print("c10: two runs byte-identical,", grid.shape)
