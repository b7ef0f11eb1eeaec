import csv
import subprocess
import sys

import numpy as np
import pytest

from omnievent.cli import main
from omnievent.events import fuse
from omnievent.formats import read_events_csv, read_evt1, read_omnx


def run(*argv):
    return main(list(argv))


def _stage1(b):
    lines = [
        f"branch.{b}.enc_depths = 1",
        f"branch.{b}.enc_channels = 8",
        f"branch.{b}.enc_heads = 2",
        f"branch.{b}.enc_patch = 512",
    ]
    lines += [
        f"branch.{b}.{f} = ()"
        for f in ("dec_depths", "dec_channels", "dec_heads", "dec_patch",
                  "stride", "y_schedule")
    ]
    return "\n".join(lines)


@pytest.fixture
def small_cfg(tmp_path):
    text = "\n".join(
        ["geometry.H = 32", "geometry.W = 32", "T = 8", "M = 256",
         "seed = 11", "sta.channels = 8", "sta.rounds = 1"]
        + [_stage1(b) for b in ("S", "T", "ST")]
    )
    path = tmp_path / "small.cfg"
    path.write_text(text + "\n")
    return str(path)


@pytest.fixture
def ramp_csv(tmp_path):
    path = tmp_path / "ramp.csv"
    assert run("synth", "--scene", "ramp", "-o", str(path)) == 0
    return str(path)


# -- synth ---------------------------------------------------------------------


def test_synth_ramp_fixture(ramp_csv):
    ev = read_events_csv(ramp_csv)
    # one pixel crossing tau twice: second and third frames, both positive
    assert len(ev) == 2
    assert list(ev["t"]) == [0.5, 1.0]
    assert list(ev["h"]) == [32, 32] and list(ev["w"]) == [32, 32]
    assert list(ev["p"]) == [1, 1]


def test_synth_square_evt1_roundtrip(tmp_path):
    out = tmp_path / "sq.evt1"
    assert run("synth", "--scene", "square", "--frames", "6", "-o", str(out)) == 0
    ev = read_evt1(str(out))
    assert len(ev) > 0
    assert set(np.unique(ev["p"])) <= {-1, 1}
    assert np.all(np.diff(ev["t"]) >= 0)


def test_synth_stdout_csv(capsys):
    assert run("synth") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "t,h,w,p"
    assert len(lines) == 3


# -- fuse ----------------------------------------------------------------------


def test_fuse_ramp_t8(ramp_csv, tmp_path):
    out = tmp_path / "fused.csv"
    assert run("fuse", "-i", ramp_csv, "--T", "8", "-o", str(out)) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["h", "w", "t_avg", "p_acc", "c"]
    # the two trigger times land in the first and last of 8 segments
    assert rows[1] == ["32", "32", "0.5", "1", "1"]
    assert rows[2] == ["32", "32", "1.0", "1", "1"]
    assert len(rows) == 3


def test_fuse_matches_library(tmp_path, small_cfg):
    ev_path = tmp_path / "sq.evt1"
    run("synth", "--scene", "square", "--frames", "8", "-o", str(ev_path))
    out = tmp_path / "fused.csv"
    assert run("fuse", "-i", str(ev_path), "--T", "4", "-o", str(out)) == 0
    want = fuse(read_evt1(str(ev_path)), 4)
    rows = list(csv.reader(open(out)))[1:]
    assert len(rows) == len(want)
    got_t = np.array([float(r[2]) for r in rows])
    np.testing.assert_array_equal(got_t, want["t_avg"])


def test_fuse_stdout(ramp_csv, capsys):
    assert run("fuse", "-i", ramp_csv, "--T", "8") == 0
    out = capsys.readouterr().out
    assert out.startswith("h,w,t_avg,p_acc,c")


# -- serialize / encode / decode -------------------------------------------------


def test_serialize_csv_layout(tmp_path):
    ev_path = tmp_path / "sq.evt1"
    run("synth", "--scene", "square", "--frames", "10", "-o", str(ev_path))
    out = tmp_path / "layout.csv"
    assert run(
        "serialize", "-i", str(ev_path), "--branch", "ST", "--order", "z",
        "--patch-size", "64", "--shift", "5", "-o", str(out),
    ) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["rank", "index", "code", "patch", "group"]
    body = np.array(rows[1:], dtype=np.int64)
    n = len(body)
    assert list(body[:, 0]) == list(range(n))  # ranks consecutive
    assert sorted(body[:, 1]) == list(range(n))  # perm is a permutation
    assert np.all(np.diff(body[:, 2]) >= 0)  # codes ascending
    assert np.all(body[:, 3] == body[:, 0] // 64)
    assert np.all(np.diff(body[:, 4]) >= 0)  # group ids ascend with rank


def test_encode_decode_roundtrip_via_text(capsys):
    assert run("encode", "--order", "hilbert", "--bits", "6", "9,3", "0,0") == 0
    out = capsys.readouterr().out.strip().splitlines()
    codes = [line.split(" -> ")[1] for line in out]
    assert run("decode", "--order", "hilbert", "--bits", "6", "--dims", "2", *codes) == 0
    back = [line.split(" -> ")[1] for line in capsys.readouterr().out.strip().splitlines()]
    assert back == ["9,3", "0,0"]


def test_encode_rejects_mixed_arity(capsys):
    assert run("encode", "3,5", "1,2,3") == 2
    assert "arity" in capsys.readouterr().err


# -- tensorize -------------------------------------------------------------------


def test_tensorize_small_config(tmp_path, small_cfg):
    ev_path = tmp_path / "sq.evt1"
    run("synth", "--scene", "square", "--frames", "10",
        "--set", "geometry.H=32", "--set", "geometry.W=32", "-o", str(ev_path))
    a, b = tmp_path / "a.omnx", tmp_path / "b.omnx"
    assert run("tensorize", "--config", small_cfg, "-i", str(ev_path), "-o", str(a)) == 0
    assert run("tensorize", "--config", small_cfg, "-i", str(ev_path), "-o", str(b)) == 0
    grid = read_omnx(str(a))
    assert grid.shape == (32, 32, 20)
    assert grid.dtype == np.float32
    assert a.read_bytes() == b.read_bytes()


def test_tensorize_seed_flag_changes_artifact(tmp_path, small_cfg):
    ev_path = tmp_path / "sq.evt1"
    run("synth", "--scene", "square", "--frames", "10",
        "--set", "geometry.H=32", "--set", "geometry.W=32", "-o", str(ev_path))
    a, b = tmp_path / "a.omnx", tmp_path / "b.omnx"
    run("tensorize", "--config", small_cfg, "-i", str(ev_path), "-o", str(a))
    run("tensorize", "--config", small_cfg, "--seed", "99", "-i", str(ev_path),
        "-o", str(b))
    assert a.read_bytes() != b.read_bytes()


def test_tensorize_requires_paths(small_cfg, capsys):
    assert run("tensorize", "--config", small_cfg) == 2
    assert "input path required" in capsys.readouterr().err


# -- selfcheck / bench / info ----------------------------------------------------


def test_selfcheck_passes(capsys):
    assert run("selfcheck") == 0
    out = capsys.readouterr().out
    assert "selfcheck: 7/7 passed" in out
    assert "FAIL" not in out


def test_bench_table_and_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert run("bench", "--sizes", "256,512", "--K", "32", "-o", str(out)) == 0
    table = capsys.readouterr().out
    assert "serialize" in table and "knn" in table
    rows = list(csv.reader(open(out)))
    assert rows[0][:3] == ["scenario", "n", "param"]
    assert len(rows) == 5  # header + 2 sizes x 2 scenarios


def test_bench_patchsweep(capsys):
    assert run("bench", "--mode", "patchsweep", "--n", "512",
               "--sizes", "16,64") == 0
    out = capsys.readouterr().out
    assert out.count("sweep") == 2


def test_info_receptive_fields(capsys):
    assert run("info") == 0
    out = capsys.readouterr().out
    assert "512 -> 16384 -> 131072" in out
    assert "131072 -> 1048576 -> 8388608" in out
    assert "seed=0" in out


# -- configuration and exit codes -------------------------------------------------


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("geometry.H = 32\nwhat = ever\n")
    assert run("info", "--config", str(cfg)) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "what" in err


def test_missing_input_exits_3(capsys):
    assert run("fuse", "-i", "no-such-file.csv") == 3
    assert "io error" in capsys.readouterr().err


def test_bad_set_flag_exits_2(capsys):
    assert run("info", "--set", "nonsense") == 2
    assert "--set expects key=value" in capsys.readouterr().err


def test_seed_precedence(monkeypatch, tmp_path, capsys):
    cfg = tmp_path / "seeded.cfg"
    cfg.write_text("seed = 3\n")
    monkeypatch.setenv("OMNIEVENT_SEED", "42")
    run("info")
    assert "seed=42" in capsys.readouterr().out  # env fills the gap
    run("info", "--config", str(cfg))
    assert "seed=3" in capsys.readouterr().out  # file beats env
    run("info", "--config", str(cfg), "--seed", "7")
    assert "seed=7" in capsys.readouterr().out  # flag beats file


def test_bad_env_seed_exits_2(monkeypatch, capsys):
    monkeypatch.setenv("OMNIEVENT_SEED", "12fish")
    assert run("info") == 2
    assert "OMNIEVENT_SEED" in capsys.readouterr().err


def test_threads_flag(capsys):
    assert run("info", "--threads", "0") == 2
    capsys.readouterr()
    assert run("info", "--threads", "2") == 0


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "omnievent", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("omnievent")
