import pytest

from omnievent.config import (
    DEFAULT_CONFIG,
    build_config,
    load_config,
    parse_config_text,
)
from omnievent.errors import ConfigError


def test_empty_config_is_the_reference_setup():
    cfg = DEFAULT_CONFIG
    assert (cfg.geometry.H, cfg.geometry.W) == (64, 64)
    assert cfg.T == 8 and cfg.M == 4096 and cfg.seed == 0
    assert cfg.sta.channels == 64 and cfg.sta.out_channels == 128
    assert cfg.sta.seq_len == cfg.M
    assert cfg.branches["S"].enc_channels == (64, 128, 256)
    assert cfg.branches["ST"].enc_channels == (32, 64, 128, 256, 512)
    assert cfg.branches["ST"].y_schedule == (5, 3, 3, 3)
    assert cfg.reduce == "max"


def test_comments_blanks_and_spacing_are_tolerated():
    cfg = load_config(
        """
        # sensor
        geometry.H=128   # inline comment
           geometry.W =  96

        seed = 0x10
        """
    )
    assert cfg.geometry.H == 128 and cfg.geometry.W == 96
    assert cfg.seed == 16


def test_unknown_key_reports_its_line():
    with pytest.raises(ConfigError, match="line 3") as exc:
        parse_config_text("T = 4\n\nwat = 7\n")
    assert exc.value.line == 3


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("T = 4\nT = 5\n")


def test_missing_equals_rejected_with_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("T = 4\njust some words\n")


def test_bad_value_type_reports_line():
    with pytest.raises(ConfigError, match="line 1.*T"):
        load_config("T = abc\n")


def test_empty_value_rejected():
    with pytest.raises(ConfigError, match="empty value"):
        parse_config_text("T =\n")


def test_bad_choice_rejected():
    with pytest.raises(ConfigError, match="ft.reduce"):
        load_config("ft.reduce = sum\n")


def test_bounds_checked():
    with pytest.raises(ConfigError):
        load_config("T = 0\n")
    with pytest.raises(ConfigError):
        load_config("geometry.H = 0\n")


def test_branch_override_applies():
    cfg = load_config("branch.S.bits = 6\nbranch.ST.enc_patch = 64,64,64,64,64\n")
    assert cfg.branches["S"].bits == 6
    assert cfg.branches["T"].bits == 10  # untouched
    assert cfg.branches["ST"].enc_patch == (64,) * 5


def test_inconsistent_branch_stage_lists_rejected():
    with pytest.raises(ConfigError, match="branch S"):
        load_config("branch.S.enc_depths = 1,1\n")


def test_branch_output_must_feed_sta_width():
    # leaving sta.channels at 64 while shrinking the S decoder must fail
    with pytest.raises(ConfigError, match="sta.channels"):
        load_config(
            "branch.S.dec_channels = 32,128\nbranch.S.dec_heads = 4,8\n"
        )


def test_single_stage_branch_via_empty_tuples():
    text = "\n".join(
        f"branch.T.{f} = {v}"
        for f, v in [
            ("enc_depths", "1"),
            ("enc_channels", "64"),
            ("enc_heads", "2"),
            ("enc_patch", "512"),
            ("dec_depths", "()"),
            ("dec_channels", "()"),
            ("dec_heads", "()"),
            ("dec_patch", "()"),
            ("stride", "()"),
            ("y_schedule", "()"),
        ]
    )
    cfg = load_config(text)
    assert cfg.branches["T"].enc_depths == (1,)
    assert cfg.branches["T"].dec_depths == ()


def test_bool_and_paths():
    cfg = load_config(
        "normalize_h_by_H = true\npaths.input = a.csv\npaths.output = out.omnx\n"
    )
    assert cfg.normalize_h_by_H is True
    assert cfg.input_path == "a.csv" and cfg.output_path == "out.omnx"


def test_build_config_accepts_nothing():
    assert build_config(None).M == 4096
