import json
import math

import pytest

from flatdse.config import (
    apply_overrides,
    load_run,
    parse_bytes,
    parse_rate,
    parse_run,
    sweep_points,
)
from flatdse.dataflow import GranKind, Mode
from flatdse.errors import ConfigError


def write(path, obj):
    path.write_text(json.dumps(obj, indent=2))
    return path


BASIC = {"workload": {"$ref": "models/bert-base"}, "hardware": {"$ref": "hardware/cloud"}}


@pytest.mark.parametrize(
    "text,expect",
    [("20KB", 20 << 10), ("2MB", 2 << 20), ("2 GB", 2 << 30), ("512", 512), ("1.5KB", 1536), ("64b", 64), (4096, 4096)],
)
def test_parse_bytes_binary(text, expect):
    assert parse_bytes(text) == expect


@pytest.mark.parametrize("bad", ["1.3B", "ten", "-4KB", True, 2.5])
def test_parse_bytes_rejects(bad):
    with pytest.raises(ValueError):
        parse_bytes(bad)


@pytest.mark.parametrize(
    "text,expect", [("400GB/s", 4e11), ("50 GB/s", 5e10), ("1.5TB/s", 1.5e12), ("1e9", 1e9), (3, 3.0), ("inf", math.inf)]
)
def test_parse_rate_decimal(text, expect):
    assert parse_rate(text) == expect


def test_presets_resolve():
    run = parse_run(dict(BASIC))
    assert (run.workload.embed, run.workload.heads, run.workload.head_dim) == (768, 12, 64)
    assert run.hardware.sg_bytes == 32 << 20 and run.hardware.offchip_bw == 4e11
    assert run.hardware.pe_rows == 256


def test_ref_overrides_and_local_include(tmp_path):
    write(tmp_path / "mine.json", {"$ref": "hardware/edge", "sg_bytes": "256KB"})
    path = write(
        tmp_path / "run.json",
        {"workload": {"$ref": "models/bert-base", "seq_len": 4096}, "hardware": {"$ref": "mine"}},
    )
    run = load_run(path)
    assert run.workload.seq_len == 4096 and run.workload.embed == 768
    assert run.hardware.sg_bytes == 256 << 10 and run.hardware.pe_rows == 64


def test_ref_cycle_and_missing(tmp_path):
    write(tmp_path / "a.json", {"$ref": "b"})
    write(tmp_path / "b.json", {"$ref": "a"})
    with pytest.raises(ConfigError, match="cycle"):
        load_run(write(tmp_path / "run.json", {"workload": {"$ref": "a"}, "hardware": {"$ref": "hardware/cloud"}}))
    with pytest.raises(ConfigError, match="not found"):
        load_run(write(tmp_path / "r2.json", {"workload": {"$ref": "nope"}, "hardware": {}}))


def test_unknown_field_names_path_and_line(tmp_path):
    cfg = dict(BASIC, hardware={"$ref": "hardware/cloud", "sg_byts": "2MB"})
    path = write(tmp_path / "run.json", cfg)
    with pytest.raises(ConfigError) as e:
        load_run(path)
    msg = str(e.value)
    assert "hardware.sg_byts" in msg and f"{path}:" in msg
    line = next(i for i, l in enumerate(path.read_text().splitlines(), 1) if "sg_byts" in l)
    assert f":{line}" in msg


def test_bad_value_diagnostic(tmp_path):
    path = write(tmp_path / "run.json", dict(BASIC, hardware={"$ref": "hardware/cloud", "offchip_bw": "fast"}))
    with pytest.raises(ConfigError, match="hardware.offchip_bw"):
        load_run(path)
    path = write(tmp_path / "r2.json", dict(BASIC, workload={"$ref": "models/bert-base", "blocks": 0}))
    with pytest.raises(ConfigError, match="block"):
        load_run(path)


def test_invalid_json_location(tmp_path):
    path = tmp_path / "run.json"
    path.write_text('{\n  "workload": {,\n}')
    with pytest.raises(ConfigError, match=r"run\.json:2:\d+: invalid JSON"):
        load_run(path)


def test_unknown_top_level_and_objective():
    with pytest.raises(ConfigError, match="top-level"):
        parse_run(dict(BASIC, extra=1))
    with pytest.raises(ConfigError, match="objective"):
        parse_run(dict(BASIC, objective="fastest"))
    assert parse_run(dict(BASIC, _comment="ignored")).objective == "max-util"


def test_dataflow_variant_and_full():
    run = parse_run(dict(BASIC, dataflow={"variant": "Flat-R64", "flags": "10111"}))
    assert run.dataflow.mode is Mode.FLAT and run.dataflow.granularity.kind is GranKind.R
    assert run.dataflow.granularity.size == 64 and not run.dataflow.flags.k_enabled
    assert not run.intra_given
    again = parse_run(dict(BASIC, dataflow=run.dataflow.to_dict()))
    assert again.dataflow == run.dataflow and again.intra_given
    with pytest.raises(ConfigError):
        parse_run(dict(BASIC, dataflow={"variant": "Flat-Q9"}))


def test_sweep_axes_and_points():
    run = parse_run(
        dict(
            BASIC,
            sweep={
                "axes": [
                    {"param": "workload.seq_len", "start": 512, "stop": 4096, "factor": 2},
                    {"param": "hardware.sg_bytes", "values": ["20KB", "2MB"]},
                ],
                "min_bw_target": 0.95,
            },
        )
    )
    assert run.sweep.axes[0].values == (512, 1024, 2048, 4096)
    assert run.sweep.axes[1].values == (20 << 10, 2 << 20)
    pts = sweep_points(run.sweep.axes)
    assert len(pts) == 8 and pts[1] == {"workload.seq_len": 512, "hardware.sg_bytes": 2 << 20}
    with pytest.raises(ConfigError):
        parse_run(dict(BASIC, sweep={"axes": [{"param": "seq_len", "values": [1]}]}))
    with pytest.raises(ConfigError):
        parse_run(dict(BASIC, sweep={"axes": [], "min_bw_target": 1.5}))


def test_overrides_keep_onchip_ratio():
    run = parse_run(dict(BASIC))
    w, hw = apply_overrides(run, {"workload.seq_len": 1024, "hardware.offchip_bw": 1e9})
    assert w.seq_len == 1024 and hw.offchip_bw == 1e9
    assert hw.onchip_bw / hw.offchip_bw == pytest.approx(run.hardware.onchip_bw / run.hardware.offchip_bw)
    with pytest.raises(ConfigError):
        apply_overrides(run, {"workload.nonsense": 3})


def test_bounds_section():
    run = parse_run(dict(BASIC, bounds={"modes": ["flat"], "rows": [64, 256], "tile_sizes": [64]}))
    assert run.bounds.modes == (Mode.FLAT,) and run.bounds.rows == (64, 256)
    with pytest.raises(ConfigError, match="bounds"):
        parse_run(dict(BASIC, bounds={"modes": ["warp"]}))
