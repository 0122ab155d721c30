"""Command-line front end: ``flatdse {analyze,sweep,dse,verify}``.

Exit codes: 0 success, 1 model-level failure (unreachable target, nothing
fits, verification mismatch), 2 configuration error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__, _ext
from .config import OBJECTIVES, RunConfig, apply_overrides, load_run, sweep_points
from .costmodel import CSV_COLUMNS, reports_to_csv, scope_reports
from .dataflow import DataflowConfig, default_intra, fixed_variant, l2_working_set_words, validate
from .dse import Objective, best_config, min_bw_over, search, variant_configs
from .errors import CapacityError, ConfigError, EmptySpace, FlatDseError, InvalidDataflow, UnreachableTarget
from .refexec import DEFAULT_CASES, MAX_SEQ_LEN, VerifyCase, run_verification

EXIT_OK, EXIT_MODEL, EXIT_CONFIG = 0, 1, 2
SWEEP_EXTRA = ("variant", "status", "config", "min_bw_bytes_per_s")


def _out_dir(args) -> Path:
    out = Path(os.environ.get("FLATDSE_OUT") or args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    raise TypeError(f"not serializable: {type(o).__name__}")


def _write_meta(out: Path, command: str, args, extra: Optional[dict] = None) -> None:
    meta = {
        "command": command,
        "config": getattr(args, "config", None),
        "version": __version__,
        "kernel_backend": _ext.BACKEND,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    meta.update(extra or {})
    _write(out / "run_meta.json", _dump_json(meta))


def _objective(args, run: Optional[RunConfig]) -> Objective:
    return Objective(args.objective or (run.objective if run else "max-util"))


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    return load_run(args.config)


def resolve_dataflow(run: RunConfig, obj: Objective) -> DataflowConfig:
    """The analyze target: an explicit config, or the best of a named variant."""
    raw = run.raw.get("dataflow") or {}
    label = raw.get("variant") if isinstance(raw, dict) else None
    if label and label.lower() in ("base-opt", "flat-opt"):
        return best_config(run.workload, run.hardware, variant_configs(label, run.workload, run.hardware, run.bounds), obj).config
    cfg = run.dataflow
    if cfg is None:
        raise ConfigError("analyze needs a 'dataflow' section")
    if run.intra_given:
        return cfg
    w, hw = run.workload, run.hardware
    cands = []
    for il, ia in default_intra(w, hw, run.bounds.stationarities, run.bounds.tile_sizes):
        c = replace(cfg, intra_l=il, intra_a=ia)
        if not validate(c, w, hw) and l2_working_set_words(c, w) * w.bytes_per_word <= hw.sg_bytes:
            cands.append(c)
    if not cands:
        raise CapacityError(f"no intra tiling of {cfg.label} fits {hw.sg_bytes} B")
    return best_config(w, hw, cands, obj).config


# ---------------------------------------------------------------------------
# Commands


def cmd_analyze(args) -> int:
    run = _load(args)
    obj = _objective(args, run)
    cfg = resolve_dataflow(run, obj)
    reports = scope_reports(run.workload, cfg, run.hardware)
    out = _out_dir(args)
    csv_text = reports_to_csv([r.row() for r in reports], CSV_COLUMNS)
    _write(out / "analyze.csv", csv_text)
    _write(out / "analyze.json", _dump_json({"config": cfg.to_dict(), "reports": [r.to_dict() for r in reports]}))
    _write_meta(out, "analyze", args)
    sys.stdout.write(csv_text)
    return EXIT_OK


def _sweep_point(task) -> List[dict]:
    run, point, variants, obj, target = task
    w, hw = apply_overrides(run, point)
    rows = []
    for label in variants:
        row: Dict[str, object] = dict(point)
        row["variant"] = label
        try:
            cands = variant_configs(label, w, hw, run.bounds)
            best = best_config(w, hw, cands, obj)
        except (CapacityError, EmptySpace):
            row.update(status="no-fit", config="", min_bw_bytes_per_s="")
            row.update({c: "" for c in CSV_COLUMNS})
            rows.append(row)
            continue
        row.update(best.report.row())
        row["dataflow"] = best.config.label
        row["status"] = "ok"
        row["config"] = best.key
        row["min_bw_bytes_per_s"] = ""
        if target is not None:
            try:
                row["min_bw_bytes_per_s"] = min_bw_over(w, hw, cands, target)[0]
            except UnreachableTarget:
                row["min_bw_bytes_per_s"] = math.inf
        rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    run = _load(args)
    if run.sweep is None or not run.sweep.axes:
        raise ConfigError("sweep needs a 'sweep.axes' list with at least one axis")
    obj = _objective(args, run)
    variants = tuple(v.strip() for v in args.variants.split(",")) if args.variants else run.sweep.variants
    for label in variants:
        if label.lower() not in ("base-opt", "flat-opt"):
            try:
                fixed_variant(label, run.workload)
            except ValueError as e:
                raise ConfigError(f"--variants: {e}") from None
    points = sweep_points(run.sweep.axes)
    tasks = [(run, p, variants, obj, run.sweep.min_bw_target) for p in points]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            chunks = list(ex.map(_sweep_point, tasks))
    else:
        chunks = [_sweep_point(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    params = [a.param for a in run.sweep.axes]
    columns = params + list(SWEEP_EXTRA) + list(CSV_COLUMNS)
    out = _out_dir(args)
    _write(out / "sweep.csv", reports_to_csv(rows, columns))
    _write_meta(out, "sweep", args, {"points": len(points), "variants": list(variants)})
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_dse(args) -> int:
    run = _load(args)
    obj = _objective(args, run)
    result = search(run.workload, run.hardware, run.bounds, obj, jobs=args.jobs, dump=args.dump_space)
    out = _out_dir(args)
    _write(out / "dse_result.json", _dump_json(result.to_dict()))
    if args.dump_space:
        rows = [dict(p.report.row(), config=p.key) for p in result.dump]
        _write(out / "space_dump.csv", reports_to_csv(rows, ("config",) + CSV_COLUMNS))
    _write_meta(out, "dse", args, {"jobs": args.jobs})
    b = result.best
    print(f"evaluated {result.evaluated_count} configs; best {b.config.label} util={b.report.util:.6f}; pareto {len(result.pareto)}")
    return EXIT_OK


def _verify_cases(run: Optional[RunConfig]) -> Sequence[VerifyCase]:
    spec = run.verify.get("cases") if run else None
    if not spec:
        return DEFAULT_CASES
    cases = []
    for i, c in enumerate(spec):
        try:
            case = VerifyCase(
                batch=int(c["batch"]),
                heads=int(c["heads"]),
                seq_len=int(c["seq_len"]),
                head_dim=int(c["head_dim"]),
                sg_bytes=int(c.get("sg_bytes", 1 << 40)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"field 'verify.cases[{i}]': {e}") from None
        if case.seq_len > MAX_SEQ_LEN:
            raise ConfigError(f"field 'verify.cases[{i}].seq_len': {case.seq_len} exceeds the N <= {MAX_SEQ_LEN} guard")
        cases.append(case)
    return cases


def cmd_verify(args) -> int:
    run = load_run(args.config) if args.config else None
    cases = _verify_cases(run)
    seed = int(run.verify.get("seed", 0)) if run else 0
    fault = args.inject_fault or (run.verify.get("fault") if run else None)
    report = run_verification(cases, seed=seed, fault=fault)
    out = _out_dir(args)
    _write(
        out / "verify.json",
        _dump_json(
            {
                "passed": report.passed,
                "checked": report.checked,
                "max_rel_error": report.max_rel_error,
                "max_row_sum_error": report.max_row_sum_error,
                "numeric_failures": report.numeric_failures,
                "counter_failures": report.counter_failures,
                "first_mismatch": report.first_mismatch,
            }
        ),
    )
    _write_meta(out, "verify", args, {"seed": seed})
    print(f"checked {report.checked} configs; max rel err {report.max_rel_error:.3e}")
    if report.first_mismatch:
        print(f"first counter mismatch: {report.first_mismatch}")
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_MODEL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flatdse", description="Attention dataflow cost model and DSE.")
    p.add_argument("--version", action="version", version=f"flatdse {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="run configuration (JSON)")
        sp.add_argument("--out", default="out", help="output directory (FLATDSE_OUT overrides)")
        sp.add_argument("--objective", choices=OBJECTIVES, default=None)
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")

    common(sub.add_parser("analyze", help="cost one dataflow at L-A, block and model scope"))
    sw = sub.add_parser("sweep", help="grid sweep over workload/hardware axes")
    common(sw)
    sw.add_argument("--variants", default=None, help="comma list, e.g. Base-opt,Flat-R64,Flat-opt")
    d = sub.add_parser("dse", help="exhaustive search over the configured bounds")
    common(d)
    d.add_argument("--dump-space", action="store_true", help="also write every evaluated point")
    v = sub.add_parser("verify", help="check fused execution and traffic counters")
    common(v, config_required=False)
    v.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    return p


COMMANDS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "dse": cmd_dse, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InvalidDataflow) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FlatDseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
