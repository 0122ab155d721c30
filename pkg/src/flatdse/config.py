"""JSON run configuration: presets, ``$ref`` includes and unit parsing.

A run file looks like::

    {
      "workload": {"$ref": "models/bert-base", "seq_len": 4096},
      "hardware": {"$ref": "hardware/cloud", "sg_bytes": "2MB"},
      "dataflow": {"variant": "Flat-R64", "flags": "11111"},
      "bounds": {"rows": [64, 256]},
      "objective": "max-util",
      "sweep": {"axes": [{"param": "workload.seq_len", "start": 512, "stop": 65536, "factor": 2}],
                "variants": ["Base-opt", "Flat-opt"], "min_bw_target": 0.95},
      "verify": {"seed": 0}
    }

``$ref`` paths resolve against the including file first, then the bundled
presets. Keys next to ``$ref`` override the referenced values.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .dataflow import DataflowConfig, FlatTileFlags, IntraOpDataflow, SearchBounds, fixed_variant
from .errors import ConfigError
from .hardware import EnergyTable, HardwareConfig, Noc
from .workload import AttentionWorkload

PRESET_DIR = Path(__file__).parent / "presets"

_BIN = {"": 1, "B": 1, "KB": 1 << 10, "MB": 1 << 20, "GB": 1 << 30, "TB": 1 << 40}
_DEC = {"": 1, "K": 1e3, "M": 1e6, "G": 1e9, "T": 1e12}
_BYTES_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*([KMGT]?B?)\s*$", re.I)
_RATE_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*(?:([KMGT]?)B/s)?\s*$", re.I)

OBJECTIVES = ("max-util", "min-energy", "min-footprint", "util-per-footprint")
BYTE_FIELDS = {"sg_bytes", "sl_bytes"}
RATE_FIELDS = {"offchip_bw", "onchip_bw", "sfu_rate"}


def parse_bytes(value) -> int:
    """Capacity with optional binary suffix: ``"20KB"`` -> 20480."""
    if isinstance(value, bool):
        raise ValueError(f"not a byte quantity: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"byte count must be integral, got {value}")
        return int(value)
    m = _BYTES_RE.match(str(value))
    if not m:
        raise ValueError(f"not a byte quantity: {value!r}")
    unit = m.group(2).upper()
    if unit and not unit.endswith("B"):
        unit += "B"
    n = float(m.group(1)) * _BIN[unit]
    if not n.is_integer():
        raise ValueError(f"byte count must be integral, got {value!r}")
    return int(n)


def parse_rate(value) -> float:
    """Bandwidth in bytes/s; string suffixes are decimal: ``"400GB/s"`` -> 4e11."""
    if isinstance(value, bool):
        raise ValueError(f"not a rate: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if str(value).strip().lower() in ("inf", "infinity"):
        return math.inf
    m = _RATE_RE.match(str(value))
    if not m:
        raise ValueError(f"not a rate: {value!r}")
    return float(m.group(1)) * _DEC[(m.group(2) or "").upper()]


# ---------------------------------------------------------------------------
# Loading


def _line_of(text: str, key: str) -> Optional[int]:
    idx = text.find(f'"{key}"')
    return None if idx < 0 else text.count("\n", 0, idx) + 1


def _where(source: Optional[Path], text: str, dotted: str) -> str:
    line = _line_of(text, dotted.rsplit(".", 1)[-1]) if text else None
    loc = str(source) if source else "<config>"
    return f"{loc}:{line}" if line else loc


def read_json(path: Path) -> Tuple[Any, str]:
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read ({e.strerror})") from None
    try:
        return json.loads(text), text
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON ({e.msg})") from None


def _find_ref(ref: str, base: Path) -> Path:
    for root in (base, PRESET_DIR):
        for cand in (root / ref, root / f"{ref}.json"):
            if cand.is_file():
                return cand
    raise ConfigError(f"$ref {ref!r} not found relative to {base} or in bundled presets")


def resolve_refs(obj, base: Path, _stack: Tuple[Path, ...] = ()):
    """Expand ``$ref`` includes recursively; sibling keys override."""
    if isinstance(obj, list):
        return [resolve_refs(x, base, _stack) for x in obj]
    if not isinstance(obj, dict):
        return obj
    out: Dict[str, Any] = {}
    if "$ref" in obj:
        path = _find_ref(str(obj["$ref"]), base).resolve()
        if path in _stack:
            raise ConfigError(f"$ref cycle through {path}")
        data, _ = read_json(path)
        included = resolve_refs(data, path.parent, _stack + (path,))
        if not isinstance(included, dict):
            raise ConfigError(f"{path}: $ref target must be a JSON object")
        out.update(included)
    for k, v in obj.items():
        if k != "$ref":
            out[k] = resolve_refs(v, base, _stack)
    return out


def _public(d: dict) -> dict:
    return {k: v for k, v in d.items() if not k.startswith("_")}


def _build(cls, d: dict, section: str, where, converters=None):
    known = set(cls.__dataclass_fields__)
    d = _public(d)
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"{where(section + '.' + unknown[0])}: unknown field '{section}.{unknown[0]}'")
    kw = {}
    for k, v in d.items():
        conv = (converters or {}).get(k)
        try:
            kw[k] = conv(v) if conv else v
        except (ValueError, TypeError) as e:
            raise ConfigError(f"{where(section + '.' + k)}: field '{section}.{k}': {e}") from None
    try:
        return cls(**kw)
    except ConfigError as e:
        raise ConfigError(f"{where(section)}: {e}") from None
    except TypeError as e:
        raise ConfigError(f"{where(section)}: section '{section}': {e}") from None


def workload_from_dict(d: dict, where=lambda f: "<config>") -> AttentionWorkload:
    return _build(AttentionWorkload, d, "workload", where)


def hardware_from_dict(d: dict, where=lambda f: "<config>") -> HardwareConfig:
    d = dict(d)
    conv = {f: parse_bytes for f in BYTE_FIELDS}
    conv.update({f: parse_rate for f in RATE_FIELDS})
    conv["clock_hz"] = parse_rate
    conv["noc"] = Noc
    if isinstance(d.get("energy"), dict):
        e = d.pop("energy")
        # energy entries are given in picojoules
        scaled = {k: float(v) * 1e-12 for k, v in _public(e).items()}
        d["energy"] = _build(EnergyTable, scaled, "hardware.energy", where)
    return _build(HardwareConfig, d, "hardware", where, conv)


def dataflow_from_dict(d: dict, w: AttentionWorkload) -> Tuple[Optional[DataflowConfig], bool]:
    """Config plus whether its intra tiling was given explicitly.

    The searched variants ``Base-opt`` and ``Flat-opt`` have no single config
    and yield ``None``.
    """
    d = _public(d)
    if str(d.get("variant", "")).lower() in ("base-opt", "flat-opt"):
        return None, False
    if "variant" in d:
        mode, gran = fixed_variant(d["variant"], w)
        flags = FlatTileFlags.from_code(d.get("flags", "11111"))
        intra = d.get("intra")
        if intra:
            il = IntraOpDataflow(**intra["L"])
            ia = IntraOpDataflow(**intra.get("A", intra["L"]))
            return DataflowConfig(mode, gran, flags, il, ia), True
        return DataflowConfig(mode, gran, flags), False
    return DataflowConfig.from_dict(d), "intra" in d


@dataclass(frozen=True)
class SweepAxis:
    param: str
    values: Tuple[Any, ...]

    def __post_init__(self):
        if not self.values:
            raise ConfigError(f"sweep axis '{self.param}' has no values")
        section, _, name = self.param.partition(".")
        if section not in ("workload", "hardware") or not name:
            raise ConfigError(f"sweep axis '{self.param}' must be workload.<field> or hardware.<field>")


def _axis_from_dict(d: dict, where) -> SweepAxis:
    param = d.get("param")
    if not isinstance(param, str):
        raise ConfigError(f"{where('param')}: sweep axis needs a 'param' string")
    name = param.partition(".")[2]
    conv = parse_bytes if name in BYTE_FIELDS else parse_rate if name in RATE_FIELDS else (lambda x: x)
    try:
        if "values" in d:
            values = tuple(conv(v) for v in d["values"])
        else:
            start, stop = conv(d["start"]), conv(d["stop"])
            factor = d.get("factor", 2)
            values = []
            v = start
            while v <= stop * (1 + 1e-9):
                values.append(v)
                v = v * factor
            values = tuple(values)
    except (KeyError, ValueError, TypeError) as e:
        raise ConfigError(f"{where('param')}: sweep axis '{param}': {e}") from None
    return SweepAxis(param, values)


@dataclass(frozen=True)
class SweepSpec:
    axes: Tuple[SweepAxis, ...]
    variants: Tuple[str, ...] = ("Base-opt", "Flat-opt")
    min_bw_target: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    workload: AttentionWorkload
    hardware: HardwareConfig
    dataflow: Optional[DataflowConfig] = None
    intra_given: bool = False
    bounds: SearchBounds = field(default_factory=SearchBounds)
    objective: str = "max-util"
    sweep: Optional[SweepSpec] = None
    verify: Dict[str, Any] = field(default_factory=dict)
    source: Optional[str] = None
    raw: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)


def parse_run(data: dict, source: Optional[Path] = None, text: str = "") -> RunConfig:
    base = source.parent if source else Path.cwd()

    def where(dotted: str) -> str:
        return _where(source, text, dotted)

    if not isinstance(data, dict):
        raise ConfigError(f"{where('')}: top level must be a JSON object")
    data = resolve_refs(data, base)
    known = {"workload", "hardware", "dataflow", "bounds", "objective", "sweep", "verify"}
    unknown = sorted(k for k in set(_public(data)) - known)
    if unknown:
        raise ConfigError(f"{where(unknown[0])}: unknown top-level field '{unknown[0]}'")
    for section in ("workload", "hardware"):
        if not isinstance(data.get(section), dict):
            raise ConfigError(f"{where(section)}: missing or non-object section '{section}'")
    w = workload_from_dict(data["workload"], where)
    hw = hardware_from_dict(data["hardware"], where)
    cfg, intra_given = None, False
    if data.get("dataflow") is not None:
        try:
            cfg, intra_given = dataflow_from_dict(data["dataflow"], w)
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError) as e:
            raise ConfigError(f"{where('dataflow')}: field 'dataflow': {e}") from None
    try:
        bounds = SearchBounds.from_dict(_public(data.get("bounds") or {}))
    except ConfigError as e:
        raise ConfigError(f"{where('bounds')}: {e}") from None
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{where('bounds')}: field 'bounds': {e}") from None
    objective = data.get("objective", "max-util")
    if objective not in OBJECTIVES:
        raise ConfigError(f"{where('objective')}: field 'objective' must be one of {', '.join(OBJECTIVES)}")
    sweep = None
    if data.get("sweep") is not None:
        s = data["sweep"]
        axes = tuple(_axis_from_dict(a, where) for a in s.get("axes", []))
        target = s.get("min_bw_target")
        if target is not None and not 0 < float(target) < 1:
            raise ConfigError(f"{where('min_bw_target')}: field 'sweep.min_bw_target' must lie in (0, 1)")
        sweep = SweepSpec(
            axes=axes,
            variants=tuple(s.get("variants", SweepSpec.variants)),
            min_bw_target=None if target is None else float(target),
        )
    return RunConfig(
        workload=w,
        hardware=hw,
        dataflow=cfg,
        intra_given=intra_given,
        bounds=bounds,
        objective=objective,
        sweep=sweep,
        verify=dict(data.get("verify") or {}),
        source=str(source) if source else None,
        raw=data,
    )


def load_run(path) -> RunConfig:
    path = Path(path)
    data, text = read_json(path)
    return parse_run(data, path, text)


def apply_overrides(run: RunConfig, point: Dict[str, Any]) -> Tuple[AttentionWorkload, HardwareConfig]:
    """Workload and hardware with dotted-path overrides applied."""
    w_changes, hw_changes = {}, {}
    for param, value in point.items():
        section, _, name = param.partition(".")
        (w_changes if section == "workload" else hw_changes)[name] = value
    try:
        w = run.workload.replace(**w_changes) if w_changes else run.workload
        hw = run.hardware
        if hw_changes:
            if "offchip_bw" in hw_changes and "onchip_bw" not in hw_changes:
                # keep the configured on-chip/off-chip ratio
                hw_changes["onchip_bw"] = hw.onchip_bw * hw_changes["offchip_bw"] / hw.offchip_bw
            hw = hw.replace(**hw_changes)
    except TypeError as e:
        raise ConfigError(f"bad sweep parameter: {e}") from None
    return w, hw


def sweep_points(axes: Sequence[SweepAxis]) -> List[Dict[str, Any]]:
    """Cartesian product of the axes, first axis outermost."""
    points: List[Dict[str, Any]] = [{}]
    for axis in axes:
        points = [dict(p, **{axis.param: v}) for p in points for v in axis.values]
    return points
