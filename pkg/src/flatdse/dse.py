"""Exhaustive design-space exploration over dataflow configs."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _ext
from .costmodel import CostReport, min_bw_search, schedule
from .dataflow import (
    DataflowConfig,
    FlatTileFlags,
    Mode,
    SearchBounds,
    default_intra,
    enumerate_space,
    fixed_variant,
    l2_working_set_words,
    validate,
)
from .errors import CapacityError, EmptySpace, UnreachableTarget
from .hardware import HardwareConfig
from .workload import AttentionWorkload


class Objective(str, Enum):
    MAX_UTIL = "max-util"
    MIN_ENERGY = "min-energy"
    MIN_FOOTPRINT = "min-footprint"
    UTIL_PER_FOOTPRINT = "util-per-footprint"


def objective_value(obj: Objective, r: CostReport) -> float:
    """Scalar to minimize."""
    obj = Objective(obj)
    if obj is Objective.MAX_UTIL:
        return -r.util
    if obj is Objective.MIN_ENERGY:
        return r.energy.total
    if obj is Objective.MIN_FOOTPRINT:
        return float(r.peak_footprint_bytes)
    return -r.util / max(r.peak_footprint_bytes, 1)


@dataclass(frozen=True)
class DesignPoint:
    config: DataflowConfig
    report: CostReport
    key: str = ""

    def __post_init__(self):
        if not self.key:
            object.__setattr__(self, "key", self.config.key())

    def objectives(self) -> Tuple[float, float, float]:
        """(util, energy, footprint) with util maximized, the others minimized."""
        return self.report.util, self.report.energy.total, float(self.report.peak_footprint_bytes)

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "report": self.report.to_dict()}


def dominates(a: DesignPoint, b: DesignPoint) -> bool:
    ua, ea, fa = a.objectives()
    ub, eb, fb = b.objectives()
    return ua >= ub and ea <= eb and fa <= fb and (ua > ub or ea < eb or fa < fb)


def pareto_front(points: Sequence[DesignPoint]) -> List[DesignPoint]:
    """Non-dominated subset, sorted by config key."""
    if not points:
        return []
    pts = np.array([(-p.report.util, p.report.energy.total, float(p.report.peak_footprint_bytes)) for p in points])
    mask = _ext.pareto_mask(pts)
    return sorted((p for p, keep in zip(points, mask) if keep), key=lambda p: p.key)


@dataclass
class DseResult:
    objective: Objective
    best: DesignPoint
    pareto: List[DesignPoint]
    evaluated_count: int
    dump: Optional[List[DesignPoint]] = None

    def to_dict(self) -> dict:
        return {
            "objective": self.objective.value,
            "evaluated_count": self.evaluated_count,
            "best": self.best.to_dict(),
            "pareto": [p.to_dict() for p in self.pareto],
        }


def _rank(obj: Objective, p: DesignPoint):
    """Total order: objective, then the remaining Pareto axes, then config key.

    Ordering ties on the other axes keeps the optimum non-dominated.
    """
    r = p.report
    return objective_value(obj, r), r.energy.total, r.peak_footprint_bytes, -r.util, p.key


_PARETO_BATCH = 4096


def _merge(obj: Objective, a: Optional[DseResult], b: Optional[DseResult]) -> Optional[DseResult]:
    """Associative, order-insensitive combination of two partial results."""
    if a is None:
        return b
    if b is None:
        return a
    best = min(a.best, b.best, key=lambda p: _rank(obj, p))
    dump = None if a.dump is None or b.dump is None else a.dump + b.dump
    return DseResult(obj, best, pareto_front(a.pareto + b.pareto), a.evaluated_count + b.evaluated_count, dump)


def _evaluate(args) -> Optional[DseResult]:
    w, hw, configs, obj, keep_dump = args
    result = None
    batch: List[DesignPoint] = []
    dump = [] if keep_dump else None
    for cfg in configs:
        p = DesignPoint(cfg, schedule(w, cfg, hw))
        batch.append(p)
        if keep_dump:
            dump.append(p)
        if len(batch) >= _PARETO_BATCH:
            result = _merge(obj, result, _batch_result(obj, batch))
            batch = []
    if batch:
        result = _merge(obj, result, _batch_result(obj, batch))
    if result is not None and keep_dump:
        result.dump = dump
    return result


def _batch_result(obj: Objective, points: List[DesignPoint]) -> DseResult:
    best = min(points, key=lambda p: _rank(obj, p))
    return DseResult(obj, best, pareto_front(points), len(points), [])


def search(
    w: AttentionWorkload,
    hw: HardwareConfig,
    bounds: SearchBounds,
    obj: Objective = Objective.MAX_UTIL,
    jobs: int = 1,
    dump: bool = False,
) -> DseResult:
    """Evaluate every config of ``bounds`` and return the optimum and Pareto set.

    Work is split into contiguous enumeration ranges; the reduction is
    associative, so results do not depend on ``jobs``.
    """
    obj = Objective(obj)
    configs = list(enumerate_space(w, hw, bounds))
    if jobs <= 1 or len(configs) < 2 * jobs:
        result = _evaluate((w, hw, configs, obj, dump))
    else:
        step = -(-len(configs) // jobs)
        parts = [(w, hw, configs[i : i + step], obj, dump) for i in range(0, len(configs), step)]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            partials = list(ex.map(_evaluate, parts))
        result = None
        for part in partials:
            result = _merge(obj, result, part)
    if result is None:
        raise EmptySpace("no configs evaluated")
    if not dump:
        result.dump = None
    return result


FLAT_MODES = (Mode.FLAT,)
BASE_MODES = (Mode.BASE, Mode.BASE_TILED)


@dataclass
class PairedOpt:
    flat: DseResult
    base: DseResult

    @property
    def flat_opt(self) -> CostReport:
        return self.flat.best.report

    @property
    def base_opt(self) -> CostReport:
        return self.base.best.report


def paired_opt(
    w: AttentionWorkload,
    hw: HardwareConfig,
    bounds: SearchBounds = SearchBounds(),
    obj: Objective = Objective.MAX_UTIL,
    jobs: int = 1,
) -> PairedOpt:
    flat_b = bounds.restrict(FLAT_MODES)
    base_b = bounds.restrict(BASE_MODES)
    if not flat_b.modes or not base_b.modes:
        raise EmptySpace("paired search needs both fused and unfused modes in the bounds")
    return PairedOpt(search(w, hw, flat_b, obj, jobs), search(w, hw, base_b, obj, jobs))


def min_bw_over(
    w: AttentionWorkload, hw: HardwareConfig, configs: Sequence[DataflowConfig], target: float, rel_tol: float = 0.01
) -> Tuple[float, DataflowConfig]:
    """Least off-chip bandwidth at which some member of ``configs`` reaches ``target``.

    Returns ``(bytes_per_s, witness_config)``.
    """
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    configs = list(configs)
    if not configs:
        raise EmptySpace("no candidate configs")
    witness: List[DataflowConfig] = [configs[0]]

    def feasible(bw: float) -> bool:
        h = hw.with_offchip_bw(bw)
        # last witness first: feasibility at neighbouring bandwidths is usually shared
        if schedule(w, witness[0], h).util >= target:
            return True
        for cfg in configs:
            if schedule(w, cfg, h).util >= target:
                witness[0] = cfg
                return True
        return False

    saturated = hw.with_offchip_bw(1e30)
    best_sat = max(schedule(w, c, saturated).util for c in configs)
    if best_sat < target:
        raise UnreachableTarget(target, best_sat)
    bw = min_bw_search(lambda b: 1.0 if feasible(b) else 0.0, target, hw.offchip_bw, rel_tol)
    if math.isinf(bw):
        raise UnreachableTarget(target, best_sat)
    feasible(bw)
    return bw, witness[0]


def min_bw_opt(
    w: AttentionWorkload, hw: HardwareConfig, bounds: SearchBounds, target: float, rel_tol: float = 0.01
) -> Tuple[float, DataflowConfig]:
    """Space-level bandwidth requirement: the best config may change with bandwidth."""
    return min_bw_over(w, hw, enumerate_space(w, hw, bounds), target, rel_tol)


# ---------------------------------------------------------------------------
# Named variants


def variant_configs(label: str, w: AttentionWorkload, hw: HardwareConfig, bounds: SearchBounds) -> List[DataflowConfig]:
    """Candidate configs of a named variant.

    ``Base-opt`` and ``Flat-opt`` span the unfused and fused parts of
    ``bounds``. Fixed variants such as ``Flat-R64`` keep mode, granularity and
    all-enabled flags, and range over the intra-operator tilings only.
    """
    name = label.lower()
    if name == "base-opt":
        return list(enumerate_space(w, hw, bounds.restrict(BASE_MODES)))
    if name == "flat-opt":
        return list(enumerate_space(w, hw, bounds.restrict(FLAT_MODES)))
    mode, gran = fixed_variant(label, w)
    out = []
    for il, ia in default_intra(w, hw, bounds.stationarities, bounds.tile_sizes):
        cfg = DataflowConfig(mode, gran, FlatTileFlags(), il, ia)
        if validate(cfg, w, hw):
            continue
        if l2_working_set_words(cfg, w) * w.bytes_per_word > hw.sg_bytes:
            continue
        out.append(cfg)
    if not out:
        raise CapacityError(f"no intra tiling of {label} fits {hw.sg_bytes} B")
    return out


def best_config(
    w: AttentionWorkload, hw: HardwareConfig, configs: Sequence[DataflowConfig], obj: Objective = Objective.MAX_UTIL
) -> DesignPoint:
    points = [DesignPoint(c, schedule(w, c, hw)) for c in configs]
    if not points:
        raise EmptySpace("no candidate configs")
    obj = Objective(obj)
    return min(points, key=lambda p: _rank(obj, p))
