"""Analytical performance and energy model.

Every (workload, hardware, dataflow) triple is lowered to a short list of
iteration classes: cross-loop steps that share the same geometry. Each class
carries its compute, fill/drain, softmax and traffic split into *background*
words (staged tiles prefetched or written back under double buffering) and
*foreground* words (operands streamed during the stage that consumes them).
Latencies are then combined with max/sum rules:

* fused step: ``max(L + softmax + A, all_offchip / bw, sg_supply / onchip_bw)``
  where each stage is ``max(compute + fill_drain, stage_foreground / bw)``;
  background prefetch overlaps both stages.
* unfused step: the same rule per stage, so prefetch only overlaps the stage
  that owns it.

Pipeline fill (the first L2 operand tiles) and drain (the last output tile)
are charged serially. Background words are a steady-state share: the first
step streams its own staged tiles in and retains them, so more scratchpad
never slows a config down.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .dataflow import (
    DataflowConfig,
    GemmTraffic,
    GranKind,
    IntraOpDataflow,
    Mode,
    Stationarity,
    check,
    clipped,
    gemm_model,
    group_classes,
    l2_working_set_words,
    live_footprint,
    live_footprint_words,
    peak_footprint,
    sg_allocation,
    split_classes,
    tile_shape,
)
from .errors import CapacityError, UnreachableTarget
from .hardware import EnergyTable, HardwareConfig, Noc
from .workload import AttentionWorkload, OperatorSpec, OpKind, derive_operators

SOFTMAX_VISITS_PER_LOGIT = 5
NORM_VISITS_PER_ACTIVATION = 2
SL_ACCESSES_PER_MAC = 3

TRAFFIC_ROLES = ("q", "k", "v", "intermediate", "o", "weights", "activations")
_ROLE_NAME = {"q": "q", "k": "k", "v": "v", "int": "intermediate", "o": "o"}


def ideal_cycles(ops: Iterable[OperatorSpec], hw: HardwareConfig) -> int:
    return sum(-(-op.macs // hw.num_pes) for op in ops)


def fill_drain_cycles(noc: Noc, pe_rows: int, pe_cols: int, tile_switches: int) -> int:
    noc = Noc(noc)
    if noc is Noc.SYSTOLIC:
        per = pe_rows + pe_cols
    elif noc is Noc.TREE:
        per = math.ceil(math.log2(pe_rows * pe_cols)) if pe_rows * pe_cols > 1 else 1
    else:
        per = 1
    return per * tile_switches


@dataclass(frozen=True)
class EnergyBreakdown:
    mac: float = 0.0
    sl: float = 0.0
    sg: float = 0.0
    dram: float = 0.0

    @property
    def total(self) -> float:
        return self.mac + self.sl + self.sg + self.dram

    def __add__(self, other: "EnergyBreakdown") -> "EnergyBreakdown":
        return EnergyBreakdown(self.mac + other.mac, self.sl + other.sl, self.sg + other.sg, self.dram + other.dram)

    def scaled(self, k: float) -> "EnergyBreakdown":
        return EnergyBreakdown(self.mac * k, self.sl * k, self.sg * k, self.dram * k)


def energy(macs: int, sl_words: int, sg_words: int, offchip_words: int, table: EnergyTable) -> EnergyBreakdown:
    return EnergyBreakdown(
        mac=macs * table.e_mac,
        sl=sl_words * table.e_sl_access,
        sg=sg_words * table.e_sg_access,
        dram=offchip_words * table.e_dram_access,
    )


CSV_COLUMNS = (
    "scope",
    "dataflow",
    "total_cycles",
    "ideal_cycles",
    "util",
    "runtime_s",
    "macs",
    "offchip_words",
    *(f"offchip_{r}" for r in TRAFFIC_ROLES),
    "sg_words",
    "sl_words",
    "sfu_visits",
    "energy_j",
    "energy_mac_j",
    "energy_sl_j",
    "energy_sg_j",
    "energy_dram_j",
    "live_footprint_bytes",
    "peak_footprint_bytes",
    "bw_peak_bytes_per_cycle",
    "bw_mean_bytes_per_cycle",
)


@dataclass(frozen=True)
class CostReport:
    scope: str
    dataflow: str
    total_cycles: float
    ideal_cycles: int
    macs: int
    offchip: Dict[str, int]
    sg_words: int
    sl_words: int
    sfu_visits: int
    energy: EnergyBreakdown
    live_footprint_bytes: int
    peak_footprint_bytes: int
    bw_peak_bytes_per_cycle: float
    bw_mean_bytes_per_cycle: float
    clock_hz: float = 1e9

    @property
    def util(self) -> float:
        if self.total_cycles <= 0:
            return 1.0
        return self.ideal_cycles / self.total_cycles

    @property
    def offchip_words(self) -> int:
        return sum(self.offchip.values())

    @property
    def runtime_s(self) -> float:
        return self.total_cycles / self.clock_hz

    def row(self) -> dict:
        e = self.energy
        out = {
            "scope": self.scope,
            "dataflow": self.dataflow,
            "total_cycles": self.total_cycles,
            "ideal_cycles": self.ideal_cycles,
            "util": self.util,
            "runtime_s": self.runtime_s,
            "macs": self.macs,
            "offchip_words": self.offchip_words,
            "sg_words": self.sg_words,
            "sl_words": self.sl_words,
            "sfu_visits": self.sfu_visits,
            "energy_j": e.total,
            "energy_mac_j": e.mac,
            "energy_sl_j": e.sl,
            "energy_sg_j": e.sg,
            "energy_dram_j": e.dram,
            "live_footprint_bytes": self.live_footprint_bytes,
            "peak_footprint_bytes": self.peak_footprint_bytes,
            "bw_peak_bytes_per_cycle": self.bw_peak_bytes_per_cycle,
            "bw_mean_bytes_per_cycle": self.bw_mean_bytes_per_cycle,
        }
        for r in TRAFFIC_ROLES:
            out[f"offchip_{r}"] = self.offchip.get(r, 0)
        return {c: out[c] for c in CSV_COLUMNS}

    def to_dict(self) -> dict:
        d = self.row()
        d["offchip"] = dict(self.offchip)
        return d


def reports_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _fmt(r[k]) for k in columns})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


# ---------------------------------------------------------------------------
# Iteration plan


@dataclass
class _Step:
    """One class of identical cross-loop steps."""

    count: int
    fused: bool
    macs_l: int = 0
    macs_a: int = 0
    tiles_l: int = 0
    tiles_a: int = 0
    sfu: int = 0
    bg: float = 0.0
    fg_l: int = 0
    fg_a: int = 0


@dataclass
class _Plan:
    steps: List[_Step]
    offchip: Dict[str, int]
    warmup_words: float
    drain_words: float


def _gemm(intra: IntraOpDataflow, dims) -> GemmTraffic:
    return gemm_model(intra.stationarity, dims[0], dims[1], dims[2], clipped(intra.l2_tile, dims))


def _plan_flat(w: AttentionWorkload, cfg: DataflowConfig, caps: Dict[str, int]) -> _Plan:
    N, dk = w.seq_len, w.head_dim
    bt, ht, rows = tile_shape(cfg, w)
    chunks = split_classes(N, rows)
    off = dict.fromkeys(("q", "k", "v", "int", "o"), 0)
    steps: List[_Step] = []
    n_iter = sum(c for _, c in chunks)
    for g, gcount in group_classes(w, bt, ht):
        k_res = min(g * N * dk, caps["k"])
        v_res = min(g * N * dk, caps["v"])
        k_non = g * N * dk - k_res
        v_non = g * N * dk - v_res
        k_reads = v_reads = 0
        for rc, ccount in chunks:
            gl = _gemm(cfg.intra_l, (rc, dk, N))
            ga = _gemm(cfg.intra_a, (rc, N, dk))
            k_reads += ccount * gl.in2
            v_reads += ccount * ga.in2
            q_res = min(g * rc * dk, caps["q"])
            q_non = g * rc * dk - q_res
            o_res = min(g * rc * dk, caps["o"])
            o_non = g * rc * dk - o_res
            i_res = min(g * rc * N, caps["int"])
            i_non = g * rc * N - i_res
            fg_l = q_non * gl.in1 + k_non * gl.in2 + i_non * (gl.out_w + gl.out_r)
            fg_a = i_non * ga.in1 + v_non * ga.in2 + o_non * (ga.out_w + ga.out_r)
            n = gcount * ccount
            off["q"] += n * (q_res + q_non * gl.in1)
            off["int"] += n * i_non * (gl.out_w + gl.out_r + ga.in1)
            off["o"] += n * (o_res + o_non * (ga.out_w + ga.out_r))
            steps.append(
                _Step(
                    count=n,
                    fused=True,
                    macs_l=g * rc * dk * N,
                    macs_a=g * rc * N * dk,
                    tiles_l=g * gl.tiles,
                    tiles_a=g * ga.tiles,
                    sfu=SOFTMAX_VISITS_PER_LOGIT * g * rc * N,
                    bg=q_res + o_res + (k_res + v_res) / n_iter,
                    fg_l=fg_l,
                    fg_a=fg_a,
                )
            )
        off["k"] += gcount * (k_res + k_non * k_reads)
        off["v"] += gcount * (v_res + v_non * v_reads)
    tl = clipped(cfg.intra_l.l2_tile, (rows, dk, N))
    ta = clipped(cfg.intra_a.l2_tile, (rows, N, dk))
    return _Plan(steps, off, tl[0] * tl[1] + tl[1] * tl[2], ta[0] * ta[2])


def _plan_two_pass(w: AttentionWorkload, cfg: DataflowConfig, caps: Dict[str, int]) -> _Plan:
    """Base and Base-X: every Logit step runs before any Attend step."""
    N, dk = w.seq_len, w.head_dim
    bt, ht, _ = tile_shape(cfg, w)
    whole_int = cfg.mode is Mode.BASE_TILED and cfg.granularity.kind is GranKind.M
    gl = _gemm(cfg.intra_l, (N, dk, N))
    ga = _gemm(cfg.intra_a, (N, N, dk))
    off = dict.fromkeys(("q", "k", "v", "int", "o"), 0)
    l_steps, a_steps = [], []
    for g, gcount in group_classes(w, bt, ht):
        act = g * N * dk
        q_res, k_res = min(act, caps["q"]), min(act, caps["k"])
        v_res, o_res = min(act, caps["v"]), min(act, caps["o"])
        q_non, k_non, v_non, o_non = act - q_res, act - k_res, act - v_res, act - o_res
        i_res = min(g * N * N, caps["int"])
        i_non = g * N * N - i_res
        # a resident slice of a round-tripping intermediate is written and read once
        i_bg = 0 if whole_int else i_res
        off["q"] += gcount * (q_res + q_non * gl.in1)
        off["k"] += gcount * (k_res + k_non * gl.in2)
        off["v"] += gcount * (v_res + v_non * ga.in2)
        off["o"] += gcount * (o_res + o_non * (ga.out_w + ga.out_r))
        off["int"] += gcount * (2 * i_bg + i_non * (gl.out_w + gl.out_r + ga.in1))
        l_steps.append(
            _Step(
                count=gcount,
                fused=False,
                macs_l=g * N * dk * N,
                tiles_l=g * gl.tiles,
                bg=q_res + k_res + i_bg,
                fg_l=q_non * gl.in1 + k_non * gl.in2 + i_non * (gl.out_w + gl.out_r),
            )
        )
        a_steps.append(
            _Step(
                count=gcount,
                fused=False,
                macs_a=g * N * N * dk,
                tiles_a=g * ga.tiles,
                sfu=SOFTMAX_VISITS_PER_LOGIT * g * N * N,
                bg=v_res + o_res + i_bg,
                fg_a=i_non * ga.in1 + v_non * ga.in2 + o_non * (ga.out_w + ga.out_r),
            )
        )
    # each pass fills and drains the pipeline once
    tl = clipped(cfg.intra_l.l2_tile, (N, dk, N))
    ta = clipped(cfg.intra_a.l2_tile, (N, N, dk))
    warm = tl[0] * tl[1] + tl[1] * tl[2] + ta[0] * ta[1] + ta[1] * ta[2]
    drain = tl[0] * tl[2] + ta[0] * ta[2]
    return _Plan(l_steps + a_steps, off, warm, drain)


def _resolve(w: AttentionWorkload, cfg: DataflowConfig, hw: HardwareConfig, allow_spill: bool):
    check(cfg, w, hw)
    caps = sg_allocation(cfg, w, hw.sg_bytes)
    if not allow_spill and peak_footprint(cfg, w) > hw.sg_bytes:
        raise CapacityError(
            f"{cfg.label} needs {peak_footprint(cfg, w)} B on chip, scratchpad has {hw.sg_bytes} B"
        )
    plan = _plan_flat(w, cfg, caps) if cfg.mode is Mode.FLAT else _plan_two_pass(w, cfg, caps)
    return caps, plan


@dataclass(frozen=True)
class TrafficBreakdown:
    offchip: Dict[str, int]
    sg_words: int
    resident_caps: Dict[str, int]

    @property
    def offchip_total(self) -> int:
        return sum(self.offchip.values())


def _sg_words_la(w: AttentionWorkload, cfg: DataflowConfig) -> int:
    """SG<->PE words at operator level; fixed by intra tiling, not by L3 staging."""
    N, dk, P = w.seq_len, w.head_dim, w.pairs
    gl = _gemm(cfg.intra_l, (N, dk, N))
    ga = _gemm(cfg.intra_a, (N, N, dk))
    per = (
        N * dk * gl.in1 + dk * N * gl.in2 + N * N * (gl.out_w + gl.out_r)
        + N * N * ga.in1 + N * dk * ga.in2 + N * dk * (ga.out_w + ga.out_r)
    )
    return P * per


def traffic(w: AttentionWorkload, cfg: DataflowConfig, hw: HardwareConfig) -> TrafficBreakdown:
    """Off-chip words per tensor role for the Logit/Attend pair."""
    caps, plan = _resolve(w, cfg, hw, allow_spill=True)
    offchip = {_ROLE_NAME[r]: v for r, v in plan.offchip.items()}
    return TrafficBreakdown(offchip, _sg_words_la(w, cfg), caps)


def _time_steps(plan: _Plan, hw: HardwareConfig, bpw: int, sg_per_mac: float):
    P = hw.num_pes
    bwc = hw.offchip_bytes_per_cycle / bpw  # words per cycle
    onc = hw.onchip_bytes_per_cycle / bpw
    sfu_c = hw.sfu_per_cycle
    total = 0.0
    peak_demand = 0.0
    for s in plan.steps:
        c_l = -(-s.macs_l // P) + fill_drain_cycles(hw.noc, hw.pe_rows, hw.pe_cols, s.tiles_l) if s.macs_l else 0
        c_a = -(-s.macs_a // P) + fill_drain_cycles(hw.noc, hw.pe_rows, hw.pe_cols, s.tiles_a) if s.macs_a else 0
        t_l = max(c_l, s.fg_l / bwc)
        t_a = max(c_a, s.fg_a / bwc)
        t_sfu = s.sfu / sfu_c if s.sfu else 0.0
        words = s.bg + s.fg_l + s.fg_a
        t_sg = (s.macs_l + s.macs_a) * sg_per_mac / onc
        t = max(t_l + t_sfu + t_a, words / bwc, t_sg)
        if t > 0:
            peak_demand = max(peak_demand, words * bpw / t)
        total += s.count * t
    overhead = (plan.warmup_words + plan.drain_words) / bwc
    return total + overhead, peak_demand


def schedule(
    w: AttentionWorkload, cfg: DataflowConfig, hw: HardwareConfig, allow_spill: bool = True
) -> CostReport:
    """Cycle, traffic and energy report of the Logit/Attend pair under ``cfg``."""
    caps, plan = _resolve(w, cfg, hw, allow_spill)
    bpw = w.bytes_per_word
    ops = [op for op in derive_operators(w) if op.kind in (OpKind.L, OpKind.A)]
    macs = sum(op.macs for op in ops)
    sg = _sg_words_la(w, cfg)
    total, peak = _time_steps(plan, hw, bpw, sg / macs)
    offchip = dict.fromkeys(TRAFFIC_ROLES, 0)
    for r, v in plan.offchip.items():
        offchip[_ROLE_NAME[r]] = v
    off_total = sum(offchip.values())
    sfu = SOFTMAX_VISITS_PER_LOGIT * w.pairs * w.seq_len * w.seq_len
    sl = SL_ACCESSES_PER_MAC * macs
    return CostReport(
        scope="L-A",
        dataflow=cfg.label,
        total_cycles=total,
        ideal_cycles=ideal_cycles(ops, hw),
        macs=macs,
        offchip=offchip,
        sg_words=sg,
        sl_words=sl,
        sfu_visits=sfu,
        energy=energy(macs, sl, sg, off_total, hw.energy),
        live_footprint_bytes=live_footprint(cfg, w),
        peak_footprint_bytes=peak_footprint(cfg, w),
        bw_peak_bytes_per_cycle=peak,
        bw_mean_bytes_per_cycle=off_total * bpw / total if total else 0.0,
        clock_hz=hw.clock_hz,
    )


def util_of(w: AttentionWorkload, cfg: DataflowConfig, hw: HardwareConfig) -> float:
    return schedule(w, cfg, hw).util


# ---------------------------------------------------------------------------
# Bandwidth requirement


def saturated_util(w: AttentionWorkload, cfg: DataflowConfig, hw: HardwareConfig) -> float:
    """Util in the limit of unbounded off-chip bandwidth."""
    return util_of(w, cfg, hw.with_offchip_bw(1e30))


def min_bw_search(util_at, target: float, start: float, rel_tol: float = 0.01, limit: float = 1e24) -> float:
    """Least bandwidth with ``util_at(bw) >= target`` for a non-decreasing ``util_at``.

    Candidates form the fixed lattice ``start * (1 + rel_tol) ** k``, so the
    answer is exactly monotone in anything that raises ``util_at`` pointwise.
    Returns ``math.inf`` if ``limit`` is reached first.
    """
    ratio = 1.0 + rel_tol

    def ok(k: int) -> bool:
        return util_at(start * ratio**k) >= target

    step = max(1, int(round(math.log(4.0) / math.log(ratio))))
    if ok(0):
        hi = 0
        lo = -step
        while ok(lo):
            hi = lo
            lo -= step
            if start * ratio**lo < 1e-30:
                return start * ratio**hi
    else:
        lo, hi = 0, step
        while not ok(hi):
            lo = hi
            hi += step
            if start * ratio**hi > limit:
                return math.inf
    # invariant: not ok(lo), ok(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return start * ratio**hi


def min_bw_for_util(w: AttentionWorkload, cfg: DataflowConfig, hw: HardwareConfig, target: float) -> float:
    """Least off-chip bandwidth (bytes/s, 1% relative) reaching ``target`` util."""
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    cap = saturated_util(w, cfg, hw)
    if cap < target:
        raise UnreachableTarget(target, cap)
    bw = min_bw_search(lambda b: util_of(w, cfg, hw.with_offchip_bw(b)), target, hw.offchip_bw)
    if math.isinf(bw):
        raise UnreachableTarget(target, cap)
    return bw


# ---------------------------------------------------------------------------
# Unfused GEMMs and block / model scope


@dataclass(frozen=True)
class GemmCost:
    cycles: float
    offchip: int
    sg_words: int
    intra: IntraOpDataflow


def gemm_cost(op: OperatorSpec, hw: HardwareConfig, intra: IntraOpDataflow, bpw: int) -> Optional[GemmCost]:
    """Operator-at-a-time GEMM under L2 tiling; None if its tiles do not fit."""
    dims = (op.m, op.k, op.n)
    t = clipped(intra.l2_tile, dims)
    if (t[0] * t[2] + 2 * (t[0] * t[1] + t[1] * t[2])) * bpw > hw.sg_bytes:
        return None
    g = _gemm(intra, dims)
    in1, in2, out = op.m * op.k, op.k * op.n, op.m * op.n
    words = in1 * g.in1 + in2 * g.in2 + out * (g.out_w + g.out_r)
    bwc = hw.offchip_bytes_per_cycle / bpw
    onc = hw.onchip_bytes_per_cycle / bpw
    compute = -(-op.macs // hw.num_pes) + fill_drain_cycles(hw.noc, hw.pe_rows, hw.pe_cols, g.tiles)
    warm = (t[0] * t[1] + t[1] * t[2] + t[0] * t[2]) / bwc
    cycles = max(compute, words / bwc, words / onc) + warm
    return GemmCost(cycles, words, words, intra)


def _gemm_candidates(op: OperatorSpec, hw: HardwareConfig) -> List[IntraOpDataflow]:
    sizes = sorted({s for s in (16, 64, 256, 1024, 4096)} | {op.m, op.k, op.n})
    out = []
    for st in Stationarity:
        for tm in sizes:
            for tk in sizes:
                for tn in sizes:
                    t = (min(tm, op.m), min(tk, op.k), min(tn, op.n))
                    if t != (tm, tk, tn):
                        continue
                    out.append(IntraOpDataflow(st, t, (min(t[0], hw.pe_rows), 1, min(t[2], hw.pe_cols))))
    return out


@lru_cache(maxsize=4096)
def best_gemm(op: OperatorSpec, hw: HardwareConfig, bpw: int) -> GemmCost:
    """Fastest intra-operator dataflow for an unfused GEMM (ties: smallest traffic)."""
    best = None
    for intra in _gemm_candidates(op, hw):
        c = gemm_cost(op, hw, intra, bpw)
        if c is None:
            continue
        if best is None or (c.cycles, c.offchip) < (best.cycles, best.offchip):
            best = c
    if best is None:
        raise CapacityError(f"no L2 tiling of {op.kind.value} fits {hw.sg_bytes} B")
    return best


def _scale_report(r: CostReport, k: int, scope: str) -> CostReport:
    return replace(
        r,
        scope=scope,
        total_cycles=r.total_cycles * k,
        ideal_cycles=r.ideal_cycles * k,
        macs=r.macs * k,
        offchip={a: b * k for a, b in r.offchip.items()},
        sg_words=r.sg_words * k,
        sl_words=r.sl_words * k,
        sfu_visits=r.sfu_visits * k,
        energy=r.energy.scaled(k),
    )


def block_report(w: AttentionWorkload, cfg: DataflowConfig, hw: HardwareConfig) -> CostReport:
    """One block: Logit/Attend under ``cfg``, other operators unfused and individually tuned."""
    la = schedule(w, cfg, hw)
    bpw = w.bytes_per_word
    bwc = hw.offchip_bytes_per_cycle / bpw
    cycles = la.total_cycles
    offchip = dict(la.offchip)
    sg = la.sg_words
    macs = la.macs
    ideal = la.ideal_cycles
    for op in derive_operators(w):
        if op.kind in (OpKind.L, OpKind.A, OpKind.SOFTMAX):
            continue
        c = best_gemm(op, hw, bpw)
        cycles += c.cycles
        sg += c.sg_words
        macs += op.macs
        ideal += -(-op.macs // hw.num_pes)
        in2 = op.k * op.n
        g = _gemm(c.intra, (op.m, op.k, op.n))
        offchip["weights"] += in2 * g.in2
        offchip["activations"] += c.offchip - in2 * g.in2
    # one normalization layer per block: read + write each activation on the SFU
    acts = w.batch * w.seq_len * w.embed
    norm_visits = NORM_VISITS_PER_ACTIVATION * acts
    cycles += max(norm_visits / hw.sfu_per_cycle, 2 * acts / bwc)
    offchip["activations"] += 2 * acts
    off_total = sum(offchip.values())
    sl = SL_ACCESSES_PER_MAC * macs
    return CostReport(
        scope="block",
        dataflow=cfg.label,
        total_cycles=cycles,
        ideal_cycles=ideal,
        macs=macs,
        offchip=offchip,
        sg_words=sg,
        sl_words=sl,
        sfu_visits=la.sfu_visits + norm_visits,
        energy=energy(macs, sl, sg, off_total, hw.energy),
        live_footprint_bytes=la.live_footprint_bytes,
        peak_footprint_bytes=la.peak_footprint_bytes,
        bw_peak_bytes_per_cycle=la.bw_peak_bytes_per_cycle,
        bw_mean_bytes_per_cycle=off_total * bpw / cycles,
        clock_hz=hw.clock_hz,
    )


def scope_reports(w: AttentionWorkload, cfg: DataflowConfig, hw: HardwareConfig) -> List[CostReport]:
    """L-A, block and model scope reports."""
    la = schedule(w, cfg, hw)
    block = block_report(w, cfg, hw)
    return [la, block, _scale_report(block, w.blocks, "model")]
