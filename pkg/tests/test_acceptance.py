"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import pytest

from conftest import preset_hw, preset_model
from flatdse import AttentionWorkload, HardwareConfig
from flatdse.costmodel import schedule, traffic
from flatdse.dataflow import (
    DataflowConfig,
    FlatTileFlags,
    GranKind,
    Granularity,
    Mode,
    SearchBounds,
    enumerate_space,
    live_footprint,
    peak_footprint,
    tensor_terms,
)
from flatdse.dse import BASE_MODES, FLAT_MODES, Objective, dominates, min_bw_opt, paired_opt, search
from flatdse.errors import UnreachableTarget
from flatdse.refexec import DEFAULT_CASES, fused_attention, random_qkv, run_verification
from flatdse.workload import OpKind, operational_intensity, operator

pytestmark = pytest.mark.acceptance

SEQ_LENS = [512 << i for i in range(8)]  # 512 .. 64K
SG_SIZES = [(20 << 10) * 10**j for j in range(6)]  # 20 KB .. ~2 GB, decade steps
JOBS = os.cpu_count() or 1


def _paired_point(task):
    preset, n, sg = task
    hw = preset_hw(preset).replace(sg_bytes=sg)
    p = paired_opt(preset_model("bert-base", seq_len=n), hw)
    return task, p.flat_opt.util, p.base_opt.util


def test_c01_fusion_dominance(criterion):
    grid = [(p, n, sg) for p in ("edge", "cloud") for n in SEQ_LENS for sg in SG_SIZES]
    t0 = time.time()
    with ProcessPoolExecutor(JOBS) as ex:
        results = list(ex.map(_paired_point, grid))
    elapsed = time.time() - t0
    worse = [t for t, f, b in results if f < b]
    long = [(f, b) for (_, n, _), f, b in results if n >= 16384]
    ahead = sum(1 for f, b in long if f - b >= 0.05)
    ok = not worse and ahead >= 0.5 * len(long) and elapsed <= 600
    criterion(
        1,
        ok,
        f"{len(results)} points, flat<base at {len(worse)}; ahead by >=0.05 at {ahead}/{len(long)} "
        f"long-sequence points; {elapsed:.0f}s on {JOBS} cpu",
    )


def test_c02_long_sequence_scaling(criterion, cloud):
    w = preset_model("bert-base", seq_len=65536)
    flat = search(w, cloud, SearchBounds(flat_kinds=(GranKind.R,)).restrict(FLAT_MODES))
    base = search(w, cloud, SearchBounds().restrict(BASE_MODES))
    f, b = flat.best.report.util, base.best.report.util
    criterion(
        2,
        f >= 0.9 and b <= 0.5,
        f"N=64K cloud: best Flat-R util {f:.3f} ({flat.best.config.label}, need >=0.9), "
        f"best Base/BaseTiled util {b:.3f} (need <=0.5)",
    )


def _flat_logit_on(w, hw, rows):
    b = SearchBounds(modes=(Mode.FLAT,), rows=rows, tile_sizes=(16, 64, 256))
    for cfg in enumerate_space(w, hw, b):
        if cfg.flags.logit_enabled:
            yield cfg


def test_c03_intermediate_elimination(criterion):
    checked, bad = 0, []
    for w, sg in [
        (AttentionWorkload(4, 512, 256, 4), 1 << 20),
        (AttentionWorkload(2, 2048, 512, 8), 8 << 20),
        (AttentionWorkload(64, 4096, 768, 12), 32 << 20),
    ]:
        hw = HardwareConfig(32, 32, sg, 100e9)
        for cfg in _flat_logit_on(w, hw, None):
            if peak_footprint(cfg, w) > sg:
                continue  # tiles do not fit
            checked += 1
            if traffic(w, cfg, hw).offchip["intermediate"]:
                bad.append(cfg.label)
    # executed counters on small instances
    executed = 0
    for B, H, N, dk, sg in [(1, 2, 64, 8, 64 << 10), (2, 2, 48, 4, 16 << 10)]:
        Q, K, V = random_qkv(B, H, N, dk, seed=11)
        w = AttentionWorkload(B, N, H * dk, H)
        hw = HardwareConfig(8, 8, sg, 1e9)
        for cfg in _flat_logit_on(w, hw, (1, 8, N)):
            if peak_footprint(cfg, w) > sg:
                continue
            executed += 1
            if fused_attention(Q, K, V, cfg, hw).counters["intermediate"].offchip:
                bad.append(cfg.label)
    criterion(
        3,
        not bad and checked > 0 and executed > 0,
        f"{checked} modelled + {executed} executed fitting Flat configs; nonzero intermediate in {len(bad)}",
    )


def test_c04_footprint_laws(criterion):
    rng = random.Random(4)
    affine_bad, quad_bad, trials = 0, 0, 0
    for _ in range(100):
        dk, heads, rows = rng.choice([16, 32, 64, 128]), rng.choice([1, 4, 12]), rng.choice([1, 16, 64, 256])
        batch = rng.randint(1, 8)
        code = "".join(rng.choice("01") for _ in range(5))
        n0 = rng.randint(rows, 4096)
        fp = []
        for n in (n0, n0 + 1, n0 + 2):
            w = AttentionWorkload(batch, n, dk * heads, heads)
            fp.append(live_footprint(DataflowConfig(Mode.FLAT, Granularity(GranKind.R, rows), FlatTileFlags.from_code(code)), w))
        affine_bad += fp[2] - 2 * fp[1] + fp[0] != 0
        n = rng.randint(1, 4096)
        terms = []
        for nn in (n, 2 * n):
            w = AttentionWorkload(batch, nn, dk * heads, heads)
            terms.append(tensor_terms(DataflowConfig(Mode.BASE_TILED, Granularity(GranKind.M)), w)["int"][0])
        quad_bad += terms[1] != 4 * terms[0]
        trials += 1
    criterion(
        4,
        affine_bad == 0 and quad_bad == 0,
        f"{trials} trials: Flat-R second difference nonzero {affine_bad}x, M-Gran intermediate not x4 {quad_bad}x",
    )


def test_c05_footprint_formula(criterion):
    rng = random.Random(5)
    bad = 0
    for _ in range(150):
        dk, heads = rng.choice([1, 8, 64, 96]), rng.randint(1, 16)
        n = rng.randint(1, 65536)
        r = rng.randint(1, n)
        bits = rng.choice([8, 16, 32])
        w = AttentionWorkload(rng.randint(1, 64), n, dk * heads, heads, bits=bits)
        got = live_footprint(DataflowConfig(Mode.FLAT, Granularity(GranKind.R, r)), w)
        bad += got != (4 * dk * (r + n) + r * n) * (bits // 8)
    criterion(5, bad == 0, f"150 random (R, N, dk): {bad} mismatches")


def test_c06_oi_algebra(criterion):
    rng = random.Random(6)
    inv_bad, recip_err, inc_bad = 0, 0.0, 0
    for _ in range(120):
        heads = rng.randint(1, 32)
        d = heads * rng.randint(1, 128)
        n = rng.randint(1, 65536)
        b1, b2 = sorted(rng.sample(range(1, 257), 2))
        w1, w2 = AttentionWorkload(b1, n, d, heads), AttentionWorkload(b2, n, d, heads)
        for kind in (OpKind.L, OpKind.A):
            o1, o2 = operational_intensity(operator(w1, kind)), operational_intensity(operator(w2, kind))
            inv_bad += o1 != o2
            recip_err = max(recip_err, abs(float(1 / o1) - (2 / n + heads / d)))
            assert isinstance(o1, Fraction)
        for kind in (OpKind.Q, OpKind.K, OpKind.V, OpKind.O):
            inc_bad += not operational_intensity(operator(w2, kind)) > operational_intensity(operator(w1, kind))
    criterion(
        6,
        inv_bad == 0 and recip_err <= 1e-12 and inc_bad == 0,
        f"120 dims: B-variance {inv_bad}, max |1/OI - (2/N + H/D)| {recip_err:.1e}, projection non-increase {inc_bad}",
    )


@pytest.fixture(scope="module")
def verification():
    t0 = time.time()
    report = run_verification(DEFAULT_CASES)
    return report, time.time() - t0


def test_c07_oracle_equivalence(criterion, verification):
    report, elapsed = verification
    assert all(c.seq_len <= 256 and c.batch * c.heads <= 8 for c in DEFAULT_CASES)
    criterion(
        7,
        report.counter_failures == 0 and report.checked >= 200 and elapsed <= 120,
        f"{report.checked} configs, {report.counter_failures} counter mismatches, {elapsed:.0f}s",
    )


def test_c08_numerical_correctness(criterion, verification):
    report, _ = verification
    criterion(
        8,
        report.numeric_failures == 0 and report.max_rel_error <= 1e-6 and report.max_row_sum_error <= 1e-12,
        f"max rel err {report.max_rel_error:.1e}, max row-sum err {report.max_row_sum_error:.1e} "
        f"over {report.checked} configs",
    )


def _space_min_bw(w, hw, modes):
    try:
        return min_bw_opt(w, hw, SearchBounds().restrict(modes), 0.95)[0]
    except UnreachableTarget:
        return math.inf


def test_c09_bandwidth_requirement(criterion, cloud):
    ratios = []
    for n in (8192, 16384, 32768, 65536):
        w = preset_model("bert-base", seq_len=n)
        ratios.append(_space_min_bw(w, cloud, FLAT_MODES) / _space_min_bw(w, cloud, BASE_MODES))
    mean_ratio = sum(ratios) / len(ratios)
    mono_bad = 0
    for n in (8192, 65536):
        w = preset_model("bert-base", seq_len=n)
        bws = [_space_min_bw(w, cloud.replace(sg_bytes=sg), FLAT_MODES) for sg in SG_SIZES]
        mono_bad += sum(1 for a, b in zip(bws, bws[1:]) if b > a)
    criterion(
        9,
        mean_ratio <= 0.5 and mono_bad == 0,
        f"flat/base 0.95-util bandwidth ratio per N {[round(r, 3) for r in ratios]}, mean {mean_ratio:.3f} "
        f"(need <=0.5); SG monotonicity violations {mono_bad}",
    )


def test_c10_dse_integrity(criterion, edge):
    w = preset_model("bert-base", seq_len=512)
    bounds = SearchBounds()
    one = search(w, edge, bounds, Objective.MAX_UTIL, jobs=1, dump=True)
    eight = search(w, edge, bounds, Objective.MAX_UTIL, jobs=8)
    top = max(p.report.util for p in one.dump)
    rescan_ok = one.best.report.util == top and one.evaluated_count == len(one.dump)
    same = one.to_dict() == eight.to_dict()
    front = {p.key for p in one.pareto}
    violations = sum(1 for p in one.pareto for q in one.dump if dominates(q, p))
    missing = sum(1 for p in one.dump if p.key not in front and not any(dominates(q, p) for q in one.dump))
    criterion(
        10,
        rescan_ok and same and violations == 0 and missing == 0,
        f"{one.evaluated_count} configs: re-scan {'ok' if rescan_ok else 'differs'}, jobs 1 vs 8 "
        f"{'identical' if same else 'differ'}, pareto {len(front)} points, {violations} dominated, {missing} missing",
    )


def test_c11_calibration_sanity(criterion, cloud):
    utils = {}
    for n in (512, 2048, 4096, 8192):
        w = preset_model("bert-base", seq_len=n)
        utils[n] = search(w, cloud, SearchBounds().restrict(BASE_MODES)).best.report.util
    hit = [n for n in (2048, 4096, 8192) if utils[n] < 0.8]
    criterion(
        11,
        bool(hit),
        "Base-opt util " + ", ".join(f"N={n}: {u:.3f}" for n, u in utils.items()) + f"; below 0.8 in [2K, 8K] at {hit}",
    )
