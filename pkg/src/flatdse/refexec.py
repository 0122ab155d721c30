"""Functional reference executor for fused attention.

Runs the Logit/Attend cross-loop literally on small tensors: every L2 tile of
every GEMM is visited in its stationarity's loop order, each operand tile load
and output write-back is counted per element, and scratchpad residency is
decided element by element from the same allocation the cost model uses. The
resulting counters are an independent check of ``costmodel.traffic``; the
numerical output checks that fused, row-chunked execution reproduces plain
attention.

Softmax statistics are gathered by the SFU while Logit outputs drain and are
applied as Attend loads its first operand, so softmax adds no memory touches.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from . import _ext
from .dataflow import (
    DataflowConfig,
    IntraOpDataflow,
    Mode,
    Stationarity,
    check,
    clipped,
    sg_allocation,
    tile_shape,
)
from .errors import FlatDseError
from .hardware import HardwareConfig
from .workload import AttentionWorkload

MAX_SEQ_LEN = 512
EPS = 1e-30
ROLE_NAMES = {"q": "q", "k": "k", "v": "v", "int": "intermediate", "o": "o"}


class ShapeMismatch(FlatDseError, ValueError):
    pass


@dataclass(frozen=True)
class DenseTensor:
    dims: Tuple[int, ...]
    values: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        dims = tuple(int(d) for d in self.dims)
        if vals.size != math.prod(dims):
            raise ShapeMismatch(f"{vals.size} values for dims {dims}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("tensor holds non-finite values")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", vals.reshape(dims))

    @classmethod
    def of(cls, array) -> "DenseTensor":
        arr = np.asarray(array, dtype=np.float64)
        return cls(arr.shape, arr)

    def save(self, path) -> None:
        """Raw little-endian float64 data plus a ``.json`` shape sidecar."""
        path = Path(path)
        self.values.astype("<f8").tofile(path)
        path.with_suffix(path.suffix + ".json").write_text(json.dumps({"dims": list(self.dims), "dtype": "<f8"}))

    @classmethod
    def load(cls, path) -> "DenseTensor":
        path = Path(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        return cls(tuple(meta["dims"]), np.fromfile(path, dtype=meta.get("dtype", "<f8")))


@dataclass
class TensorCounter:
    offchip_reads: int = 0
    offchip_writes: int = 0
    sg_reads: int = 0
    sg_writes: int = 0

    @property
    def offchip(self) -> int:
        return self.offchip_reads + self.offchip_writes


@dataclass
class TouchCounters:
    tensors: Dict[str, TensorCounter] = field(
        default_factory=lambda: {name: TensorCounter() for name in ROLE_NAMES.values()}
    )

    def __getitem__(self, name: str) -> TensorCounter:
        return self.tensors[name]

    def offchip(self) -> Dict[str, int]:
        return {name: c.offchip for name, c in self.tensors.items()}


@dataclass
class FusedRun:
    output: DenseTensor
    counters: TouchCounters
    max_row_sum_error: float

    def __iter__(self) -> Iterator:
        return iter((self.output, self.counters))


def _check_qkv(Q: DenseTensor, K: DenseTensor, V: DenseTensor) -> None:
    if len(Q.dims) != 4:
        raise ShapeMismatch(f"expected [B, H, N, dk], got {Q.dims}")
    if Q.dims != K.dims or Q.dims != V.dims:
        raise ShapeMismatch(f"Q {Q.dims}, K {K.dims}, V {V.dims} differ")


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def reference_attention(Q: DenseTensor, K: DenseTensor, V: DenseTensor) -> DenseTensor:
    """softmax(Q K^T) V per (batch, head), dense, with max subtraction."""
    _check_qkv(Q, K, V)
    logits = np.einsum("bhnd,bhmd->bhnm", Q.values, K.values)
    return DenseTensor.of(np.einsum("bhnm,bhmd->bhnd", _softmax_rows(logits), V.values))


def scalar_reference(Q: DenseTensor, K: DenseTensor, V: DenseTensor) -> DenseTensor:
    """Loop-by-loop attention from the kernel backend, one (b, h) slice at a time."""
    _check_qkv(Q, K, V)
    B, H = Q.dims[:2]
    out = np.empty(Q.dims)
    for b in range(B):
        for h in range(H):
            out[b, h] = _ext.scalar_attention(Q.values[b, h], K.values[b, h], V.values[b, h])
    return DenseTensor.of(out)


def compare(a: DenseTensor, b: DenseTensor) -> float:
    """Max element-wise ``|a - b| / max(|b|, 1e-30)``."""
    if a.dims != b.dims:
        raise ShapeMismatch(f"{a.dims} vs {b.dims}")
    if a.values.size == 0:
        return 0.0
    return float(np.max(np.abs(a.values - b.values) / np.maximum(np.abs(b.values), EPS)))


# ---------------------------------------------------------------------------
# Tiled GEMM with touch counting

_LOOP_ORDER = {
    Stationarity.OUTPUT: "mnk",
    Stationarity.WEIGHT: "nkm",
    Stationarity.INPUT: "mkn",
}
_OPERAND_LOOPS = {"in1": "mk", "in2": "kn", "out": "mn"}


class _Operand:
    """Backing store view of one GEMM operand with element residency."""

    def __init__(self, counter: TensorCounter, resident: np.ndarray):
        self.counter = counter
        self.resident = resident

    def _split(self, sl) -> Tuple[int, int]:
        res = int(np.count_nonzero(self.resident[sl]))
        return res, self.resident[sl].size - res

    def load(self, sl) -> None:
        res, non = self._split(sl)
        self.counter.sg_reads += res
        self.counter.offchip_reads += non

    def store(self, sl) -> None:
        res, non = self._split(sl)
        self.counter.sg_writes += res
        self.counter.offchip_writes += non


def _tiled_gemm(
    a: np.ndarray,
    b: np.ndarray,
    intra: IntraOpDataflow,
    in1: _Operand,
    in2: _Operand,
    out: _Operand,
) -> np.ndarray:
    """``a @ b`` over L2 tiles, counting each operand tile movement.

    A tile is (re)loaded at the first iteration of the irrelevant loops nested
    inside its innermost relevant loop; the output tile is written when those
    loops finish and read back when revisited with partial sums.
    """
    M, K = a.shape
    N = b.shape[1]
    tm, tk, tn = clipped(intra.l2_tile, (M, K, N))
    trips = {"m": -(-M // tm), "k": -(-K // tk), "n": -(-N // tn)}
    step = {"m": tm, "k": tk, "n": tn}
    extent = {"m": M, "k": K, "n": N}
    order = _LOOP_ORDER[intra.stationarity]
    inner = {}
    for name, dims in _OPERAND_LOOPS.items():
        last = max(order.index(d) for d in dims)
        inner[name] = order[last + 1 :]
    acc = np.zeros((M, N))
    visited = set()
    for idx in itertools.product(*(range(trips[d]) for d in order)):
        at = dict(zip(order, idx))
        rng = {d: slice(at[d] * step[d], min((at[d] + 1) * step[d], extent[d])) for d in order}
        first = {name: all(at[d] == 0 for d in inner[name]) for name in inner}
        last = all(at[d] == trips[d] - 1 for d in inner["out"])
        s1, s2, so = (rng["m"], rng["k"]), (rng["k"], rng["n"]), (rng["m"], rng["n"])
        if first["in1"]:
            in1.load(s1)
        if first["in2"]:
            in2.load(s2)
        if first["out"]:
            key = (at["m"], at["n"])
            if key in visited:
                out.load(so)
            visited.add(key)
        acc[so] += a[s1] @ b[s2]
        if last:
            out.store(so)
    return acc


def _residency(shape: Tuple[int, ...], cap: int) -> np.ndarray:
    """First ``cap`` elements in pair-major, row-major order are resident."""
    return (np.arange(math.prod(shape)) < cap).reshape(shape)


def _prefetch(counter: TensorCounter, resident_words: int) -> None:
    counter.offchip_reads += resident_words
    counter.sg_writes += resident_words


def _writeback(counter: TensorCounter, resident_words: int) -> None:
    counter.sg_reads += resident_words
    counter.offchip_writes += resident_words


def _workload_of(Q: DenseTensor, bits: int) -> AttentionWorkload:
    B, H, N, dk = Q.dims
    return AttentionWorkload(batch=B, seq_len=N, embed=H * dk, heads=H, bits=bits)


def _with_fault(cfg: DataflowConfig, fault: Optional[str]) -> DataflowConfig:
    """Toggle one tensor's enable flag; a test hook for the verifier."""
    if fault is None:
        return cfg
    attr = {
        "q": "q_enabled", "k": "k_enabled", "v": "v_enabled",
        "int": "logit_enabled", "intermediate": "logit_enabled", "o": "out_enabled",
    }[fault]
    flipped = replace(cfg.flags, **{attr: not getattr(cfg.flags, attr)})
    return replace(cfg, flags=flipped)


def _pair_groups(w: AttentionWorkload, bt: int, ht: int):
    """Yield lists of (b, h) pairs per cross-loop group, in loop order."""
    for b0 in range(0, w.batch, bt):
        for h0 in range(0, w.heads, ht):
            yield [(b, h) for b in range(b0, min(b0 + bt, w.batch)) for h in range(h0, min(h0 + ht, w.heads))]


def fused_attention(
    Q: DenseTensor,
    K: DenseTensor,
    V: DenseTensor,
    cfg: DataflowConfig,
    hw: Optional[HardwareConfig] = None,
    bits: int = 16,
    fault: Optional[str] = None,
) -> FusedRun:
    """Execute ``cfg``'s schedule and count every simulated word movement.

    Without ``hw`` the scratchpad is unbounded. ``fault`` names a tensor
    whose enable flag is flipped for counting only, leaving the numerics
    untouched.
    """
    _check_qkv(Q, K, V)
    w = _workload_of(Q, bits)
    if w.seq_len > MAX_SEQ_LEN:
        raise ValueError(f"reference executor is limited to N <= {MAX_SEQ_LEN}, got {w.seq_len}")
    check(cfg, w, hw)
    sg = hw.sg_bytes if hw is not None else 1 << 62
    count_cfg = _with_fault(cfg, fault)
    caps = sg_allocation(count_cfg, w, sg)
    counters = TouchCounters()
    c = {role: counters[name] for role, name in ROLE_NAMES.items()}
    out = np.zeros(Q.dims)
    row_err = 0.0
    N, dk = w.seq_len, w.head_dim
    bt, ht, rows = tile_shape(cfg, w)
    whole_int = cfg.mode is Mode.BASE_TILED and cfg.granularity.kind.value == "M"

    def ops(shape, role):
        return _residency(shape, caps[role])

    for pairs in _pair_groups(w, bt, ht):
        g = len(pairs)
        q = np.stack([Q.values[p] for p in pairs])
        k = np.stack([K.values[p] for p in pairs])
        v = np.stack([V.values[p] for p in pairs])
        if cfg.mode is Mode.FLAT:
            k_res, v_res = ops((g, N, dk), "k"), ops((g, N, dk), "v")
            _prefetch(c["k"], int(k_res.sum()))
            _prefetch(c["v"], int(v_res.sum()))
            for r0 in range(0, N, rows):
                r1 = min(r0 + rows, N)
                rc = r1 - r0
                q_res, o_res = ops((g, rc, dk), "q"), ops((g, rc, dk), "o")
                i_res = ops((g, rc, N), "int")
                _prefetch(c["q"], int(q_res.sum()))
                probs = []
                for i in range(g):
                    logit = _tiled_gemm(
                        q[i, r0:r1], k[i].T, cfg.intra_l,
                        _Operand(c["q"], q_res[i]), _Operand(c["k"], k_res[i].T), _Operand(c["int"], i_res[i]),
                    )
                    probs.append(_softmax_rows(logit))
                for i, (b, h) in enumerate(pairs):
                    row_err = max(row_err, float(np.max(np.abs(probs[i].sum(axis=-1) - 1.0))))
                    out[b, h, r0:r1] = _tiled_gemm(
                        probs[i], v[i], cfg.intra_a,
                        _Operand(c["int"], i_res[i]), _Operand(c["v"], v_res[i]), _Operand(c["o"], o_res[i]),
                    )
                _writeback(c["o"], int(o_res.sum()))
        else:
            act = (g, N, dk)
            q_res, k_res = ops(act, "q"), ops(act, "k")
            v_res, o_res = ops(act, "v"), ops(act, "o")
            i_res = ops((g, N, N), "int")
            i_staged = int(i_res.sum())
            _prefetch(c["q"], int(q_res.sum()))
            _prefetch(c["k"], int(k_res.sum()))
            probs = []
            for i in range(g):
                logit = _tiled_gemm(
                    q[i], k[i].T, cfg.intra_l,
                    _Operand(c["q"], q_res[i]), _Operand(c["k"], k_res[i].T), _Operand(c["int"], i_res[i]),
                )
                probs.append(_softmax_rows(logit))
            if not whole_int:
                # the staged logit slice is written back and fetched again for Attend
                _writeback(c["int"], i_staged)
                _prefetch(c["int"], i_staged)
            _prefetch(c["v"], int(v_res.sum()))
            for i, (b, h) in enumerate(pairs):
                row_err = max(row_err, float(np.max(np.abs(probs[i].sum(axis=-1) - 1.0))))
                out[b, h] = _tiled_gemm(
                    probs[i], v[i], cfg.intra_a,
                    _Operand(c["int"], i_res[i]), _Operand(c["v"], v_res[i]), _Operand(c["o"], o_res[i]),
                )
            _writeback(c["o"], int(o_res.sum()))
    return FusedRun(DenseTensor.of(out), counters, row_err)


def random_qkv(B: int, H: int, N: int, dk: int, seed: int = 0) -> Tuple[DenseTensor, DenseTensor, DenseTensor]:
    rng = np.random.default_rng(seed)
    return tuple(DenseTensor.of(rng.standard_normal((B, H, N, dk))) for _ in range(3))


# ---------------------------------------------------------------------------
# Verification suite


@dataclass(frozen=True)
class VerifyCase:
    batch: int
    heads: int
    seq_len: int
    head_dim: int
    sg_bytes: int


@dataclass
class VerifyReport:
    checked: int = 0
    max_rel_error: float = 0.0
    max_row_sum_error: float = 0.0
    first_mismatch: Optional[str] = None
    numeric_failures: int = 0
    counter_failures: int = 0

    @property
    def passed(self) -> bool:
        return self.checked > 0 and self.numeric_failures == 0 and self.counter_failures == 0


DEFAULT_CASES = (
    VerifyCase(1, 1, 64, 8, 1 << 40),
    VerifyCase(1, 1, 64, 8, 6 << 10),
    VerifyCase(2, 2, 48, 8, 1 << 40),
    VerifyCase(2, 2, 48, 8, 24 << 10),
    VerifyCase(1, 4, 40, 4, 8 << 10),
    VerifyCase(2, 4, 32, 4, 3 << 10),
)


def suite_bounds(seq_len: int):
    from .dataflow import SearchBounds

    rows = tuple(sorted({1, 16, seq_len // 3 or 1, seq_len}))
    return SearchBounds(rows=rows, tile_sizes=(16, 64))


def run_verification(
    cases=DEFAULT_CASES,
    seed: int = 0,
    fault: Optional[str] = None,
    tol: float = 1e-6,
    pe: int = 8,
) -> VerifyReport:
    """Equivalence and counter-agreement checks over every legal config of each case."""
    from .costmodel import traffic
    from .dataflow import enumerate_space

    report = VerifyReport()
    for case in cases:
        if case.seq_len > MAX_SEQ_LEN:
            raise ValueError(f"verification is limited to N <= {MAX_SEQ_LEN}, got {case.seq_len}")
        Q, K, V = random_qkv(case.batch, case.heads, case.seq_len, case.head_dim, seed)
        ref = reference_attention(Q, K, V)
        w = _workload_of(Q, 16)
        hw = HardwareConfig(pe, pe, case.sg_bytes, 1e9)
        for cfg in enumerate_space(w, hw, suite_bounds(case.seq_len)):
            run = fused_attention(Q, K, V, cfg, hw, fault=fault)
            report.checked += 1
            err = compare(run.output, ref)
            report.max_rel_error = max(report.max_rel_error, err)
            report.max_row_sum_error = max(report.max_row_sum_error, run.max_row_sum_error)
            if err > tol or run.max_row_sum_error > 1e-12:
                report.numeric_failures += 1
            expected = traffic(w, cfg, hw).offchip
            got = run.counters.offchip()
            for name, value in got.items():
                if value != expected[name]:
                    report.counter_failures += 1
                    if report.first_mismatch is None:
                        report.first_mismatch = (
                            f"{cfg.label} flags={cfg.flags.code} case={case}: "
                            f"counter '{name}' offchip={value}, model={expected[name]}"
                        )
                    break
    return report
