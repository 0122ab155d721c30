"""Attention operator graph and its closed-form cost algebra.

Shapes, MAC counts, exact word-access counts and operational intensity for
every operator of one attention block (projections, Logit, softmax, Attend,
output projection, the two feed-forward layers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional

from .errors import ConfigError, DegenerateOperator
from .hardware import HardwareConfig


VALID_BITS = (8, 16, 32)


@dataclass(frozen=True)
class AttentionWorkload:
    batch: int
    seq_len: int
    embed: int
    heads: int
    blocks: int = 1
    ff_mult: int = 4
    bits: int = 16
    name: Optional[str] = None

    def __post_init__(self):
        for field in ("batch", "seq_len", "embed", "heads", "blocks", "ff_mult"):
            value = getattr(self, field)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"workload.{field} must be a positive integer, got {value!r}")
        if self.bits not in VALID_BITS:
            raise ConfigError(f"workload.bits must be one of {VALID_BITS}, got {self.bits!r}")
        if self.embed % self.heads:
            raise ConfigError(
                f"workload.embed ({self.embed}) must be divisible by workload.heads ({self.heads})"
            )

    @property
    def head_dim(self) -> int:
        return self.embed // self.heads

    @property
    def bytes_per_word(self) -> int:
        return self.bits // 8

    @property
    def pairs(self) -> int:
        """Independent (batch, head) slices of the Logit/Attend operators."""
        return self.batch * self.heads

    def replace(self, **changes) -> "AttentionWorkload":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return AttentionWorkload(**values)


class OpKind(str, Enum):
    Q = "Q"
    K = "K"
    V = "V"
    L = "L"
    SOFTMAX = "Softmax"
    A = "A"
    O = "O"
    FC1 = "FC1"
    FC2 = "FC2"


ACT_ACT_KINDS = frozenset({OpKind.L, OpKind.A})


@dataclass(frozen=True)
class OperatorSpec:
    """One operator of a block.

    GEMM kinds compute ``instances`` independent products of shape
    ``[m, k] x [k, n]``. Softmax has ``m`` rows of length ``n`` and ``k == 0``.
    """

    kind: OpKind
    m: int
    k: int
    n: int
    instances: int = 1
    heads: int = 1

    @property
    def is_gemm(self) -> bool:
        return self.kind is not OpKind.SOFTMAX

    @property
    def in2_role(self) -> str:
        if self.kind is OpKind.SOFTMAX:
            return "none"
        return "activation" if self.kind in ACT_ACT_KINDS else "weight"

    @property
    def macs(self) -> int:
        if not self.is_gemm:
            return 0
        return self.instances * self.m * self.k * self.n


@dataclass(frozen=True)
class AccessCounts:
    in1_words: int
    in2_words: int
    out_words: int
    macs: int

    @property
    def total_words(self) -> int:
        return self.in1_words + self.in2_words + self.out_words


def derive_operators(w: AttentionWorkload) -> List[OperatorSpec]:
    """Operators of one block in execution order."""
    B, N, D, H, dk = w.batch, w.seq_len, w.embed, w.heads, w.head_dim
    F = w.ff_mult * D
    proj = dict(m=B * N, k=D, n=D)
    return [
        OperatorSpec(OpKind.Q, **proj),
        OperatorSpec(OpKind.K, **proj),
        OperatorSpec(OpKind.V, **proj),
        OperatorSpec(OpKind.L, m=N, k=dk, n=N, instances=B * H, heads=H),
        OperatorSpec(OpKind.SOFTMAX, m=B * H * N, k=0, n=N, heads=H),
        OperatorSpec(OpKind.A, m=N, k=N, n=dk, instances=B * H, heads=H),
        OperatorSpec(OpKind.O, **proj),
        OperatorSpec(OpKind.FC1, m=B * N, k=D, n=F),
        OperatorSpec(OpKind.FC2, m=B * N, k=F, n=D),
    ]


def operator(w: AttentionWorkload, kind: OpKind) -> OperatorSpec:
    for op in derive_operators(w):
        if op.kind is kind:
            return op
    raise KeyError(kind)


def access_counts(op: OperatorSpec, multi_head: bool = True) -> AccessCounts:
    """Exact word counts touched by one unfused execution of ``op``.

    With ``multi_head=False`` the Logit output / Attend input is counted as a
    single-head ``[B, N, N]`` tensor, i.e. the per-head copies collapse.
    """
    if op.kind is OpKind.SOFTMAX:
        words = op.m * op.n
        if not multi_head:
            words //= op.heads
        return AccessCounts(words, 0, words, 0)
    in1 = op.instances * op.m * op.k
    in2 = (op.instances if op.in2_role == "activation" else 1) * op.k * op.n
    out = op.instances * op.m * op.n
    if not multi_head:
        if op.kind is OpKind.L:
            out //= op.heads
        elif op.kind is OpKind.A:
            in1 //= op.heads
    return AccessCounts(in1, in2, out, op.macs)


def operational_intensity(op: OperatorSpec, multi_head: bool = True) -> Fraction:
    """MACs per word of memory traffic, as an exact rational."""
    counts = access_counts(op, multi_head)
    if counts.total_words == 0:
        raise DegenerateOperator(f"{op.kind.value} touches no memory")
    return Fraction(counts.macs, counts.total_words)


def roofline_attainable(
    oi: float,
    hw: HardwareConfig,
    staged_on_chip: bool = False,
    fits: bool = True,
    bits: int = 16,
) -> float:
    """Attainable MAC/s under a two-ceiling roofline.

    On-chip bandwidth is used only when the caller stages the operands on chip
    and reports that they fit.
    """
    if oi <= 0:
        raise ValueError("operational intensity must be positive")
    peak = hw.peak_macs_per_sec
    if math.isinf(oi):
        return peak
    bw = hw.onchip_bw if (staged_on_chip and fits) else hw.offchip_bw
    return min(peak, float(oi) * bw / (bits // 8))


def block_macs(w: AttentionWorkload) -> int:
    return sum(op.macs for op in derive_operators(w))
