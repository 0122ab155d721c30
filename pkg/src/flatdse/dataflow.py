"""Dataflow configuration space for the Logit/Attend pair.

Three execution modes are modelled:

* ``BASE``: operator-at-a-time, only L2 (intra-operator) tiling.
* ``BASE_TILED``: L3 staging at M/B/H granularity, but the whole Logit
  tensor is produced before Attend starts.
* ``FLAT``: Logit and Attend fused per cross-loop tile (M/B/H/R granularity)
  and executed interleaved, with per-tensor enable flags for the staged tile.

Tensor roles used throughout: ``q``, ``k``, ``v``, ``int`` (logit / softmaxed
logit), ``o``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import (
    CapacityError,
    DataflowViolation,
    EmptySpace,
    EmptyTile,
    IllegalGranularity,
    InvalidDataflow,
    RowSplitViolation,
    TileExceedsDims,
)
from .hardware import HardwareConfig
from .workload import AttentionWorkload

ROLES = ("q", "k", "v", "int", "o")
# SG is handed out in this order; the O(N^2) intermediate goes before K/V so a
# fused tile never spills its logits while smaller operands stay resident.
ALLOC_ORDER = ("q", "o", "int", "k", "v")


class Mode(str, Enum):
    BASE = "base"
    BASE_TILED = "base_tiled"
    FLAT = "flat"


class GranKind(str, Enum):
    M = "M"
    B = "B"
    H = "H"
    R = "R"


@dataclass(frozen=True, order=True)
class Granularity:
    kind: GranKind
    size: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", GranKind(self.kind))

    def tile(self, w: AttentionWorkload) -> Tuple[int, int, int]:
        """(batch tile, head tile, rows) of one cross-loop iteration."""
        if self.kind is GranKind.M:
            return w.batch, w.heads, w.seq_len
        if self.kind is GranKind.B:
            return self.size, w.heads, w.seq_len
        if self.kind is GranKind.H:
            return 1, self.size, w.seq_len
        return 1, 1, self.size

    @property
    def label(self) -> str:
        return "M" if self.kind is GranKind.M else f"{self.kind.value}{self.size}"


@dataclass(frozen=True, order=True)
class FlatTileFlags:
    q_enabled: bool = True
    k_enabled: bool = True
    v_enabled: bool = True
    logit_enabled: bool = True
    out_enabled: bool = True

    @classmethod
    def all_combinations(cls) -> List["FlatTileFlags"]:
        return [cls(*bits) for bits in itertools.product((False, True), repeat=5)]

    def enabled(self, role: str) -> bool:
        return {
            "q": self.q_enabled,
            "k": self.k_enabled,
            "v": self.v_enabled,
            "int": self.logit_enabled,
            "o": self.out_enabled,
        }[role]

    @property
    def code(self) -> str:
        return "".join("1" if self.enabled(r) else "0" for r in ROLES)

    @classmethod
    def from_code(cls, code: str) -> "FlatTileFlags":
        if len(code) != 5 or set(code) - {"0", "1"}:
            raise ValueError(f"flag code must be five 0/1 characters, got {code!r}")
        return cls(*(c == "1" for c in code))


class Stationarity(str, Enum):
    WEIGHT = "weight"
    INPUT = "input"
    OUTPUT = "output"


Tile3 = Tuple[int, int, int]


@dataclass(frozen=True, order=True)
class IntraOpDataflow:
    stationarity: Stationarity = Stationarity.OUTPUT
    l2_tile: Tile3 = (256, 64, 256)
    l1_tile: Tile3 = (1, 1, 1)

    def __post_init__(self):
        object.__setattr__(self, "stationarity", Stationarity(self.stationarity))
        object.__setattr__(self, "l2_tile", tuple(int(x) for x in self.l2_tile))
        object.__setattr__(self, "l1_tile", tuple(int(x) for x in self.l1_tile))


@dataclass(frozen=True)
class DataflowConfig:
    mode: Mode
    granularity: Optional[Granularity] = None
    flags: FlatTileFlags = field(default_factory=FlatTileFlags)
    intra_l: IntraOpDataflow = field(default_factory=IntraOpDataflow)
    intra_a: IntraOpDataflow = field(default_factory=IntraOpDataflow)
    # key-dimension extent of a fused tile; None means the full sequence
    key_cols: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def label(self) -> str:
        if self.mode is Mode.BASE:
            return "Base"
        prefix = "Base" if self.mode is Mode.BASE_TILED else "Flat"
        return f"{prefix}-{self.granularity.label}" if self.granularity else prefix

    def to_dict(self) -> dict:
        def intra(d: IntraOpDataflow) -> dict:
            return {
                "stationarity": d.stationarity.value,
                "l2_tile": list(d.l2_tile),
                "l1_tile": list(d.l1_tile),
            }

        out = {
            "mode": self.mode.value,
            "granularity": None
            if self.granularity is None
            else {"kind": self.granularity.kind.value, "size": self.granularity.size},
            "flags": self.flags.code,
            "intra": {"L": intra(self.intra_l), "A": intra(self.intra_a)},
        }
        if self.key_cols is not None:
            out["key_cols"] = self.key_cols
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DataflowConfig":
        gran = d.get("granularity")
        flags = d.get("flags", "11111")
        if isinstance(flags, dict):
            flags = FlatTileFlags(**flags)
        else:
            flags = FlatTileFlags.from_code(flags)
        intra = d.get("intra", {})
        return cls(
            mode=Mode(d["mode"]),
            granularity=None if gran is None else Granularity(GranKind(gran["kind"]), int(gran.get("size", 0))),
            flags=flags,
            intra_l=IntraOpDataflow(**intra["L"]) if "L" in intra else IntraOpDataflow(),
            intra_a=IntraOpDataflow(**intra["A"]) if "A" in intra else IntraOpDataflow(),
            key_cols=d.get("key_cols"),
        )

    def key(self) -> str:
        """Canonical serialization; the lexicographic tie-break key."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# GEMM re-read model


@dataclass(frozen=True)
class GemmTraffic:
    """Per-element transfer multipliers of one L2-tiled GEMM ``[M,K]x[K,N]``."""

    in1: int
    in2: int
    out_w: int
    out_r: int
    tiles: int


@lru_cache(maxsize=65536)
def gemm_model(stationarity: Stationarity, M: int, K: int, N: int, tile: Tile3) -> GemmTraffic:
    """Loop orders: OS = m,n,k; WS = n,k,m; IS = m,k,n (outermost first)."""
    tm, tk, tn = min(tile[0], M), min(tile[1], K), min(tile[2], N)
    nm, nk, nn = -(-M // tm), -(-K // tk), -(-N // tn)
    tiles = nm * nk * nn
    if stationarity is Stationarity.OUTPUT:
        return GemmTraffic(nn, nm, 1, 0, tiles)
    if stationarity is Stationarity.WEIGHT:
        return GemmTraffic(nn, 1, nk, nk - 1, tiles)
    return GemmTraffic(1, nm, nk, nk - 1, tiles)


def clipped(tile: Tile3, dims: Tile3) -> Tile3:
    return tuple(min(t, d) for t, d in zip(tile, dims))


# ---------------------------------------------------------------------------
# Cross-loop geometry


def tile_shape(cfg: DataflowConfig, w: AttentionWorkload) -> Tuple[int, int, int]:
    """(bt, ht, rows) of one cross-loop step; Base walks one (b, h) slice at a time."""
    if cfg.mode is Mode.BASE:
        return 1, 1, w.seq_len
    return cfg.granularity.tile(w)


def split_classes(total: int, step: int) -> List[Tuple[int, int]]:
    """[(extent, count)] of the full tiles and the remainder tile."""
    out = []
    if total // step:
        out.append((step, total // step))
    if total % step:
        out.append((total % step, 1))
    return out


def group_classes(w: AttentionWorkload, bt: int, ht: int) -> List[Tuple[int, int]]:
    """[(pairs per group, number of groups)] over the batch x head cross-loop."""
    acc: Dict[int, int] = {}
    for gb, cb in split_classes(w.batch, bt):
        for gh, ch in split_classes(w.heads, ht):
            acc[gb * gh] = acc.get(gb * gh, 0) + cb * ch
    return sorted(acc.items(), reverse=True)


# ---------------------------------------------------------------------------
# Footprint


def tensor_terms(cfg: DataflowConfig, w: AttentionWorkload) -> Dict[str, Tuple[int, int]]:
    """Staged L3/FLAT tile per role as (words per tile, buffer multiplicity).

    Off-chip-facing tiles are double buffered (multiplicity 2). Roles not
    staged by ``cfg`` have zero words.
    """
    N, dk = w.seq_len, w.head_dim
    terms = {r: (0, 1) for r in ROLES}
    if cfg.mode is Mode.BASE:
        return terms
    bt, ht, rows = cfg.granularity.tile(w)
    g = bt * ht
    f = cfg.flags
    if cfg.mode is Mode.FLAT:
        full = {"q": g * rows * dk, "k": g * N * dk, "v": g * N * dk, "int": g * rows * N, "o": g * rows * dk}
        mult = {"q": 2, "k": 2, "v": 2, "int": 1, "o": 2}
    else:
        whole_int = cfg.granularity.kind is GranKind.M
        full = {"q": g * N * dk, "k": g * N * dk, "v": g * N * dk, "int": g * N * N, "o": g * N * dk}
        mult = {"q": 2, "k": 2, "v": 2, "int": 1 if whole_int else 2, "o": 2}
    for r in ROLES:
        if f.enabled(r):
            terms[r] = (full[r], mult[r])
    return terms


def live_footprint_words(cfg: DataflowConfig, w: AttentionWorkload) -> int:
    return sum(words * mult for words, mult in tensor_terms(cfg, w).values())


def live_footprint(cfg: DataflowConfig, w: AttentionWorkload) -> int:
    """Bytes of on-chip storage needed to keep every enabled staged tile resident."""
    return live_footprint_words(cfg, w) * w.bytes_per_word


def _staged(cfg: DataflowConfig, role: str) -> bool:
    return cfg.mode is not Mode.BASE and cfg.flags.enabled(role)


def stage_dims(cfg: DataflowConfig, w: AttentionWorkload) -> Tuple[Tile3, Tile3]:
    """GEMM dims (M, K, N) of the Logit and Attend stage of one step, per slice."""
    N, dk = w.seq_len, w.head_dim
    rows = tile_shape(cfg, w)[2]
    return (rows, dk, N), (rows, N, dk)


def l2_working_set_words(cfg: DataflowConfig, w: AttentionWorkload) -> int:
    """L2 buffers for operands not held in a staged tile, plus the output tile.

    Unstaged inputs are double buffered; the output / partial-sum tile is
    always charged.
    """
    dims_l, dims_a = stage_dims(cfg, w)
    tl = clipped(cfg.intra_l.l2_tile, dims_l)
    ta = clipped(cfg.intra_a.l2_tile, dims_a)

    def stage(t: Tile3, in1_staged: bool, in2_staged: bool) -> int:
        tm, tk, tn = t
        ws = tm * tn
        if not in1_staged:
            ws += 2 * tm * tk
        if not in2_staged:
            ws += 2 * tk * tn
        return ws

    ws_l = stage(tl, _staged(cfg, "q"), _staged(cfg, "k"))
    ws_a = stage(ta, _staged(cfg, "int") and cfg.mode is not Mode.BASE, _staged(cfg, "v"))
    return max(ws_l, ws_a)


def peak_footprint(cfg: DataflowConfig, w: AttentionWorkload) -> int:
    return (live_footprint_words(cfg, w) + l2_working_set_words(cfg, w)) * w.bytes_per_word


def sg_allocation(cfg: DataflowConfig, w: AttentionWorkload, sg_bytes: int) -> Dict[str, int]:
    """Resident words per staged tile instance, per role.

    The L2 working set is reserved first; the rest of the scratchpad is
    handed to staged tiles in ``ALLOC_ORDER``. A role whose cap is below its
    tile size spills the remainder.
    """
    bpw = w.bytes_per_word
    avail = sg_bytes - l2_working_set_words(cfg, w) * bpw
    if avail < 0:
        raise CapacityError(
            f"L2 working set of {cfg.label} needs {l2_working_set_words(cfg, w) * bpw} B, "
            f"scratchpad has {sg_bytes} B"
        )
    terms = tensor_terms(cfg, w)
    caps = {}
    for role in ALLOC_ORDER:
        words, mult = terms[role]
        need = words * mult * bpw
        grant = min(need, avail)
        avail -= grant
        caps[role] = min(words, grant // (mult * bpw))
    return caps


# ---------------------------------------------------------------------------
# Legality


def validate(cfg: DataflowConfig, w: AttentionWorkload, hw: Optional[HardwareConfig] = None) -> List[DataflowViolation]:
    """Return every violation of ``cfg`` (empty list means legal)."""
    out: List[DataflowViolation] = []
    N, dk = w.seq_len, w.head_dim
    gran = cfg.granularity
    if cfg.mode is Mode.BASE:
        if gran is not None:
            out.append(IllegalGranularity("Base has no cross-operator tile"))
    elif gran is None:
        out.append(IllegalGranularity(f"{cfg.mode.value} requires a granularity"))
    else:
        if cfg.mode is Mode.BASE_TILED and gran.kind is GranKind.R:
            out.append(IllegalGranularity("row granularity needs fusion; Base tiles are M/B/H"))
        limit = {GranKind.B: w.batch, GranKind.H: w.heads, GranKind.R: N}.get(gran.kind)
        if limit is not None:
            if gran.size < 1:
                out.append(EmptyTile(f"{gran.kind.value} tile size {gran.size} < 1"))
            elif gran.size > limit:
                out.append(TileExceedsDims(f"{gran.kind.value} tile size {gran.size} > {limit}"))
    if cfg.key_cols is not None:
        if cfg.key_cols < 1:
            out.append(EmptyTile(f"key_cols {cfg.key_cols} < 1"))
        elif cfg.key_cols > N:
            out.append(TileExceedsDims(f"key_cols {cfg.key_cols} > N={N}"))
        elif cfg.key_cols < N:
            if cfg.mode is Mode.FLAT:
                out.append(
                    RowSplitViolation(f"fused tile spans {cfg.key_cols} of {N} keys; softmax needs whole rows")
                )
            else:
                out.append(IllegalGranularity("key-dimension split only applies to fused tiles"))
    full_l, full_a = (N, dk, N), (N, N, dk)
    for name, intra, full in (("L", cfg.intra_l, full_l), ("A", cfg.intra_a, full_a)):
        if min(intra.l2_tile) < 1 or min(intra.l1_tile) < 1:
            out.append(EmptyTile(f"{name} intra tile has an empty dimension"))
            continue
        if any(t > d for t, d in zip(intra.l2_tile, full)):
            out.append(TileExceedsDims(f"{name} L2 tile {intra.l2_tile} exceeds dims {full}"))
        if any(a > b for a, b in zip(intra.l1_tile, intra.l2_tile)):
            out.append(TileExceedsDims(f"{name} L1 tile {intra.l1_tile} exceeds L2 tile {intra.l2_tile}"))
        if hw is not None:
            tm, _, tn = intra.l1_tile
            if tm > hw.pe_rows or tn > hw.pe_cols:
                out.append(TileExceedsDims(f"{name} L1 tile {intra.l1_tile} exceeds the PE array"))
    if hw is not None and 3 * w.bytes_per_word > hw.sl_bytes:
        out.append(TileExceedsDims("PE-local scratchpad cannot hold input, weight and output words"))
    return out


def check(cfg: DataflowConfig, w: AttentionWorkload, hw: Optional[HardwareConfig] = None) -> None:
    violations = validate(cfg, w, hw)
    if violations:
        raise InvalidDataflow(violations)


# ---------------------------------------------------------------------------
# Enumeration


def _pow2_upto(n: int) -> List[int]:
    vals = [1 << i for i in range(n.bit_length()) if (1 << i) <= n]
    if vals[-1] != n:
        vals.append(n)
    return vals


def _divisors(n: int) -> List[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


DEFAULT_TILE_SIZES = (16, 64, 256, 1024, 4096)


@dataclass(frozen=True)
class SearchBounds:
    """Finite description of a dataflow search space.

    ``None`` fields take workload/hardware dependent defaults: rows are
    powers of two up to N (plus N), batch/head tiles are proper divisors,
    every flag combination, and tied L/A intra dataflows over
    ``stationarities`` x cubic L2 tiles of ``tile_sizes``.
    """

    modes: Tuple[Mode, ...] = (Mode.BASE, Mode.BASE_TILED, Mode.FLAT)
    flat_kinds: Tuple[GranKind, ...] = (GranKind.M, GranKind.B, GranKind.H, GranKind.R)
    base_kinds: Tuple[GranKind, ...] = (GranKind.M, GranKind.B, GranKind.H)
    rows: Optional[Tuple[int, ...]] = None
    b_tiles: Optional[Tuple[int, ...]] = None
    h_tiles: Optional[Tuple[int, ...]] = None
    flags: Optional[Tuple[FlatTileFlags, ...]] = None
    stationarities: Tuple[Stationarity, ...] = (Stationarity.OUTPUT, Stationarity.WEIGHT, Stationarity.INPUT)
    tile_sizes: Tuple[int, ...] = DEFAULT_TILE_SIZES
    intra: Optional[Tuple[Tuple[IntraOpDataflow, IntraOpDataflow], ...]] = None

    def restrict(self, modes: Sequence[Mode]) -> "SearchBounds":
        from dataclasses import replace

        return replace(self, modes=tuple(m for m in self.modes if m in modes))

    def to_dict(self) -> dict:
        return {
            "modes": [m.value for m in self.modes],
            "flat_kinds": [k.value for k in self.flat_kinds],
            "base_kinds": [k.value for k in self.base_kinds],
            "rows": None if self.rows is None else list(self.rows),
            "b_tiles": None if self.b_tiles is None else list(self.b_tiles),
            "h_tiles": None if self.h_tiles is None else list(self.h_tiles),
            "flags": None if self.flags is None else [f.code for f in self.flags],
            "stationarities": [s.value for s in self.stationarities],
            "tile_sizes": list(self.tile_sizes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchBounds":
        kw = {}
        if "modes" in d:
            kw["modes"] = tuple(Mode(m) for m in d["modes"])
        if "flat_kinds" in d:
            kw["flat_kinds"] = tuple(GranKind(k) for k in d["flat_kinds"])
        if "base_kinds" in d:
            kw["base_kinds"] = tuple(GranKind(k) for k in d["base_kinds"])
        for f in ("rows", "b_tiles", "h_tiles"):
            if d.get(f) is not None:
                kw[f] = tuple(int(x) for x in d[f])
        if d.get("flags") is not None:
            kw["flags"] = tuple(FlatTileFlags.from_code(c) for c in d["flags"])
        if "stationarities" in d:
            kw["stationarities"] = tuple(Stationarity(s) for s in d["stationarities"])
        if "tile_sizes" in d:
            kw["tile_sizes"] = tuple(int(x) for x in d["tile_sizes"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            from .errors import ConfigError

            raise ConfigError(f"unknown bounds field(s): {', '.join(sorted(unknown))}")
        return cls(**kw)


def default_intra(
    w: AttentionWorkload, hw: Optional[HardwareConfig], stationarities, tile_sizes
) -> List[Tuple[IntraOpDataflow, IntraOpDataflow]]:
    N, dk = w.seq_len, w.head_dim
    rows = hw.pe_rows if hw else 1 << 30
    cols = hw.pe_cols if hw else 1 << 30
    out = []
    seen = set()
    for st in stationarities:
        for t in tile_sizes:
            tl = clipped((t, t, t), (N, dk, N))
            ta = clipped((t, t, t), (N, N, dk))
            pair = (
                IntraOpDataflow(st, tl, (min(tl[0], rows), 1, min(tl[2], cols))),
                IntraOpDataflow(st, ta, (min(ta[0], rows), 1, min(ta[2], cols))),
            )
            if pair not in seen:
                seen.add(pair)
                out.append(pair)
    return out


def _granularities(mode: Mode, w: AttentionWorkload, b: SearchBounds) -> List[Granularity]:
    kinds = b.flat_kinds if mode is Mode.FLAT else b.base_kinds
    out = []
    for kind in (GranKind.M, GranKind.B, GranKind.H, GranKind.R):
        if kind not in kinds:
            continue
        if kind is GranKind.M:
            out.append(Granularity(GranKind.M))
        elif kind is GranKind.B:
            sizes = b.b_tiles if b.b_tiles is not None else [d for d in _divisors(w.batch) if d < w.batch]
            out.extend(Granularity(GranKind.B, s) for s in sorted(set(sizes)))
        elif kind is GranKind.H:
            sizes = b.h_tiles if b.h_tiles is not None else [d for d in _divisors(w.heads) if d < w.heads]
            out.extend(Granularity(GranKind.H, s) for s in sorted(set(sizes)))
        elif mode is Mode.FLAT:
            sizes = b.rows if b.rows is not None else _pow2_upto(w.seq_len)
            out.extend(Granularity(GranKind.R, s) for s in sorted(set(sizes)))
    return out


def enumerate_space(
    w: AttentionWorkload, hw: Optional[HardwareConfig], bounds: SearchBounds
) -> Iterator[DataflowConfig]:
    """Yield every legal config in deterministic order.

    With ``hw`` given, configs whose L2 working set exceeds the scratchpad
    are skipped. Raises ``EmptySpace`` if nothing is yielded.
    """
    intra = list(bounds.intra) if bounds.intra is not None else default_intra(
        w, hw, bounds.stationarities, bounds.tile_sizes
    )
    flags = list(bounds.flags) if bounds.flags is not None else FlatTileFlags.all_combinations()
    count = 0
    for mode in (Mode.BASE, Mode.BASE_TILED, Mode.FLAT):
        if mode not in bounds.modes:
            continue
        grans: List[Optional[Granularity]] = [None] if mode is Mode.BASE else _granularities(mode, w, bounds)
        flag_set = [FlatTileFlags()] if mode is Mode.BASE else flags
        for gran in grans:
            for fl in flag_set:
                for il, ia in intra:
                    cfg = DataflowConfig(mode, gran, fl, il, ia)
                    if validate(cfg, w, hw):
                        continue
                    if hw is not None and l2_working_set_words(cfg, w) * w.bytes_per_word > hw.sg_bytes:
                        continue
                    count += 1
                    yield cfg
    if count == 0:
        raise EmptySpace("search bounds admit no legal dataflow")


def count_space(w: AttentionWorkload, hw: Optional[HardwareConfig], bounds: SearchBounds) -> int:
    return sum(1 for _ in enumerate_space(w, hw, bounds))


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def fixed_variant(label: str, w: AttentionWorkload) -> Tuple[Mode, Optional[Granularity]]:
    """Parse a named dataflow variant such as ``Base``, ``Base-H``, ``Flat-R64``.

    ``-B``/``-H`` without a size mean a single batch / head per tile.
    """
    name, _, gran = label.partition("-")
    name = name.lower()
    if name == "base" and not gran:
        return Mode.BASE, None
    mode = {"base": Mode.BASE_TILED, "flat": Mode.FLAT}.get(name)
    if mode is None or not gran:
        raise ValueError(f"unknown dataflow variant {label!r}")
    kind = GranKind(gran[0].upper())
    if kind is GranKind.M:
        return mode, Granularity(GranKind.M)
    size = int(gran[1:]) if len(gran) > 1 else 1
    if kind is GranKind.R and len(gran) == 1:
        raise ValueError("row variant needs a size, e.g. Flat-R64")
    return mode, Granularity(kind, size)
