"""Accelerator resources and per-event energy costs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .errors import ConfigError


class Noc(str, Enum):
    SYSTOLIC = "systolic"
    TREE = "tree"
    CROSSBAR = "crossbar"


@dataclass(frozen=True)
class EnergyTable:
    """Joules per event; accesses are per word."""

    e_mac: float = 1e-12
    e_sl_access: float = 1e-12
    e_sg_access: float = 6e-12
    e_dram_access: float = 200e-12

    def __post_init__(self):
        vals = (self.e_mac, self.e_sl_access, self.e_sg_access, self.e_dram_access)
        if any(v < 0 for v in vals):
            raise ConfigError("energy entries must be non-negative")
        if not (self.e_dram_access > self.e_sg_access > self.e_sl_access):
            raise ConfigError("energy table must satisfy e_dram > e_sg > e_sl")


@dataclass(frozen=True)
class HardwareConfig:
    pe_rows: int
    pe_cols: int
    sg_bytes: int
    offchip_bw: float  # bytes/s
    clock_hz: float = 1e9
    sl_bytes: int = 64
    onchip_bw: Optional[float] = None  # bytes/s; None -> 8x off-chip
    noc: Noc = Noc.TREE
    sfu_rate: float = math.inf  # element-visits/s
    energy: EnergyTable = field(default_factory=EnergyTable)
    name: Optional[str] = None

    def __post_init__(self):
        if self.onchip_bw is None:
            object.__setattr__(self, "onchip_bw", 8.0 * self.offchip_bw)
        object.__setattr__(self, "noc", Noc(self.noc))
        for f in ("pe_rows", "pe_cols", "sg_bytes", "sl_bytes"):
            v = getattr(self, f)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"hardware.{f} must be a positive integer, got {v!r}")
        for f in ("offchip_bw", "onchip_bw", "clock_hz", "sfu_rate"):
            v = getattr(self, f)
            if not v > 0:
                raise ConfigError(f"hardware.{f} must be positive, got {v!r}")
        if self.onchip_bw < self.offchip_bw:
            raise ConfigError("hardware.onchip_bw must be >= hardware.offchip_bw")

    @property
    def num_pes(self) -> int:
        return self.pe_rows * self.pe_cols

    @property
    def peak_macs_per_sec(self) -> float:
        return self.num_pes * self.clock_hz

    @property
    def offchip_bytes_per_cycle(self) -> float:
        return self.offchip_bw / self.clock_hz

    @property
    def onchip_bytes_per_cycle(self) -> float:
        return self.onchip_bw / self.clock_hz

    @property
    def sfu_per_cycle(self) -> float:
        return self.sfu_rate / self.clock_hz

    def with_offchip_bw(self, bw: float) -> "HardwareConfig":
        return replace(self, offchip_bw=bw, onchip_bw=max(self.onchip_bw, bw))

    def replace(self, **changes) -> "HardwareConfig":
        return replace(self, **changes)
