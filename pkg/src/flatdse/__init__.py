"""Analytical cost model and design-space exploration for fused attention dataflows."""

from .dataflow import (
    DataflowConfig,
    FlatTileFlags,
    GranKind,
    Granularity,
    IntraOpDataflow,
    Mode,
    SearchBounds,
    Stationarity,
    enumerate_space,
    live_footprint,
    validate,
)
from .costmodel import CostReport, min_bw_for_util, schedule, traffic
from .dse import DesignPoint, DseResult, Objective, paired_opt, search
from .hardware import EnergyTable, HardwareConfig, Noc
from .refexec import DenseTensor, fused_attention, reference_attention
from .workload import AttentionWorkload, OpKind, access_counts, derive_operators, operational_intensity

__version__ = "0.1.0"
