"""Energy-efficient WSN time synchronization: one-way frequency recovery at
sensors plus head-initiated (reverse) two-way exchanges, with the competing
estimators, their bounds, and a deterministic simulator."""

from .clock import ClockOrderError, ClockParams, LogicalClock, apply_sync, hw_read, logical_read
from .delays import DEFAULT_MEAN_DELAY, DelayKind, DelaySampler, DelaySpec, sample_delay
from .estimators import (
    CumulativeRatio,
    DegenerateDesignError,
    EstimateUnavailable,
    Gmlle,
    JointMle,
    OneWayObservation,
    Rls,
    TwoWayExchange,
    cr_lower_bound,
    crlb_offset,
    crlb_skew,
)
from .protocol import ProposedScheme, TwoWayScheme
from .sim import GatewayMode, Hop, RunConfig, RunReport, Topology, generate_measurement_schedule, run_simulation

__version__ = "0.1.0"
