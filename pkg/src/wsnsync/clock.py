"""Hardware and logical clock models.

Reference time ``t`` is the head node clock. A sensor's hardware clock is the
affine map ``T(t) = (1 + skew) * t + offset``. The logical clock is a
piecewise-linear function of the *hardware* reading, never of ``t``, because a
sensor only ever observes its own oscillator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class ClockOrderError(ValueError):
    """A clock was read at a hardware time before its current segment start."""


@dataclass(frozen=True, slots=True)
class ClockParams:
    """True skew (normalized frequency difference) and offset of a node clock."""

    skew: float = 0.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not 1.0 + self.skew > 0.0:
            raise ValueError(f"1 + skew must be positive, got skew={self.skew}")

    @property
    def ratio(self) -> float:
        return 1.0 + self.skew


def hw_read(params: ClockParams, t: float) -> float:
    return (1.0 + params.skew) * t + params.offset


def hw_to_reference(params: ClockParams, hw_time: float) -> float:
    """Inverse of :func:`hw_read`; used only by the simulator, never by nodes."""
    return (hw_time - params.offset) / (1.0 + params.skew)


@dataclass(frozen=True, slots=True)
class LogicalClock:
    """One segment of a logical clock.

    Reading at hardware time ``T`` gives::

        last_sync_logical_time + (T - last_sync_hw_time) / (1 + est_skew) - est_offset

    Only the latest segment is kept; earlier ones are never needed.
    """

    last_sync_hw_time: float = 0.0
    last_sync_logical_time: float = 0.0
    est_skew: float = 0.0
    est_offset: float = 0.0

    def __post_init__(self) -> None:
        if not 1.0 + self.est_skew > 0.0:
            raise ValueError(f"1 + est_skew must be positive, got {self.est_skew}")

    @classmethod
    def free_running(cls, hw_time: float = 0.0) -> "LogicalClock":
        """A logical clock that simply follows the hardware clock."""
        return cls(hw_time, hw_time, 0.0, 0.0)

    def read(self, hw_time: float) -> float:
        if hw_time < self.last_sync_hw_time:
            raise ClockOrderError(
                f"hardware time {hw_time!r} precedes segment start {self.last_sync_hw_time!r}"
            )
        return (
            self.last_sync_logical_time
            + (hw_time - self.last_sync_hw_time) / (1.0 + self.est_skew)
            - self.est_offset
        )

    def synced(
        self,
        at_hw_time: float,
        new_skew: Optional[float] = None,
        new_offset: Optional[float] = None,
    ) -> "LogicalClock":
        """Start a new segment at ``at_hw_time``.

        A missing skew or offset is taken as zero: a frequency-only update
        carries no offset correction and an offset-only update runs the clock
        at the raw hardware rate. With neither, the segment is kept as is.
        """
        if new_skew is None and new_offset is None:
            return self
        anchor = self.read(at_hw_time)
        return LogicalClock(
            at_hw_time,
            anchor,
            0.0 if new_skew is None else new_skew,
            0.0 if new_offset is None else new_offset,
        )


def logical_read(state: LogicalClock, hw_time: float) -> float:
    return state.read(hw_time)


def apply_sync(
    state: LogicalClock,
    at_hw_time: float,
    new_skew: Optional[float] = None,
    new_offset: Optional[float] = None,
) -> LogicalClock:
    return state.synced(at_hw_time, new_skew, new_offset)
