"""Message formats and node-side state machines of the three schemes.

* Proposed: the head broadcasts timestamped beacons; sensors only listen,
  recover the head's clock frequency, and piggyback the reverse two-way
  exchange on their measurement reports. The head owns all offset
  estimates.
* Two-way (TPSN style): every SI the sensor runs a request/response exchange
  and corrects its own logical clock offset, optionally also its skew from
  the GMLLE.

Node objects never see reference time. They are fed hardware-clock readings
by the simulator and produce timestamps from their logical clocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .clock import LogicalClock
from .estimators import Gmlle, TwoWayExchange, make_skew_estimator


class NoExchangeYet(RuntimeError):
    """A report was requested before any beacon reached the sensor."""


# -- messages -------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Beacon:
    seq: int
    t1_departure: float

    def to_line(self) -> str:
        return f"beacon {self.seq} t1={self.t1_departure:.12e} n=0"


@dataclass(frozen=True, slots=True)
class MeasurementRecord:
    measurement_id: int
    local_time: float
    data: object = None


@dataclass(frozen=True, slots=True)
class Report:
    """Report/Response payload: bundled measurements plus the embedded
    reverse-exchange timestamps (t1 from the beacon, t2/t3 on the sensor's
    logical clock)."""

    sensor_id: int
    seq: int
    bundle: Tuple[MeasurementRecord, ...]
    t1_ref: float
    t2_arrival: float
    t3_departure: float

    def to_line(self) -> str:
        return (
            f"report {self.seq} t1={self.t1_ref:.12e} t2={self.t2_arrival:.12e} "
            f"t3={self.t3_departure:.12e} n={len(self.bundle)}"
        )


@dataclass(frozen=True, slots=True)
class Request:
    seq: int
    t1: float

    def to_line(self) -> str:
        return f"request {self.seq} t1={self.t1:.12e} n=0"


@dataclass(frozen=True, slots=True)
class Response:
    seq: int
    t1: float
    t2: float
    t3: float

    def to_line(self) -> str:
        return f"response {self.seq} t1={self.t1:.12e} t2={self.t2:.12e} t3={self.t3:.12e} n=0"


@dataclass(frozen=True, slots=True)
class DataReport:
    """Plain measurement report of the two-way schemes (one record, no sync data)."""

    sensor_id: int
    seq: int
    record: MeasurementRecord

    def to_line(self) -> str:
        return f"data {self.seq} tm={self.record.local_time:.12e} n=1"


Message = Union[Beacon, Report, Request, Response, DataReport]


def format_message(msg: Message) -> str:
    return msg.to_line()


# -- scheme selection -----------------------------------------------------


@dataclass(frozen=True)
class ProposedScheme:
    estimator: str = "cr"
    n_bm: int = 1

    def __post_init__(self) -> None:
        if self.n_bm < 1:
            raise ValueError("n_bm must be >= 1")
        if self.estimator not in ("cr", "rls", "mle"):
            raise ValueError(f"unknown estimator {self.estimator!r}")

    @property
    def name(self) -> str:
        return "proposed"


@dataclass(frozen=True)
class TwoWayScheme:
    with_gmlle: bool = False

    @property
    def name(self) -> str:
        return "two_way_gmlle" if self.with_gmlle else "two_way"


Scheme = Union[ProposedScheme, TwoWayScheme]


# -- two-way arithmetic ---------------------------------------------------


def two_way_offset(t1: float, t2: float, t3: float, t4: float) -> float:
    """Offset of the responder clock (t2, t3) relative to the initiator clock
    (t1, t4), exact for symmetric delays and frequency-locked clocks."""
    return ((t2 - t1) - (t4 - t3)) / 2.0


# -- proposed scheme ------------------------------------------------------


class ProposedSensor:
    """Sensor side of the proposed scheme.

    Listens to beacons for frequency recovery, keeps the latest beacon as the
    head of the next reverse exchange, and bundles measurements into reports.
    Translating gateways reuse this class for their upstream side.
    """

    def __init__(self, sensor_id: int = 0, estimator: str = "cr", n_bm: int = 1, hw_start: float = 0.0):
        if n_bm < 1:
            raise ValueError("n_bm must be >= 1")
        self.sensor_id = sensor_id
        self.n_bm = n_bm
        self.estimator = make_skew_estimator(estimator)
        self.clock = LogicalClock.free_running(hw_start)
        self.skew_estimate: Optional[float] = None
        self.exchange_head: Optional[Tuple[float, float]] = None
        self.pending: List[MeasurementRecord] = []
        self.n_tx = 0
        self.n_rx = 0
        self._report_seq = 0

    @property
    def frequency_locked(self) -> bool:
        return self.skew_estimate is not None

    def on_beacon(self, beacon: Beacon, hw_arrival: float) -> Optional[float]:
        """Feed a beacon; returns the new skew estimate if one is available."""
        ratio = self.estimator.update(beacon.t1_departure, hw_arrival)
        if ratio is not None:
            self.skew_estimate = ratio - 1.0
            self.clock = self.clock.synced(hw_arrival, self.skew_estimate)
            t2 = self.clock.last_sync_logical_time
        else:
            t2 = self.clock.read(hw_arrival)
        self.exchange_head = (beacon.t1_departure, t2)
        return self.skew_estimate if ratio is not None else None

    def local_time(self, hw_now: float) -> float:
        return self.clock.read(hw_now)

    def record_measurement(self, measurement_id: int, hw_now: float, data=None) -> MeasurementRecord:
        rec = MeasurementRecord(measurement_id, self.clock.read(hw_now), data)
        self.pending.append(rec)
        return rec

    def report_due(self) -> bool:
        return self.exchange_head is not None and len(self.pending) >= self.n_bm

    def emit_report(self, hw_now: float, flush: bool = False, bundle=None) -> Report:
        """Build a report from the oldest ``n_bm`` pending records (all of them
        with ``flush``), or from an explicit ``bundle`` (gateway forwarding)."""
        if self.exchange_head is None:
            raise NoExchangeYet("no beacon received yet; report must be deferred")
        if bundle is None:
            take = len(self.pending) if flush else self.n_bm
            if take == 0 or len(self.pending) < take:
                raise ValueError("not enough pending measurements for a report")
            bundle = tuple(self.pending[:take])
            del self.pending[:take]
        t1_ref, t2 = self.exchange_head
        report = Report(self.sensor_id, self._report_seq, tuple(bundle), t1_ref, t2, self.clock.read(hw_now))
        self._report_seq += 1
        return report


@dataclass
class SensorLedger:
    """Head-side (or gateway-side) view of one downstream node's clock offset."""

    last_offset_estimate: Optional[float] = None
    last_update_ref_time: Optional[float] = None
    n_updates: int = 0


def head_on_report(ledger: SensorLedger, report: Report, t4_ref_arrival: float):
    """Estimate the sender's offset from the embedded exchange and map every
    bundled measurement into the receiver's time frame with that one offset."""
    offset = two_way_offset(report.t1_ref, report.t2_arrival, report.t3_departure, t4_ref_arrival)
    ledger.last_offset_estimate = offset
    ledger.last_update_ref_time = t4_ref_arrival
    ledger.n_updates += 1
    return ledger, [(rec.measurement_id, rec.local_time - offset) for rec in report.bundle]


# -- conventional two-way scheme --------------------------------------------


class TwoWaySensor:
    """Sensor side of sensor-initiated two-way exchanges.

    With ``with_gmlle`` the exchanges' hardware timestamps also feed a GMLLE
    and the logical clock is skew-compensated as well as offset-corrected.
    """

    def __init__(self, sensor_id: int = 0, with_gmlle: bool = False, hw_start: float = 0.0):
        self.sensor_id = sensor_id
        self.with_gmlle = with_gmlle
        self.clock = LogicalClock.free_running(hw_start)
        self.gmlle = Gmlle(reference="responder") if with_gmlle else None
        self.skew_estimate: Optional[float] = None
        self.offset_estimate: Optional[float] = None
        self.n_tx = 0
        self.n_rx = 0
        self._outstanding: Dict[int, Tuple[float, float]] = {}
        self._seq = 0
        self._data_seq = 0

    def start_exchange(self, hw_now: float) -> Request:
        t1 = self.clock.read(hw_now)
        req = Request(self._seq, t1)
        self._outstanding[self._seq] = (t1, hw_now)
        self._seq += 1
        return req

    def on_response(self, resp: Response, hw_arrival: float) -> Optional[float]:
        """Apply the exchange; returns the new skew estimate when GMLLE yields one."""
        t1, t1_hw = self._outstanding.pop(resp.seq)
        t4 = self.clock.read(hw_arrival)
        # two_way_offset gives the head relative to us; we need the reverse
        offset = -two_way_offset(t1, resp.t2, resp.t3, t4)
        ratio = None
        if self.gmlle is not None:
            ratio = self.gmlle.update(TwoWayExchange(t1_hw, resp.t2, resp.t3, hw_arrival))
        if ratio is not None:
            self.skew_estimate = ratio - 1.0
        self.offset_estimate = offset
        self.clock = self.clock.synced(hw_arrival, self.skew_estimate, offset)
        return self.skew_estimate if ratio is not None else None

    def record_measurement(self, measurement_id: int, hw_now: float, data=None) -> DataReport:
        rep = DataReport(self.sensor_id, self._data_seq, MeasurementRecord(measurement_id, self.clock.read(hw_now), data))
        self._data_seq += 1
        return rep


def head_on_request(req: Request, t_now: float, processing_time: float = 0.0) -> Response:
    """Head reply to a two-way request; the head clock is the reference."""
    return Response(req.seq, req.t1, t_now, t_now + processing_time)


def sensor_on_beacon(sensor: ProposedSensor, beacon: Beacon, hw_arrival: float) -> ProposedSensor:
    sensor.on_beacon(beacon, hw_arrival)
    return sensor


def sensor_emit_report(sensor: ProposedSensor, due: List[MeasurementRecord], hw_now: float) -> Report:
    return sensor.emit_report(hw_now, bundle=tuple(due))


# -- analytic error predictors ---------------------------------------------


def predict_error_conventional(T_m: float, d: float, skew_or_err: float, compensated: bool = False) -> float:
    """Measurement-time error of the conventional exchange.

    Uncompensated: ``(d + T_m) * skew``. Compensated (``T_m >> d``):
    ``T_m * skew_error``.
    """
    if T_m < 0 or d < 0:
        raise ValueError("T_m and d must be non-negative")
    if compensated:
        return T_m * skew_or_err
    return (d + T_m) * skew_or_err


def predict_error_reverse(T_m: float, d: float, skew_err: float) -> float:
    """Measurement-time error of the reverse exchange: ``(2d + T_m) * skew_error / 2``."""
    if T_m < 0 or d < 0:
        raise ValueError("T_m and d must be non-negative")
    return (2.0 * d + T_m) * skew_err / 2.0
