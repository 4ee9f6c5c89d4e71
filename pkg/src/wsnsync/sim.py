"""Single-sensor (optionally multi-hop) time-synchronization simulation.

Reference time is the simulator clock and equals the head node clock. Every
other node is a :class:`~wsnsync.clock.ClockParams` hardware clock that the
simulator reads on the node's behalf; delays are drawn per direction and per
hop from independent samplers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .clock import ClockParams, hw_read
from .delays import DelaySampler, DelaySpec, SeedLike
from .engine import DELIVERY, FLUSH, MEASUREMENT, TIMER, Scheduler
from .protocol import (
    Beacon,
    DataReport,
    ProposedScheme,
    ProposedSensor,
    Report,
    Request,
    Response,
    Scheme,
    SensorLedger,
    TwoWayScheme,
    TwoWaySensor,
    head_on_report,
    head_on_request,
)

DOWN = 1
UP = -1


class GatewayMode(str, enum.Enum):
    RELAY = "relay"
    TRANSLATE = "translate"


@dataclass(frozen=True)
class Hop:
    """One link of a chain. ``uplink_delay`` defaults to ``delay``."""

    delay: DelaySpec
    uplink_delay: Optional[DelaySpec] = None

    @property
    def up(self) -> DelaySpec:
        return self.delay if self.uplink_delay is None else self.uplink_delay


@dataclass(frozen=True)
class Topology:
    """Head-to-sensor path. No hops means one direct link using the run's delay.

    ``hops[0]`` touches the head and ``hops[-1]`` the sensor; there is one
    gateway between every pair of consecutive hops.
    """

    mode: GatewayMode = GatewayMode.RELAY
    hops: Tuple[Hop, ...] = ()
    gateway_clocks: Tuple[ClockParams, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", GatewayMode(self.mode))
        object.__setattr__(self, "hops", tuple(self.hops))
        object.__setattr__(self, "gateway_clocks", tuple(self.gateway_clocks))
        n_gw = max(len(self.hops) - 1, 0)
        if self.gateway_clocks and len(self.gateway_clocks) != n_gw:
            raise ValueError(f"need {n_gw} gateway clocks, got {len(self.gateway_clocks)}")

    @property
    def n_gateways(self) -> int:
        return max(len(self.hops) - 1, 0)


@dataclass(frozen=True)
class RunConfig:
    scheme: Scheme = field(default_factory=ProposedScheme)
    si: float = 1.0
    horizon: float = 3600.0
    n_measurements: int = 100
    warmup: float = 360.0
    delay: DelaySpec = field(default_factory=lambda: DelaySpec.gaussian(1e-9))
    sensor: ClockParams = field(default_factory=lambda: ClockParams(1e-4, 1.0))
    seed: int = 0
    topology: Topology = field(default_factory=Topology)
    processing_time: float = 0.0
    measurement_times: Optional[Tuple[float, ...]] = None
    trace: bool = False

    def validate(self) -> None:
        if not self.si > 0:
            raise ValueError("si must be > 0")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("warmup must satisfy 0 <= warmup < horizon")
        if self.n_measurements < 0:
            raise ValueError("n_measurements must be >= 0")
        if self.processing_time < 0:
            raise ValueError("processing_time must be >= 0")
        if isinstance(self.scheme, TwoWayScheme) and self.topology.hops:
            raise ValueError("two-way schemes are simulated on a single hop only")

    @property
    def n_sync_events(self) -> int:
        """Beacons (or exchanges) sent at ``k * si < horizon``."""
        return int(math.ceil(self.horizon / self.si - 1e-9))


@dataclass
class RunReport:
    scheme: str
    skew_mse: float
    meas_time_mse: float
    n_tx: int
    n_rx: int
    n_skew_samples: int
    n_meas_samples: int
    node_counts: Dict[str, Tuple[int, int]]
    untranslated: int = 0
    skew_trace: List[Tuple[float, float]] = field(default_factory=list)
    meas_trace: List[Tuple[float, float]] = field(default_factory=list)


def generate_measurement_schedule(n: int, horizon: float, seed: SeedLike = None) -> List[float]:
    """``n`` sorted arrival times, i.i.d. uniform on (0, horizon]: a Poisson
    process conditioned on exactly ``n`` arrivals."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(n)
    return sorted(float(horizon * (1.0 - x)) for x in u)


def gateway_forward(mode: GatewayMode, msg, ledger: Optional[SensorLedger]):
    """Forward ``msg`` upstream; returns ``(message, flagged)``.

    A relay passes the very same object on. A translator maps every
    measurement timestamp into its own frame using the downstream offset in
    ``ledger``; without an estimate it forwards unchanged and flags it.
    """
    mode = GatewayMode(mode)
    if mode is GatewayMode.RELAY or not isinstance(msg, Report):
        return msg, False
    if ledger is None or ledger.last_offset_estimate is None:
        return msg, True
    off = ledger.last_offset_estimate
    bundle = tuple(replace(rec, local_time=rec.local_time - off) for rec in msg.bundle)
    return replace(msg, bundle=bundle), False


class _Metrics:
    def __init__(self, warmup: float, trace: bool):
        self.warmup = warmup
        self.trace = trace
        self.skew_sq = 0.0
        self.n_skew = 0
        self.meas_sq = 0.0
        self.n_meas = 0
        self.skew_trace: List[Tuple[float, float]] = []
        self.meas_trace: List[Tuple[float, float]] = []

    def skew(self, now: float, err: float) -> None:
        if now >= self.warmup:
            self.skew_sq += err * err
            self.n_skew += 1
        if self.trace:
            self.skew_trace.append((now, err))

    def meas(self, now: float, err: float) -> None:
        if now >= self.warmup:
            self.meas_sq += err * err
            self.n_meas += 1
        if self.trace:
            self.meas_trace.append((now, err))


class _Node:
    def __init__(self, name: str, params: ClockParams):
        self.name = name
        self.params = params
        self.n_tx = 0
        self.n_rx = 0


class _Run:
    """Wiring of one simulation run: nodes, links, timers and metrics."""

    def __init__(self, cfg: RunConfig):
        cfg.validate()
        self.cfg = cfg
        self.sim = Scheduler()
        self.metrics = _Metrics(cfg.warmup, cfg.trace)
        hops = cfg.topology.hops or (Hop(cfg.delay),)
        streams = np.random.SeedSequence(cfg.seed).spawn(1 + 2 * len(hops))
        self.down = [DelaySampler(h.delay, streams[1 + 2 * i]) for i, h in enumerate(hops)]
        self.up = [DelaySampler(h.up, streams[2 + 2 * i]) for i, h in enumerate(hops)]
        if cfg.measurement_times is not None:
            times = sorted(cfg.measurement_times)
        else:
            times = generate_measurement_schedule(cfg.n_measurements, cfg.horizon, streams[0])
        self.true_times = times
        self.n_sync = cfg.n_sync_events
        self.untranslated = 0

        n_gw = len(hops) - 1
        gw_clocks = cfg.topology.gateway_clocks or tuple(ClockParams() for _ in range(n_gw))
        self.nodes: List[_Node] = [_Node("head", ClockParams())]
        for i in range(n_gw):
            self.nodes.append(_Node(f"gateway{i + 1}", gw_clocks[i]))
        self.nodes.append(_Node("sensor", cfg.sensor))
        self.sensor_index = len(self.nodes) - 1
        self.handlers = [None] * len(self.nodes)

    # -- links --------------------------------------------------------------

    def send(self, src: int, direction: int, msg) -> None:
        self.nodes[src].n_tx += 1
        if direction == DOWN:
            dst, delay = src + 1, self.down[src].sample()
        else:
            dst, delay = src - 1, self.up[src - 1].sample()
        self.sim.schedule(self.sim.now + delay, DELIVERY, self.deliver, dst, direction, msg)

    def deliver(self, dst: int, direction: int, msg) -> None:
        self.nodes[dst].n_rx += 1
        self.handlers[dst](msg, direction)

    def hw_now(self, index: int) -> float:
        return hw_read(self.nodes[index].params, self.sim.now)

    # -- periodic timers ----------------------------------------------------

    def periodic(self, start: float, callback) -> None:
        """Call ``callback`` at ``start + k*si`` while inside the horizon."""
        si, horizon = self.cfg.si, self.cfg.horizon
        limit = int(math.ceil((horizon - start) / si - 1e-9))

        def tick(k: int) -> None:
            callback()
            if k + 1 < limit:
                self.sim.schedule(start + (k + 1) * si, TIMER, tick, k + 1)

        if limit > 0:
            self.sim.schedule(start, TIMER, tick, 0)

    # -- finish -------------------------------------------------------------

    def report(self) -> RunReport:
        m = self.metrics
        sensor = self.nodes[self.sensor_index]
        return RunReport(
            scheme=self.cfg.scheme.name,
            skew_mse=m.skew_sq / m.n_skew if m.n_skew else math.nan,
            meas_time_mse=m.meas_sq / m.n_meas if m.n_meas else math.nan,
            n_tx=sensor.n_tx,
            n_rx=sensor.n_rx,
            n_skew_samples=m.n_skew,
            n_meas_samples=m.n_meas,
            node_counts={n.name: (n.n_tx, n.n_rx) for n in self.nodes},
            untranslated=self.untranslated,
            skew_trace=m.skew_trace,
            meas_trace=m.meas_trace,
        )


def _setup_proposed(run: _Run) -> None:
    cfg = run.cfg
    scheme: ProposedScheme = cfg.scheme
    sim = run.sim
    mode = cfg.topology.mode
    last = run.sensor_index
    true_skew = cfg.sensor.skew

    # head
    head_ledger = SensorLedger()
    beacon_seq = [0]

    def head_beacon() -> None:
        run.send(0, DOWN, Beacon(beacon_seq[0], sim.now))
        beacon_seq[0] += 1

    def head_receive(msg, direction) -> None:
        _, estimates = head_on_report(head_ledger, msg, sim.now)
        for mid, est in estimates:
            run.metrics.meas(sim.now, est - run.true_times[mid])

    run.handlers[0] = head_receive
    run.periodic(0.0, head_beacon)

    # gateways
    for g in range(1, last):
        if mode is GatewayMode.RELAY:
            run.handlers[g] = _relay_handler(run, g)
        else:
            run.handlers[g] = _translate_handler(run, g)

    # sensor
    sensor = ProposedSensor(0, scheme.estimator, scheme.n_bm, hw_start=run.hw_now(last))

    def flush_due() -> None:
        while sensor.report_due():
            run.send(last, UP, sensor.emit_report(run.hw_now(last)))

    def sensor_receive(msg, direction) -> None:
        est = sensor.on_beacon(msg, run.hw_now(last))
        if est is not None:
            run.metrics.skew(sim.now, est - true_skew)
        flush_due()

    def measurement(mid: int) -> None:
        sensor.record_measurement(mid, run.hw_now(last))
        flush_due()

    def final_flush() -> None:
        if sensor.pending and sensor.exchange_head is not None:
            run.send(last, UP, sensor.emit_report(run.hw_now(last), flush=True))

    run.handlers[last] = sensor_receive
    for mid, t in enumerate(run.true_times):
        sim.schedule(t, MEASUREMENT, measurement, mid)
    sim.schedule(cfg.horizon, FLUSH, final_flush)


def _relay_handler(run: _Run, g: int):
    def receive(msg, direction) -> None:
        fwd, _ = gateway_forward(GatewayMode.RELAY, msg, None)
        run.send(g, direction, fwd)

    return receive


def _translate_handler(run: _Run, g: int):
    """A translating gateway: a sensor towards its upstream, a head towards
    its downstream."""
    sim = run.sim
    core = ProposedSensor(g, "cr", 1, hw_start=run.hw_now(g))
    ledger = SensorLedger()
    state = {"beacon_seq": 0, "serving": False}

    def own_beacon() -> None:
        t1 = core.local_time(run.hw_now(g))
        run.send(g, DOWN, Beacon(state["beacon_seq"], t1))
        state["beacon_seq"] += 1

    def receive(msg, direction) -> None:
        hw = run.hw_now(g)
        if direction == DOWN:
            core.on_beacon(msg, hw)
            # serve downstream only once frequency-locked to upstream
            if core.frequency_locked and not state["serving"]:
                state["serving"] = True
                run.periodic(sim.now, own_beacon)
            return
        head_on_report(ledger, msg, core.local_time(hw))
        fwd, flagged = gateway_forward(GatewayMode.TRANSLATE, msg, ledger)
        run.untranslated += flagged
        run.send(g, UP, core.emit_report(hw, bundle=fwd.bundle))

    return receive


def _setup_two_way(run: _Run) -> None:
    cfg = run.cfg
    scheme: TwoWayScheme = cfg.scheme
    sim = run.sim
    true_skew = cfg.sensor.skew
    w = cfg.processing_time
    sensor = TwoWaySensor(0, scheme.with_gmlle, hw_start=run.hw_now(1))

    def head_receive(msg, direction) -> None:
        if isinstance(msg, Request):
            resp = head_on_request(msg, sim.now, w)
            if w > 0:
                sim.schedule(sim.now + w, TIMER, run.send, 0, DOWN, resp)
            else:
                run.send(0, DOWN, resp)
        else:
            # the sensor's logical clock is the synchronized one
            run.metrics.meas(sim.now, msg.record.local_time - run.true_times[msg.record.measurement_id])

    def exchange() -> None:
        run.send(1, UP, sensor.start_exchange(run.hw_now(1)))

    def sensor_receive(msg, direction) -> None:
        est = sensor.on_response(msg, run.hw_now(1))
        if est is not None:
            run.metrics.skew(sim.now, est - true_skew)

    def measurement(mid: int) -> None:
        run.send(1, UP, sensor.record_measurement(mid, run.hw_now(1)))

    run.handlers[0] = head_receive
    run.handlers[1] = sensor_receive
    run.periodic(0.0, exchange)
    for mid, t in enumerate(run.true_times):
        sim.schedule(t, MEASUREMENT, measurement, mid)


def run_simulation(cfg: RunConfig) -> RunReport:
    run = _Run(cfg)
    if isinstance(cfg.scheme, ProposedScheme):
        _setup_proposed(run)
    else:
        _setup_two_way(run)
    run.sim.run()
    return run.report()
