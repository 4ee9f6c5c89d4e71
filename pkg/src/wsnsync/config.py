"""Experiment configuration files (YAML) and their schema.

A file has up to three sections: ``run`` (one simulation, also the base of
a sweep), ``sweep`` (axes crossed with seeds) and ``bench`` (Monte-Carlo
estimator comparison). Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .bench import ALL_KINDS, MessageSchedule
from .clock import ClockParams
from .delays import DEFAULT_MEAN_DELAY, DelaySpec
from .protocol import ProposedScheme, TwoWayScheme
from .sim import GatewayMode, Hop, RunConfig, Topology

SchemeName = Literal["proposed", "two_way_gmlle", "two_way"]
EstimatorName = Literal["cr", "rls", "mle"]
BenchKind = Literal["mle", "cr", "rls", "gmlle"]


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DelayModel(_Strict):
    kind: Literal["deterministic", "gaussian", "ar1"] = "gaussian"
    mean: float = Field(DEFAULT_MEAN_DELAY, ge=0)
    sigma: float = Field(1e-9, ge=0)
    rho: float = Field(0.0, ge=0, lt=1)

    def to_spec(self) -> DelaySpec:
        return DelaySpec(self.kind, self.mean, self.sigma, self.rho)


class ClockModel(_Strict):
    skew: float = Field(1e-4, gt=-1)
    offset: float = 1.0

    def to_params(self) -> ClockParams:
        return ClockParams(self.skew, self.offset)


class HopModel(_Strict):
    delay: DelayModel = DelayModel()
    uplink_delay: Optional[DelayModel] = None


class TopologyModel(_Strict):
    mode: Literal["relay", "translate"] = "relay"
    hops: List[HopModel] = []
    gateway_clocks: List[ClockModel] = []

    @model_validator(mode="after")
    def _check_clocks(self):
        n_gw = max(len(self.hops) - 1, 0)
        if self.gateway_clocks and len(self.gateway_clocks) != n_gw:
            raise ValueError(f"gateway_clocks needs {n_gw} entries (one per gateway)")
        return self


class RunModel(_Strict):
    scheme: SchemeName = "proposed"
    estimator: EstimatorName = "cr"
    n_bm: int = Field(1, ge=1)
    si: float = Field(1.0, gt=0)
    horizon: float = Field(3600.0, gt=0)
    n_measurements: int = Field(100, ge=0)
    warmup: float = Field(360.0, ge=0)
    delay: DelayModel = DelayModel()
    sensor: ClockModel = ClockModel()
    seed: int = 0
    processing_time: float = Field(0.0, ge=0)
    topology: TopologyModel = TopologyModel()
    trace: bool = False

    @model_validator(mode="after")
    def _check(self):
        if self.warmup >= self.horizon:
            raise ValueError("warmup must be smaller than horizon")
        if self.scheme != "proposed" and self.topology.hops:
            raise ValueError("topology.hops is only supported for the proposed scheme")
        return self

    def to_run_config(self, **overrides) -> RunConfig:
        values = self.model_dump()
        values.update(overrides)
        scheme = values["scheme"]
        if scheme == "proposed":
            scheme_obj = ProposedScheme(values["estimator"], values["n_bm"])
        else:
            scheme_obj = TwoWayScheme(with_gmlle=scheme == "two_way_gmlle")
        topo = self.topology
        topology = Topology(
            GatewayMode(topo.mode),
            tuple(
                Hop(h.delay.to_spec(), h.uplink_delay.to_spec() if h.uplink_delay else None)
                for h in topo.hops
            ),
            tuple(c.to_params() for c in topo.gateway_clocks),
        )
        return RunConfig(
            scheme=scheme_obj,
            si=values["si"],
            horizon=self.horizon,
            n_measurements=self.n_measurements,
            warmup=self.warmup,
            delay=self.delay.to_spec(),
            sensor=self.sensor.to_params(),
            seed=values["seed"],
            topology=topology,
            processing_time=self.processing_time,
            trace=values["trace"],
        )


class SweepModel(_Strict):
    """Axes left out fall back to the ``run`` section's single value."""

    si: Optional[List[float]] = Field(None, min_length=1)
    n_bm: Optional[List[int]] = Field(None, min_length=1)
    schemes: Optional[List[SchemeName]] = Field(None, min_length=1)
    estimators: Optional[List[EstimatorName]] = Field(None, min_length=1)
    n_seeds: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.si and any(not s > 0 for s in self.si):
            raise ValueError("every si must be > 0")
        if self.n_bm and any(n < 1 for n in self.n_bm):
            raise ValueError("every n_bm must be >= 1")
        return self


class BenchModel(_Strict):
    estimators: List[BenchKind] = Field(default_factory=lambda: list(ALL_KINDS), min_length=1)
    delay: DelayModel = DelayModel()
    n_messages: int = Field(1000, ge=2)
    interval: float = Field(1.0, gt=0)
    runs: int = Field(10000, ge=1)
    seed: int = 0
    sensor: ClockModel = ClockModel()

    @property
    def schedule(self) -> MessageSchedule:
        return MessageSchedule(self.n_messages, self.interval)


class ExperimentConfig(_Strict):
    run: RunModel = RunModel()
    sweep: Optional[SweepModel] = None
    bench: Optional[BenchModel] = None

    def digest(self) -> str:
        """Short content hash embedded in every output row."""
        return hashlib.sha256(self.model_dump_json().encode()).hexdigest()[:16]


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data) -> ExperimentConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation(e)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from None
    return parse_config(data)
