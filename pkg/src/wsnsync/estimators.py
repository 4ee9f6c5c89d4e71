"""Clock skew/offset estimators and their variance bounds.

All estimator states accept either Python floats or numpy arrays for the
received timestamps. Arrays let one state object carry thousands of
independent Monte-Carlo streams that share the same departure schedule.

One-way observation model (departure timestamp ``t_d`` in the head clock,
arrival ``t_a`` on the receiver's hardware clock)::

    t_a(k) = R * t_d(k) + theta + d(k),    R = 1 + skew
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np


class DegenerateDesignError(ValueError):
    """The departure times do not spread (zero variance / zero span)."""


class EstimateUnavailable(LookupError):
    """Not enough observations yet for an estimate."""


def _any(cond) -> bool:
    # np.any is slow on plain Python bools; the simulator calls this per message
    return cond if cond.__class__ is bool else bool(np.any(cond))


class OneWayObservation(NamedTuple):
    t_d: float
    t_a: float


class JointMle:
    """Joint maximum-likelihood offset and frequency-ratio estimator.

    Sums are accumulated relative to the first observation so that the
    closed form does not lose precision at ``t_d`` of thousands of seconds
    with nanosecond noise. The raw sums are still available as properties.
    """

    def __init__(self, known_mean_delay: float = 0.0):
        self.known_mean_delay = known_mean_delay
        self.n = 0
        self.t_d0 = None
        self.t_a0 = None
        self._sx = 0.0
        self._sy = 0.0
        self._sxx = 0.0
        self._sxy = 0.0

    def ingest(self, t_d, t_a) -> None:
        if self.n == 0:
            self.t_d0, self.t_a0 = t_d, t_a
        x = t_d - self.t_d0
        y = t_a - self.t_a0
        self._sx = self._sx + x
        self._sy = self._sy + y
        self._sxx = self._sxx + x * x
        self._sxy = self._sxy + x * y
        self.n += 1

    @property
    def sum_td(self):
        return self._sx + self.n * self.t_d0 if self.n else 0.0

    @property
    def sum_ta(self):
        return self._sy + self.n * self.t_a0 if self.n else 0.0

    @property
    def sum_td2(self):
        if not self.n:
            return 0.0
        return self._sxx + 2.0 * self.t_d0 * self._sx + self.n * self.t_d0 * self.t_d0

    @property
    def sum_td_ta(self):
        if not self.n:
            return 0.0
        return (
            self._sxy
            + self.t_d0 * self._sy
            + self.t_a0 * self._sx
            + self.n * self.t_d0 * self.t_a0
        )

    def estimate(self):
        """Return ``(offset_hat, ratio_hat)``."""
        n = self.n
        if n < 2:
            raise DegenerateDesignError(f"need at least 2 observations, have {n}")
        mean_x = self._sx / n
        mean_y = self._sy / n
        var_x = self._sxx / n - mean_x * mean_x
        if _any(var_x <= 0.0):
            raise DegenerateDesignError("departure times have zero variance")
        cov_xy = self._sxy / n - mean_x * mean_y
        ratio = cov_xy / var_x
        offset = (mean_y + self.t_a0) - ratio * (mean_x + self.t_d0) - self.known_mean_delay
        return offset, ratio

    def update(self, t_d, t_a):
        """Ingest and return the ratio estimate, or None before two points."""
        self.ingest(t_d, t_a)
        if self.n < 2:
            return None
        return self.estimate()[1]


def mle_ingest(state: JointMle, obs: OneWayObservation) -> JointMle:
    state.ingest(obs.t_d, obs.t_a)
    return state


def mle_estimate(state: JointMle):
    return state.estimate()


def _design_stats(design: Sequence[float]):
    t = np.asarray(design, dtype=float)
    n = t.shape[0]
    if n < 2:
        raise DegenerateDesignError("need at least 2 design points")
    popvar = float(np.var(t))
    if popvar <= 0.0:
        raise DegenerateDesignError("design points are all equal")
    return n, popvar, float(np.mean(t * t))


def crlb_skew(design: Sequence[float], sigma: float) -> float:
    """Cramer-Rao bound on the frequency-ratio variance for one-way timestamps."""
    n, popvar, _ = _design_stats(design)
    return sigma * sigma / (n * popvar)


def crlb_offset(design: Sequence[float], sigma: float) -> float:
    n, popvar, mean_sq = _design_stats(design)
    return sigma * sigma * mean_sq / (n * popvar)


class CumulativeRatio:
    """Ratio of elapsed receive time to elapsed send time since the first message.

    Holds four numbers and needs no tuning, which is why it suits a
    battery-powered node.
    """

    __slots__ = ("t_d0", "t_a0", "t_d_last", "t_a_last")

    def __init__(self):
        self.t_d0 = None
        self.t_a0 = None
        self.t_d_last = None
        self.t_a_last = None

    def update(self, t_d, t_a):
        if self.t_d0 is None:
            self.t_d0, self.t_a0 = t_d, t_a
            return None
        span = t_d - self.t_d0
        if _any(span == 0):
            raise DegenerateDesignError("departure time equals the baseline")
        self.t_d_last, self.t_a_last = t_d, t_a
        return (t_a - self.t_a0) / span

    @property
    def estimate(self):
        if self.t_d_last is None:
            raise EstimateUnavailable("cumulative ratio needs two observations")
        return (self.t_a_last - self.t_a0) / (self.t_d_last - self.t_d0)


def cr_update(state: CumulativeRatio, obs: OneWayObservation):
    return state, state.update(obs.t_d, obs.t_a)


def cr_lower_bound(t_d_span: float, sigma: float) -> float:
    """Variance floor of the cumulative-ratio estimate under white Gaussian delay."""
    if t_d_span <= 0:
        raise DegenerateDesignError("span must be positive")
    return 2.0 * sigma * sigma / (t_d_span * t_d_span)


class Rls:
    """Scalar exponentially weighted RLS on the baseline-subtracted model
    ``t_a - t_a0 = R * (t_d - t_d0) + noise``."""

    def __init__(self, forgetting: float = 1.0, initial_p: float = 1e12, initial_ratio: float = 1.0):
        if not 0.0 < forgetting <= 1.0:
            raise ValueError("forgetting factor must be in (0, 1]")
        self.forgetting = forgetting
        self.coeff_estimate = initial_ratio
        self.gain_denominator = initial_p
        self.t_d0 = None
        self.t_a0 = None
        self._updated = False

    def update(self, t_d, t_a):
        if self.t_d0 is None:
            self.t_d0, self.t_a0 = t_d, t_a
            return None
        x = t_d - self.t_d0
        y = t_a - self.t_a0
        lam = self.forgetting
        p = self.gain_denominator
        denom = lam + p * x * x
        gain = p * x / denom
        self.coeff_estimate = self.coeff_estimate + gain * (y - self.coeff_estimate * x)
        # (P - g x P) / lam == P / (lam + P x^2), without the cancellation
        self.gain_denominator = p / denom
        self._updated = True
        return self.coeff_estimate

    @property
    def estimate(self):
        if not self._updated:
            raise EstimateUnavailable("RLS needs a baseline and one more observation")
        return self.coeff_estimate


def rls_update(state: Rls, obs: OneWayObservation):
    return state, state.update(obs.t_d, obs.t_a)


@dataclass(frozen=True, slots=True)
class TwoWayExchange:
    """Timestamps of one request/response pair.

    ``t1``/``t4`` are on the initiator's clock, ``t2``/``t3`` on the
    responder's. Expected (not enforced): ``t1 < t4`` and ``t2 <= t3``.
    """

    t1: float
    t2: float
    t3: float
    t4: float


class Gmlle:
    """Two-way ML-like frequency-ratio estimator for Gaussian delays.

    Uses the midpoint sums ``t1 + t4`` and ``t2 + t3`` of every exchange,
    subtracts the values of the first exchange, and fits a regression
    through the origin. Treating the baseline-differenced noise as
    independent is what makes it only ML-*like*.

    ``reference`` names the side whose clock is the regressor: the returned
    ratio is (other clock rate) / (reference clock rate).
    """

    def __init__(self, reference: str = "initiator"):
        if reference not in ("initiator", "responder"):
            raise ValueError("reference must be 'initiator' or 'responder'")
        self.reference = reference
        self.n = 0
        self._x0 = None
        self._y0 = None
        self._sxx = 0.0
        self._sxy = 0.0

    def update(self, ex: TwoWayExchange):
        m_init = ex.t1 + ex.t4
        m_resp = ex.t2 + ex.t3
        if self.reference == "initiator":
            x, y = m_init, m_resp
        else:
            x, y = m_resp, m_init
        self.n += 1
        if self._x0 is None:
            self._x0, self._y0 = x, y
            return None
        xc = x - self._x0
        yc = y - self._y0
        self._sxx = self._sxx + xc * xc
        self._sxy = self._sxy + xc * yc
        return self.estimate

    @property
    def estimate(self):
        if self.n < 2:
            raise EstimateUnavailable("GMLLE needs at least two exchanges")
        if _any(self._sxx == 0.0):
            raise DegenerateDesignError("exchange midpoints do not spread")
        return self._sxy / self._sxx


def gmlle_update(state: Gmlle, ex: TwoWayExchange):
    return state, state.update(ex)


SKEW_ESTIMATORS = {
    "cr": CumulativeRatio,
    "rls": Rls,
    "mle": JointMle,
}


def make_skew_estimator(kind: str):
    try:
        return SKEW_ESTIMATORS[kind]()
    except KeyError:
        raise ValueError(f"unknown one-way estimator {kind!r}") from None
