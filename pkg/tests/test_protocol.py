import numpy as np
import pytest
from hypothesis import given, strategies as st

from wsnsync.clock import ClockParams, LogicalClock, hw_read
from wsnsync.protocol import (
    Beacon,
    MeasurementRecord,
    NoExchangeYet,
    ProposedScheme,
    ProposedSensor,
    Report,
    Request,
    Response,
    SensorLedger,
    TwoWayScheme,
    TwoWaySensor,
    format_message,
    head_on_report,
    head_on_request,
    predict_error_conventional,
    predict_error_reverse,
    sensor_emit_report,
    sensor_on_beacon,
    two_way_offset,
)


def test_two_way_offset_symmetric_example():
    assert two_way_offset(0.0, 1.5, 2.0, 1.5) == 1.0


def test_scheme_names_and_validation():
    assert ProposedScheme().name == "proposed"
    assert TwoWayScheme(True).name == "two_way_gmlle"
    assert TwoWayScheme().name == "two_way"
    with pytest.raises(ValueError):
        ProposedScheme(n_bm=0)
    with pytest.raises(ValueError):
        ProposedScheme(estimator="kalman")


def test_message_lines():
    assert format_message(Beacon(3, 1.0)).startswith("beacon 3 t1=")
    rep = Report(0, 1, (MeasurementRecord(0, 1.0), MeasurementRecord(1, 2.0)), 0.0, 0.5, 2.5)
    assert format_message(rep).endswith("n=2")
    assert "t3=" in format_message(Response(0, 0.0, 1.0, 1.0))
    assert format_message(Request(0, 0.0)).startswith("request")


# -- proposed sensor ------------------------------------------------------


def _beacon_feed(sensor, params, times, d):
    ests = []
    for k, t in enumerate(times):
        ests.append(sensor.on_beacon(Beacon(k, t), hw_read(params, t + d)))
    return ests


def test_first_beacon_sets_baseline_only():
    p = ClockParams(1e-4, 1.0)
    s = ProposedSensor(hw_start=hw_read(p, 0.0))
    clock_before = s.clock
    assert sensor_on_beacon(s, Beacon(0, 0.0), hw_read(p, 1e-6)) is s
    assert s.skew_estimate is None
    assert s.clock == clock_before
    assert not s.frequency_locked


def test_second_beacon_locks_frequency():
    p = ClockParams(1e-4, 1.0)
    s = ProposedSensor(hw_start=hw_read(p, 0.0))
    ests = _beacon_feed(s, p, [0.0, 1.0], 1e-6)
    assert ests[0] is None
    assert ests[1] == pytest.approx(1e-4, abs=1e-12)
    a = s.local_time(hw_read(p, 5.0))
    b = s.local_time(hw_read(p, 1005.0))
    assert b - a == pytest.approx(1000.0, abs=1e-9)


def test_cr_skew_after_36_beacons_at_100s():
    p = ClockParams(1e-4, 1.0)
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(200):
        s = ProposedSensor(hw_start=1.0)
        d = rng.normal(333e-9, 1e-9, 36)
        for k in range(36):
            est = s.on_beacon(Beacon(k, 100.0 * k), hw_read(p, 100.0 * k + d[k]))
        bad += abs(est - 1e-4) >= 1e-11
    assert bad <= 2


def test_report_before_beacon_is_deferred():
    s = ProposedSensor()
    s.record_measurement(0, 1.0)
    assert not s.report_due()
    with pytest.raises(NoExchangeYet):
        s.emit_report(1.0)


@pytest.mark.parametrize("n_bm,expected", [(1, 100), (2, 50), (5, 20), (10, 10), (3, 34)])
def test_report_count_is_ceiling(n_bm, expected):
    s = ProposedSensor(n_bm=n_bm)
    s.on_beacon(Beacon(0, 0.0), 0.0)
    n_tx = 0
    for m in range(100):
        s.record_measurement(m, 1.0 + m)
        while s.report_due():
            s.emit_report(1.0 + m)
            n_tx += 1
    if s.pending:
        s.emit_report(200.0, flush=True)
        n_tx += 1
    assert n_tx == expected


def test_bundle_payload_structure():
    s = ProposedSensor(n_bm=2)
    s.on_beacon(Beacon(0, 0.0), 0.0)
    a = s.record_measurement(0, 1.0)
    b = s.record_measurement(1, 2.0)
    rep = s.emit_report(3.0)
    assert rep.bundle == (a, b)
    assert rep.t3_departure == 3.0
    assert not s.pending
    rep2 = sensor_emit_report(s, [a], 4.0)
    assert rep2.bundle == (a,)


def test_head_applies_one_offset_to_bundle():
    rep = Report(0, 0, tuple(MeasurementRecord(i, 10.0 + i) for i in range(3)), 0.0, 1.5, 2.0)
    ledger, out = head_on_report(SensorLedger(), rep, 1.5)
    assert ledger.last_offset_estimate == 1.0
    assert ledger.n_updates == 1
    assert [x for _, x in out] == [9.0, 10.0, 11.0]


@given(st.permutations(list(range(5))))
def test_bundling_invariance(perm):
    recs = tuple(MeasurementRecord(i, 100.0 + 7.0 * i) for i in range(5))
    base = dict(head_on_report(SensorLedger(), Report(0, 0, recs, 1.0, 3.0, 4.0), 5.0)[1])
    shuffled = tuple(recs[i] for i in perm)
    _, out = head_on_report(SensorLedger(), Report(0, 0, shuffled, 1.0, 3.0, 4.0), 5.0)
    assert [m for m, _ in out] == list(perm)
    assert dict(out) == base


def test_frequency_locked_offset_error_std():
    # theta_hat error is (uplink - downlink noise) / 2
    rng = np.random.default_rng(0)
    sigma, d = 1e-9, 333e-9
    p = ClockParams(1e-4, 1.0)
    errs = []
    for i in range(4000):
        s = ProposedSensor(hw_start=1.0)
        s.clock = LogicalClock(1.0, 1.0, p.skew, 0.0)
        t1 = 10.0
        down, up = rng.normal(d, sigma, 2)
        s.on_beacon(Beacon(0, t1), hw_read(p, t1 + down))
        s.exchange_head = (t1, s.local_time(hw_read(p, t1 + down)))
        tm = 20.0
        s.record_measurement(0, hw_read(p, tm))
        rep = s.emit_report(hw_read(p, tm))
        _, out = head_on_report(SensorLedger(), rep, tm + up)
        errs.append(out[0][1] - tm)
    assert np.std(errs) == pytest.approx(sigma / np.sqrt(2), rel=0.05)


def test_reverse_error_within_predictor_band():
    # sensor with a known skew error, deterministic delay d, report T_m after the beacon arrives
    eps, err = 1e-4, 1e-6
    d, t1, T_m = 1e-3, 50.0, 200.0
    p = ClockParams(eps, 1.0)
    s = ProposedSensor(hw_start=hw_read(p, 0.0))
    s.on_beacon(Beacon(0, t1), hw_read(p, t1 + d))
    s.clock = LogicalClock(hw_read(p, t1 + d), 17.0, eps - err, 0.0)
    s.exchange_head = (t1, 17.0)
    tm = t1 + d + T_m
    s.record_measurement(0, hw_read(p, tm))
    rep = s.emit_report(hw_read(p, tm))
    _, out = head_on_report(SensorLedger(), rep, tm + d)
    actual = out[0][1] - tm
    lo = predict_error_reverse(T_m, 0.0, err)
    hi = predict_error_reverse(T_m, d, err)
    assert lo * (1 - 1e-3) <= actual <= hi * (1 + 1e-3)


# -- conventional two-way -------------------------------------------------


def _conventional_exchange(s, p, t, d):
    req = s.start_exchange(hw_read(p, t))
    resp = head_on_request(req, t + d)
    s.on_response(resp, hw_read(p, t + 2 * d))
    return resp


def test_conventional_residual_is_d_eps():
    d = 333.6e-9
    for eps in (0.0, 1e-4, -5e-5):
        p = ClockParams(eps, 1.0)
        s = TwoWaySensor(hw_start=hw_read(p, 0.0))
        _conventional_exchange(s, p, 10.0, d)
        t_after = 10.0 + 2 * d
        residual = s.clock.read(hw_read(p, t_after)) - t_after
        # exact up to round-off at the timestamps' magnitude
        assert abs(residual - d * eps) <= 4 * np.spacing(hw_read(p, t_after))


def test_conventional_offset_exact_when_skew_free():
    p = ClockParams(0.0, 3.25)
    s = TwoWaySensor(hw_start=hw_read(p, 0.0))
    _conventional_exchange(s, p, 5.0, 1e-3)
    assert s.clock.read(hw_read(p, 7.0)) == pytest.approx(7.0, abs=1e-12)


def test_conventional_drift_after_exchange():
    eps, d = 1e-4, 333.6e-9
    p = ClockParams(eps, 1.0)
    s = TwoWaySensor(hw_start=hw_read(p, 0.0))
    _conventional_exchange(s, p, 0.0, d)
    T_m = 100.0
    t = 2 * d + T_m
    err = s.record_measurement(0, hw_read(p, t)).record.local_time - t
    assert err == pytest.approx(predict_error_conventional(T_m, d, eps), rel=1e-6)


def test_conventional_gmlle_learns_skew():
    eps, d = 1e-4, 333.6e-9
    p = ClockParams(eps, 1.0)
    s = TwoWaySensor(with_gmlle=True, hw_start=hw_read(p, 0.0))
    for k in range(5):
        _conventional_exchange(s, p, 10.0 * k, d)
    assert s.skew_estimate == pytest.approx(eps, abs=1e-12)
    t = 40.0 + 2 * d + 100.0
    err = s.record_measurement(0, hw_read(p, t)).record.local_time - t
    assert abs(err) < 1e-12


# -- predictors -----------------------------------------------------------


def test_predictor_examples():
    assert predict_error_conventional(100.0, 333.6e-9, 1e-4) == pytest.approx(1.0e-2, rel=1e-5)
    assert predict_error_conventional(0.0, 0.0, 1e-4) == 0.0
    assert predict_error_conventional(100.0, 0.0, 1e-6, compensated=True) == pytest.approx(1e-4)
    assert predict_error_reverse(100.0, 0.0, 1e-6) == pytest.approx(5e-5)
    assert predict_error_reverse(100.0, 1e-3, 0.0) == 0.0
    with pytest.raises(ValueError):
        predict_error_reverse(-1.0, 0.0, 1e-6)
    with pytest.raises(ValueError):
        predict_error_conventional(1.0, -1.0, 1e-6)


@given(
    st.floats(1e-9, 1e-2),
    st.floats(1e6, 1e9),
    st.floats(1e-9, 1e-3),
)
def test_factor_of_two(d, ratio, err):
    T_m = d * ratio
    q = predict_error_reverse(T_m, d, err) / predict_error_conventional(T_m, d, err, compensated=True)
    assert 0.5 - 1e-12 <= q <= 0.5 + 2 * d / T_m + 1e-12
