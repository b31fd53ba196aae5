import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from potsim.dsp import (
    circular_mean_deg,
    compensate_mux_phase,
    cross_correlate_lag,
    cross_correlation,
    lag_to_phase,
    mux_phase_offset,
    phase_resolution,
    remove_dc,
    rms,
    select_sample_rate,
    tia_volts_to_current,
)
from potsim.errors import FrequencyTooHigh, InvalidConfig, InvalidInput


def test_rate_plan_low_frequencies():
    for f in (100.0, 1000.0, 10_080.0, 11_400.0):
        rate, n = select_sample_rate(f, 4.104e6)
        assert n == 360 and rate == pytest.approx(360 * f)


def test_rate_plan_20khz():
    rate, n = select_sample_rate(20_000.0, 4.104e6)
    assert n == 205
    assert rate <= 4.104e6
    assert phase_resolution(n) == pytest.approx(1.756, abs=1e-3)


@given(st.floats(1.0, 5e5), st.floats(1e5, 5e6))
def test_rate_plan_never_exceeds_ceiling(f, ceiling):
    try:
        rate, n = select_sample_rate(f, ceiling)
    except FrequencyTooHigh:
        assert 8 * f > ceiling
        return
    assert rate <= ceiling * (1 + 1e-12)
    assert n == 360 or (n + 1) * f > ceiling


def test_rate_plan_rejects():
    with pytest.raises(FrequencyTooHigh):
        select_sample_rate(1e6, 4.104e6)
    with pytest.raises(InvalidInput):
        select_sample_rate(0.0, 4.104e6)


def test_rms_of_known_vectors():
    assert rms([3.0, -3.0]) == 3.0
    assert rms([1.0, 1.0, 1.0, 1.0]) == 1.0
    with pytest.raises(InvalidInput):
        rms([])


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=100), st.floats(-1e3, 1e3))
def test_remove_dc_is_offset_invariant(x, offset):
    a = remove_dc(x)
    b = remove_dc(np.array(x) + offset)
    assert abs(a.mean()) <= 1e-9 * (1 + np.abs(x).max())
    np.testing.assert_allclose(a, b, atol=1e-9 * (1 + abs(offset) + np.abs(x).max()))


def test_tia_conversion():
    assert tia_volts_to_current(0.5, 10e3) == pytest.approx(50e-6)
    with pytest.raises(InvalidConfig):
        tia_volts_to_current(0.5, 0.0)


def test_cross_correlation_definition():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(2, 24))
    r = cross_correlation(x, y, 12)
    brute = [sum(x[l] * y[(k + l) % 24] for l in range(24)) for k in range(12)]
    np.testing.assert_allclose(r, brute, rtol=1e-12)


def test_cross_correlation_length_checks():
    with pytest.raises(InvalidInput):
        cross_correlation(np.zeros(10), np.zeros(9), 5)
    with pytest.raises(InvalidInput):
        cross_correlation(np.zeros(10), np.zeros(10), 3)


def test_lag_to_phase():
    assert lag_to_phase(180, 360) == 0.0
    assert lag_to_phase(0, 360) == -180.0
    assert lag_to_phase(90, 360) == -90.0
    with pytest.raises(InvalidInput):
        lag_to_phase(360, 360)


def test_resistor_phase_through_inverting_tia():
    n = 360
    t = np.arange(4 * n)
    v = np.sin(2 * np.pi * t / n)
    tia = -v  # in phase current, inverted by the TIA
    assert lag_to_phase(cross_correlate_lag(v, tia, n), n) == 0.0


def test_mux_skew_offset_and_compensation():
    assert mux_phase_offset(1000.0, 653e-6) == pytest.approx(-235.08)
    assert compensate_mux_phase(-10.0, 1000.0, 0.0) == -10.0
    # a phase measured with the skew comes back to the true one
    true = -32.35
    measured = true + mux_phase_offset(10_080.0, 1 / 4.104e6)
    assert compensate_mux_phase(measured, 10_080.0, 1 / 4.104e6) == pytest.approx(true)


def test_circular_mean_wraps():
    assert circular_mean_deg([179.0, -179.0]) == pytest.approx(-180.0)
    assert circular_mean_deg([10.0, 20.0]) == pytest.approx(15.0)


@given(st.integers(0, 359))
def test_estimator_quantized_shift(s):
    n = 360
    k = np.arange(4 * n)
    v = np.rint(2047 * np.sin(2 * np.pi * k / n))
    i = np.rint(-2047 * np.sin(2 * np.pi * (k + s) / n))
    phase = lag_to_phase(cross_correlate_lag(remove_dc(v), remove_dc(i), n), n)
    expected = -math.degrees(2 * math.pi * s / n)
    assert abs(math.remainder(phase - expected, 360.0)) <= 360 / n
