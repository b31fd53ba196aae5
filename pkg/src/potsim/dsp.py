"""Firmware signal-processing primitives: rate planning, DC removal, RMS,
current recovery and cross-correlation phase estimation."""

import math

import numpy as np

from . import _kernels
from .cells import wrap_degrees
from .errors import FrequencyTooHigh, InvalidConfig, InvalidInput

TARGET_SAMPLES_PER_CYCLE = 360
MIN_SAMPLES_PER_CYCLE = 8


def select_sample_rate(f, ceiling):
    """Return ``(rate, samples_per_cycle)`` for excitation frequency ``f``.

    Aims for 360 samples per cycle (1 degree of phase resolution) and falls
    back to as many whole samples per cycle as fit under ``ceiling``.
    """
    f, ceiling = float(f), float(ceiling)
    if not (math.isfinite(f) and f > 0):
        raise InvalidInput(f"frequency must be positive, got {f!r}")
    if not ceiling > 0:
        raise InvalidInput("sample-rate ceiling must be positive")
    spc = math.floor(ceiling / f)
    # guard the floor against division rounding in either direction
    while (spc + 1) * f <= ceiling:
        spc += 1
    while spc > 0 and spc * f > ceiling:
        spc -= 1
    spc = min(TARGET_SAMPLES_PER_CYCLE, spc)
    if spc < MIN_SAMPLES_PER_CYCLE:
        raise FrequencyTooHigh(
            f"{f:g} Hz leaves only {spc} samples per cycle under {ceiling:g} S/s"
        )
    return spc * f, spc


def phase_resolution(samples_per_cycle):
    return 360.0 / samples_per_cycle


def remove_dc(samples):
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise InvalidInput("cannot remove DC from an empty block")
    return x - x.mean()


def rms(samples):
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise InvalidInput("RMS of an empty block")
    return math.sqrt(float(np.dot(x, x)) / x.size)


def tia_volts_to_current(v_rms_tia, feedback_resistance):
    if not feedback_resistance > 0:
        raise InvalidConfig(f"TIA feedback resistance must be > 0, got {feedback_resistance!r}")
    return v_rms_tia / feedback_resistance


def cross_correlation(x, y, samples_per_cycle):
    """Circular cross-correlation ``R[k] = sum_l x[l] y[(k+l) mod L]`` for one cycle of lags."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = int(samples_per_cycle)
    if x.ndim != 1 or x.shape != y.shape:
        raise InvalidInput("voltage and current blocks must have the same length")
    if n < 1 or x.size == 0 or x.size % n:
        raise InvalidInput(f"block length {x.size} is not a whole number of {n}-sample cycles")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInput("blocks contain non-finite samples")
    return _kernels.circular_xcorr(x, y, n)


def cross_correlate_lag(x, y, samples_per_cycle):
    """Lag in ``[0, N)`` at the correlation peak; ties go to the smallest lag."""
    return int(np.argmax(cross_correlation(x, y, samples_per_cycle)))


def lag_to_phase(lag, samples_per_cycle):
    """Phase in degrees: ``lag * 360/N - 180`` (the TIA inverts), wrapped to [-180, 180)."""
    if not 0 <= lag < samples_per_cycle:
        raise InvalidInput(f"lag {lag} not in [0, {samples_per_cycle})")
    return wrap_degrees(lag * (360.0 / samples_per_cycle) - 180.0)


def mux_phase_offset(f, mux_skew):
    """Phase offset the multiplexer adds to a measurement.

    The current sample trails the voltage sample by ``mux_skew``, so the
    current looks advanced and the measured phase drops by 360*f*skew.
    """
    return -360.0 * f * mux_skew


def compensate_mux_phase(phase, f, mux_skew):
    return wrap_degrees(phase - mux_phase_offset(f, mux_skew))


def circular_mean_deg(angles):
    a = np.radians(np.asarray(angles, dtype=float))
    return wrap_degrees(math.degrees(math.atan2(np.sin(a).mean(), np.cos(a).mean())))
