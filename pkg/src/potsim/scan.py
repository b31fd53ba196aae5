"""EIS and CV scans: the full DAC -> front end -> ADC -> DSP pipeline."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .conversion import AdcConfig, DacConfig, Waveform, adc_acquire, dac_ramp, dac_sine
from .dsp import (
    circular_mean_deg,
    compensate_mux_phase,
    cross_correlate_lag,
    lag_to_phase,
    remove_dc,
    rms,
    select_sample_rate,
    tia_volts_to_current,
)
from .errors import InvalidInput, OpenCircuitError, PotsimError, ScanError
from .frontend import FrontEndConfig, drive_cell

log = logging.getLogger(__name__)

ANALYSIS_CYCLES = 4
POLICY_F_MIN = 100.0
POLICY_F_MAX = 50_000.0


@dataclass(frozen=True)
class EisScanParams:
    """Sweep settings. ``excitation_amplitude`` is the DAC sine amplitude in
    volts; the cell sees it divided by the control attenuation."""

    f_start: float
    f_end: float
    f_step: float = 50.0
    excitation_amplitude: float = 0.2
    n_average: int = 1
    settle_cycles: int = 5
    f_min: float = POLICY_F_MIN
    f_max: float = POLICY_F_MAX

    def __post_init__(self):
        if not (self.f_start > 0 and self.f_step > 0):
            raise InvalidInput("f_start and f_step must be positive")
        if self.f_start > self.f_end:
            raise InvalidInput("f_start must not exceed f_end")
        if not (self.f_min <= self.f_start and self.f_end <= self.f_max):
            raise InvalidInput(
                f"sweep {self.f_start:g}-{self.f_end:g} Hz outside policy range "
                f"[{self.f_min:g}, {self.f_max:g}] Hz"
            )
        if self.n_average < 1 or self.settle_cycles < 0:
            raise InvalidInput("n_average must be >= 1 and settle_cycles >= 0")
        if self.excitation_amplitude < 0:
            raise InvalidInput("excitation amplitude must be >= 0")

    def frequencies(self):
        count = math.floor((self.f_end - self.f_start) / self.f_step + 1e-9) + 1
        return [self.f_start + i * self.f_step for i in range(count)]


@dataclass(frozen=True)
class EisPoint:
    frequency: float
    impedance_magnitude: float
    phase: float
    v_rms: float
    i_rms: float
    samples_per_cycle: int
    saturated: bool = False

    @property
    def impedance(self):
        return self.impedance_magnitude * complex(math.cos(math.radians(self.phase)),
                                                  math.sin(math.radians(self.phase)))


@dataclass(frozen=True)
class CvScanParams:
    """CV sweep. Voltages and ``rate`` are as applied to the cell."""

    rate: float
    v_start: float
    v_end: float
    cycles: int = 1

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidInput("CV rate must be positive")
        if self.v_start == self.v_end:
            raise InvalidInput("CV start and end voltages are equal")
        if self.cycles < 1:
            raise InvalidInput("CV needs at least one cycle")


@dataclass(frozen=True)
class CvPoint:
    time: float
    voltage: float
    current: float


def child_seed(seed, *keys):
    """Deterministic child of ``seed`` (int, None or SeedSequence) addressed by ``keys``."""
    if isinstance(seed, np.random.SeedSequence):
        base = seed
    else:
        base = np.random.SeedSequence(seed)
    return np.random.SeedSequence(base.entropy, spawn_key=tuple(base.spawn_key) + tuple(keys))


def _measure_once(f, params, cell, frontend, adc, dac, seed):
    rate, spc = select_sample_rate(f, adc.max_sample_rate)
    skew = adc.eis_skew
    # one spare cycle so the skewed current samples stay inside the record
    cycles = params.settle_cycles + ANALYSIS_CYCLES + 1
    excitation = dac_sine(f, params.excitation_amplitude, frontend.virtual_ground, cycles, rate, dac)
    drive = drive_cell(frontend, cell, excitation, seed)
    v_block, i_block = adc_acquire(
        drive.electrometer, drive.tia, rate, ANALYSIS_CYCLES * spc,
        t0=params.settle_cycles * spc / rate, mux_skew=skew, adc=adc,
    )
    x = remove_dc(v_block.volts(adc))
    y = remove_dc(i_block.volts(adc))
    v_rms = rms(x) / frontend.electrometer_gain
    i_rms = tia_volts_to_current(rms(y), frontend.tia_feedback_resistance)
    # a flat channel carries no AC signal at all
    if np.ptp(v_block.counts) == 0 or np.ptp(i_block.counts) == 0:
        raise OpenCircuitError(f"no AC signal at {f:g} Hz (open circuit or zero excitation)")
    lag = cross_correlate_lag(x, y, spc)
    phase = compensate_mux_phase(lag_to_phase(lag, spc), f, skew)
    saturated = drive.saturated or v_block.clipped or i_block.clipped
    return v_rms, i_rms, phase, spc, saturated


def eis_measure_point(f, params, cell, frontend=FrontEndConfig(), adc=AdcConfig(),
                      dac=DacConfig(), seed=None):
    """Measure |Z| and phase at one frequency, averaging ``params.n_average`` acquisitions.

    Averaging takes the mean of V_rms and I_rms (|Z| is their ratio) and the
    circular mean of the phases.
    """
    if not params.f_min <= f <= params.f_max:
        raise InvalidInput(f"{f:g} Hz outside policy range [{params.f_min:g}, {params.f_max:g}] Hz")
    reps = [
        _measure_once(f, params, cell, frontend, adc, dac, child_seed(seed, r))
        for r in range(params.n_average)
    ]
    v_rms = float(np.mean([r[0] for r in reps]))
    i_rms = float(np.mean([r[1] for r in reps]))
    phase = reps[0][2] if len(reps) == 1 else circular_mean_deg([r[2] for r in reps])
    saturated = any(r[4] for r in reps)
    if saturated:
        log.warning("front end saturated at %g Hz; |Z| is unreliable", f)
    return EisPoint(f, v_rms / i_rms, phase, v_rms, i_rms, reps[0][3], saturated)


def eis_scan(params, cell, frontend=FrontEndConfig(), adc=AdcConfig(), dac=DacConfig(),
             seed=None, calibration=None, workers=1):
    """One :class:`EisPoint` per sweep frequency, ascending.

    Each point draws noise from its own child of ``seed`` so results do not
    depend on ``workers``.
    """
    if seed is None:
        seed = np.random.SeedSequence()

    def one(indexed):
        i, f = indexed
        try:
            point = eis_measure_point(f, params, cell, frontend, adc, dac, child_seed(seed, 1, i))
        except PotsimError as exc:
            raise ScanError(f, exc) from exc
        return calibration.apply(point) if calibration is not None else point

    jobs = list(enumerate(params.frequencies()))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, jobs))
    return [one(job) for job in jobs]


def cv_waveform(params, frontend=FrontEndConfig(), dac=DacConfig()):
    """Triangular DAC staircase for ``params.cycles`` sweeps start -> end -> start."""
    att = frontend.control_attenuation
    up = dac_ramp(
        frontend.virtual_ground + params.v_start * att,
        frontend.virtual_ground + params.v_end * att,
        params.rate * att,
        dac,
    )
    one_cycle = np.concatenate((up.codes, up.codes[-2::-1]))
    codes = np.concatenate([one_cycle] + [one_cycle[1:]] * (params.cycles - 1))
    return Waveform(codes * dac.lsb, up.rate, 0.0, codes)


def cv_scan(params, cell, frontend=FrontEndConfig(), adc=AdcConfig(), dac=DacConfig(),
            seed=None, calibration=None, mux_skew=None):
    """Sample one (V, I) pair per DAC step.

    The current sample trails the voltage sample by ``mux_skew`` (defaults
    to ``adc.cv_mux_skew``).  The TIA inversion is undone by negation.
    """
    skew = adc.cv_mux_skew if mux_skew is None else mux_skew
    wave = cv_waveform(params, frontend, dac)
    n_points = len(wave)
    # hold the final code long enough to cover the skewed last sample
    pad = int(math.ceil(skew * wave.rate)) + 2
    codes = np.concatenate((wave.codes, np.full(pad, wave.codes[-1])))
    drive = drive_cell(frontend, cell, Waveform(codes * dac.lsb, wave.rate, 0.0, codes), seed)
    if drive.saturated:
        log.warning("front end saturated during CV scan")
    v_block, i_block = adc_acquire(drive.electrometer, drive.tia, wave.rate, n_points,
                                   t0=0.0, mux_skew=skew, adc=adc)
    e_off = getattr(calibration, "electrometer_offset", 0.0)
    t_off = getattr(calibration, "tia_offset", 0.0)
    volts = (v_block.volts(adc) - frontend.virtual_ground - e_off) / frontend.electrometer_gain
    amps = -(i_block.volts(adc) - frontend.virtual_ground - t_off) / frontend.tia_feedback_resistance
    times = np.arange(n_points) / wave.rate
    return [CvPoint(float(t), float(v), float(i)) for t, v, i in zip(times, volts, amps)]
