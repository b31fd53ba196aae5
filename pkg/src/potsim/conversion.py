"""12-bit DAC synthesis and 12-bit ADC acquisition through one multiplexed converter."""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ExcitationOutOfRange, InvalidConfig, InvalidInput, SampleRateError

FULL_SCALE_COUNT = 4095
V_REF = 3.3
DEFAULT_MAX_SAMPLE_RATE = 4_104_000.0
HARDWARE_MAX_SAMPLE_RATE = 5_000_000.0
CV_MUX_SKEW = 653e-6


@dataclass(frozen=True)
class DacConfig:
    resolution_bits: int = 12
    full_scale: float = V_REF

    def __post_init__(self):
        if self.resolution_bits < 1 or self.full_scale <= 0:
            raise InvalidConfig("DAC resolution and full scale must be positive")

    @property
    def max_code(self):
        return (1 << self.resolution_bits) - 1

    @property
    def lsb(self):
        return self.full_scale / self.max_code


@dataclass(frozen=True)
class AdcConfig:
    """ADC settings.

    ``eis_mux_skew`` is the delay of the current sample after the voltage
    sample during EIS; ``None`` means one conversion at the rate ceiling.
    """

    resolution_bits: int = 12
    v_ref: float = V_REF
    max_sample_rate: float = DEFAULT_MAX_SAMPLE_RATE
    eis_mux_skew: float | None = None
    cv_mux_skew: float = CV_MUX_SKEW

    def __post_init__(self):
        if self.resolution_bits < 1 or self.v_ref <= 0:
            raise InvalidConfig("ADC resolution and reference must be positive")
        if not 0 < self.max_sample_rate <= HARDWARE_MAX_SAMPLE_RATE:
            raise InvalidConfig(
                f"max_sample_rate must be in (0, {HARDWARE_MAX_SAMPLE_RATE:g}], got {self.max_sample_rate!r}"
            )
        if self.eis_mux_skew is not None and self.eis_mux_skew < 0:
            raise InvalidConfig("eis_mux_skew must be >= 0")
        if self.cv_mux_skew < 0:
            raise InvalidConfig("cv_mux_skew must be >= 0")

    @property
    def max_code(self):
        return (1 << self.resolution_bits) - 1

    @property
    def lsb(self):
        return self.v_ref / self.max_code

    @property
    def eis_skew(self):
        if self.eis_mux_skew is None:
            return 1.0 / self.max_sample_rate
        return self.eis_mux_skew


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled signal; sample ``n`` sits at ``t0 + n / rate``."""

    values: np.ndarray
    rate: float
    t0: float = 0.0
    codes: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.values)

    @property
    def times(self):
        return self.t0 + np.arange(len(self.values)) / self.rate

    @property
    def step(self):
        return 1.0 / self.rate

    @property
    def duration(self):
        return (len(self.values) - 1) / self.rate

    def sample(self, times):
        """Linearly interpolate the waveform at ``times``."""
        pos = (np.asarray(times, dtype=float) - self.t0) * self.rate
        near = np.rint(pos)
        pos = np.where(np.abs(pos - near) < 1e-6, near, pos)
        last = len(self.values) - 1
        if pos.size and (pos.min() < 0 or pos.max() > last):
            raise InvalidInput("signal does not cover the requested acquisition window")
        return np.interp(pos, np.arange(last + 1), self.values)


# -- DAC -----------------------------------------------------------------------

def volts_to_dac_codes(volts, dac=DacConfig()):
    codes = np.rint(np.asarray(volts, dtype=float) / dac.lsb)
    return np.clip(codes, 0, dac.max_code).astype(np.int64)


def dac_sine(f, amplitude, dc_offset, cycles, update_rate, dac=DacConfig()):
    """Quantized sine ``dc_offset + amplitude*sin(2 pi f t)`` lasting ``cycles`` periods."""
    f, update_rate = float(f), float(update_rate)
    if not (math.isfinite(f) and f > 0 and math.isfinite(update_rate) and update_rate > 0):
        raise InvalidInput("frequency and update rate must be positive")
    if f >= update_rate / 2:
        raise InvalidInput(f"{f:g} Hz is not below Nyquist of a {update_rate:g} S/s DAC")
    if amplitude < 0:
        raise InvalidInput("amplitude must be >= 0")
    if amplitude + dc_offset > dac.full_scale or dc_offset - amplitude < 0:
        raise ExcitationOutOfRange(
            f"sine {dc_offset:g} +/- {amplitude:g} V leaves the DAC range [0, {dac.full_scale:g}] V"
        )
    per_cycle = update_rate / f
    n_samples = int(round(cycles * per_cycle))
    if n_samples < 1:
        raise InvalidInput("excitation shorter than one sample")
    n = np.arange(n_samples)
    if abs(per_cycle - round(per_cycle)) < 1e-9:
        spc = int(round(per_cycle))
        frac = (n % spc) / spc
    else:
        frac = np.mod(n * (f / update_rate), 1.0)
    ideal = dc_offset + amplitude * np.sin(2.0 * np.pi * frac)
    codes = volts_to_dac_codes(ideal, dac)
    return Waveform(codes * dac.lsb, update_rate, 0.0, codes)


def dac_ramp(v_start, v_end, rate, dac=DacConfig()):
    """Staircase of 1-LSB steps from ``v_start`` to ``v_end`` at ``rate`` V/s.

    Returns a waveform sampled once per step, step interval ``lsb / rate``.
    """
    if not rate > 0:
        raise InvalidInput("ramp rate must be positive")
    for v in (v_start, v_end):
        if not 0.0 <= v <= dac.full_scale:
            raise ExcitationOutOfRange(f"{v:g} V outside the DAC range [0, {dac.full_scale:g}] V")
    if v_start == v_end:
        raise InvalidInput("ramp start and end are equal")
    c0, c1 = (int(c) for c in volts_to_dac_codes([v_start, v_end], dac))
    if c0 == c1:
        raise InvalidInput("ramp spans less than one DAC step")
    codes = np.arange(c0, c1 + 1) if c1 > c0 else np.arange(c0, c1 - 1, -1)
    return Waveform(codes * dac.lsb, rate / dac.lsb, 0.0, codes)


# -- ADC -----------------------------------------------------------------------

def counts_to_volts(count, adc=AdcConfig()):
    """ADC count to volts: ``v_ref / 4095 * count``. Accepts scalars or arrays."""
    arr = np.asarray(count)
    if arr.dtype.kind not in "iu" and not np.all(np.equal(np.mod(arr, 1), 0)):
        raise InvalidInput("ADC counts must be integers")
    if np.any(arr < 0) or np.any(arr > adc.max_code):
        raise InvalidInput(f"ADC count out of range [0, {adc.max_code}]")
    volts = adc.v_ref / adc.max_code * arr.astype(float)
    return float(volts) if np.ndim(count) == 0 else volts


def volts_to_counts(volts, adc=AdcConfig()):
    """Round-to-nearest (ties to even) quantization; returns ``(counts, clipped)``."""
    raw = np.rint(np.asarray(volts, dtype=float) * (adc.max_code / adc.v_ref))
    clipped = bool(np.any(raw < 0) or np.any(raw > adc.max_code))
    return np.clip(raw, 0, adc.max_code).astype(np.uint16), clipped


CHANNELS = ("voltage", "current")
_HEADER = struct.Struct("<BddI")


@dataclass(frozen=True, eq=False)
class SampleBlock:
    counts: np.ndarray
    sample_rate: float
    t0: float
    channel: str
    clipped: bool = False

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise InvalidInput(f"unknown channel {self.channel!r}")
        if not self.sample_rate > 0:
            raise InvalidInput("sample rate must be positive")
        counts = np.asarray(self.counts)
        if counts.size and (counts.min() < 0 or counts.max() > FULL_SCALE_COUNT):
            raise InvalidInput("counts outside the 12-bit range")
        object.__setattr__(self, "counts", counts.astype(np.uint16))

    def __eq__(self, other):
        return (
            isinstance(other, SampleBlock)
            and self.channel == other.channel
            and self.sample_rate == other.sample_rate
            and self.t0 == other.t0
            and np.array_equal(self.counts, other.counts)
        )

    def volts(self, adc=AdcConfig()):
        return counts_to_volts(self.counts, adc)

    def to_bytes(self):
        header = _HEADER.pack(CHANNELS.index(self.channel), self.sample_rate, self.t0, len(self.counts))
        return header + self.counts.astype("<u2").tobytes()

    @classmethod
    def from_bytes(cls, data):
        if len(data) < _HEADER.size:
            raise InvalidInput("sample block dump shorter than its header")
        tag, rate, t0, length = _HEADER.unpack_from(data)
        body = data[_HEADER.size:]
        if tag >= len(CHANNELS):
            raise InvalidInput(f"unknown channel tag {tag}")
        if len(body) != 2 * length:
            raise InvalidInput(f"sample block declares {length} counts but holds {len(body) // 2}")
        counts = np.frombuffer(body, dtype="<u2").astype(np.uint16)
        return cls(counts, rate, t0, CHANNELS[tag])


def adc_acquire(voltage_signal, current_signal, sample_rate, n_samples, t0=0.0,
                mux_skew=0.0, adc=AdcConfig()):
    """Sample both channels through the shared ADC.

    Voltage samples are taken at ``t0 + n/sample_rate``; current samples
    ``mux_skew`` seconds later.  Out-of-range inputs clamp and set ``clipped``.
    """
    if not sample_rate > 0:
        raise InvalidInput("sample rate must be positive")
    if sample_rate > adc.max_sample_rate * (1 + 1e-12):
        raise SampleRateError(f"{sample_rate:g} S/s exceeds the {adc.max_sample_rate:g} S/s ceiling")
    if mux_skew < 0:
        raise InvalidInput("mux skew must be >= 0")
    if n_samples < 1:
        raise InvalidInput("need at least one sample")
    times = t0 + np.arange(n_samples) / sample_rate
    v_counts, v_clip = volts_to_counts(voltage_signal.sample(times), adc)
    i_counts, i_clip = volts_to_counts(current_signal.sample(times + mux_skew), adc)
    return (
        SampleBlock(v_counts, sample_rate, t0, "voltage", v_clip),
        SampleBlock(i_counts, sample_rate, t0 + mux_skew, "current", i_clip),
    )
