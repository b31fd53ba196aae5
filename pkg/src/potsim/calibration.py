"""Offset calibration, per-frequency phase offsets and multi-point gain correction."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .cells import Resistor, impedance_at, wrap_degrees
from .conversion import AdcConfig, DacConfig, Waveform, adc_acquire
from .errors import CalibrationFailed, InvalidInput, ParseError
from .frontend import FrontEndConfig, drive_cell
from .scan import EisScanParams, child_seed, eis_measure_point

CALIBRATION_SAMPLES = 1024


def _sorted_points(points, name):
    pts = tuple((float(k), float(v)) for k, v in points)
    keys = [k for k, _ in pts]
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise InvalidInput(f"{name} keys must be strictly increasing")
    if not all(math.isfinite(k) and math.isfinite(v) for k, v in pts):
        raise InvalidInput(f"{name} must be finite")
    return pts


@dataclass(frozen=True)
class CalibrationTable:
    electrometer_offset: float = 0.0
    tia_offset: float = 0.0
    phase_offset_points: tuple = ()
    gain_points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "phase_offset_points",
                           _sorted_points(self.phase_offset_points, "phase_offset_points"))
        gains = _sorted_points(self.gain_points, "gain_points")
        measured = [m for _, m in gains]
        if any(m <= 0 for m in measured) or any(t <= 0 for t, _ in gains):
            raise InvalidInput("gain_points must be positive")
        if any(b <= a for a, b in zip(measured, measured[1:])):
            raise InvalidInput("gain_points measured values must increase with the true values")
        object.__setattr__(self, "gain_points", gains)

    def apply(self, point):
        return apply_calibration(self, point)

    def inverse(self):
        """Table that undoes this one's phase and magnitude corrections."""
        return CalibrationTable(
            -self.electrometer_offset,
            -self.tia_offset,
            tuple((f, -o) for f, o in self.phase_offset_points),
            tuple((m, t) for t, m in self.gain_points),
        )

    def phase_offset(self, f):
        if not self.phase_offset_points:
            return 0.0
        fs, offs = zip(*self.phase_offset_points)
        return float(np.interp(f, fs, offs))

    def correct_magnitude(self, measured):
        if not self.gain_points:
            return measured
        true, meas = (np.array(c) for c in zip(*self.gain_points))
        if measured <= meas[0]:
            return measured * true[0] / meas[0]
        if measured >= meas[-1]:
            return measured * true[-1] / meas[-1]
        return float(np.interp(measured, meas, true))


def apply_calibration(table, point):
    """Subtract the interpolated phase offset and map |Z| through the gain table.

    Phase offsets clamp to the end values outside the table.  The gain map is
    piecewise linear inside the table and scales by the nearest end point's
    true/measured ratio outside it.
    """
    magnitude = table.correct_magnitude(point.impedance_magnitude)
    phase = wrap_degrees(point.phase - table.phase_offset(point.frequency))
    i_rms = point.v_rms / magnitude if magnitude else point.i_rms
    return replace(point, impedance_magnitude=magnitude, phase=phase, i_rms=i_rms)


def calibrate_offsets(frontend=FrontEndConfig(), adc=AdcConfig(), seed=None,
                      n_samples=CALIBRATION_SAMPLES, cell=Resistor(10e3)):
    """Drive zero excitation and return the mean deviation of each channel
    from virtual ground, ``(electrometer_offset, tia_offset)``."""
    rate = adc.max_sample_rate
    hold = Waveform(np.full(n_samples + 2, frontend.virtual_ground), rate)
    drive = drive_cell(frontend, cell, hold, seed)
    v_block, i_block = adc_acquire(drive.electrometer, drive.tia, rate, n_samples, adc=adc)
    if drive.saturated or v_block.clipped or i_block.clipped:
        raise CalibrationFailed("front end saturated with zero excitation")
    e_off = float(np.mean(v_block.volts(adc))) - frontend.virtual_ground
    t_off = float(np.mean(i_block.volts(adc))) - frontend.virtual_ground
    return e_off, t_off


def build_calibration_table(frontend=FrontEndConfig(), adc=AdcConfig(), dac=DacConfig(),
                            seed=None, phase_frequencies=(), gain_resistors=(),
                            reference=Resistor(1e3), gain_frequency=1000.0,
                            amplitude=0.2, n_average=1):
    """Measure a full calibration table against known resistors.

    Phase offsets come from measuring ``reference`` at each of
    ``phase_frequencies``; gain points from measuring each resistor in
    ``gain_resistors`` at ``gain_frequency``.
    """
    e_off, t_off = calibrate_offsets(frontend, adc, seed)
    freqs = sorted(float(f) for f in phase_frequencies)
    lo = min(freqs + [gain_frequency])
    hi = max(freqs + [gain_frequency])
    params = EisScanParams(lo, hi, excitation_amplitude=amplitude, n_average=n_average,
                           f_min=min(lo, 100.0), f_max=max(hi, 50_000.0))
    phase_points = []
    for i, f in enumerate(freqs):
        pt = eis_measure_point(f, params, reference, frontend, adc, dac, seed=child_seed(seed, 1, i))
        phase_points.append((f, wrap_degrees(pt.phase - impedance_at(reference, f).phase)))
    gain_points = []
    for i, r in enumerate(sorted(float(r) for r in gain_resistors)):
        pt = eis_measure_point(gain_frequency, params, Resistor(r), frontend, adc, dac,
                               seed=child_seed(seed, 2, i))
        gain_points.append((r, pt.impedance_magnitude))
    return CalibrationTable(e_off, t_off, tuple(phase_points), tuple(gain_points))


# -- file format ---------------------------------------------------------------

_MAGIC = "# potsim calibration table v1"
_SECTIONS = {
    "[phase_offsets]": ("frequency_hz", "offset_deg"),
    "[gain_points]": ("true_ohm", "measured_ohm"),
}


def format_calibration(table):
    lines = [
        _MAGIC,
        "[offsets]",
        f"electrometer_offset_v\t{table.electrometer_offset!r}",
        f"tia_offset_v\t{table.tia_offset!r}",
    ]
    for section, points in (("[phase_offsets]", table.phase_offset_points),
                            ("[gain_points]", table.gain_points)):
        lines.append(section)
        lines.append("\t".join(_SECTIONS[section]))
        lines.extend(f"{k!r}\t{v!r}" for k, v in points)
    return "\n".join(lines) + "\n"


def parse_calibration(text, path=None):
    offsets = {}
    points = {"[phase_offsets]": [], "[gain_points]": []}
    section = None
    expect_header = False
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if line != "[offsets]" and line not in _SECTIONS:
                raise ParseError(f"unknown section {line!r}", lineno, path)
            section = line
            expect_header = line in _SECTIONS
            continue
        fields = line.split("\t")
        if section is None:
            raise ParseError("row outside any section", lineno, path)
        if expect_header:
            if tuple(fields) != _SECTIONS[section]:
                raise ParseError(f"expected header {'<TAB>'.join(_SECTIONS[section])}", lineno, path)
            expect_header = False
            continue
        if len(fields) != 2:
            raise ParseError(f"expected 2 tab-separated fields, got {len(fields)}", lineno, path)
        try:
            if section == "[offsets]":
                if fields[0] not in ("electrometer_offset_v", "tia_offset_v"):
                    raise ParseError(f"unknown offset key {fields[0]!r}", lineno, path)
                offsets[fields[0]] = float(fields[1])
            else:
                points[section].append((float(fields[0]), float(fields[1])))
        except ValueError as exc:
            raise ParseError(f"bad number: {exc}", lineno, path) from None
    try:
        return CalibrationTable(
            offsets.get("electrometer_offset_v", 0.0),
            offsets.get("tia_offset_v", 0.0),
            tuple(points["[phase_offsets]"]),
            tuple(points["[gain_points]"]),
        )
    except InvalidInput as exc:
        raise ParseError(str(exc), None, path) from None


def write_calibration(table, path):
    from .datasets import atomic_write

    atomic_write(path, format_calibration(table).encode("utf-8"))


def read_calibration(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_calibration(fh.read(), path)
