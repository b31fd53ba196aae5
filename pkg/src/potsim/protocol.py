"""22-byte host command frames.

Layout (little endian)::

    byte  0      opcode
    bytes 1-20   five int32 parameters
    byte  21     checksum = XOR of bytes 0..20
"""

import struct
from dataclasses import dataclass, replace
from enum import IntEnum
from functools import reduce
from operator import xor

from .errors import ChecksumError, FrameLengthError, InvalidInput, ReservedFieldError, UnknownOpcodeError

FRAME_LENGTH = 22
_BODY = struct.Struct("<B5i")
INT32_MIN, INT32_MAX = -(2**31), 2**31 - 1


class Opcode(IntEnum):
    EIS_SCAN = 0x01
    CV_SCAN = 0x02
    SELECT_WE = 0x03
    CALIBRATE = 0x04
    SET_CONFIG = 0x05


class ConfigKey(IntEnum):
    """SET_CONFIG targets: (key, value) in params 0 and 1."""

    TIA_FEEDBACK_OHM = 1
    NOISE_SIGMA_UV = 2
    ELECTROMETER_OFFSET_UV = 3
    TIA_OFFSET_UV = 4
    MAX_SAMPLE_RATE_SPS = 5
    CV_MUX_SKEW_US = 6


PARAM_NAMES = {
    Opcode.EIS_SCAN: ("f_start_hz", "f_end_hz", "f_step_hz", "amplitude_mv", "n_average"),
    Opcode.CV_SCAN: ("rate_mv_s", "v_start_mv", "v_end_mv", "cycles"),
    Opcode.SELECT_WE: ("channel",),
    Opcode.CALIBRATE: (),
    Opcode.SET_CONFIG: ("key", "value"),
}


@dataclass(frozen=True)
class CommandFrame:
    opcode: Opcode
    params: tuple = (0, 0, 0, 0, 0)

    def __post_init__(self):
        try:
            opcode = Opcode(self.opcode)
        except ValueError:
            raise UnknownOpcodeError(f"unknown opcode 0x{int(self.opcode):02x}") from None
        params = tuple(int(p) for p in self.params)
        if len(params) != 5:
            raise InvalidInput("a command carries exactly five parameters")
        for p in params:
            if not INT32_MIN <= p <= INT32_MAX:
                raise InvalidInput(f"parameter {p} does not fit in int32")
        used = len(PARAM_NAMES[opcode])
        if any(params[used:]):
            raise ReservedFieldError(f"{opcode.name} reserves parameters {used + 1}-5; they must be 0")
        object.__setattr__(self, "opcode", opcode)
        object.__setattr__(self, "params", params)

    @property
    def fields(self):
        return dict(zip(PARAM_NAMES[self.opcode], self.params))

    @classmethod
    def eis(cls, f_start_hz, f_end_hz, f_step_hz, amplitude_mv, n_average):
        return cls(Opcode.EIS_SCAN, (f_start_hz, f_end_hz, f_step_hz, amplitude_mv, n_average))

    @classmethod
    def cv(cls, rate_mv_s, v_start_mv, v_end_mv, cycles=1):
        return cls(Opcode.CV_SCAN, (rate_mv_s, v_start_mv, v_end_mv, cycles, 0))

    @classmethod
    def select_we(cls, channel):
        return cls(Opcode.SELECT_WE, (channel, 0, 0, 0, 0))

    @classmethod
    def calibrate(cls):
        return cls(Opcode.CALIBRATE)

    @classmethod
    def set_config(cls, key, value):
        return cls(Opcode.SET_CONFIG, (ConfigKey(key), value, 0, 0, 0))


def checksum(data):
    return reduce(xor, data, 0)


def encode_command(cmd):
    body = _BODY.pack(cmd.opcode, *cmd.params)
    return body + bytes([checksum(body)])


def decode_command(data):
    data = bytes(data)
    if len(data) != FRAME_LENGTH:
        raise FrameLengthError(f"command frames are {FRAME_LENGTH} bytes, got {len(data)}")
    if checksum(data[:-1]) != data[-1]:
        raise ChecksumError(f"checksum 0x{data[-1]:02x} != 0x{checksum(data[:-1]):02x}")
    opcode, *params = _BODY.unpack(data[:-1])
    return CommandFrame(opcode, tuple(params))


# -- mapping frames onto scan settings ----------------------------------------

def eis_params_from_command(cmd, **overrides):
    from .scan import EisScanParams

    f = cmd.fields
    return EisScanParams(
        f_start=float(f["f_start_hz"]),
        f_end=float(f["f_end_hz"]),
        f_step=float(f["f_step_hz"]),
        excitation_amplitude=f["amplitude_mv"] / 1000.0,
        n_average=f["n_average"],
        **overrides,
    )


def cv_params_from_command(cmd):
    from .scan import CvScanParams

    f = cmd.fields
    return CvScanParams(
        rate=f["rate_mv_s"] / 1000.0,
        v_start=f["v_start_mv"] / 1000.0,
        v_end=f["v_end_mv"] / 1000.0,
        cycles=f["cycles"],
    )


def apply_set_config(cmd, frontend, adc):
    """Return ``(frontend, adc)`` updated by a SET_CONFIG frame."""
    try:
        key = ConfigKey(cmd.fields["key"])
    except ValueError:
        raise InvalidInput(f"unknown SET_CONFIG key {cmd.fields['key']}") from None
    value = cmd.fields["value"]
    if key is ConfigKey.TIA_FEEDBACK_OHM:
        return replace(frontend, tia_feedback_resistance=float(value)), adc
    if key is ConfigKey.NOISE_SIGMA_UV:
        return replace(frontend, noise_sigma=value * 1e-6), adc
    if key is ConfigKey.ELECTROMETER_OFFSET_UV:
        return replace(frontend, electrometer_offset=value * 1e-6), adc
    if key is ConfigKey.TIA_OFFSET_UV:
        return replace(frontend, tia_offset=value * 1e-6), adc
    if key is ConfigKey.MAX_SAMPLE_RATE_SPS:
        return frontend, replace(adc, max_sample_rate=float(value))
    return frontend, replace(adc, cv_mux_skew=value * 1e-6)
