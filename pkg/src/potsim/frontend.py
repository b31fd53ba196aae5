"""Control amplifier, electrometer, TIA and working-electrode multiplexer.

Everything runs from a single supply, so analog nodes swing around
``virtual_ground``; cell voltages are relative to it.
"""

from dataclasses import dataclass, replace

import numpy as np

from .cells import time_domain_current
from .conversion import Waveform
from .errors import InvalidChannel, InvalidConfig


@dataclass(frozen=True)
class FrontEndConfig:
    tia_feedback_resistance: float = 10e3
    control_attenuation: float = 2.5
    electrometer_gain: float = 1.0
    electrometer_offset: float = 0.0
    tia_offset: float = 0.0
    gain_error_electrometer: float = 1.0
    gain_error_tia: float = 1.0
    noise_sigma: float = 0.0
    rail_low: float = 0.0
    rail_high: float = 3.3
    virtual_ground: float = 1.65

    def __post_init__(self):
        if not self.tia_feedback_resistance > 0:
            raise InvalidConfig("tia_feedback_resistance must be > 0")
        if not self.control_attenuation > 0:
            raise InvalidConfig("control_attenuation must be > 0")
        if not self.electrometer_gain > 0:
            raise InvalidConfig("electrometer_gain must be > 0")
        if not self.rail_low < self.virtual_ground < self.rail_high:
            raise InvalidConfig("need rail_low < virtual_ground < rail_high")
        if not self.noise_sigma >= 0:
            raise InvalidConfig("noise_sigma must be >= 0")


@dataclass(frozen=True)
class ElectrodeMux:
    cells: tuple
    selected: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if not 1 <= len(self.cells) <= 10:
            raise InvalidConfig(f"a mux holds 1 to 10 working electrodes, got {len(self.cells)}")
        if not 0 <= self.selected < len(self.cells):
            raise InvalidChannel(f"channel {self.selected} not in [0, {len(self.cells)})")

    @property
    def channel_count(self):
        return len(self.cells)

    @property
    def cell(self):
        return self.cells[self.selected]


def select_working_electrode(mux, channel):
    if not isinstance(channel, (int, np.integer)) or not 0 <= channel < mux.channel_count:
        raise InvalidChannel(f"channel {channel!r} not in [0, {mux.channel_count})")
    return replace(mux, selected=int(channel))


@dataclass(frozen=True, eq=False)
class DriveResult:
    electrometer: Waveform
    tia: Waveform
    cell_voltage: np.ndarray
    cell_current: np.ndarray
    saturated: bool


def drive_cell(cfg, cell, dac, seed=None, initial_state=None):
    """Apply a DAC waveform through the control amplifier and return both
    amplifier outputs on the DAC's time grid."""
    dac_volts = np.asarray(dac.values, dtype=float)
    v_cell = (dac_volts - cfg.virtual_ground) / cfg.control_attenuation
    i_cell = time_domain_current(cell, v_cell, dac.rate, initial_state)
    electrometer = (
        cfg.virtual_ground
        + cfg.gain_error_electrometer * cfg.electrometer_gain * v_cell
        + cfg.electrometer_offset
    )
    tia = cfg.virtual_ground - cfg.gain_error_tia * i_cell * cfg.tia_feedback_resistance + cfg.tia_offset
    if cfg.noise_sigma > 0:
        noise = np.random.default_rng(seed).normal(0.0, cfg.noise_sigma, size=(2, dac_volts.size))
        electrometer = electrometer + noise[0]
        tia = tia + noise[1]
    saturated = bool(
        np.any(electrometer < cfg.rail_low) or np.any(electrometer > cfg.rail_high)
        or np.any(tia < cfg.rail_low) or np.any(tia > cfg.rail_high)
    )
    electrometer = np.clip(electrometer, cfg.rail_low, cfg.rail_high)
    tia = np.clip(tia, cfg.rail_low, cfg.rail_high)
    return DriveResult(
        Waveform(electrometer, dac.rate, dac.t0),
        Waveform(tia, dac.rate, dac.t0),
        v_cell,
        i_cell,
        saturated,
    )
