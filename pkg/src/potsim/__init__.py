"""Software model of a low-power potentiostat: cells, analog front end,
converters, firmware DSP, calibration and host tooling."""

__version__ = "0.1.0"

from .calibration import (
    CalibrationTable,
    apply_calibration,
    build_calibration_table,
    calibrate_offsets,
    read_calibration,
    write_calibration,
)
from .cells import (
    Capacitor,
    ComplexImpedance,
    Parallel,
    Resistor,
    Series,
    impedance_at,
    network_impedance,
    parallel_rc_magnitude,
    parallel_rc_phase,
    time_domain_current,
    wrap_degrees,
)
from .config import PRESETS, parse_network, parse_si, read_config, resolve_cell
from .conversion import (
    AdcConfig,
    DacConfig,
    SampleBlock,
    Waveform,
    adc_acquire,
    counts_to_volts,
    dac_ramp,
    dac_sine,
    volts_to_counts,
)
from .datasets import (
    ScanDataset,
    align_datasets,
    percent_error,
    phase_error,
    read_dataset,
    write_dataset,
)
from .dsp import (
    compensate_mux_phase,
    cross_correlate_lag,
    cross_correlation,
    lag_to_phase,
    remove_dc,
    rms,
    select_sample_rate,
    tia_volts_to_current,
)
from .errors import *  # noqa: F401,F403
from .frontend import ElectrodeMux, FrontEndConfig, drive_cell, select_working_electrode
from .protocol import CommandFrame, ConfigKey, Opcode, decode_command, encode_command
from .scan import CvPoint, CvScanParams, EisPoint, EisScanParams, cv_scan, eis_measure_point, eis_scan
