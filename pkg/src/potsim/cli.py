"""``potsim`` command line: run scans, calibrate, compare datasets, encode frames."""

import argparse
import dataclasses
import os
import sys

from . import __version__
from .calibration import build_calibration_table, format_calibration, read_calibration, write_calibration
from .cells import to_sexpr
from .config import PRESETS, Config, coerce_field, parse_si, read_config, resolve_cell
from .conversion import AdcConfig, DacConfig
from .datasets import ScanDataset, align_datasets, format_dataset, format_report, read_dataset, write_dataset
from .errors import InvalidInput, PotsimError
from .frontend import ElectrodeMux, FrontEndConfig, select_working_electrode
from .protocol import ConfigKey, CommandFrame, Opcode, decode_command, encode_command
from .scan import CvScanParams, EisScanParams, cv_scan, eis_scan

SEED_ENV = "POTSIM_SEED"
IO_ERROR_EXIT = 1
USAGE_EXIT = 2

OPCODE_NAMES = {
    "eis": Opcode.EIS_SCAN, "cv": Opcode.CV_SCAN, "select-we": Opcode.SELECT_WE,
    "calibrate": Opcode.CALIBRATE, "set-config": Opcode.SET_CONFIG,
}

# config dataclass -> flag prefix
_GROUPS = ((FrontEndConfig, "frontend", ""), (AdcConfig, "adc", "adc-"), (DacConfig, "dac", "dac-"))


def _si(text):
    try:
        return parse_si(text)
    except InvalidInput as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _si_int(text):
    value = _si(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def _si_list(text):
    return [_si(part) for part in text.split(",") if part.strip()]


def _field_flag(cls, name):
    def convert(text):
        try:
            return coerce_field(cls, name, text)
        except InvalidInput as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    convert.__name__ = name
    return convert


def _add_hardware_flags(parser):
    for cls, group_name, prefix in _GROUPS:
        group = parser.add_argument_group(f"{group_name} settings")
        for f in dataclasses.fields(cls):
            group.add_argument(
                f"--{prefix}{f.name.replace('_', '-')}",
                dest=f"{group_name}__{f.name}", type=_field_flag(cls, f.name), default=None,
                metavar="VALUE", help=f"default {f.default!r}",
            )


def _add_scan_flags(parser):
    parser.add_argument("--cell", action="append", metavar="CELL",
                        help="preset, config-file cell or network expression; repeat for more "
                             "working electrodes (default R1k)")
    parser.add_argument("--channel", type=int, default=0, help="working electrode to measure")
    parser.add_argument("--seed", type=int, default=None,
                        help=f"noise seed (default ${SEED_ENV}, else 0)")
    parser.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    _add_hardware_flags(parser)


def build_parser():
    parser = argparse.ArgumentParser(prog="potsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="FILE", help="INI-style hardware and cell config")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    eis = sub.add_parser("eis", help="impedance sweep")
    _add_scan_flags(eis)
    eis.add_argument("--f-start", type=_si, required=True)
    eis.add_argument("--f-end", type=_si, required=True)
    eis.add_argument("--f-step", type=_si, default=50.0)
    eis.add_argument("--amplitude", type=_si, default=0.2, help="DAC sine amplitude, volts")
    eis.add_argument("--n-average", type=_si_int, default=1)
    eis.add_argument("--settle-cycles", type=_si_int, default=5)
    eis.add_argument("--f-min", type=_si, default=100.0, help="lowest allowed frequency")
    eis.add_argument("--f-max", type=_si, default=50_000.0, help="highest allowed frequency")
    eis.add_argument("--calibration", metavar="FILE")
    eis.add_argument("--workers", type=int, default=1)

    cv = sub.add_parser("cv", help="cyclic voltammetry")
    _add_scan_flags(cv)
    cv.add_argument("--rate", type=_si, required=True, help="V/s at the cell")
    cv.add_argument("--v-start", type=_si, required=True)
    cv.add_argument("--v-end", type=_si, required=True)
    cv.add_argument("--cycles", type=_si_int, default=1)
    cv.add_argument("--calibration", metavar="FILE")

    cal = sub.add_parser("calibrate", help="measure offsets, phase offsets and gain points")
    cal.add_argument("--seed", type=int, default=None)
    cal.add_argument("--out", metavar="PATH")
    cal.add_argument("--phase-frequencies", type=_si_list, default=[1e3, 5e3, 10e3, 20e3])
    cal.add_argument("--gain-resistors", type=_si_list, default=[1e3, 10e3, 100e3])
    cal.add_argument("--reference", default="R1k", help="known cell for phase offsets")
    cal.add_argument("--gain-frequency", type=_si, default=1000.0)
    cal.add_argument("--amplitude", type=_si, default=0.2)
    cal.add_argument("--n-average", type=_si_int, default=1)
    _add_hardware_flags(cal)

    cmp_ = sub.add_parser("compare", help="align a dense EIS dataset with a reference one")
    cmp_.add_argument("dense")
    cmp_.add_argument("reference")
    cmp_.add_argument("--out", metavar="PATH")

    enc = sub.add_parser("encode", help="write a 22-byte command frame")
    enc.add_argument("opcode", choices=list(OPCODE_NAMES))
    enc.add_argument("params", nargs="*",
                     help="integer parameters; set-config takes a key name or number then a value")
    enc.add_argument("--hex", action="store_true", help="write hex text instead of bytes")
    enc.add_argument("--out", metavar="PATH")

    dec = sub.add_parser("decode", help="read a 22-byte command frame")
    dec.add_argument("path", nargs="?", default="-", help="file, or - for stdin")
    dec.add_argument("--hex", action="store_true", help="input is hex text")

    sub.add_parser("presets", help="list built-in cells")
    return parser


# -- helpers -------------------------------------------------------------------

def _hardware(args, config):
    built = {}
    for cls, group_name, _ in _GROUPS:
        base = getattr(config, group_name)
        overrides = {
            f.name: getattr(args, f"{group_name}__{f.name}")
            for f in dataclasses.fields(cls)
            if getattr(args, f"{group_name}__{f.name}") is not None
        }
        built[group_name] = dataclasses.replace(base, **overrides)
    return built["frontend"], built["adc"], built["dac"]


def _seed(args):
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(SEED_ENV, "").strip()
    if not raw:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InvalidInput(f"${SEED_ENV} must be an integer, got {raw!r}") from None


def _cell(args, config):
    specs = args.cell or ["R1k"]
    mux = ElectrodeMux(tuple(resolve_cell(s, config.cells) for s in specs))
    mux = select_working_electrode(mux, args.channel)
    return specs[args.channel], mux.cell


def _metadata(name, cell, seed, frontend, adc, dac):
    meta = {"cell": name, "network": to_sexpr(cell), "seed": str(seed)}
    for group_name, cfg in (("frontend", frontend), ("adc", adc), ("dac", dac)):
        for f in dataclasses.fields(cfg):
            meta[f"{group_name}.{f.name}"] = repr(getattr(cfg, f.name))
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        meta["timestamp"] = epoch
    return meta


def _emit_text(text, out):
    if out:
        from .datasets import atomic_write

        atomic_write(out, text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def _emit_dataset(dataset, out):
    if out:
        write_dataset(dataset, out)
    else:
        sys.stdout.write(format_dataset(dataset))


# -- commands ------------------------------------------------------------------

def cmd_eis(args, config):
    frontend, adc, dac = _hardware(args, config)
    name, cell = _cell(args, config)
    seed = _seed(args)
    params = EisScanParams(
        args.f_start, args.f_end, args.f_step, args.amplitude, args.n_average,
        args.settle_cycles, args.f_min, args.f_max,
    )
    calibration = read_calibration(args.calibration) if args.calibration else None
    points = eis_scan(params, cell, frontend, adc, dac, seed, calibration, workers=args.workers)
    meta = _metadata(name, cell, seed, frontend, adc, dac)
    _emit_dataset(ScanDataset.from_eis_points(points, meta), args.out)


def cmd_cv(args, config):
    frontend, adc, dac = _hardware(args, config)
    name, cell = _cell(args, config)
    seed = _seed(args)
    params = CvScanParams(args.rate, args.v_start, args.v_end, args.cycles)
    calibration = read_calibration(args.calibration) if args.calibration else None
    points = cv_scan(params, cell, frontend, adc, dac, seed, calibration)
    meta = _metadata(name, cell, seed, frontend, adc, dac)
    _emit_dataset(ScanDataset.from_cv_points(points, meta), args.out)


def cmd_calibrate(args, config):
    frontend, adc, dac = _hardware(args, config)
    table = build_calibration_table(
        frontend, adc, dac, _seed(args), args.phase_frequencies, args.gain_resistors,
        resolve_cell(args.reference, config.cells), args.gain_frequency, args.amplitude,
        args.n_average,
    )
    if args.out:
        write_calibration(table, args.out)
    else:
        sys.stdout.write(format_calibration(table))


def cmd_compare(args, config):
    report = align_datasets(read_dataset(args.dense), read_dataset(args.reference))
    _emit_text(format_report(report), args.out)


def _frame_from_args(args):
    opcode = OPCODE_NAMES[args.opcode]
    raw = list(args.params)
    if opcode is Opcode.SET_CONFIG and raw and not raw[0].lstrip("-").isdigit():
        try:
            raw[0] = str(int(ConfigKey[raw[0].upper().replace("-", "_")]))
        except KeyError:
            raise InvalidInput(f"unknown config key {raw[0]!r}") from None
    try:
        params = [int(p, 0) for p in raw]
    except ValueError as exc:
        raise InvalidInput(f"frame parameters are integers: {exc}") from None
    if len(params) > 5:
        raise InvalidInput("a frame carries at most five parameters")
    return CommandFrame(opcode, tuple(params) + (0,) * (5 - len(params)))


def cmd_encode(args, config):
    frame = encode_command(_frame_from_args(args))
    if args.hex:
        _emit_text(frame.hex() + "\n", args.out)
    elif args.out:
        from .datasets import atomic_write

        atomic_write(args.out, frame)
    else:
        sys.stdout.buffer.write(frame)
        sys.stdout.flush()


def cmd_decode(args, config):
    if args.path == "-":
        data = sys.stdin.buffer.read()
    else:
        with open(args.path, "rb") as fh:
            data = fh.read()
    if args.hex:
        try:
            data = bytes.fromhex(data.decode("ascii").strip())
        except ValueError as exc:
            raise InvalidInput(f"bad hex input: {exc}") from None
    cmd = decode_command(data)
    lines = [f"opcode\t{cmd.opcode.name}"]
    for key, value in cmd.fields.items():
        if cmd.opcode is Opcode.SET_CONFIG and key == "key":
            try:
                value = ConfigKey(value).name
            except ValueError:
                pass
        lines.append(f"{key}\t{value}")
    sys.stdout.write("\n".join(lines) + "\n")


def cmd_presets(args, config):
    names = {**PRESETS, **config.cells}
    for name, cell in names.items():
        sys.stdout.write(f"{name}\t{to_sexpr(cell)}\n")


COMMANDS = {
    "eis": cmd_eis, "cv": cmd_cv, "calibrate": cmd_calibrate, "compare": cmd_compare,
    "encode": cmd_encode, "decode": cmd_decode, "presets": cmd_presets,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = read_config(args.config) if args.config else Config()
        COMMANDS[args.command](args, config)
    except PotsimError as exc:
        print(f"potsim: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"potsim: error: {exc}", file=sys.stderr)
        return IO_ERROR_EXIT
    return 0


def run_cli(argv):
    """Run the CLI and return its exit code, usage errors included."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
