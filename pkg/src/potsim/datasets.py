"""Tab-delimited scan files, error metrics and cross-device dataset alignment."""

import math
import os
import tempfile
from dataclasses import dataclass, field

from .errors import InvalidInput, ParseError

EIS_COLUMNS = ("frequency_hz", "impedance_ohm", "phase_deg")
CV_COLUMNS = ("time_s", "voltage_v", "current_a")
COLUMNS = {"eis": EIS_COLUMNS, "cv": CV_COLUMNS}


def _fmt(value):
    return format(value, ".9g")


@dataclass
class ScanDataset:
    kind: str
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in COLUMNS:
            raise InvalidInput(f"dataset kind must be 'eis' or 'cv', got {self.kind!r}")
        self.rows = [tuple(float(v) for v in row) for row in self.rows]
        for row in self.rows:
            if len(row) != 3:
                raise InvalidInput("dataset rows have exactly three columns")
        keys = [row[0] for row in self.rows]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            axis = "frequency" if self.kind == "eis" else "time"
            raise InvalidInput(f"{self.kind.upper()} rows must be strictly ascending in {axis}")
        for key, value in self.metadata.items():
            if any(c in str(key) + str(value) for c in "\t\n\r"):
                raise InvalidInput("metadata keys and values may not contain tabs or newlines")

    @property
    def columns(self):
        return COLUMNS[self.kind]

    @classmethod
    def from_eis_points(cls, points, metadata=None):
        rows = [(p.frequency, p.impedance_magnitude, p.phase) for p in points]
        return cls("eis", rows, dict(metadata or {}))

    @classmethod
    def from_cv_points(cls, points, metadata=None):
        rows = [(p.time, p.voltage, p.current) for p in points]
        return cls("cv", rows, dict(metadata or {}))

    def rounded(self):
        """Copy with every value rounded to the 9 significant digits the file keeps."""
        rows = [tuple(float(_fmt(v)) for v in row) for row in self.rows]
        return ScanDataset(self.kind, rows, {str(k): str(v) for k, v in self.metadata.items()})


def format_dataset(dataset):
    lines = [f"# kind\t{dataset.kind}"]
    lines += [f"# {key}\t{value}" for key, value in dataset.metadata.items() if key != "kind"]
    lines.append("\t".join(dataset.columns))
    lines += ["\t".join(_fmt(v) for v in row) for row in dataset.rows]
    return "\n".join(lines) + "\n"


def parse_dataset(text, path=None):
    metadata = {}
    kind = None
    rows = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].lstrip(" ").partition("\t")
            if not sep:
                raise ParseError("metadata lines are '# key<TAB>value'", lineno, path)
            metadata[key] = value
            continue
        fields = line.split("\t")
        if kind is None:
            for name, cols in COLUMNS.items():
                if tuple(fields) == cols:
                    kind = name
                    break
            else:
                raise ParseError(f"unrecognized header {line!r}", lineno, path)
            continue
        if len(fields) != 3:
            raise ParseError(f"expected 3 tab-separated values, got {len(fields)}", lineno, path)
        try:
            rows.append(tuple(float(v) for v in fields))
        except ValueError:
            raise ParseError(f"malformed number in {line!r}", lineno, path) from None
    if kind is None:
        raise ParseError("missing header line", None, path)
    declared = metadata.pop("kind", kind)
    if declared != kind:
        raise ParseError(f"metadata says {declared!r} but header is {kind!r}", None, path)
    try:
        return ScanDataset(kind, rows, metadata)
    except InvalidInput as exc:
        raise ParseError(str(exc), None, path) from None


def atomic_write(path, data):
    """Write bytes to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_dataset(dataset, path):
    atomic_write(path, format_dataset(dataset).encode("utf-8"))


def read_dataset(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_dataset(fh.read(), os.fspath(path))


# -- comparison ----------------------------------------------------------------

def percent_error(measured, expected):
    """(measured - expected) / expected * 100."""
    if expected == 0:
        raise ZeroDivisionError("percent error against an expected value of 0")
    return (measured - expected) / expected * 100.0


def phase_error(measured, expected):
    """measured - expected, in degrees, unwrapped."""
    return measured - expected


@dataclass(frozen=True)
class AlignedPair:
    reference_frequency: float
    dense_frequency: float
    expected_impedance: float
    measured_impedance: float
    expected_phase: float
    measured_phase: float
    percent_error: float
    phase_error: float


@dataclass(frozen=True)
class AlignmentReport:
    pairs: tuple
    max_abs_percent_error: float
    mean_abs_percent_error: float
    max_abs_phase_error: float
    mean_abs_phase_error: float


def align_datasets(dense, reference):
    """Pair every reference row with the dense row nearest in frequency.

    Ties go to the lower dense frequency.  The dense dataset is treated as
    the measurement and the reference as the expected values.
    """
    for ds in (dense, reference):
        if ds.kind != "eis" or not ds.rows:
            raise InvalidInput("alignment needs two non-empty EIS datasets")
    pairs = []
    for f_ref, z_ref, p_ref in reference.rows:
        # rows ascend, so the first minimum is the lower-frequency one
        best = min(dense.rows, key=lambda row: abs(row[0] - f_ref))
        f_d, z_d, p_d = best
        pairs.append(AlignedPair(f_ref, f_d, z_ref, z_d, p_ref, p_d,
                                 percent_error(z_d, z_ref), phase_error(p_d, p_ref)))
    abs_pct = [abs(p.percent_error) for p in pairs]
    abs_ph = [abs(p.phase_error) for p in pairs]
    return AlignmentReport(
        tuple(pairs), max(abs_pct), math.fsum(abs_pct) / len(pairs),
        max(abs_ph), math.fsum(abs_ph) / len(pairs),
    )


REPORT_COLUMNS = (
    "reference_frequency_hz", "dense_frequency_hz", "expected_ohm", "measured_ohm",
    "percent_error", "abs_percent_error", "expected_phase_deg", "measured_phase_deg",
    "phase_error_deg", "abs_phase_error_deg",
)


def format_report(report):
    lines = ["\t".join(REPORT_COLUMNS)]
    for p in report.pairs:
        values = (p.reference_frequency, p.dense_frequency, p.expected_impedance,
                  p.measured_impedance, p.percent_error, abs(p.percent_error),
                  p.expected_phase, p.measured_phase, p.phase_error, abs(p.phase_error))
        lines.append("\t".join(_fmt(v) for v in values))
    lines.append(f"# max_abs_percent_error\t{_fmt(report.max_abs_percent_error)}")
    lines.append(f"# mean_abs_percent_error\t{_fmt(report.mean_abs_percent_error)}")
    lines.append(f"# max_abs_phase_error_deg\t{_fmt(report.max_abs_phase_error)}")
    lines.append(f"# mean_abs_phase_error_deg\t{_fmt(report.mean_abs_phase_error)}")
    return "\n".join(lines) + "\n"
