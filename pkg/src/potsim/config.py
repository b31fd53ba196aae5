"""Text configuration: SI-suffixed numbers, cell network expressions, presets.

A config file is INI-style::

    # comments start with '#' or ';'
    [frontend]
    tia_feedback_resistance = 10k
    noise_sigma = 1m

    [adc]
    max_sample_rate = 4.104M
    eis_mux_skew = auto
    cv_mux_skew = 653u

    [dac]
    resolution_bits = 12

    [cell sensor-a]
    network = (series (R 560) (parallel (R 10k) (C 33n)))

Keys in ``[frontend]``, ``[adc]`` and ``[dac]`` are the dataclass field
names.  Unknown sections or keys are errors.
"""

import configparser
import dataclasses
import re
from decimal import Decimal
from dataclasses import dataclass, field

from .cells import Capacitor, Parallel, Resistor, Series
from .conversion import AdcConfig, DacConfig
from .errors import InvalidConfig, InvalidInput, ParseError
from .frontend import FrontEndConfig

SI_PREFIXES = {"p": -12, "n": -9, "u": -6, "µ": -6, "m": -3, "": 0, "k": 3, "M": 6, "G": 9}
_NUMBER = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([pnuµmkMG]?)$")


def parse_si(text):
    """``'33n'`` -> 3.3e-08, ``'4.104M'`` -> 4104000.0, ``'10'`` -> 10.0."""
    m = _NUMBER.match(str(text).strip())
    if not m:
        raise InvalidInput(f"not a number: {text!r}")
    # scale in decimal so '33n' is exactly the float nearest 33e-9
    return float(Decimal(m.group(1)).scaleb(SI_PREFIXES[m.group(2)]))


# -- network expressions -------------------------------------------------------

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_network(text):
    """Parse ``(series ...)``, ``(parallel ...)``, ``(R value)``, ``(C value)``."""
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise InvalidInput("empty network expression")
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(tokens):
            raise InvalidInput(f"unexpected end of network expression {text!r}")
        tok = tokens[pos]
        pos += 1
        return tok

    def node():
        if take() != "(":
            raise InvalidInput(f"expected '(' in {text!r}")
        head = take().lower()
        if head in ("r", "c"):
            value = parse_si(take())
            if take() != ")":
                raise InvalidInput(f"({head.upper()} value) takes exactly one value")
            return Resistor(value) if head == "r" else Capacitor(value)
        if head in ("series", "parallel"):
            children = []
            while pos < len(tokens) and tokens[pos] != ")":
                children.append(node())
            take()
            if not children:
                raise InvalidInput(f"({head}) needs at least one element")
            return Series(*children) if head == "series" else Parallel(*children)
        raise InvalidInput(f"unknown network element {head!r}")

    net = node()
    if pos != len(tokens):
        raise InvalidInput(f"trailing text after network expression {text!r}")
    return net


# -- presets -------------------------------------------------------------------

# (R ohms, C farads) for the nine parallel-RC validation cells at 10 080 Hz
TABLE3_CELLS = (
    (1000.0, 10.0e-9),
    (1000.0, 8.2e-9),
    (1000.0, 6.74e-9),
    (1000.0, 5.55e-9),
    (1000.0, 4.3e-9),
    (10000.0, 8.2e-9),
    (10000.0, 6.74e-9),
    (10000.0, 5.55e-9),
    (10000.0, 4.4e-9),
)
TABLE3_FREQUENCY = 10_080.0


def _presets():
    presets = {f"R{name}": Resistor(value) for name, value in (
        ("1k", 1e3), ("5k", 5e3), ("10k", 10e3), ("50k", 50e3),
        ("100k", 100e3), ("150k", 150e3), ("200k", 200e3),
    )}
    for i, (r, c) in enumerate(TABLE3_CELLS, start=1):
        presets[f"rc-table3-row{i}"] = Parallel(Resistor(r), Capacitor(c))
    presets["redox-dummy"] = Series(Resistor(560.0), Parallel(Resistor(10e3), Capacitor(33e-9)))
    return presets


PRESETS = _presets()


# -- config files --------------------------------------------------------------

@dataclass(frozen=True)
class Config:
    frontend: FrontEndConfig = FrontEndConfig()
    adc: AdcConfig = AdcConfig()
    dac: DacConfig = DacConfig()
    cells: dict = field(default_factory=dict)


def _field_types(cls):
    return {f.name: f.type for f in dataclasses.fields(cls)}


def coerce_field(cls, name, raw):
    """Convert ``raw`` text for dataclass field ``name`` of ``cls``."""
    kind = _field_types(cls)[name]
    text = str(raw).strip()
    if cls is AdcConfig and name == "eis_mux_skew" and text.lower() in ("auto", "none"):
        return None
    value = parse_si(text)
    if kind in (int, "int"):
        if value != int(value):
            raise InvalidInput(f"{name} must be an integer, got {raw!r}")
        return int(value)
    return value


def parse_config(text, path=None):
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=None,
        delimiters=("=",), strict=True,
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=path or "<config>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(exc.message.splitlines()[0], line, path) from None

    # configparser drops line numbers; recover them for error messages
    def line_of(section, key=None):
        target = f"[{section}]"
        in_section = False
        for lineno, raw in enumerate(text.splitlines(), start=1):
            s = raw.strip()
            if s.startswith("["):
                in_section = s == target
                if in_section and key is None:
                    return lineno
            elif in_section and key is not None and s.split("=", 1)[0].strip() == key:
                return lineno
        return None

    built = {}
    cells = {}
    for section in parser.sections():
        if section.startswith("cell "):
            name = section[5:].strip()
            keys = set(parser[section])
            if keys != {"network"}:
                raise ParseError(f"[{section}] takes exactly one key, 'network'", line_of(section), path)
            try:
                cells[name] = parse_network(parser[section]["network"])
            except InvalidInput as exc:
                raise ParseError(str(exc), line_of(section, "network"), path) from None
            continue
        cls = {"frontend": FrontEndConfig, "adc": AdcConfig, "dac": DacConfig}.get(section)
        if cls is None:
            raise ParseError(f"unknown section [{section}]", line_of(section), path)
        values = {}
        for key, raw in parser[section].items():
            if key not in _field_types(cls):
                raise ParseError(f"unknown key {key!r} in [{section}]", line_of(section, key), path)
            try:
                values[key] = coerce_field(cls, key, raw)
            except InvalidInput as exc:
                raise ParseError(str(exc), line_of(section, key), path) from None
        try:
            built[section] = cls(**values)
        except InvalidConfig as exc:
            raise ParseError(f"[{section}]: {exc}", line_of(section), path) from None
    return Config(
        built.get("frontend", FrontEndConfig()),
        built.get("adc", AdcConfig()),
        built.get("dac", DacConfig()),
        cells,
    )


def read_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))


def resolve_cell(spec, extra=None):
    """A cell from a config-file name, a preset name or an inline expression."""
    spec = spec.strip()
    if extra and spec in extra:
        return extra[spec]
    if spec in PRESETS:
        return PRESETS[spec]
    if spec.startswith("("):
        return parse_network(spec)
    known = sorted(set(PRESETS) | set(extra or ()))
    raise InvalidInput(f"unknown cell {spec!r}; known: {', '.join(known)}")
