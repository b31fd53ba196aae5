"""Exception hierarchy. Each class carries the CLI exit code for its error class."""


class PotsimError(Exception):
    exit_code = 1


class InvalidInput(PotsimError, ValueError):
    exit_code = 3


class InvalidConfig(InvalidInput):
    exit_code = 4


class UnsupportedTopology(PotsimError):
    exit_code = 5


class InvalidChannel(InvalidInput):
    exit_code = 6


class ExcitationOutOfRange(PotsimError):
    exit_code = 7


class SampleRateError(PotsimError):
    exit_code = 8


class FrequencyTooHigh(SampleRateError):
    exit_code = 9


class OpenCircuitError(PotsimError):
    exit_code = 10


class CalibrationFailed(PotsimError):
    exit_code = 11


class ScanError(PotsimError):
    """A point of an EIS sweep failed; ``frequency`` names the point."""

    exit_code = 12

    def __init__(self, frequency, cause):
        super().__init__(f"EIS point at {frequency:g} Hz failed: {cause}")
        self.frequency = frequency
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", ScanError.exit_code)


class FrameError(PotsimError):
    exit_code = 20


class FrameLengthError(FrameError):
    exit_code = 21


class ChecksumError(FrameError):
    exit_code = 22


class UnknownOpcodeError(FrameError):
    exit_code = 23


class ReservedFieldError(FrameError):
    exit_code = 24


class ParseError(PotsimError):
    exit_code = 30

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.path = path
