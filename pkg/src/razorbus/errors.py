"""Exception types raised by the simulator."""


class RazorBusError(Exception):
    """Base class for all simulator errors."""


class NonOperationalVoltage(RazorBusError, ValueError):
    """Effective supply at or below the device threshold voltage."""


class GeometryError(RazorBusError, ValueError):
    """Non-physical bus geometry or RC values."""


class CalibrationError(RazorBusError):
    """Repeater sizing cannot meet the delay budget."""


class TableError(RazorBusError):
    """Lookup-table contract violation (off-grid voltage, hash mismatch, bad file)."""


class TraceError(RazorBusError, ValueError):
    """Malformed trace file or generator request."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(RazorBusError, ValueError):
    """Invalid experiment configuration; ``problems`` lists every offending key."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


class FatalTimingError(RazorBusError):
    """A bus delay exceeded the shadow-latch deadline during a closed-loop run."""

    def __init__(self, cycle, vdd, max_class, delay):
        self.cycle = cycle
        self.vdd = vdd
        self.max_class = max_class
        self.delay = delay
        super().__init__(
            f"fatal timing miss at clock cycle {cycle}: vdd={vdd:.3f} V, "
            f"worst coupling class k={max_class}, delay={delay * 1e12:.1f} ps"
        )
