"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """Bad platform, timing, or workload parameters."""


class WorkloadError(ValueError):
    """Malformed task graph, mapping, or workload file."""


class DecodeError(ValueError):
    """Router configuration word uses a reserved encoding."""


class ConfigConflictError(RuntimeError):
    """Two input ports driven onto one output: a controller bug."""


class SimulationInvariantError(RuntimeError):
    """A protocol or timing invariant was violated during simulation."""
