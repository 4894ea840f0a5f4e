"""Exception hierarchy.

Every error carries a stable ``code`` string that the command line front
end reports alongside the message.
"""

from __future__ import annotations


class StateCPError(Exception):
    """Base class for all package errors."""

    code = "E_STATECP"


class KernelConstructionError(StateCPError):
    code = "E_KERNEL"

    def __init__(self, message: str, condition: str | None = None):
        super().__init__(message)
        self.condition = condition


class EmptyWindowError(StateCPError):
    """No observation carries positive weight around ``x``."""

    code = "E_EMPTY_WINDOW"

    def __init__(self, x: float, bandwidth: float, side: str | None = None):
        where = f" on the {side} side" if side else ""
        super().__init__(
            f"empty kernel window{where} at x={x:.6g} with bandwidth {bandwidth:.6g}"
        )
        self.x = x
        self.bandwidth = bandwidth
        self.side = side


class DegenerateVarianceError(StateCPError):
    code = "E_DEGENERATE_VARIANCE"

    def __init__(self, x: float, value: float):
        super().__init__(f"conditional variance {value:.3g} at x={x:.6g} is below the floor")
        self.x = x
        self.value = value


class DataSparsityError(StateCPError):
    code = "E_SPARSE"

    def __init__(self, message: str, gaps: list | None = None):
        super().__init__(message)
        self.gaps = gaps or []


class BandwidthSelectionError(StateCPError):
    code = "E_CV"

    def __init__(self, message: str, coverage: dict | None = None):
        super().__init__(message)
        self.coverage = coverage or {}


class IntervalError(StateCPError):
    code = "E_INTERVAL"


class OverSegmentationError(StateCPError):
    code = "E_OVERSEGMENTED"

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class SimulationError(StateCPError):
    code = "E_EXPLOSION"

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class BootstrapError(StateCPError):
    code = "E_BOOTSTRAP"


class IngestError(StateCPError):
    code = "E_INGEST"

    def __init__(self, message: str, lines: list[int] | None = None):
        super().__init__(message)
        self.lines = lines or []


class ConfigError(StateCPError):
    code = "E_CONFIG"
