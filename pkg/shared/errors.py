# Exception hierarchy shared by the numerics and the command tools


class LabError(Exception):
    """Base class for every error raised by the lab."""


class DomainError(LabError, ValueError):
    """A numeric argument is outside the domain where the formula is defined."""


class ConfigError(LabError, ValueError):
    """Invalid run configuration or scenario parameters."""


class CFLViolation(LabError):
    """Requested time step exceeds the CFL-limited step."""

    def __init__(self, dt: float, dt_max: float):
        super().__init__(f"dt={dt:.6g} exceeds CFL limit {dt_max:.6g}")
        self.dt = dt
        self.dt_max = dt_max


class BlowupSuspected(LabError):
    """The state left positivity or became non-finite during a step."""

    def __init__(self, t: float, reason: str):
        super().__init__(f"blowup suspected at t={t:.6g}: {reason}")
        self.t = t
        self.reason = reason


class HistoryBoundsError(LabError, ValueError):
    """A query point lies outside the stored space-time box."""


class ArtifactError(LabError):
    """A run directory, manifest or manifest-listed file is missing or inconsistent."""
