"""Exception types shared across the package."""


class FhnBifError(Exception):
    """Base class for all package errors."""


class RestPointError(FhnBifError):
    """Rest-point residual tolerance not reached within the iteration cap."""


class NoPitchforkError(FhnBifError):
    """The zero-eigenvalue condition has no real coupling solution."""


class DivergenceError(FhnBifError):
    """Integration left the blow-up guard box."""


class HistoryWindowError(FhnBifError):
    """A trajectory was sampled outside its stored window."""


class MixedModeError(FhnBifError):
    """Eigenvector phase difference falls in the ambiguous band."""


class NonConvergenceError(FhnBifError):
    """Newton iteration failed to reach the requested tolerance."""


class PeriodCollapseError(NonConvergenceError):
    """Periodic solve shrank to an equilibrium (period below threshold)."""


class FloquetAccuracyError(FhnBifError):
    """Trivial Floquet multiplier too far from 1: the mesh is under-resolved."""


class ConfigError(FhnBifError):
    """Invalid run configuration."""


class TooShortError(FhnBifError):
    """Trajectory holds too few section returns to judge periodicity."""
