"""Exception types shared across the library."""


class UscdephError(Exception):
    """Base class for all library errors."""


class InvalidCutoffError(UscdephError, ValueError):
    """Fock cutoff too small to represent the requested operator."""


class ContractViolationError(UscdephError, ValueError):
    """An operation received input violating its stated contract
    (non-Hermitian matrix, inconsistent gauge/mode combination, ...)."""


class TruncationError(UscdephError, RuntimeError):
    """Eigenvalues did not converge under the cutoff enlargement check."""

    def __init__(self, message, cutoff=None, drift=None):
        super().__init__(message)
        self.cutoff = cutoff
        self.drift = drift


class DegenerateTrackingError(UscdephError, RuntimeError):
    """Adiabatic label tracking hit an unresolvable overlap ambiguity."""


class InstabilityError(UscdephError, RuntimeError):
    """Bogoliubov diagonalization produced a non-positive squared frequency."""

    def __init__(self, message, lam=None, omega_sq=None):
        super().__init__(message)
        self.lam = lam
        self.omega_sq = omega_sq


class TraceDriftError(UscdephError, RuntimeError):
    """Density-matrix trace drifted beyond tolerance during propagation."""


class FitQualityError(UscdephError, RuntimeError):
    """Coherence decay is not exponential within the fit tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(UscdephError, ValueError):
    """Run configuration failed schema validation."""

    def __init__(self, field, reason):
        super().__init__(f"config field '{field}': {reason}")
        self.field = field
        self.reason = reason
