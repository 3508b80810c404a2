"""Error types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands live in incompatible Hilbert spaces."""


class DegenerateStateError(ValueError):
    """A state with (near-)zero norm was used where a ray is required."""


class KernelError(ValueError):
    """Invalid memory-kernel data (non-positive A or kappa, bad component string)."""


class QuadratureUnsupportedError(KernelError):
    """Kernel cannot drive a real-noise unravelling (beta would not be real)."""


class UnsupportedOrderError(ValueError):
    """Requested hierarchy truncation order is not implemented."""


class CapacityError(ValueError):
    """A composite space would exceed the configured dimension cap."""


class TruncationError(RuntimeError):
    """Fock-space truncation leaked population above tolerance."""

    def __init__(self, msg: str, suggested_nmax: int | None = None):
        super().__init__(msg)
        self.suggested_nmax = suggested_nmax


class TrajectoryFailureError(RuntimeError):
    """A stochastic trajectory lost its state (norm underflow)."""

    def __init__(self, msg: str, t: float | None = None):
        super().__init__(msg)
        self.t = t


class EnsembleFailureError(RuntimeError):
    """Too many trajectories of an ensemble failed."""


class GridMismatchError(ValueError):
    """Two time series do not share a time grid."""


class ConfigError(ValueError):
    """Malformed run configuration (unknown key, bad value, bad types)."""
