"""Exception types raised across the package."""


class OamNoonError(Exception):
    """Base class for all package errors."""


class ConvergenceError(OamNoonError):
    """Radial quadrature did not settle when the node count was doubled."""

    def __init__(self, coarse, fine, rel_tol):
        self.coarse = coarse
        self.fine = fine
        self.rel_tol = rel_tol
        super().__init__(
            f"radial quadrature not converged: {coarse!r} (n nodes) vs "
            f"{fine!r} (2n nodes), rel_tol={rel_tol:g}"
        )


class DegenerateStateError(OamNoonError):
    """Operation needs a nonzero state (or a nonempty table)."""


class ContractError(OamNoonError):
    """A documented precondition on a state was violated."""


class DegenerateProjectorError(OamNoonError):
    """Projector modes are repeated where distinct modes are required."""


class ConfigError(OamNoonError):
    """Invalid or unparseable run configuration."""
