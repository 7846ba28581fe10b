"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration and parameter problems
exit with 2, numerical failures (rank deficiency, divergence) with 1.
"""


class KronfitError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(KronfitError, ValueError):
    """An embedder or solver parameter is outside its valid range."""


class ConfigError(KronfitError, ValueError):
    """An experiment configuration is inconsistent or unparseable."""


class OutOfDomainError(KronfitError, ValueError):
    """A query coordinate falls outside the virtual grid; no extrapolation."""


class DegenerateSpacingError(KronfitError, ValueError):
    """The 2x2 interpolation system is singular for the given grid spacing."""


class RankDeficiencyError(KronfitError, RuntimeError):
    """A per-axis Gram matrix is numerically singular at ridge 0."""

    def __init__(self, axis: int, detail: str = ""):
        self.axis = axis
        msg = f"encoding along axis {axis} is rank deficient; closed-form solve aborted"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DivergenceError(KronfitError, RuntimeError):
    """Gradient descent produced a non-finite or increasing loss."""

    def __init__(self, epoch: int, detail: str = ""):
        self.epoch = epoch
        msg = f"training diverged at epoch {epoch}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
