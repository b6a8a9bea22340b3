"""
Exception hierarchy shared by the library, the CLI and the HTTP layer.

Configuration-type failures map to CLI exit code 1, numerical failures to 2.
"""


class WakeSarError(Exception):
    """Root of every error raised by wakesar."""

    exit_code = 2


class ConfigurationError(WakeSarError, ValueError):
    """Invalid parameters or inconsistent inputs."""

    exit_code = 1


class ConfigValidationError(ConfigurationError):
    """Experiment configuration rejected; carries field-level messages."""

    def __init__(self, errors: list[str], warnings: list[str] | None = None):
        self.errors = list(errors)
        self.warnings = list(warnings or [])
        super().__init__("; ".join(self.errors) or "invalid configuration")


class DimensionMismatchError(ConfigurationError):
    """Two grids that must share a shape do not."""


class DomainError(WakeSarError, ValueError):
    """Argument outside the mathematical domain of a function (e.g. k <= 0)."""

    exit_code = 1


class PyramidStructureError(WakeSarError, ValueError):
    """Subband pyramid with inconsistent plane shapes or level count."""

    exit_code = 1


class RasterFormatError(WakeSarError, ValueError):
    """Raster file with a bad header or truncated payload."""

    exit_code = 1


class NumericalError(WakeSarError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy result."""

    exit_code = 2


class QuadratureError(NumericalError):
    """Oscillatory wake quadrature did not converge at a point."""

    def __init__(self, x: float, y: float, z: float, detail: str = ""):
        self.x, self.y, self.z = float(x), float(y), float(z)
        message = f"wake quadrature did not converge at (x={self.x:.3f}, y={self.y:.3f}, z={self.z:.3f})"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


def exit_code_for(exc: BaseException) -> int:
    """CLI exit status for an exception (0 is reserved for success)."""
    if isinstance(exc, WakeSarError):
        return exc.exit_code
    if isinstance(exc, (ValueError, FileNotFoundError)):
        return 1
    return 2
