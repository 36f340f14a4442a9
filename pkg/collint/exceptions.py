"""Custom exceptions and CLI error reporting."""
from typing import Any, Dict, List, Optional
import logging

from pydantic import ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BRANCH = 2


class CollintError(Exception):
    """Base exception for collint errors."""

    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_ERROR,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class InvalidMatrixError(CollintError):
    """Matrix shape, dimension or finiteness error."""

    def __init__(self, reason: str, shape: Optional[tuple] = None):
        details = {"reason": reason}
        if shape is not None:
            details["shape"] = list(shape)
        super().__init__(message=f"Invalid matrix: {reason}", details=details)


class BranchFailure(CollintError):
    """Principal logarithm undefined: an eigenvalue lies on (-inf, 0]."""

    def __init__(
        self,
        eigenvalue: complex,
        dt: Optional[float] = None,
        message: Optional[str] = None
    ):
        self.eigenvalue = complex(eigenvalue)
        self.dt = dt
        details = {
            "eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag],
        }
        if dt is not None:
            details["dt"] = dt
        super().__init__(
            message=message or f"Eigenvalue {self.eigenvalue:.6g} lies on the principal branch cut",
            exit_code=EXIT_BRANCH,
            details=details
        )

    def located_at(self, dt: float) -> "BranchFailure":
        """Return a copy tagged with the located divergence time step."""
        return type(self)(self.eigenvalue, dt=dt)


class SingularMatrixError(BranchFailure):
    """Matrix is not invertible (zero eigenvalue)."""

    def __init__(self, eigenvalue: complex = 0.0, dt: Optional[float] = None):
        super().__init__(
            eigenvalue,
            dt=dt,
            message=f"Matrix is singular (eigenvalue {complex(eigenvalue):.3g})"
        )


class NotCPError(CollintError):
    """Map is not completely positive."""

    def __init__(self, min_eigenvalue: float, tol: float):
        super().__init__(
            message=f"Choi matrix has eigenvalue {min_eigenvalue:.6g} below -{tol:.1e}",
            details={"min_eigenvalue": min_eigenvalue, "tol": tol}
        )


class NotTraceAnnihilatingError(CollintError):
    """Generator does not annihilate the trace."""

    def __init__(self, residual: float):
        super().__init__(
            message=f"Generator is not trace annihilating (residual {residual:.3e})",
            details={"residual": residual}
        )


class InsufficientOrderError(CollintError):
    """Taylor data too short for the requested order."""

    def __init__(self, available: int, required: int):
        super().__init__(
            message=f"Need Taylor coefficients up to M_{required}, only {available} available",
            details={"available": available, "required": required}
        )


class NoIsolatedFixedPointError(CollintError):
    """Affine generator has a singular linear part."""

    def __init__(self, smallest_singular_value: float):
        super().__init__(
            message="Generator has no isolated fixed point",
            details={"smallest_singular_value": smallest_singular_value}
        )


class BranchMatchingFailure(CollintError):
    """Kraus operators could not be tracked across the time-step grid."""

    def __init__(self, dt: float, overlap: float, reason: str = "ambiguous overlap"):
        super().__init__(
            message=f"Kraus branch matching failed at dt={dt:.6g}: {reason}",
            details={"dt": dt, "overlap": overlap, "reason": reason}
        )


class ConfigParseError(CollintError):
    """Scenario config is not well-formed JSON."""

    def __init__(self, path: str, line: int, column: int, reason: str):
        super().__init__(
            message=f"Cannot parse {path}: {reason} (line {line}, column {column})",
            details={"path": path, "line": line, "column": column, "reason": reason}
        )


class ConfigValidationError(CollintError):
    """Scenario config violates a field invariant."""

    def __init__(self, errors: List[Dict[str, str]]):
        first = errors[0] if errors else {"field": "?", "message": "invalid config"}
        super().__init__(
            message=f"Invalid config field '{first['field']}': {first['message']}",
            details={"errors": errors, "total_errors": len(errors)}
        )

    @classmethod
    def from_pydantic(cls, exc: ValidationError) -> "ConfigValidationError":
        """Build from a pydantic error with user-friendly field messages."""
        errors = []
        for error in exc.errors():
            field = " -> ".join(str(loc) for loc in error["loc"]) or "config"
            error_type = error["type"]
            message = error["msg"]

            if error_type == "missing":
                user_message = f"Required field '{field}' is missing"
            elif error_type == "value_error":
                user_message = message.removeprefix("Value error, ")
            else:
                user_message = message

            errors.append({
                "field": field,
                "message": user_message,
                "type": error_type
            })
        return cls(errors)


class InvalidArgumentError(CollintError):
    """Argument outside its documented domain."""

    def __init__(self, name: str, value: Any, reason: str):
        super().__init__(
            message=f"Invalid {name}={value!r}: {reason}",
            details={"argument": name, "value": repr(value), "reason": reason}
        )


def report_error(exc: CollintError) -> int:
    """Log a collint error and return the process exit code."""
    logger.error(
        f"{exc.__class__.__name__}: {exc.message} - "
        f"Details: {exc.details}"
    )
    return exc.exit_code
