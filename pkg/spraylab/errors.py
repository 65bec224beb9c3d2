"""Exception hierarchy shared by the library and the command line.

Every error carries the exit code the CLI maps it to: 2 for anything the user
can fix in the config, 3 for numerical failures.
"""

from __future__ import annotations

from typing import Any

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class SprayLabError(Exception):
    """Base class for all spraylab errors."""

    exit_code = EXIT_NUMERICAL


# ── Validation (exit 2) ──────────────────────────────────────────────


class ConfigError(SprayLabError):
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, field_path: str = ""):
        self.field_path = field_path
        prefix = f"{field_path}: " if field_path else ""
        super().__init__(f"{prefix}{message}")


class DimensionError(SprayLabError, ValueError):
    exit_code = EXIT_VALIDATION


class InvalidAlgebraError(SprayLabError, ValueError):
    exit_code = EXIT_VALIDATION


class UnknownCatalogEntryError(SprayLabError, KeyError):
    exit_code = EXIT_VALIDATION

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the message readable.
        return str(self.args[0]) if self.args else ""


class UnsupportedVariantError(SprayLabError):
    exit_code = EXIT_VALIDATION


class WordLimitError(SprayLabError):
    exit_code = EXIT_VALIDATION


class SpanError(SprayLabError, ValueError):
    exit_code = EXIT_VALIDATION


# ── Numerical (exit 3) ───────────────────────────────────────────────


class DomainError(SprayLabError):
    """Evaluation requested at a point where the spray is not defined."""


class RegularityError(SprayLabError):
    """A metric or fundamental tensor lost positive definiteness."""


class DegenerateFlagError(SprayLabError):
    pass


class IntegrationError(SprayLabError):
    """Integrator gave up; ``partial`` holds whatever was computed."""

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial


class DomainExitError(IntegrationError):
    """A flow left the slit domain before reaching its end time."""
