"""Exception hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI maps it to.
"""

from __future__ import annotations

from typing import Any


class IsacBeamError(Exception):
    """Base class for all isacbeam failures."""

    exit_code: int = 1


class InvalidInputError(IsacBeamError, ValueError):
    """Malformed arguments: bad shapes, non-Hermitian or non-PSD matrices, bad fields."""

    exit_code = 2


class ConfigError(IsacBeamError):
    """Experiment configuration violates the schema.

    Args:
        message: Human readable description.
        key_path: Dotted path of the offending key, e.g. ``scenario.prior.probs``.
    """

    exit_code = 2

    def __init__(self, message: str, key_path: str | None = None):
        self.key_path = key_path
        text = f"{key_path}: {message}" if key_path else message
        super().__init__(text)


class NumericalError(IsacBeamError):
    """A numerical routine failed to converge or produced an inconsistent result."""

    exit_code = 4

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class CertificateError(NumericalError):
    """Rank-one reconstruction or its re-feasibility checks failed.

    The attached ``report`` is the reconstruction report that failed; callers
    typically retry the inner solve with tighter tolerances.
    """

    def __init__(self, message: str, report: Any = None):
        self.report = report
        super().__init__(message)


class InfeasibleScenarioError(IsacBeamError):
    """The sensing threshold cannot be met for the scenario at hand.

    Args:
        message: Human readable description.
        probe: Feasibility probe result, when one was computed.
        points: Evaluated search points, when a search was run.
    """

    exit_code = 3

    def __init__(self, message: str, probe: Any = None, points: list | None = None):
        self.probe = probe
        self.points = list(points or [])
        super().__init__(message)
