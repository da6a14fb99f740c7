"""
CPTrap - Error Hierarchy

Every failure the toolkit reports on purpose derives from CPTrapError and
carries the process exit code the CLI maps it to:

- 2: SchemaError / UsageError (malformed config, bad invocation)
- 3: PhysicsDomainError (values outside their physical domain)
- 4: RegimeError (operation called outside the dynamical regime it assumes)
- 5: NumericalError (quadrature, eigen-solver or consistency failures)
"""

from typing import Any, Dict, Optional


class CPTrapError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class SchemaError(CPTrapError):
    """Configuration document does not match the schema."""

    exit_code = 2

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}", {"path": path})
        self.path = path


class UsageError(CPTrapError):
    """Operation invoked with arguments it cannot accept."""

    exit_code = 2


class PhysicsDomainError(CPTrapError):
    exit_code = 3


class UndefinedRatioError(PhysicsDomainError):
    """Re(g|g)^- vanishes, i.e. the formfactor misses the resonant surface."""


class AdmissibilityError(PhysicsDomainError):
    """Family parameter outside the admissible interval."""


class RegimeError(CPTrapError):
    exit_code = 4


class NumericalError(CPTrapError):
    exit_code = 5


class QuadratureError(NumericalError):
    pass


class ConsistencyError(NumericalError):
    """A computed object violates a property the theory guarantees."""


class EigenSolverError(NumericalError):
    pass
