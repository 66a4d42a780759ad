"""Exception hierarchy.

Numerical failures derive from ``NumericalError`` (CLI exit code 3); bad
input and configuration derive from ``ConfigError`` (exit code 2).
"""


class AffSphereError(Exception):
    pass


class ConfigError(AffSphereError, ValueError):
    pass


class NumericalError(AffSphereError, ArithmeticError):
    pass


class ParamOutOfDomain(ConfigError):
    pass


class SingularMatrix(ConfigError):
    pass


class SingularParameterization(NumericalError):
    pass


class InflectionInDomain(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class SingularRegion(NumericalError):
    pass


class NotAsymptotic(NumericalError):
    pass


class DegenerateSeed(NumericalError):
    pass


class ContinuationStall(NumericalError):
    pass


class NotOnE(NumericalError):
    pass


class DegenerateConic(NumericalError):
    pass


class CoincidentTangentLines(NumericalError):
    pass


class InflectionAtSingularity(NumericalError):
    pass
