"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
error classes onto distinct process exit statuses.
"""


class MixVarError(Exception):
    exit_code = 1


class NonFiniteInput(MixVarError, ValueError):
    exit_code = 10


class DimensionMismatch(MixVarError, ValueError):
    exit_code = 11


class InsufficientSample(MixVarError, ValueError):
    exit_code = 12


class UnitCircleRoot(MixVarError):
    exit_code = 20


class RepeatedEigenvalue(MixVarError):
    exit_code = 21


class EstimationFailure(MixVarError):
    exit_code = 22


class DegenerateConditioning(MixVarError):
    exit_code = 30


class DegenerateWeights(MixVarError):
    exit_code = 31


class GridTooNarrow(MixVarError):
    exit_code = 32


class Unsupported(MixVarError, NotImplementedError):
    exit_code = 33


class ReplicationFailure(MixVarError):
    """Too many bootstrap or Monte Carlo replications failed."""

    exit_code = 40

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InputError(MixVarError, ValueError):
    exit_code = 50


class MissingColumn(InputError):
    exit_code = 51


class NonNumericCell(InputError):
    exit_code = 52


class EmptyFile(InputError):
    exit_code = 53


class ConfigError(InputError):
    exit_code = 54
