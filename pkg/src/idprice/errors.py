"""Exception hierarchy.

Every error raised on purpose by this package derives from ``IdPriceError``.
The ``exit_code`` attribute is what the command-line front end returns.
"""


class IdPriceError(Exception):
    exit_code = 2


class ConfigError(IdPriceError):
    exit_code = 1


class UsageError(ConfigError):
    pass


class DataError(IdPriceError):
    exit_code = 2


class FormatError(DataError):
    pass


class DuplicateError(DataError):
    def __init__(self, key, line=None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate record for zone={key[0]!r} timestamp={key[1]}{where}")


class UnknownZoneError(DataError, LookupError):
    pass


class EmptyOverlapError(DataError):
    pass


class DomainError(DataError, ValueError):
    pass


class UndefinedVariationError(DomainError):
    pass


class ShapeError(IdPriceError, ValueError):
    exit_code = 2


class ScalerError(DomainError):
    pass


class NumericalError(IdPriceError):
    exit_code = 3


class DivergenceError(NumericalError):
    def __init__(self, message, name=None, step=None):
        self.name = name
        self.step = step
        super().__init__(message)


class ProbeError(NumericalError):
    pass


class DensityError(NumericalError):
    pass


class TuningError(NumericalError):
    pass


class QualityError(NumericalError):
    def __init__(self, rate, threshold=0.1):
        self.rate = rate
        self.threshold = threshold
        super().__init__(
            f"{rate:.1%} of kept draws diverged (limit {threshold:.0%}); "
            "reduce the step size target or reparameterize"
        )
