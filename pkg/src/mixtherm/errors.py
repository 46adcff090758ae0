"""Exception hierarchy shared by all mixtherm modules."""


class MixthermError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(MixthermError):
    """Invalid run configuration; ``path`` is a JSON-pointer to the offending node."""

    def __init__(self, message, path=""):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path or "/"
        self.detail = message


class ValidationError(MixthermError, ValueError):
    """Domain object constructed with values violating its invariants."""


class EmptyMixture(ValidationError):
    pass


class NonPositiveDensity(ValidationError):
    pass


class NonPositiveTemperature(ValidationError):
    pass


class NonPositiveTau(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class OutOfTableRange(ValidationError):
    """A tabulated function was evaluated outside its sampled range."""


class NumericFailure(MixthermError, ArithmeticError):
    """Base for numerical failures (exit code 3 in the CLI)."""


class DomainError(NumericFailure):
    pass


class QuadratureFailure(NumericFailure):
    pass


class ConvergenceFailure(NumericFailure):
    pass


class BoseSaturation(NumericFailure):
    """Bose density exceeds the supremum of the ideal kernel (condensate onset)."""

    def __init__(self, message, species=None, supremum=None):
        super().__init__(message)
        self.species = species
        self.supremum = supremum


class TooLarge(MixthermError):
    pass


class MissingCorrelation(MixthermError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class AnchorNotClassical(NumericFailure):
    pass


class StiffIntegration(NumericFailure):
    pass


class PoleHit(NumericFailure, ZeroDivisionError):
    pass


class SingularSystem(NumericFailure):
    pass


class UnsupportedOrder(MixthermError, ValueError):
    pass


class GridMismatch(MixthermError, ValueError):
    pass


class ExperimentalRefused(MixthermError):
    """Experimental branch requested without explicit opt-in."""
