"""Exception hierarchy.

Everything raised on purpose derives from :class:`AnisovacError`.  The two
intermediate classes decide the CLI exit code: :class:`ConfigError` maps to 1,
:class:`NumericalError` to 2.
"""


class AnisovacError(Exception):
    """Base class for all library errors."""


class ConfigError(AnisovacError, ValueError):
    """Invalid user input (bad parameters, malformed files or configs)."""


class NumericalError(AnisovacError, ArithmeticError):
    """A computation could not be carried out or produced unphysical values."""


# tensor-core
class NotHermitian(NumericalError):
    pass


class NotPositive(NumericalError):
    pass


# vacuum-models
class NonPositiveFrequency(ConfigError):
    pass


class NonPositiveWavenumber(ConfigError):
    pass


class NonPositiveDistance(ConfigError):
    pass


class InvalidGeometry(ConfigError):
    pass


class OutOfRange(NumericalError):
    pass


class ValidationFailed(NumericalError):
    pass


# coefficients
class NonPositiveInput(ConfigError):
    pass


class CauchySchwarzViolation(NumericalError):
    pass


# dynamics
class InvalidInitialState(ConfigError):
    pass


class StepTooLarge(ConfigError):
    pass


class PositivityViolation(NumericalError):
    pass


# two-photon
class PoleProximity(NumericalError):
    pass


class NonPositiveEmissionFrequency(NumericalError):
    pass


class BracketContainsPole(ConfigError):
    pass


# cli
class ConfigInvalid(ConfigError):
    pass


class UnsupportedAxis(ConfigError):
    pass
