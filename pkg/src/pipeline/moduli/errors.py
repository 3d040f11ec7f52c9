"""
Exceptions raised by the moduli pipeline.
"""


class ModuliError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(ModuliError, ValueError):
    """Bad discriminant, level, character, expression or input file."""


class PrecisionExhaustedError(ModuliError):
    """The adaptive precision loop reached the configured bits cap."""

    def __init__(self, message: str, bits: int = 0):
        super().__init__(message)
        self.bits = bits


class RecognitionError(ModuliError):
    """A certified ball holds no admissible exact value."""


class CharacterSearchError(ModuliError):
    """No integer prime to the discriminant was found within the search budget."""


class UnsupportedExpressionError(ModuliError):
    """The modular function expression is outside the supported class."""


class UnsupportedRegimeError(ModuliError):
    """The requested coefficient is not determined by the implemented theory."""


class PoleOrderError(ModuliError):
    """The cusp-form multiplier is too small for the pole order of the series."""

    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required


class MissingTraceError(ModuliError):
    """A sieve needed a trace index that is absent from the table."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index
