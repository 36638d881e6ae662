"""Exception hierarchy for the qftir package.

Three broad families map onto CLI exit codes: configuration problems,
data/processing problems, and fit non-convergence.
"""


class QftirError(Exception):
    """Base class for all package errors."""


# --- configuration ----------------------------------------------------------

class ConfigError(QftirError):
    """Invalid or incomplete configuration."""


# --- grids and spectra ------------------------------------------------------

class DataError(QftirError):
    """Base class for data/processing errors."""


class GridMismatch(DataError):
    pass


class NonOverlappingGrids(DataError):
    pass


class ExtrapolationRequired(DataError):
    pass


class NonUniformGrid(DataError):
    pass


class EmptyInput(DataError):
    pass


class UnknownSpecies(DataError):
    pass


class NegativeConcentration(DataError):
    pass


class GridTooCoarse(DataError):
    pass


class NyquistViolation(DataError):
    pass


# --- interferometry ---------------------------------------------------------

class WrongAxis(DataError):
    pass


class InvalidBand(DataError):
    pass


class NonFiniteSamples(DataError):
    pass


class InsufficientFringes(DataError):
    pass


class NonMonotonicPhase(DataError):
    pass


class TooManyFailedScans(DataError):
    pass


# --- retrieval --------------------------------------------------------------

class ReferenceNonPositive(DataError):
    pass


class InsufficientPoints(DataError):
    pass


class IllConditionedFit(DataError):
    pass


class BandNotCovered(DataError):
    pass


class SingularDesign(DataError):
    pass


class NonMonotonicTimestamps(DataError):
    pass


# --- calibration ------------------------------------------------------------

class NoConvergence(QftirError):
    """Iteration limit reached without meeting any convergence tolerance."""


class DegenerateInitialGuess(QftirError):
    """Model gradient is zero at the initial guess; the fit cannot start."""


# --- file ingestion ---------------------------------------------------------

class ParseError(DataError):
    """Malformed input file; message carries the location."""


class MalformedHeader(ParseError):
    pass


class PointCountMismatch(ParseError):
    pass


class NegativeValue(ParseError):
    pass


class MultiRecordUnsupported(ParseError):
    pass


class SchemaVersionMismatch(ParseError):
    pass


class MissingField(ParseError):
    pass
