"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`BallotRatesError`, which itself is a ``ValueError`` so callers that
only care about bad input can catch the builtin.
"""


class BallotRatesError(ValueError):
    """Base class for all library errors."""


class InvalidParameterError(BallotRatesError):
    """An argument is outside its admissible range."""


class CensoredPositionError(BallotRatesError):
    """A rule needs positions that a partial ballot does not reveal."""


class OrientationError(BallotRatesError):
    """The claimed better candidate does not have a strictly larger expected score."""


class OutcomeMismatchError(OrientationError):
    """A cross-tier pair is tied or reversed in expected score.

    ``pair`` holds the offending (0-based) candidate ids, better tier first.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class InseparableError(BallotRatesError):
    """A zero rate was given where a positive one is required."""


class InsufficientDepthError(BallotRatesError):
    """Ballots are too short for the requested truncation depth."""


class AmbiguousTiersError(BallotRatesError):
    """Expected scores tie across a tier boundary, so no canonical tiering exists."""


class BallotParseError(BallotRatesError):
    """Malformed ballot text; ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
