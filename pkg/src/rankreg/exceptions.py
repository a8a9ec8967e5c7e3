"""Exception hierarchy shared by all rankreg modules."""


class RankRegError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(RankRegError, ValueError):
    pass


class ConfigurationError(RankRegError, ValueError):
    pass


class NoPositivesError(InvalidArgumentError):
    """The ranking regularizer was asked to score a batch without positives."""


class DegenerateLabelsError(InvalidArgumentError):
    """A rank-order metric needs at least one positive and one negative."""


class NumericError(RankRegError, FloatingPointError):
    pass


class ParseError(RankRegError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
