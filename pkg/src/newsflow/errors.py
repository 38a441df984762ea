"""Error taxonomy shared across the pipeline.

Each category maps to a distinct process exit code so shell callers can
branch on the kind of failure without parsing messages.
"""


class NewsflowError(Exception):
    """Base class; subclasses carry the CLI exit code."""

    exit_code = 1


class ConfigError(NewsflowError):
    exit_code = 2


class IOFailure(NewsflowError):
    exit_code = 3


class FormatError(NewsflowError):
    exit_code = 4


class NumericError(NewsflowError):
    exit_code = 5
