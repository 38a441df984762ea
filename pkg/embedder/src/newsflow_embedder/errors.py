"""Error taxonomy mirroring the pipeline's exit-code convention."""


class EmbedderError(Exception):
    exit_code = 1


class ConfigError(EmbedderError):
    exit_code = 2


class IOFailure(EmbedderError):
    exit_code = 3


class FormatError(EmbedderError):
    exit_code = 4


class ModelError(EmbedderError):
    """Encoder backend could not be loaded or misbehaved."""

    exit_code = 5
