"""Exception hierarchy.

Data/IO problems derive from ``DataError`` and configuration problems from
``ConfigError``; the CLI maps them to exit codes 2 and 3 respectively.
"""


class CellsnakeError(Exception):
    pass


class DataError(CellsnakeError, ValueError):
    pass


class ConfigError(CellsnakeError, ValueError):
    pass


class ImageFormatError(DataError):
    """File is not a readable 8-bit PGM/PNG (bad magic, truncated, 16-bit...)."""


class NotGrayscaleError(DataError):
    pass


class DegenerateHistogramError(DataError):
    pass


class DegenerateContourError(DataError):
    pass


class FrameMismatchError(DataError):
    pass


class InstanceTooLargeError(CellsnakeError, ValueError):
    pass


class SceneSpecError(ConfigError):
    pass
