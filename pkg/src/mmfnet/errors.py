"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
error classes onto distinct process exit statuses.
"""


class MmfnetError(Exception):
    exit_code = 1


class ConfigError(MmfnetError, ValueError):
    exit_code = 2


class ShapeError(MmfnetError, ValueError):
    exit_code = 3


class GeometryError(MmfnetError, ValueError):
    exit_code = 4


class CapacityError(MmfnetError, ValueError):
    exit_code = 4


class UnsupportedDimensionError(MmfnetError, ValueError):
    exit_code = 5


class GateLookupError(MmfnetError, KeyError):
    exit_code = 5

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UndefinedFidelityError(MmfnetError, ArithmeticError):
    exit_code = 6


class NumericalError(MmfnetError, ArithmeticError):
    exit_code = 6


class StepSizeError(NumericalError):
    pass


class DegenerateProjectorError(MmfnetError, ValueError):
    exit_code = 7


class InvalidPatternError(MmfnetError, ValueError):
    exit_code = 7


class UnheraldablePatternError(MmfnetError, ValueError):
    exit_code = 7


class EmptyDataError(MmfnetError, ValueError):
    exit_code = 8


class IncompleteDataError(MmfnetError, ValueError):
    exit_code = 8


class ArtifactError(MmfnetError):
    exit_code = 9


class ArtifactParseError(ArtifactError, ValueError):
    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class ArtifactTypeError(ArtifactError, TypeError):
    pass


class ArtifactVersionError(ArtifactError):
    """Schema version of a stored artifact is not readable by this release."""


class MissingArtifactError(ArtifactError, FileNotFoundError):
    exit_code = 10

    def __init__(self, path, stage):
        super().__init__(f"missing artifact {path}; run the '{stage}' stage first")
        self.path = path
        self.stage = stage
