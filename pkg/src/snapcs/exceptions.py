"""Exception hierarchy shared by all subpackages."""


class SnapCSError(Exception):
    """Base class for every error raised by snapcs."""


class InvalidShapeError(SnapCSError, ValueError):
    pass


class InvalidParameterError(SnapCSError, ValueError):
    pass


class UnsupportedRankError(SnapCSError, ValueError):
    pass


class InvalidCodecError(SnapCSError, ValueError):
    pass


class TooLargeCodebookError(SnapCSError, ValueError):
    pass


class DecodeError(SnapCSError, ValueError):
    pass


class SearchError(SnapCSError, RuntimeError):
    pass


class IngestError(SnapCSError, ValueError):
    pass


class FormatError(SnapCSError, ValueError):
    pass


class OutputError(SnapCSError, OSError):
    """Writing an artifact failed; the message names the path."""
