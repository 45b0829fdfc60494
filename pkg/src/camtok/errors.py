"""Exception and warning types shared across the toolkit."""


class CamtokError(Exception):
    """Base class for all camtok errors."""


class ParseError(CamtokError):
    """Malformed text input (trajectory files, manifests, binary headers).

    ``line`` carries the 1-based line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(CamtokError):
    """Structurally well-formed input that violates a domain contract."""


class InvalidInputError(ValidationError):
    """Operation argument outside its documented domain."""


class AlignmentError(InvalidInputError):
    """Trajectory alignment impossible (count mismatch, degenerate geometry)."""


class BehindCameraError(CamtokError):
    """Point at or behind the camera plane; the caller is expected to cull."""


class EmptySourceWarning(UserWarning):
    """No usable points: all-invalid depth or an empty cloud was rendered."""


class MissingScoreWarning(UserWarning):
    """Aesthetic score absent for a clip; that gate was skipped."""
