"""Custom exceptions and error handling for evtrack.

This module provides custom exception classes with contextual error messages
and suggestions for resolution. Input errors map to CLI exit code 1,
configuration errors to exit code 2.

Fit errors (``FitError`` and subclasses) are internal downgrade paths of the
tracker: they are raised by the plane-fitting unit and caught per event.
"""

EXIT_INPUT_ERROR = 1
EXIT_CONFIG_ERROR = 2


class EvtrackError(Exception):
    """Base exception for evtrack errors.

    Attributes:
        message: Human-readable error message
        suggestion: Optional suggestion for resolving the error
        context: Optional additional context about the error
    """

    exit_code = EXIT_INPUT_ERROR

    def __init__(self, message: str, suggestion: str | None = None, context: str | None = None):
        self.message = message
        self.suggestion = suggestion
        self.context = context
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        """Format the complete error message."""
        parts = [f"Error: {self.message}"]
        if self.context:
            parts.append(f"Context: {self.context}")
        if self.suggestion:
            parts.append(f"Suggestion: {self.suggestion}")
        return "\n".join(parts)


# --- Input errors -------------------------------------------------------------


class RecordingNotFoundError(EvtrackError):
    """Raised when a required recording file is missing."""

    def __init__(self, file_path: str, file_type: str = "file"):
        super().__init__(
            message=f"{file_type.capitalize()} not found: {file_path}",
            suggestion="A recording directory needs events.txt and images.txt "
            "(run 'evtrack synth DIR' to generate one).",
            context=f"Looking for {file_type} at: {file_path}",
        )
        self.file_path = file_path


class ParseError(EvtrackError):
    """Raised when a line of a recording file cannot be parsed."""

    def __init__(self, file_path: str, line_no: int, detail: str):
        super().__init__(
            message=f"Cannot parse {file_path} line {line_no}: {detail}",
            suggestion="Event lines are '<t_seconds> <x> <y> <p>', frame index lines "
            "are '<t_seconds> <image_path>'.",
            context=f"Line {line_no}",
        )
        self.file_path = file_path
        self.line_no = line_no
        self.detail = detail


class OrderError(EvtrackError):
    """Raised when timestamps regress inside a stream."""

    def __init__(self, file_path: str, line_no: int, t_prev: int, t: int):
        super().__init__(
            message=f"Timestamp regression in {file_path} line {line_no}: {t} us < {t_prev} us",
            suggestion="Streams must be sorted by timestamp.",
            context=f"Line {line_no}",
        )
        self.file_path = file_path
        self.line_no = line_no
        self.t_prev = t_prev
        self.t = t


class UnsupportedImageFormatError(EvtrackError):
    """Raised when a keyframe image cannot be used."""

    def __init__(self, file_path: str, detail: str):
        super().__init__(
            message=f"Unsupported keyframe image: {file_path}",
            suggestion="Keyframes must be 8-bit grayscale PGM (P5) or PNG with the sensor's "
            "dimensions. PNG decoding is controlled by io.png.",
            context=detail,
        )
        self.file_path = file_path
        self.detail = detail


class OutOfBoundsError(EvtrackError):
    """Raised when an event lies outside the sensor geometry."""

    def __init__(self, x: int, y: int, width: int, height: int):
        super().__init__(
            message=f"Pixel ({x}, {y}) outside {width}x{height} sensor",
            suggestion="Check sensor.width / sensor.height against the recording.",
        )
        self.x = x
        self.y = y


class BorderViolationError(EvtrackError):
    """Raised when a local window would leave the sensor."""

    def __init__(self, center: tuple[int, int], radius: int):
        super().__init__(
            message=f"Window of radius {radius} around {center} leaves the sensor",
        )
        self.center = center
        self.radius = radius


class ImageTooSmallError(EvtrackError):
    """Raised when an image is too small for 3x3 gradients."""

    def __init__(self, shape: tuple[int, ...]):
        super().__init__(
            message=f"Image of shape {shape} is smaller than 3x3",
        )
        self.shape = shape


# --- Configuration errors -----------------------------------------------------


class ConfigurationError(EvtrackError):
    """Raised when there's a configuration or argument error."""

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, message: str, parameter: str | None = None):
        suggestion = "Check your --config file and --set overrides."
        if parameter:
            suggestion = f"Check the value of '{parameter}'."

        super().__init__(
            message=message,
            suggestion=suggestion,
            context=f"Parameter: {parameter}" if parameter else None,
        )
        self.parameter = parameter


# --- Fit errors ---------------------------------------------------------------


class FitError(EvtrackError):
    """Base class for plane-fit and velocity failures."""


class InsufficientSupportError(FitError):
    """Raised when too few recent neighbours exist for a plane fit."""

    def __init__(self, count: int, minimum: int):
        super().__init__(message=f"Only {count} support points (need {minimum})")
        self.count = count
        self.minimum = minimum


class DegenerateTripleError(FitError):
    """Raised when three points are (nearly) collinear."""

    def __init__(self, norm: float):
        super().__init__(message=f"Collinear triple (|v| = {norm:.3g})")
        self.norm = norm


class NoConsensusError(FitError):
    """Raised when no Hough cell reaches the vote threshold."""

    def __init__(self, iterations: int, best_votes: int):
        super().__init__(
            message=f"No plane reached the vote threshold after {iterations} triples "
            f"(best cell: {best_votes} votes)"
        )
        self.iterations = iterations
        self.best_votes = best_votes


class StationarySurfaceError(FitError):
    """Raised when a plane encodes no spatial motion."""

    def __init__(self, spatial_norm: float):
        super().__init__(message=f"Plane is parallel to the image plane (a^2+b^2 = {spatial_norm:.3g})")
        self.spatial_norm = spatial_norm


def format_error_for_user(error: Exception) -> str:
    """Format any exception for user-friendly display.

    Args:
        error: The exception to format

    Returns:
        User-friendly error message string
    """
    if isinstance(error, EvtrackError):
        return str(error)

    error_type = type(error).__name__
    error_msg = str(error)

    if isinstance(error, FileNotFoundError):
        return (
            f"Error: File not found - {error_msg}\nSuggestion: Check that the file path is correct."
        )

    if isinstance(error, PermissionError):
        return f"Error: Permission denied - {error_msg}\nSuggestion: Check file permissions."

    if isinstance(error, OSError):
        return f"Error: I/O failure - {error_msg}"

    # Generic fallback
    return f"Error ({error_type}): {error_msg}"


def exit_code_for(error: Exception) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(error, EvtrackError):
        return error.exit_code
    return EXIT_INPUT_ERROR
