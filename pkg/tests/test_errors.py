"""Tests for error formatting and exit codes."""

from evtrack.errors import (
    EXIT_CONFIG_ERROR,
    EXIT_INPUT_ERROR,
    ConfigurationError,
    EvtrackError,
    NoConsensusError,
    OrderError,
    ParseError,
    RecordingNotFoundError,
    exit_code_for,
    format_error_for_user,
)


class TestEvtrackError:
    """Tests for the base error message layout."""

    def test_message_only(self):
        assert str(EvtrackError("broken")) == "Error: broken"

    def test_context_and_suggestion(self):
        error = EvtrackError("broken", suggestion="fix it", context="here")
        assert str(error) == "Error: broken\nContext: here\nSuggestion: fix it"


class TestInputErrors:
    """Tests for recording input errors."""

    def test_recording_not_found(self):
        error = RecordingNotFoundError("/data/rec/events.txt", "event file")
        assert "Event file not found: /data/rec/events.txt" in str(error)
        assert "evtrack synth" in error.suggestion
        assert exit_code_for(error) == EXIT_INPUT_ERROR

    def test_parse_error_names_the_line(self):
        error = ParseError("events.txt", 17, "expected 4 fields, got 3")
        assert "17" in str(error)
        assert error.line_no == 17

    def test_order_error_carries_timestamps(self):
        error = OrderError("events.txt", 3, 200, 100)
        assert (error.t_prev, error.t) == (200, 100)
        assert exit_code_for(error) == EXIT_INPUT_ERROR


class TestConfigurationError:
    """Tests for ConfigurationError."""

    def test_parameter_in_suggestion(self):
        error = ConfigurationError("bad", "rht.seed")
        assert "rht.seed" in error.suggestion
        assert exit_code_for(error) == EXIT_CONFIG_ERROR

    def test_generic_suggestion(self):
        assert "--set" in ConfigurationError("bad").suggestion


class TestFormatErrorForUser:
    """Tests for format_error_for_user."""

    def test_evtrack_error_is_passed_through(self):
        error = NoConsensusError(100, 2)
        assert format_error_for_user(error) == str(error)

    def test_file_not_found(self):
        message = format_error_for_user(FileNotFoundError("x.txt"))
        assert message.startswith("Error: File not found")

    def test_permission_denied(self):
        assert "Permission denied" in format_error_for_user(PermissionError("x"))

    def test_generic_exception(self):
        assert format_error_for_user(RuntimeError("odd")) == "Error (RuntimeError): odd"

    def test_foreign_errors_are_input_errors(self):
        assert exit_code_for(RuntimeError("odd")) == EXIT_INPUT_ERROR
