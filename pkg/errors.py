# Exceptions raised by the workbench; each one knows the exit code the CLI reports

from typing import Optional

from config import EXIT_CAP_EXCEEDED, EXIT_CONFIG_ERROR, EXIT_INVARIANT_VIOLATION, EXIT_OUTPUT_ERROR


class BenchException(Exception):
    """Base error: an exit code plus a human readable detail"""

    def __init__(self, detail: str, exit_code: int = EXIT_CONFIG_ERROR, stanza: Optional[str] = None):
        super().__init__(detail)
        self.detail = detail
        self.exit_code = exit_code
        self.stanza = stanza

    def with_stanza(self, stanza: str) -> "BenchException":
        self.stanza = stanza
        return self

    def __str__(self) -> str:
        if self.stanza:
            return f"[{self.stanza}] {self.detail}"
        return self.detail


class ConfigError(BenchException, ValueError):
    def __init__(self, detail: str, stanza: Optional[str] = None):
        super().__init__(detail, EXIT_CONFIG_ERROR, stanza)


class GeometryError(ConfigError):
    pass


class CoverageError(ConfigError):
    pass


class LightConeViolation(ConfigError):
    pass


class PreconditionError(ConfigError):
    pass


class CapExceeded(BenchException, ValueError):
    def __init__(self, detail: str, stanza: Optional[str] = None):
        super().__init__(detail, EXIT_CAP_EXCEEDED, stanza)


class InvariantViolation(BenchException, ValueError):
    def __init__(self, detail: str, stanza: Optional[str] = None):
        super().__init__(detail, EXIT_INVARIANT_VIOLATION, stanza)


class OutputError(BenchException):
    """Records could not be written"""

    def __init__(self, detail: str, stanza: Optional[str] = None):
        super().__init__(detail, EXIT_OUTPUT_ERROR, stanza)
