"""Shared exception types, mapped to CLI exit codes in beerfed.cli."""


class BeerfedError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(BeerfedError):
    """Invalid session/federation/family configuration (CLI exit 2)."""


class IngestError(BeerfedError):
    """Malformed input file content (CLI exit 4).

    Carries optional 1-based file line number and column name so CLI
    diagnostics can point at the offending cell.
    """

    def __init__(self, message: str, *, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        prefix = ""
        if row is not None:
            prefix += f"row {row}"
        if column is not None:
            prefix += f"{', ' if prefix else ''}column {column}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class DegenerateRowError(BeerfedError):
    """A judge's scores are all equal (or too few), so min-max normalization
    is undefined. Suppressed by the lenient flag."""

    def __init__(self, judges: list[str]):
        self.judges = list(judges)
        super().__init__(
            "degenerate score rows for judge(s): " + ", ".join(self.judges)
        )


class InsufficientDataError(BeerfedError):
    """Fewer filled cells than a statistic requires (CLI exit 4)."""
