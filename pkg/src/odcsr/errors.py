"""Exception types shared across the package.

The CLI maps these onto exit codes: ParseError/IO -> 1, ConfigError -> 2,
ConvergenceError (strict mode) -> 3.
"""


class ParseError(ValueError):
    """An input file is malformed (bad magic, ragged CSV row, non-numeric cell)."""


class DimensionError(ValueError):
    """Loaded or supplied data violates a shape constraint (e.g. fewer than 2 points)."""


class ConfigError(ValueError):
    """A configuration or synthetic-data spec violates its invariants."""


class ConvergenceError(RuntimeError):
    """The per-column solver exhausted its iteration budget in strict mode."""
