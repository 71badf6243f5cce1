"""Exceptions shared across the engine.

The CLI maps these to exit codes: ConfigError -> 2, NumericalCheckError -> 3.
"""


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending field."""


class NumericalCheckError(RuntimeError):
    """A runtime numerical invariant failed (Hermiticity, table horizon, ...)."""
