"""Exception types.

All subclass ValueError so callers that don't care about the distinction can
catch broadly; the CLI maps ConfigError and usage problems to exit code 2 and
everything else to 1.
"""

from __future__ import annotations


class DqError(ValueError):
    """Base class for errors raised by this package."""


class ValidationError(DqError):
    """A precondition on operation arguments was violated."""


class DataFormatError(DqError):
    """An input file is malformed; message names the offending line."""


class ConfigError(DqError):
    """An experiment or estimator configuration is invalid or infeasible."""
