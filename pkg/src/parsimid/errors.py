"""Exception types shared across the package.

Each class carries a stable ``category`` string used by the command-line
front end as an error prefix on stderr.
"""

from __future__ import annotations


class ParsimidError(Exception):
    """Base class for all library errors."""

    category = "RUNTIME"


class ExcitationError(ParsimidError):
    """Data is not persistently exciting enough for the requested fit."""

    category = "EXCITATION"


class RankError(ParsimidError):
    """A matrix failed a rank or definiteness requirement."""

    category = "RANK"


class ConfigError(ParsimidError):
    """Invalid configuration, argument combination, or record shape."""

    category = "CONFIG"


class DivergenceError(ParsimidError):
    """A simulated state trajectory left the finite floating-point range."""

    category = "RUNTIME"
