"""Exception types shared across the package.

The CLI maps these onto exit codes: ``ConfigError`` -> 2 and
``GeometryError`` (including ``MeshTooCoarse``) -> 3.
"""


class PercoflowError(Exception):
    """Base class for all package errors."""


class ConfigError(PercoflowError, ValueError):
    """Invalid user input: malformed JSON, bad law parameters, bad options."""


class GeometryError(PercoflowError, ValueError):
    """Invalid or degenerate geometry."""


class MeshTooCoarse(GeometryError):
    """The lattice at the requested mesh misses part of the geometry."""
