from __future__ import annotations


class AdapterError(Exception):
    """Base class for adapter failures."""


class ConfigError(AdapterError):
    """Invalid adapter configuration."""


class ModelLoadError(AdapterError):
    """The model identifier cannot be resolved or loaded."""


class WireError(AdapterError):
    """A protocol line cannot be parsed."""
