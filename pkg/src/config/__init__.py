"""Configuration management for the fund contagion toolkit."""

from .settings import Settings, settings

__all__ = ["Settings", "settings"]
