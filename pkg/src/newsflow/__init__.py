"""Cross-platform news topic tracking and influence estimation."""

__version__ = "0.1.0"
