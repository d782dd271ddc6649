"""Utilities module for aquatwin."""

from aquatwin.utils.progress import create_progress_bar, format_duration, progress_enabled

__all__ = ["create_progress_bar", "format_duration", "progress_enabled"]
