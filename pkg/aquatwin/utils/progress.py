"""Progress bars and duration formatting for long experiment loops."""

import sys

from tqdm import tqdm


def progress_enabled(requested: bool) -> bool:
    """Bars are shown only when requested and stderr is a terminal"""
    return requested and sys.stderr.isatty()


def create_progress_bar(
    total: int,
    desc: str = "",
    unit: str = "step",
    disable: bool = False,
    leave: bool = False,
) -> tqdm:
    """
    Progress bar over scenarios, hours, nodes or run cells.

    Args:
        total: Number of items
        desc: Label shown next to the bar
        unit: Name of one item
        disable: Suppress the bar entirely (workers, tests, non-terminals)
        leave: Keep the finished bar on screen

    Returns:
        tqdm: Bar writing to stderr, redrawn at most every 0.5 s
    """
    return tqdm(
        total=total,
        desc=desc or None,
        unit=unit,
        disable=disable,
        leave=leave,
        mininterval=0.5,
        dynamic_ncols=True,
        file=sys.stderr,
    )


def format_duration(seconds: float) -> str:
    """
    Human-readable elapsed time for stage summaries.

    Example:
        ```python
        format_duration(0.85)  # "850 ms"
        format_duration(270)  # "4.5 min"
        ```
    """
    if seconds < 1:
        return f"{seconds * 1000:.0f} ms"
    if seconds < 60:
        return f"{seconds:.1f} s"
    if seconds < 3600:
        return f"{seconds / 60:.1f} min"
    return f"{seconds / 3600:.1f} h"
