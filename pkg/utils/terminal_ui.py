"""Terminal UI utilities using Rich library for readable output.

Everything the CLI shows a human goes through here; machine-readable results are
written to files by harness.serialization instead.
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table


@dataclass(frozen=True)
class Palette:
    """Color palette for terminal output."""

    primary: str = "#00D9FF"
    secondary: str = "#A78BFA"
    success: str = "#10B981"
    warning: str = "#F59E0B"
    error: str = "#EF4444"
    text_secondary: str = "#8B949E"
    text_muted: str = "#484F58"


COLORS = Palette()

# Global console instance
console = Console()


def print_header(title: str, subtitle: Optional[str] = None) -> None:
    """Print a formatted header panel.

    Args:
        title: Main title text
        subtitle: Optional subtitle text
    """
    content = f"[bold {COLORS.primary}]{title}[/bold {COLORS.primary}]"
    if subtitle:
        content += f"\n[{COLORS.text_secondary}]{subtitle}[/{COLORS.text_secondary}]"

    console.print(Panel(content, border_style=COLORS.primary, box=box.DOUBLE, padding=(0, 2)))


def print_config(config: Dict[str, Any]) -> None:
    """Print configuration in a formatted table.

    Args:
        config: Dictionary of configuration key-value pairs
    """
    table = Table(show_header=False, box=box.SIMPLE, border_style=COLORS.text_muted, padding=(0, 2))
    table.add_column("Key", style=f"{COLORS.primary} bold")
    table.add_column("Value", style=COLORS.success)

    for key, value in config.items():
        table.add_row(key, str(value))

    console.print(table)


def print_metrics(rows: Iterable[Dict[str, Any]], title: str = "Results") -> None:
    """Print metric rows (flat dicts sharing one header) as a table.

    Args:
        rows: Flat result rows, e.g. from MetricsRecord.to_row()
        title: Table title
    """
    rows = list(rows)
    if not rows:
        print_info("No results.")
        return

    table = Table(
        title=title,
        show_header=True,
        header_style=f"bold {COLORS.primary}",
        box=box.ROUNDED,
        border_style=COLORS.text_muted,
        padding=(0, 1),
    )
    columns = list(rows[0].keys())
    for column in columns:
        table.add_column(column, justify="right" if column != "detector" else "left")

    for row in rows:
        table.add_row(*(_format_cell(row.get(column)) for column in columns))

    console.print(table)


def print_checks(checks: Dict[str, bool]) -> None:
    """Print named pass/fail checks.

    Args:
        checks: Mapping of check name to outcome
    """
    for name, passed in checks.items():
        if passed:
            console.print(f"[{COLORS.success}]✓ {name}[/{COLORS.success}]")
        else:
            console.print(f"[{COLORS.error}]✗ {name}[/{COLORS.error}]")


def _format_cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def print_error(message: str, title: str = "Error") -> None:
    """Print an error message.

    Args:
        message: Error message
        title: Error title (default: "Error")
    """
    console.print(
        Panel(
            f"[{COLORS.error}]{message}[/{COLORS.error}]",
            title=f"[bold {COLORS.error}]{title}[/bold {COLORS.error}]",
            border_style=COLORS.error,
            box=box.ROUNDED,
        )
    )


def print_warning(message: str) -> None:
    """Print a warning message.

    Args:
        message: Warning message
    """
    console.print(f"[{COLORS.warning}]{message}[/{COLORS.warning}]")


def print_success(message: str) -> None:
    """Print a success message.

    Args:
        message: Success message
    """
    console.print(f"[{COLORS.success}]✓ {message}[/{COLORS.success}]")


def print_info(message: str) -> None:
    """Print an info message.

    Args:
        message: Info message
    """
    console.print(f"[{COLORS.primary}]ℹ {message}[/{COLORS.primary}]")


def print_log_location(log_file: str) -> None:
    """Print log file location.

    Args:
        log_file: Path to log file
    """
    console.print()
    console.print(f"[{COLORS.text_muted}]Detailed logs: {log_file}[/{COLORS.text_muted}]")
