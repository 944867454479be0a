from __future__ import annotations

import argparse
from typing import Any, Iterable, Mapping, Sequence

from rich.console import Console
from rich.table import Table

from mate_reid.config import settings

console = Console()


def add_workers_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"Worker threads. Defaults to MATE_WORKERS or {settings.workers}.",
    )


def format_cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def print_table(title: str, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> None:
    table = Table(title=title)
    for column in columns:
        table.add_column(column, justify="left" if column in ("method", "metric") else "right")
    for row in rows:
        table.add_row(*(format_cell(row.get(column)) for column in columns))
    console.print(table)
