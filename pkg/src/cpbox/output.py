"""Delimited output: versioned-schema CSV and round-trip JSON writers.

CSV files open with a `# cpbox-csv v1 <schema>` comment line followed by the
column header; numbers are written with 17 significant digits so rereads are
bit-exact.  JSON uses Python's shortest round-trip float representation.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

CSV_VERSION = 1

__all__ = ["format_number", "write_csv", "write_json", "CSV_VERSION"]


def format_number(x) -> str:
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.17g}"


def _format_cell(x) -> str:
    if isinstance(x, str):
        return x
    return format_number(x)


def write_csv(path: str | Path, schema: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    lines = [f"# cpbox-csv v{CSV_VERSION} {schema}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, allow_nan=True) + "\n")
    return path
