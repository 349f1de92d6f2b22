import csv
import io
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np


def format_float(x: Any) -> str:
    """Seventeen significant digits; blanks for missing values."""
    if x is None:
        return ""
    if isinstance(x, bool | int | np.integer):
        return str(int(x))
    return format(float(x), ".17g")


def to_csv(
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    path: str | Path | None = None,
) -> str:
    """
    Render rows as CSV text and optionally write them as UTF-8.

    Returns
    -------
    str
        The CSV document with ``\\n`` line endings.

    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) for v in row])
    text = buffer.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _render(value: Any, depth: int) -> str:
    pad, inner = "  " * depth, "  " * (depth + 1)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, Mapping):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_render(v, depth + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, list | tuple):
        if not value:
            return "[]"
        items = [inner + _render(v, depth + 1) for v in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(value, float | np.floating) and math.isfinite(value):
        return format_float(value)
    if isinstance(value, np.generic):
        value = value.item()
    return json.dumps(value)


def to_json(record: Mapping[str, Any], path: str | Path | None = None) -> str:
    """
    Render a record as indented JSON with floats in :func:`format_float` form.

    Non-finite floats become ``NaN`` and ``Infinity`` as :func:`json.dumps`
    writes them.

    Examples
    --------
    >>> print(to_json({"eps": 0.1, "steps": 3}), end="")
    {
      "eps": 0.10000000000000001,
      "steps": 3
    }

    """
    text = _render(record, 0) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
