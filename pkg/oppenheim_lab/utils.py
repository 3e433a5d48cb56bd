import math
from collections.abc import Iterable

import numpy as np


def compensated_sum(values: Iterable[float] | np.ndarray) -> float:
    """Correctly rounded float sum (error-free accumulation via ``math.fsum``)."""
    if isinstance(values, np.ndarray):
        return math.fsum(values.ravel().tolist())
    return math.fsum(values)


def relative_difference(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


def log_spaced(low: float, high: float, count: int) -> np.ndarray:
    return np.geomspace(low, high, num=count)


def n_log_n(n: int | np.ndarray) -> float | np.ndarray:
    return n * np.log(n)


def render_table(rows: list[dict[str, str]], columns: list[str] | None = None) -> str:
    """Fixed-width text table with a header rule."""
    if not rows:
        return "(no rows)\n"
    columns = columns or list(rows[0])
    cells = [[str(row.get(column, "")) for column in columns] for row in rows]
    widths = [max(len(column), *(len(line[i]) for line in cells))
              for i, column in enumerate(columns)]
    lines = ["  ".join(column.ljust(width) for column, width in zip(columns, widths, strict=True)),
             "  ".join("-" * width for width in widths)]
    lines += ["  ".join(cell.ljust(width) for cell, width in zip(line, widths, strict=True))
              for line in cells]
    return "\n".join(line.rstrip() for line in lines) + "\n"
