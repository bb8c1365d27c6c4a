"""Deterministic delimited output.

Every file starts with a ``# format=1`` line, floats are written with
repr() so reruns are byte-identical, and the reader round-trips what the
writer produced (comments skipped, header preserved).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

__all__ = ["FORMAT_LINE", "format_value", "write_csv", "write_matrix", "read_csv"]

FORMAT_LINE = "# format=1"


def format_value(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows, comments=()):
    """Write one table; rows are iterables matching the header width."""
    header = list(header)
    with open(path, "w") as fh:
        fh.write(FORMAT_LINE + "\n")
        for line in comments:
            fh.write("# %s\n" % line)
        fh.write(",".join(header) + "\n")
        for row in rows:
            row = list(row)
            if len(row) != len(header):
                raise ValueError(
                    "row width %d does not match header width %d"
                    % (len(row), len(header))
                )
            fh.write(",".join(format_value(v) for v in row) + "\n")


def write_matrix(path, matrix, comments=()):
    """Write a 2-d array with c1..cn column names."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    header = ["c%d" % (j + 1) for j in range(matrix.shape[1])]
    write_csv(path, header, matrix, comments=comments)


def read_csv(path):
    """Read a table written by write_csv; returns (header, float array).

    The array is empty with zero rows when the table has no data lines.
    """
    header = None
    rows = []
    try:
        with open(path, "r") as fh:
            for ln, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if header is None:
                    header = line.split(",")
                    continue
                cells = line.split(",")
                if len(cells) != len(header):
                    raise ConfigurationError(
                        "line %d has %d cells, expected %d"
                        % (ln, len(cells), len(header)),
                        field=str(path),
                    )
                try:
                    rows.append([float(c) for c in cells])
                except ValueError as exc:
                    raise ConfigurationError(
                        "line %d: %s" % (ln, exc), field=str(path)
                    ) from exc
    except OSError as exc:
        raise ConfigurationError(str(exc), field=str(path)) from exc
    if header is None:
        raise ConfigurationError("no header line found", field=str(path))
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(header)))
    return header, data
