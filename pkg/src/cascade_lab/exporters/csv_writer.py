"""Column-oriented CSV output.

Floats are written with 17 significant digits, so a value read back is the
value that was written and identical runs give identical bytes.
"""

import logging
from pathlib import Path
from typing import Iterable, Mapping, Union

import numpy as np

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
INT_FORMAT = "%d"


def write_columns(
    path: Union[str, Path],
    columns: Mapping[str, Iterable[float]],
    int_columns: Iterable[str] = (),
) -> Path:
    """Write equally long columns to a comma-separated file with a header row.

    Args:
        path: destination file
        columns: ordered mapping of column name -> values
        int_columns: names of columns written as integers
    Returns:
        the path written
    """
    target = Path(path)
    names = list(columns)
    arrays = [_as_array(columns[name]) for name in names]
    lengths = {a.size for a in arrays}
    if len(lengths) > 1:
        raise ValueError(f"Columns of {target.name} differ in length: {sorted(lengths)}")

    integer = set(int_columns)
    formats = [INT_FORMAT if name in integer else FLOAT_FORMAT for name in names]
    table = np.column_stack([a.astype(float) for a in arrays]) if arrays else np.empty((0, 0))

    target.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(
        target,
        table,
        fmt=formats,
        delimiter=",",
        header=",".join(names),
        comments="",
    )
    logger.debug(f"Wrote {table.shape[0]} rows to {target}")
    return target


def _as_array(values) -> np.ndarray:
    if isinstance(values, np.ndarray):
        return values.ravel()
    return np.asarray(list(values))


def read_columns(path: Union[str, Path]) -> dict:
    """Read a file written by write_columns back into name -> float array."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}
