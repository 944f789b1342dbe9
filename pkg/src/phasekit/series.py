"""Time-series container and CSV round-trip, detrending, standardization."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, FormatError, InsufficientDataError


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled multichannel record.

    values has shape (n_samples, n_channels); dt is the sampling step in the
    caller's time units (1.0 for maps).
    """

    values: np.ndarray
    dt: float = 1.0
    names: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise FormatError("values must be a 1-D or 2-D array")
        if v.shape[0] < 2:
            raise InsufficientDataError("a series needs at least 2 samples")
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise FormatError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        if self.dt <= 0:
            raise FormatError("dt must be positive")
        names = tuple(self.names) if self.names else tuple(
            f"ch{i}" for i in range(v.shape[1]))
        if len(names) != v.shape[1]:
            raise FormatError("channel name count does not match column count")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def channel(self, index: int) -> "TimeSeries":
        """Single-channel view as a new series."""
        return TimeSeries(self.values[:, [index]], self.dt, (self.names[index],))

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt


def _is_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_numeric_table(path, min_rows: int = 2, delimiter: str | None = None,
                       header: bool | None = None):
    """Parse a numeric table with an optional single header line.

    Cells are comma or whitespace separated; delimiter None sniffs the first
    non-blank line (comma wins when present).  header None detects a header
    by whether the first row parses as numbers; True or False forces it.
    Returns (data, names) where names is () without a header.  Raises
    FormatError naming the offending 1-based file line and column on
    malformed input, InsufficientDataError below min_rows data rows.
    """
    lines = Path(path).read_text().splitlines()
    rows = [(i + 1, line) for i, line in enumerate(lines) if line.strip() != ""]
    if not rows:
        raise InsufficientDataError(f"{path}: empty file")

    if delimiter is None:
        delimiter = "," if "," in rows[0][1] else ""
    # "" selects whitespace mode: str.split(None) collapses whitespace runs.
    delim = delimiter or None

    def cells_of(line: str) -> list:
        if delim is None:
            return line.split()
        return [c.strip() for c in line.split(delim)]

    first_cells = cells_of(rows[0][1])
    names: tuple = ()
    is_header = (header if header is not None
                 else not all(_is_float(c) for c in first_cells))
    if is_header:
        names = tuple(first_cells)
        rows = rows[1:]

    if len(rows) < min_rows:
        raise InsufficientDataError(f"{path}: fewer than {min_rows} data rows")

    n_cols = len(cells_of(rows[0][1]))
    data = np.empty((len(rows), n_cols))
    for r, (lineno, line) in enumerate(rows):
        cells = cells_of(line)
        if len(cells) != n_cols:
            raise FormatError(
                f"{path}: line {lineno} has {len(cells)} columns, expected {n_cols}")
        for c, cell in enumerate(cells):
            if not _is_float(cell):
                raise FormatError(
                    f"{path}: non-numeric cell at line {lineno}, column {c + 1}")
            data[r, c] = float(cell)
    return data, names


# Largest tolerated relative wobble in a time column's spacing.
TIME_UNIFORMITY_RTOL = 1e-9


def load_csv(path, dt: float | None = None, time_column: bool = False,
             delimiter: str | None = None, header: bool | None = None) -> TimeSeries:
    """Read a one-column-per-channel table, with an optional single header line.

    With time_column=True the first column holds sample times; dt is taken
    from their (required uniform) spacing and must not also be passed.  The
    default dt without a time column is 1.0.  Raises FormatError naming the
    offending 1-based file line and column on malformed input,
    InsufficientDataError when fewer than 2 data rows remain.
    """
    data, names = read_numeric_table(path, min_rows=2, delimiter=delimiter,
                                     header=header)
    if time_column:
        if dt is not None:
            raise FormatError("dt is read from the time column; drop one of them")
        if data.shape[1] < 2:
            raise FormatError(f"{path}: a time column needs at least one "
                              "value column beside it")
        steps = np.diff(data[:, 0])
        step = (data[-1, 0] - data[0, 0]) / (data.shape[0] - 1)
        if step <= 0 or np.max(np.abs(steps - step)) > TIME_UNIFORMITY_RTOL * abs(step):
            raise FormatError(f"{path}: time column is not uniformly spaced")
        data = data[:, 1:]
        if names:
            names = names[1:]
        dt = step
    return TimeSeries(data, dt=1.0 if dt is None else dt, names=names)


def save_csv(series: TimeSeries, path) -> None:
    """Write with full-precision float reprs so load_csv restores bit-equal data."""
    out = [",".join(series.names)]
    for row in series.values:
        out.append(",".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(out) + "\n")


def detrend(series: TimeSeries, order: int = 1) -> TimeSeries:
    """Subtract a per-channel least-squares polynomial of the given degree.

    order=0 removes the mean.  Residuals of each channel are orthogonal to the
    fitted polynomial basis, so their sum vanishes for order >= 0.
    """
    if order < 0:
        raise ValueError("polynomial order must be >= 0")
    if order >= series.n_samples:
        raise InsufficientDataError("polynomial order must be below the sample count")
    x = np.arange(series.n_samples, dtype=float)
    resid = np.empty_like(series.values)
    for c in range(series.n_channels):
        poly = np.polynomial.Polynomial.fit(x, series.values[:, c], deg=order)
        resid[:, c] = series.values[:, c] - poly(x)
    return TimeSeries(resid, series.dt, series.names)


@dataclass(frozen=True)
class StandardizeRecord:
    """Per-channel affine transform applied by standardize: (x - mean) / std."""

    means: tuple = field(default_factory=tuple)
    stds: tuple = field(default_factory=tuple)

    def invert(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values) * np.array(self.stds) + np.array(self.means)


def standardize(series: TimeSeries) -> tuple[TimeSeries, StandardizeRecord]:
    """Scale every channel to zero mean and unit (population) variance."""
    means = series.values.mean(axis=0)
    stds = series.values.std(axis=0)
    for c, s in enumerate(stds):
        if s == 0.0:
            raise DegenerateDataError(
                f"channel {series.names[c]!r} has zero variance")
    scaled = (series.values - means) / stds
    return (
        TimeSeries(scaled, series.dt, series.names),
        StandardizeRecord(tuple(means), tuple(stds)),
    )
