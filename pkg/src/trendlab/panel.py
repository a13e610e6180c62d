"""Date-indexed panels of daily returns and their CSV schema.

CSV layout: header ``date,<instrument>,...``, ISO dates, one row per
business day, strictly increasing.  An empty cell means the instrument is
inactive on that day; inside an instrument's first..last active range every
cell must be present and finite.  Floats are written with ``repr`` so an
export/ingest round trip is bit-identical.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError, ParameterError


@dataclass
class ReturnsPanel:
    dates: pd.DatetimeIndex
    instruments: list[str]
    returns: np.ndarray  # (T, N), NaN outside an instrument's active range

    def __post_init__(self):
        self.returns = np.asarray(self.returns, dtype=float)
        if self.returns.ndim != 2:
            raise DataError(f"returns must be 2-D, got shape {self.returns.shape}")
        t, n = self.returns.shape
        if n < 1:
            raise DataError("panel needs at least one instrument")
        if len(self.dates) != t or len(self.instruments) != n:
            raise DataError("dates/instruments do not match the returns shape")
        if len(set(self.instruments)) != n:
            raise DataError("duplicate instrument names")
        self._validate_active_ranges()

    def _validate_active_ranges(self):
        finite = np.isfinite(self.returns)
        self.active_start = np.full(self.n_assets, -1)
        self.active_end = np.full(self.n_assets, -1)
        for j in range(self.n_assets):
            idx = np.flatnonzero(finite[:, j])
            if idx.size == 0:
                raise DataError(f"instrument {self.instruments[j]!r} has no data")
            lo, hi = idx[0], idx[-1]
            if not finite[lo : hi + 1, j].all():
                gap = lo + np.flatnonzero(~finite[lo : hi + 1, j])[0]
                raise DataError(
                    f"instrument {self.instruments[j]!r} has a gap inside its active range "
                    f"at {self.dates[gap].date()}"
                )
            self.active_start[j], self.active_end[j] = lo, hi

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    @property
    def n_days(self) -> int:
        return self.returns.shape[0]

    def subset(self, columns) -> "ReturnsPanel":
        cols = list(columns)
        idx = [self.instruments.index(c) if isinstance(c, str) else int(c) for c in cols]
        return ReturnsPanel(
            dates=self.dates,
            instruments=[self.instruments[i] for i in idx],
            returns=self.returns[:, idx].copy(),
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            _write_panel(fh, self)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        _write_panel(buf, self)
        return buf.getvalue()


def _write_panel(fh, panel: ReturnsPanel) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["date", *panel.instruments])
    for t in range(panel.n_days):
        row = [panel.dates[t].strftime("%Y-%m-%d")]
        for x in panel.returns[t]:
            row.append("" if not np.isfinite(x) else repr(float(x)))
        writer.writerow(row)


def ingest_csv(path) -> ReturnsPanel:
    """Parse and validate a returns CSV (see module docstring for the schema)."""
    try:
        with open(path, "r", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0].strip().lower() != "date":
        raise DataError(f"{path}: header must be 'date,<instrument>,...', got {header[:3]}")
    instruments = [h.strip() for h in header[1:]]
    n = len(instruments)

    dates = []
    values = []
    seen = set()
    prev = None
    for i, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != n + 1:
            raise DataError(f"{path}: row {i} has {len(row)} fields, expected {n + 1}")
        try:
            d = pd.Timestamp(row[0].strip())
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: unparseable date {row[0]!r}") from exc
        if d in seen:
            raise DataError(f"{path}: duplicate date {d.date()} at row {i}")
        if prev is not None and d <= prev:
            raise DataError(f"{path}: dates not strictly increasing at row {i} ({d.date()})")
        seen.add(d)
        prev = d
        vals = np.empty(n)
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == "":
                vals[j] = np.nan
                continue
            try:
                vals[j] = float(cell)
            except ValueError as exc:
                raise DataError(
                    f"{path}: row {i}, column {instruments[j]!r}: unparseable value {cell!r}"
                ) from exc
            if not np.isfinite(vals[j]):
                raise DataError(f"{path}: row {i}, column {instruments[j]!r}: non-finite value")
        dates.append(d)
        values.append(vals)
    if not dates:
        raise DataError(f"{path}: no data rows")
    return ReturnsPanel(
        dates=pd.DatetimeIndex(dates),
        instruments=instruments,
        returns=np.vstack(values),
    )


def panel_from_returns(returns: np.ndarray, start: str = "1990-01-01", names=None) -> ReturnsPanel:
    """Wrap a simulated (T, N) array in a panel with synthetic business dates."""
    r = np.asarray(returns, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    t, n = r.shape
    if names is None:
        width = max(2, len(str(n)))
        names = [f"SIM{j:0{width}d}" for j in range(n)]
    elif len(names) != n:
        raise ParameterError(f"{len(names)} names for {n} columns")
    dates = pd.bdate_range(start=start, periods=t)
    return ReturnsPanel(dates=dates, instruments=list(names), returns=r)
