"""Monthly stock panel: data model, CSV ingestion and sample filters.

Months are carried as a single integer index ``year * 12 + (month - 1)`` so
that calendar arithmetic (holding periods, listing windows) is plain integer
arithmetic.
"""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

RETURNS_HEADER = [
    "security_id", "year", "month", "return", "market_cap",
    "is_st_pt", "is_financial", "ipo_year", "ipo_month",
]
FUNDAMENTALS_HEADER = [
    "security_id", "fiscal_year", "book_equity", "operating_profitability",
    "total_assets", "total_assets_prior",
]
RISKFREE_HEADER = ["year", "month", "rf"]
RF_BAND = 0.05


class PanelError(ValueError):
    """Malformed or inconsistent panel input."""


class DuplicateKeyError(PanelError):
    pass


def month_index(year, month):
    if not 1 <= int(month) <= 12:
        raise ValueError(f"month must be in 1..12, got {month}")
    return int(year) * 12 + int(month) - 1


def month_of(index):
    """Inverse of :func:`month_index`: ``(year, month)``."""
    year, m0 = divmod(int(index), 12)
    return year, m0 + 1


def month_label(index):
    year, month = month_of(index)
    return f"{year:04d}-{month:02d}"


@dataclass(frozen=True)
class Panel:
    """Immutable collection of security-months, fundamentals and risk-free rates.

    Attributes
    ----------
    returns : pandas.DataFrame
        One row per security-month with columns ``security_id, period,
        return, market_cap, is_st_pt, is_financial, ipo_period``, sorted by
        ``(period, security_id)``.
    fundamentals : pandas.DataFrame
        One row per ``(security_id, fiscal_year)``.
    riskfree : pandas.Series
        Monthly risk-free rate indexed by period, covering ``start..end``.
    start, end : int
        Inclusive month-index span.
    """

    returns: pd.DataFrame
    fundamentals: pd.DataFrame
    riskfree: pd.Series
    start: int
    end: int

    def __post_init__(self):
        r = self.returns
        if self.end < self.start:
            raise PanelError("empty month span")
        if len(r):
            if r["period"].min() < self.start or r["period"].max() > self.end:
                raise PanelError("security-month outside the panel span")
            dup = r.duplicated(["security_id", "period"])
            if dup.any():
                row = r[dup].iloc[0]
                raise DuplicateKeyError(
                    f"duplicate record for {row.security_id} {month_label(row.period)}"
                )
            if (r["market_cap"] <= 0).any():
                raise PanelError("market_cap must be positive")
            if (r["return"] <= -1).any():
                raise PanelError("monthly return must exceed -1")
        f = self.fundamentals
        if len(f) and f.duplicated(["security_id", "fiscal_year"]).any():
            row = f[f.duplicated(["security_id", "fiscal_year"])].iloc[0]
            raise DuplicateKeyError(
                f"duplicate fundamentals for {row.security_id} fiscal {row.fiscal_year}"
            )
        missing = set(range(self.start, self.end + 1)) - set(self.riskfree.index)
        if missing:
            raise PanelError(f"risk-free rate missing for {month_label(min(missing))}")

    @property
    def months(self):
        return range(self.start, self.end + 1)

    @property
    def securities(self):
        return sorted(self.returns["security_id"].unique())

    def __len__(self):
        return len(self.returns)

    def rf(self, period):
        return float(self.riskfree.loc[period])

    def month_slice(self, period):
        r = self.returns
        return r[r["period"] == period]


def _sort_returns(df):
    return df.sort_values(["period", "security_id"], kind="mergesort").reset_index(drop=True)


def _sort_fundamentals(df):
    return df.sort_values(["security_id", "fiscal_year"], kind="mergesort").reset_index(drop=True)


def make_panel(returns, fundamentals, riskfree, start=None, end=None):
    """Build a :class:`Panel` from frames already in the internal layout.

    ``returns`` needs ``security_id, period, return, market_cap`` and
    optionally the flag columns (default clean) and ``ipo_period`` (default
    ten years before the first month). ``riskfree`` is a Series indexed by period.
    """
    r = returns.copy()
    r["security_id"] = r["security_id"].astype(str)
    for col, default in (("is_st_pt", False), ("is_financial", False)):
        r[col] = r[col].astype(bool) if col in r else default
    if "ipo_period" not in r:
        # unknown listing date: treat as seasoned
        r["ipo_period"] = int(r["period"].min()) - 120
    r = r[["security_id", "period", "return", "market_cap", "is_st_pt", "is_financial", "ipo_period"]]
    r = r.astype({"period": np.int64, "return": float, "market_cap": float, "ipo_period": np.int64})
    f = fundamentals.copy()
    f["security_id"] = f["security_id"].astype(str)
    f = f[FUNDAMENTALS_HEADER].astype({"fiscal_year": np.int64})
    for col in FUNDAMENTALS_HEADER[2:]:
        f[col] = f[col].astype(float)
    if start is None:
        start = int(r["period"].min())
    if end is None:
        end = int(r["period"].max())
    rf = pd.Series(riskfree, dtype=float).sort_index()
    rf.index = rf.index.astype(np.int64)
    rf = rf.loc[start:end]
    rf.index.name = "period"
    rf.name = "rf"
    return Panel(_sort_returns(r), _sort_fundamentals(f), rf, int(start), int(end))


class _RowReader:
    """csv row iterator that reports ``path:line`` and column on bad values."""

    def __init__(self, path, header):
        self.path = Path(path)
        self.header = header

    def __iter__(self):
        with open(self.path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                got = next(reader)
            except StopIteration:
                raise PanelError(f"{self.path}: empty file") from None
            got = [h.strip() for h in got]
            if got != self.header:
                raise PanelError(
                    f"{self.path}:1: expected header {','.join(self.header)}, got {','.join(got)}"
                )
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(self.header):
                    raise PanelError(
                        f"{self.path}:{reader.line_num}: expected {len(self.header)} fields, got {len(row)}"
                    )
                yield reader.line_num, dict(zip(self.header, (c.strip() for c in row)))

    def error(self, line, column, value, why):
        return PanelError(f"{self.path}:{line}: column {column!r}: {why} ({value!r})")

    def integer(self, line, rec, column):
        v = rec[column]
        try:
            return int(v)
        except ValueError:
            raise self.error(line, column, v, "expected an integer") from None

    def decimal(self, line, rec, column, optional=False):
        v = rec[column]
        if v == "" and optional:
            return None
        try:
            x = float(v)
        except ValueError:
            raise self.error(line, column, v, "expected a decimal number") from None
        if not math.isfinite(x):
            raise self.error(line, column, v, "expected a finite number")
        return x

    def flag(self, line, rec, column):
        v = rec[column]
        if v not in ("0", "1"):
            raise self.error(line, column, v, "expected 0 or 1")
        return v == "1"

    def month(self, line, rec, ycol, mcol):
        y = self.integer(line, rec, ycol)
        m = self.integer(line, rec, mcol)
        if not 1 <= m <= 12:
            raise self.error(line, mcol, rec[mcol], "month must be in 1..12")
        return month_index(y, m)


def read_returns(path):
    rd = _RowReader(path, RETURNS_HEADER)
    rows = []
    seen = {}
    skipped = 0
    for line, rec in rd:
        sid = rec["security_id"]
        if not sid:
            raise rd.error(line, "security_id", sid, "empty security id")
        period = rd.month(line, rec, "year", "month")
        key = (sid, period)
        if key in seen:
            raise DuplicateKeyError(
                f"{rd.path}:{line}: duplicate record for {sid} {month_label(period)} "
                f"(first seen on line {seen[key]})"
            )
        seen[key] = line
        ret = rd.decimal(line, rec, "return", optional=True)
        cap = rd.decimal(line, rec, "market_cap", optional=True)
        flags = rd.flag(line, rec, "is_st_pt"), rd.flag(line, rec, "is_financial")
        ipo = rd.month(line, rec, "ipo_year", "ipo_month")
        if ret is None or cap is None:
            skipped += 1
            continue
        if cap <= 0:
            raise rd.error(line, "market_cap", rec["market_cap"], "market cap must be positive")
        if ret <= -1:
            raise rd.error(line, "return", rec["return"], "return must exceed -1")
        rows.append((sid, period, ret, cap, flags[0], flags[1], ipo))
    if skipped:
        logger.info("%s: dropped %d records with missing return or market cap", rd.path, skipped)
    return pd.DataFrame(
        rows,
        columns=["security_id", "period", "return", "market_cap", "is_st_pt", "is_financial", "ipo_period"],
    )


def read_fundamentals(path):
    rd = _RowReader(path, FUNDAMENTALS_HEADER)
    rows = []
    seen = {}
    for line, rec in rd:
        sid = rec["security_id"]
        fy = rd.integer(line, rec, "fiscal_year")
        if (sid, fy) in seen:
            raise DuplicateKeyError(
                f"{rd.path}:{line}: duplicate fundamentals for {sid} fiscal {fy}"
            )
        seen[(sid, fy)] = line
        vals = [rd.decimal(line, rec, c) for c in FUNDAMENTALS_HEADER[2:]]
        rows.append((sid, fy, *vals))
    return pd.DataFrame(rows, columns=FUNDAMENTALS_HEADER)


def read_riskfree(path):
    rd = _RowReader(path, RISKFREE_HEADER)
    values = {}
    for line, rec in rd:
        period = rd.month(line, rec, "year", "month")
        if period in values:
            raise DuplicateKeyError(f"{rd.path}:{line}: duplicate risk-free month {month_label(period)}")
        rf = rd.decimal(line, rec, "rf")
        if abs(rf) > RF_BAND:
            raise rd.error(line, "rf", rec["rf"], f"outside the [-{RF_BAND}, {RF_BAND}] sanity band")
        values[period] = rf
    if not values:
        raise PanelError(f"{rd.path}: no risk-free observations")
    periods = sorted(values)
    gaps = [p for p in range(periods[0], periods[-1] + 1) if p not in values]
    if gaps:
        raise PanelError(f"{rd.path}: risk-free series is not contiguous; {month_label(gaps[0])} is missing")
    return pd.Series(values, dtype=float).sort_index()


def load_panel(returns_path, fundamentals_path, riskfree_path):
    """Read the three input CSVs into a :class:`Panel`.

    Raises
    ------
    FileNotFoundError
        If any path does not exist.
    PanelError
        On malformed rows (with ``file:line`` and column), duplicate keys, a
        gapped risk-free series, or risk-free coverage short of the panel.
    """
    for p in (returns_path, fundamentals_path, riskfree_path):
        if not Path(p).is_file():
            raise FileNotFoundError(f"input file not found: {p}")
    returns = read_returns(returns_path)
    if returns.empty:
        raise PanelError(f"{returns_path}: no usable security-month records")
    fundamentals = read_fundamentals(fundamentals_path)
    rf = read_riskfree(riskfree_path)
    start, end = int(returns["period"].min()), int(returns["period"].max())
    if rf.index.min() > start or rf.index.max() < end:
        raise PanelError(
            f"{riskfree_path}: risk-free series covers {month_label(rf.index.min())}.."
            f"{month_label(rf.index.max())}, panel needs {month_label(start)}..{month_label(end)}"
        )
    return make_panel(returns, fundamentals, rf, start, end)


def _fmt(x):
    return repr(float(x))


def write_panel(panel, directory):
    """Write ``returns.csv``, ``fundamentals.csv`` and ``riskfree.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    r = panel.returns.sort_values(["security_id", "period"], kind="mergesort")
    with open(directory / "returns.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RETURNS_HEADER)
        cols = ["security_id", "period", "return", "market_cap", "is_st_pt", "is_financial", "ipo_period"]
        for sid, period, ret, cap, st, fin, ipo in zip(*(r[c].tolist() for c in cols)):
            y, m = month_of(period)
            iy, im = month_of(ipo)
            w.writerow([sid, y, m, _fmt(ret), _fmt(cap), int(st), int(fin), iy, im])
    with open(directory / "fundamentals.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FUNDAMENTALS_HEADER)
        for row in panel.fundamentals.itertuples(index=False):
            w.writerow([row.security_id, int(row.fiscal_year)] + [_fmt(v) for v in row[2:]])
    with open(directory / "riskfree.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RISKFREE_HEADER)
        for period, rf in panel.riskfree.items():
            y, m = month_of(period)
            w.writerow([y, m, _fmt(rf)])
    return directory


@dataclass(frozen=True)
class FilterConfig:
    """Which sample screens to apply.

    ``ipo_window`` counts the listing month itself, so the default of 6
    drops the listing month and the five months after it.
    """

    exclude_st_pt: bool = True
    exclude_financial: bool = True
    exclude_new_listings: bool = True
    ipo_window: int = 6


def apply_filters(panel, cfg=FilterConfig()):
    """Drop ST/PT, financial and newly listed security-months.

    Pure row selection: surviving records are returned unchanged, and
    fundamentals are kept only for securities with at least one surviving
    month. The month span and risk-free series are untouched.
    """
    r = panel.returns
    keep = np.ones(len(r), dtype=bool)
    if cfg.exclude_st_pt:
        keep &= ~r["is_st_pt"].to_numpy()
    if cfg.exclude_financial:
        keep &= ~r["is_financial"].to_numpy()
    if cfg.exclude_new_listings:
        keep &= (r["period"] - r["ipo_period"]).to_numpy() >= cfg.ipo_window
    kept = r[keep].reset_index(drop=True)
    if kept.empty:
        logger.warning("all %d security-months removed by filters", len(r))
    elif len(kept) < len(r):
        logger.info("filters removed %d of %d security-months", len(r) - len(kept), len(r))
    survivors = set(kept["security_id"])
    f = panel.fundamentals
    f = f[f["security_id"].isin(survivors)].reset_index(drop=True)
    return Panel(kept, f, panel.riskfree, panel.start, panel.end)
