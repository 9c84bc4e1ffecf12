"""Breakpoints, independent double sorts and value-weighted portfolio returns.

Portfolios are re-formed once a year at the end of ``formation_month`` and
held for the following twelve months with weights fixed at formation-month
market caps. Accounting variables come from the fiscal year before the
formation year.
"""

import enum
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pandas as pd

from .panel import month_index, month_label, month_of

logger = logging.getLogger(__name__)


class SortVariable(enum.Enum):
    SIZE = "size"
    BM = "bm"
    OP = "op"
    INV = "inv"

    @property
    def label(self):
        return {"size": "Size", "bm": "B/M", "op": "OP", "inv": "Inv"}[self.value]


class SortError(ValueError):
    pass


SCHEMES = {
    "median": (Fraction(1, 2),),
    "p30_70": (Fraction(3, 10), Fraction(7, 10)),
    "quintile": (Fraction(1, 5), Fraction(2, 5), Fraction(3, 5), Fraction(4, 5)),
}

# 2x3 leg labels, lowest bucket first; low investment is "conservative"
LEG_LABELS = {
    SortVariable.SIZE: ("S", "B"),
    SortVariable.BM: ("L", "N", "H"),
    SortVariable.OP: ("W", "N", "R"),
    SortVariable.INV: ("C", "N", "A"),
}
QUINTILE_ROW_LABELS = ("Small", "2", "3", "4", "Big")
QUINTILE_COL_LABELS = ("Low", "2", "3", "4", "High")

DIMS = {"2x3": (2, 3), "5x5": (5, 5)}


@dataclass(frozen=True)
class Breakpoints:
    cuts: tuple
    scheme: str
    variable: SortVariable = None

    @property
    def n_buckets(self):
        return len(self.cuts) + 1

    def assign(self, values):
        """0-based bucket per value; a value equal to a cut goes to the lower bucket."""
        return np.searchsorted(np.asarray(self.cuts, dtype=float), np.asarray(values, dtype=float), side="left")


def _order_stat(sorted_values, k):
    # k is 1-based
    return float(sorted_values[k - 1])


def compute_breakpoints(values, scheme, variable=None):
    """Nearest-rank quantile cuts.

    The cut for level ``q`` is the ``ceil(q * n)``-th order statistic; for
    the median of an even-sized sample the two middle values are averaged.

    >>> compute_breakpoints(range(1, 11), "p30_70").cuts
    (3.0, 7.0)
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown breakpoint scheme {scheme!r}; expected one of {sorted(SCHEMES)}")
    v = np.sort(np.asarray(list(values), dtype=float))
    n = v.size
    if n == 0:
        raise SortError("cannot compute breakpoints of an empty sample")
    if not np.all(np.isfinite(v)):
        raise SortError("breakpoint values must be finite")
    cuts = []
    for q in SCHEMES[scheme]:
        if q == Fraction(1, 2) and n % 2 == 0:
            cuts.append(0.5 * (_order_stat(v, n // 2) + _order_stat(v, n // 2 + 1)))
        else:
            cuts.append(_order_stat(v, max(1, math.ceil(q * n))))
    return Breakpoints(tuple(cuts), scheme, variable)


def formation_period(year, formation_month):
    return month_index(year, formation_month)


def holding_formation_year(period, formation_month):
    """Formation year whose holding window contains ``period``."""
    return (np.asarray(period) - formation_month) // 12


def characteristics(panel, year, formation_month=6):
    """Sort variables per security at the ``year`` formation date.

    Returns a frame indexed by ``security_id`` with columns ``size, bm, op,
    inv`` and the formation ``cap``; a variable is NaN where the security is
    not eligible for it (no fiscal ``year - 1`` record, non-positive book
    equity for B/M, non-positive total assets for Inv).
    """
    p = formation_period(year, formation_month)
    at = panel.month_slice(p)[["security_id", "market_cap"]].set_index("security_id")
    f = panel.fundamentals
    f = f[f["fiscal_year"] == year - 1].set_index("security_id")
    out = pd.DataFrame(index=at.index)
    out["cap"] = at["market_cap"]
    out["size"] = at["market_cap"]
    f = f.reindex(out.index)
    be = f["book_equity"]
    out["bm"] = (be / out["cap"]).where(be > 0)
    out["op"] = f["operating_profitability"]
    ta, tap = f["total_assets"], f["total_assets_prior"]
    out["inv"] = ((ta - tap) / tap).where((ta > 0) & (tap > 0))
    return out.sort_index()


def _schemes_for(dims):
    if dims == "2x3":
        return "median", "p30_70"
    if dims == "5x5":
        return "quintile", "quintile"
    raise ValueError(f"dims must be '2x3' or '5x5', got {dims!r}")


def assign_cells(panel, formation_year, row, col, dims, formation_month=6):
    """Independent double sort at one formation date.

    Both breakpoint sets are computed over the same eligible universe:
    securities present in the formation month with a valid value of both
    variables.

    Returns
    -------
    pandas.DataFrame
        Indexed by ``security_id`` with ``row_bucket``, ``col_bucket``
        (0-based) and the formation ``cap`` used for weighting.
    """
    row, col = SortVariable(row), SortVariable(col)
    row_scheme, col_scheme = _schemes_for(dims)
    ch = characteristics(panel, formation_year, formation_month)
    elig = ch.dropna(subset=[row.value, col.value])
    need = max(len(SCHEMES[row_scheme]), len(SCHEMES[col_scheme])) + 1
    if len(elig) < need:
        raise SortError(
            f"formation year {formation_year}: {len(elig)} eligible securities for a "
            f"{row.label}-{col.label} {dims} sort, need at least {need}"
        )
    rb = compute_breakpoints(elig[row.value], row_scheme, row)
    cb = compute_breakpoints(elig[col.value], col_scheme, col)
    return pd.DataFrame(
        {
            "row_bucket": rb.assign(elig[row.value]),
            "col_bucket": cb.assign(elig[col.value]),
            "cap": elig["cap"],
        },
        index=elig.index,
    )


def cell_weights(members, panel, period):
    """Formation-cap weights of ``members`` that have a return in ``period``.

    ``members`` maps security id to formation-month cap. Members without a
    record that month are left out and the rest renormalized.
    """
    caps = pd.Series(members, dtype=float)
    present = panel.month_slice(period).set_index("security_id")
    caps = caps[caps.index.isin(present.index)]
    if caps.empty:
        return caps
    return caps / caps.sum()


def cell_return(members, panel, period):
    """Value-weighted excess return of one cell in one month.

    NaN marks an undefined cell (no member traded that month); it is never
    replaced by zero.
    """
    w = cell_weights(members, panel, period)
    if w.empty:
        return math.nan
    ret = panel.month_slice(period).set_index("security_id")["return"].reindex(w.index)
    return float((w * ret).sum() - panel.rf(period))


@dataclass(frozen=True)
class PortfolioGrid:
    """Annually re-formed double-sorted portfolios.

    Attributes
    ----------
    membership : pandas.DataFrame
        ``formation_year, security_id, row_bucket, col_bucket, cap``.
    returns : pandas.DataFrame
        Monthly value-weighted excess returns indexed by period, columns a
        ``(row_bucket, col_bucket)`` MultiIndex; NaN where a cell is empty.
    """

    row: SortVariable
    col: SortVariable
    dims: str
    formation_month: int
    membership: pd.DataFrame
    returns: pd.DataFrame

    @property
    def shape(self):
        return DIMS[self.dims]

    @property
    def name(self):
        return f"{self.row.label}-{self.col.label}"

    def cell(self, row_bucket, col_bucket):
        return self.returns[(row_bucket, col_bucket)]

    def leg(self, row_label, col_label):
        """Cell series by 2x3 leg labels, e.g. ``grid.leg("S", "H")``."""
        r = LEG_LABELS[self.row].index(row_label)
        c = LEG_LABELS[self.col].index(col_label)
        return self.cell(r, c)

    def averages(self):
        """Time-average excess return per cell over its non-empty months."""
        nr, nc = self.shape
        m = self.returns.mean(axis=0, skipna=True)
        return pd.DataFrame(
            [[m[(i, j)] for j in range(nc)] for i in range(nr)],
            index=range(nr),
            columns=range(nc),
        )

    def row_labels(self):
        return LEG_LABELS[self.row] if self.dims == "2x3" else QUINTILE_ROW_LABELS

    def col_labels(self):
        return LEG_LABELS[self.col] if self.dims == "2x3" else QUINTILE_COL_LABELS

    def asset_frame(self):
        """Cells as flat columns ``"<row>-<col>"`` (1-based), for regressions."""
        nr, nc = self.shape
        out = self.returns.copy()
        out.columns = [f"{i + 1}-{j + 1}" for i, j in out.columns]
        return out


def formation_years(panel, formation_month):
    """Formation years whose holding window overlaps the panel."""
    y0, _ = month_of(panel.start)
    y1, _ = month_of(panel.end)
    out = []
    for y in range(y0, y1 + 1):
        p = formation_period(y, formation_month)
        if panel.start <= p < panel.end:
            out.append(y)
    return out


def build_grid(panel, row, col, dims, formation_month=6):
    """Form a 2x3 or 5x5 grid every year and compute monthly cell returns.

    The first holding month is the month after the first formation date in
    the panel; holding windows after the last formation may be truncated by
    the panel end.
    """
    row, col = SortVariable(row), SortVariable(col)
    if not 1 <= formation_month <= 12:
        raise ValueError(f"formation month must be in 1..12, got {formation_month}")
    years = formation_years(panel, formation_month)
    if not years or formation_period(years[0], formation_month) + 12 > panel.end:
        raise SortError(
            f"panel {month_label(panel.start)}..{month_label(panel.end)} does not cover a full "
            f"holding year after a month-{formation_month} formation"
        )
    parts = []
    for y in years:
        cells = assign_cells(panel, y, row, col, dims, formation_month)
        cells = cells.reset_index().rename(columns={"index": "security_id"})
        cells.insert(0, "formation_year", y)
        parts.append(cells)
    membership = pd.concat(parts, ignore_index=True)

    first = formation_period(years[0], formation_month) + 1
    r = panel.returns
    r = r[r["period"] >= first][["security_id", "period", "return"]].copy()
    r["formation_year"] = holding_formation_year(r["period"].to_numpy(), formation_month)
    held = r.merge(membership, on=["formation_year", "security_id"], how="inner")
    held["wr"] = held["cap"] * held["return"]
    g = held.groupby(["period", "row_bucket", "col_bucket"], sort=True)[["wr", "cap"]].sum()
    vw = (g["wr"] / g["cap"]).unstack(["row_bucket", "col_bucket"])

    nr, nc = DIMS[dims]
    periods = pd.RangeIndex(first, panel.end + 1, name="period")
    cols = pd.MultiIndex.from_product([range(nr), range(nc)], names=["row_bucket", "col_bucket"])
    vw = vw.reindex(index=periods, columns=cols)
    excess = vw.sub(panel.riskfree.reindex(periods), axis=0)
    empty = int(excess.isna().to_numpy().sum())
    if empty:
        logger.info("%s %s grid: %d empty cell-months", f"{row.label}-{col.label}", dims, empty)
    return PortfolioGrid(row, col, dims, formation_month, membership, excess)
