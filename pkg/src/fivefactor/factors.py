"""Monthly factor construction, orthogonalization and factor correlations.

Factor values are decimal monthly returns. A month where any input cell is
empty is NaN for the affected factor; regressions drop such months.
"""

import logging

import numpy as np
import pandas as pd

from .econometrics import ols
from .sorts import LEG_LABELS, SortVariable, build_grid

logger = logging.getLogger(__name__)

BASE_FACTORS = ("MKT", "SMB", "HML", "RMW", "CMA")
FACTOR_COLUMNS = BASE_FACTORS + ("RF",)

# (high leg, low leg) column buckets in the corresponding 2x3 grid
_SPREAD_LEGS = {
    "HML": (SortVariable.BM, "H", "L"),
    "RMW": (SortVariable.OP, "R", "W"),
    "CMA": (SortVariable.INV, "C", "A"),
}


class FactorError(ValueError):
    pass


def build_mkt(panel, period):
    """Value-weighted market excess return for one month.

    Weights are the previous month's market caps of every security in the
    (filtered) panel that also has a return this month.
    """
    now = panel.month_slice(period).set_index("security_id")["return"]
    prev = panel.month_slice(period - 1).set_index("security_id")["market_cap"]
    common = now.index.intersection(prev.index)
    if common.empty:
        raise FactorError(f"empty market universe in period {period}")
    w = prev.loc[common] / prev.loc[common].sum()
    return float((w * now.loc[common]).sum() - panel.rf(period))


def mkt_series(panel):
    """:func:`build_mkt` for every month; NaN where the universe is empty."""
    r = panel.returns[["security_id", "period", "return", "market_cap"]]
    prev = r[["security_id", "period", "market_cap"]].copy()
    prev["period"] = prev["period"] + 1
    j = r[["security_id", "period", "return"]].merge(
        prev.rename(columns={"market_cap": "w"}), on=["security_id", "period"], how="inner"
    )
    j["wr"] = j["w"] * j["return"]
    g = j.groupby("period", sort=True)[["wr", "w"]].sum()
    idx = pd.RangeIndex(panel.start, panel.end + 1, name="period")
    vw = (g["wr"] / g["w"]).reindex(idx)
    return (vw - panel.riskfree.reindex(idx)).rename("MKT")


def _grid_smb(grid):
    small = [grid.leg("S", c) for c in LEG_LABELS[grid.col]]
    big = [grid.leg("B", c) for c in LEG_LABELS[grid.col]]
    return (small[0] + small[1] + small[2]) / 3.0 - (big[0] + big[1] + big[2]) / 3.0


def smb_series(grids):
    """Average of the three small-minus-big spreads of the 2x3 grids."""
    grids = list(grids)
    if len(grids) != 3:
        raise FactorError(f"SMB needs the three 2x3 size grids, got {len(grids)}")
    if sorted(g.col.value for g in grids) != sorted(v.value for v in (SortVariable.BM, SortVariable.OP, SortVariable.INV)):
        raise FactorError("SMB needs one Size-B/M, one Size-OP and one Size-Inv grid")
    by_col = {g.col: _grid_smb(g) for g in grids}
    smb = (by_col[SortVariable.BM] + by_col[SortVariable.OP] + by_col[SortVariable.INV]) / 3.0
    return smb.rename("SMB")


def build_smb(grids, period):
    return float(smb_series(grids).loc[period])


def spread_series(grid, kind):
    """HML, RMW or CMA from its 2x3 grid: mean high leg minus mean low leg."""
    kind = kind.upper()
    if kind not in _SPREAD_LEGS:
        raise ValueError(f"kind must be HML, RMW or CMA, got {kind!r}")
    var, hi, lo = _SPREAD_LEGS[kind]
    if grid.row is not SortVariable.SIZE or grid.col is not var or grid.dims != "2x3":
        raise FactorError(f"{kind} needs a 2x3 Size-{var.label} grid, got {grid.dims} {grid.name}")
    out = (grid.leg("S", hi) + grid.leg("B", hi)) / 2.0 - (grid.leg("S", lo) + grid.leg("B", lo)) / 2.0
    return out.rename(kind)


def build_hml_rmw_cma(grid, kind, period):
    return float(spread_series(grid, kind).loc[period])


def build_factor_grids(panel, formation_month=6):
    """The three 2x3 size grids keyed by their column variable."""
    return {
        v: build_grid(panel, SortVariable.SIZE, v, "2x3", formation_month)
        for v in (SortVariable.BM, SortVariable.OP, SortVariable.INV)
    }


def build_factors(panel, formation_month=6, grids=None):
    """Monthly ``MKT, SMB, HML, RMW, CMA, RF`` over the holding span.

    The index covers every month from the first holding month to the panel
    end; months with an empty 2x3 cell carry NaN in the affected factors.
    """
    if grids is None:
        grids = build_factor_grids(panel, formation_month)
    smb = smb_series(grids.values())
    idx = smb.index
    out = pd.DataFrame(index=idx)
    out["MKT"] = mkt_series(panel).reindex(idx)
    out["SMB"] = smb
    out["HML"] = spread_series(grids[SortVariable.BM], "HML")
    out["RMW"] = spread_series(grids[SortVariable.OP], "RMW")
    out["CMA"] = spread_series(grids[SortVariable.INV], "CMA")
    out["RF"] = panel.riskfree.reindex(idx)
    bad = int(out[list(BASE_FACTORS)].isna().any(axis=1).sum())
    if bad:
        logger.warning("%d of %d factor months undefined (empty cells); excluded downstream", bad, len(out))
    return out


def orthogonalize(target, regressors):
    """Intercept plus residual of ``target`` regressed on ``regressors``.

    The result has the regression intercept as its mean and zero sample
    covariance with every regressor. Months missing in any input are NaN.
    """
    target = pd.Series(target)
    regressors = pd.DataFrame(regressors)
    data = pd.concat([target.rename("__y"), regressors], axis=1).dropna()
    k = regressors.shape[1]
    if len(data) < k + 2:
        raise FactorError(f"orthogonalization needs at least {k + 2} complete months, got {len(data)}")
    res = ols(data["__y"], data.drop(columns="__y"))
    out = pd.Series(res.intercept + res.residuals, index=data.index)
    return out.reindex(target.index).rename(f"{target.name}O" if target.name else None)


def add_orthogonalized(factors):
    """Return a copy with ``HMLO`` and ``CMAO`` appended.

    HMLO is HML purged of MKT, SMB, RMW and CMA; CMAO is CMA purged of MKT,
    SMB, HML and RMW.
    """
    out = factors.copy()
    out["HMLO"] = orthogonalize(factors["HML"], factors[["MKT", "SMB", "RMW", "CMA"]])
    out["CMAO"] = orthogonalize(factors["CMA"], factors[["MKT", "SMB", "HML", "RMW"]])
    return out


def factor_correlations(series, columns=BASE_FACTORS):
    """Pearson correlation matrix of the factor columns (complete months only)."""
    data = pd.DataFrame(series)[list(columns)].dropna()
    if len(data) < 3:
        raise FactorError(f"correlations need at least 3 complete months, got {len(data)}")
    x = data.to_numpy(dtype=float)
    xc = x - x.mean(axis=0)
    ss = np.sqrt(np.sum(xc * xc, axis=0))
    flat = [c for c, s in zip(columns, ss) if not s > 0]
    if flat:
        raise FactorError(f"zero-variance factor column(s): {', '.join(flat)}")
    corr = (xc.T @ xc) / np.outer(ss, ss)
    corr = (corr + corr.T) / 2.0
    np.fill_diagonal(corr, 1.0)
    return pd.DataFrame(corr, index=list(columns), columns=list(columns))


def factor_summary(series, columns=BASE_FACTORS):
    """Mean and sample standard deviation per factor over complete months."""
    data = pd.DataFrame(series)[list(columns)].dropna()
    return pd.DataFrame({"mean": data.mean(), "std": data.std(ddof=1)})
