"""File exports and paper-style text tables.

Machine-readable files hold decimal fractions. Only the text tables of
average portfolio returns and mean absolute alphas are scaled to percent.
"""

import csv
import json
import math

import numpy as np
import pandas as pd

from .panel import month_of
from .sorts import QUINTILE_COL_LABELS, QUINTILE_ROW_LABELS

MODEL_NAMES = {
    frozenset(("MKT", "SMB", "HML")): "three-factor",
    frozenset(("MKT", "SMB", "HML", "CMA")): "four-factor",
    frozenset(("MKT", "SMB", "HML", "RMW", "CMA")): "five-factor",
    frozenset(("MKT", "SMB", "HMLO", "RMW", "CMA")): "five-factor (HMLO)",
    frozenset(("MKT", "SMB", "HML", "RMW", "CMAO")): "five-factor (CMAO)",
    frozenset(("MKT", "SMB", "HMLO", "RMW", "CMAO")): "five-factor (HMLO, CMAO)",
}

# slope symbol per factor, as in the coefficient grids
COEF_SYMBOLS = {"MKT": "b", "SMB": "s", "HML": "h", "HMLO": "h", "RMW": "r", "CMA": "c", "CMAO": "c"}


def model_name(factors):
    return MODEL_NAMES.get(frozenset(factors), "+".join(factors))


def _num(x, fmt="%.10g"):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return fmt % x


def stars(p):
    if p is None or math.isnan(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


# --- factors -----------------------------------------------------------------------

def write_factors_csv(factors, path):
    """``year,month,mkt,smb,hml,rmw,cma,rf[,hmlo,cmao]`` at 10 significant digits."""
    cols = ["MKT", "SMB", "HML", "RMW", "CMA", "RF"] + [c for c in ("HMLO", "CMAO") if c in factors]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["year", "month"] + [c.lower() for c in cols])
        for period, row in zip(factors.index, factors[cols].to_numpy()):
            y, m = month_of(period)
            w.writerow([y, m] + [_num(float(v)) for v in row])
    return path


def read_factors_csv(path):
    df = pd.read_csv(path)
    df.index = pd.Index(df["year"] * 12 + df["month"] - 1, name="period")
    df = df.drop(columns=["year", "month"])
    df.columns = [c.upper() for c in df.columns]
    return df


def render_factor_summary(summary, corr):
    lines = ["Factor summary (monthly, decimal)", f"{'':<6}{'mean':>14}{'std':>14}"]
    for name, row in summary.iterrows():
        lines.append(f"{name:<6}{row['mean']:>14.6f}{row['std']:>14.6f}")
    lines.append("")
    lines.append("Correlation matrix")
    lines.append(f"{'':<6}" + "".join(f"{c:>10}" for c in corr.columns))
    for name, row in corr.iterrows():
        lines.append(f"{name:<6}" + "".join(f"{_num(float(v), '%.4f') or 'n/a':>10}" for v in row))
    return "\n".join(lines)


# --- grids -------------------------------------------------------------------------

def write_grid_csv(grid, path):
    """Long monthly series: ``row_bucket,col_bucket,year,month,excess_return``."""
    nr, nc = grid.shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["row_bucket", "col_bucket", "year", "month", "excess_return"])
        for i in range(nr):
            for j in range(nc):
                s = grid.cell(i, j)
                for period, v in zip(s.index, s.to_numpy()):
                    y, m = month_of(period)
                    w.writerow([i + 1, j + 1, y, m, _num(float(v))])
    return path


def write_grid_summary_csv(grid, path):
    avg = grid.averages()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["row_bucket", "col_bucket", "avg_excess_return_pct"])
        for i in avg.index:
            for j in avg.columns:
                w.writerow([i + 1, j + 1, _num(100.0 * float(avg.loc[i, j]), "%.6f")])
    return path


def render_grid_table(grid, title=None):
    """Average monthly excess returns in percent, rows Small..Big."""
    avg = grid.averages() * 100.0
    rows = list(grid.row_labels())
    cols = list(grid.col_labels())
    head = title or f"{grid.row.label}-{grid.col.label}"
    width = max(len(head), 6)
    lines = [f"{head:<{width}}" + "".join(f"{c:>12}" for c in cols)]
    for i, r in enumerate(rows):
        cells = "".join(f"{_num(float(v), '%.6f'):>12}" for v in avg.iloc[i].to_numpy())
        lines.append(f"{r:<{width}}" + cells)
    return "\n".join(lines)


def grid_json(grid):
    avg = grid.averages() * 100.0
    return {
        "grid": grid.name,
        "dims": grid.dims,
        "rows": list(grid.row_labels()),
        "columns": list(grid.col_labels()),
        "avg_excess_return_pct": [[None if math.isnan(v) else float(v) for v in row] for row in avg.to_numpy()],
    }


# --- regressions -------------------------------------------------------------------

def render_regression(result, depvar="excess_return"):
    """Single regression in the layout of a Stata ``regress`` table.

    The intercept is listed last as ``_cons``.
    """
    names = list(result.names)
    order = [i for i, n in enumerate(names) if n != "const"] + [i for i, n in enumerate(names) if n == "const"]
    root_mse = result.sigma
    lines = [
        f"{'Number of obs':>14} = {result.n_obs}",
        f"{'R-squared':>14} = {result.r_squared:.4f}",
        f"{'Adj R-squared':>14} = {result.adj_r_squared:.4f}",
        f"{'Root MSE':>14} = {root_mse:.6g}",
        "",
        f"{depvar[:12]:<12} {'Coef.':>12} {'Std. Err.':>12} {'t':>9} {'P>|t|':>7}",
    ]
    for i in order:
        label = "_cons" if names[i] == "const" else names[i]
        lines.append(
            f"{label:<12} {result.coefficients[i]:>12.7g} {result.std_errors[i]:>12.7g} "
            f"{result.t_stats[i]:>9.2f} {result.p_values[i]:>7.3f}"
        )
    return "\n".join(lines)


REGRESSION_CSV_HEADER = ["model", "asset", "term", "coef", "std_err", "t", "p_value", "r_squared", "adj_r_squared", "n_obs"]


def regression_rows(result, model, asset):
    rows = []
    for name, b, se, t, p in zip(result.names, result.coefficients, result.std_errors, result.t_stats, result.p_values):
        rows.append([model, asset, name, _num(b), _num(se), _num(t), _num(p),
                     _num(result.r_squared), _num(result.adj_r_squared), result.n_obs])
    return rows


def write_regression_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(REGRESSION_CSV_HEADER)
        w.writerows(rows)
    return path


def coefficient_grids(fit, factor, shape=(5, 5)):
    """Slope and t-statistic grids for one factor across 5x5 test assets."""
    coef = fit.coefficient_frame("coef")[factor].to_numpy().reshape(shape)
    tst = fit.coefficient_frame("t")[factor].to_numpy().reshape(shape)
    pv = fit.coefficient_frame("p")[factor].to_numpy().reshape(shape)
    return coef, tst, pv


def render_coefficient_grid(fit, factor, title):
    """Side-by-side slope (with stars) and t-statistic blocks."""
    sym = COEF_SYMBOLS.get(factor, factor)
    coef, tst, pv = coefficient_grids(fit, factor)
    lines = [title, f"{'':<6}{sym:<45}t({sym})"]
    for i, r in enumerate(QUINTILE_ROW_LABELS):
        left = "".join(f"{f'{coef[i, j]:.2f}{stars(pv[i, j])}':>9}" for j in range(5))
        right = "".join(f"{tst[i, j]:>8.2f}" for j in range(5))
        lines.append(f"{r:<6}{left}{right}")
    return "\n".join(lines)


# --- GRS ---------------------------------------------------------------------------

GRS_CSV_HEADER = ["assets", "model", "grs", "df1", "df2", "p_value", "mean_abs_alpha"]


def grs_row(assets, factors, grs):
    return [assets, model_name(factors), _num(grs.statistic), grs.df1, grs.df2,
            _num(grs.p_value), _num(grs.mean_abs_alpha)]


def write_grs_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(GRS_CSV_HEADER)
        w.writerows(rows)
    return path


def render_grs_line(assets, factors, grs):
    """``25 Size-Inv, five-factor, GRS=1.670, ..., A|a|=0.067`` (A|a| in percent)."""
    return (
        f"{assets}, {model_name(factors)}, GRS={grs.statistic:.3f}{stars(grs.p_value)}, "
        f"df=({grs.df1},{grs.df2}), p={grs.p_value:.4f}, A|a|={100.0 * grs.mean_abs_alpha:.3f}"
    )


def to_json(obj):
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"cannot serialise {type(o).__name__}")

    def clean(o):
        if isinstance(o, float) and math.isnan(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=True, default=default) + "\n"
