"""Synthetic stock panels with a planted five-factor structure.

Excess returns follow ``r_it - rf = alpha_i + b_i MKT_t + s_i SMB_t +
h_i HML_t + r_i RMW_t + c_i CMA_t + e_it`` with Gaussian factors and noise.
Firm characteristics are monotone in the loadings (small caps load on SMB,
high B/M on HML, high OP on RMW, low investment on CMA) so that sorting on
characteristics recovers the loadings.

Random numbers come from ``numpy.random.default_rng(seed)`` (PCG64), drawn
in a fixed order: loadings, characteristic jitter, factors, noise. Golden
outputs depend on that order; do not reorder the draws.
"""

import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .factors import BASE_FACTORS
from .panel import make_panel, month_index, write_panel
from .sorts import SortVariable, build_grid

logger = logging.getLogger(__name__)

LOADINGS = ("b", "s", "h", "r", "c")
DESIGNS = ("random", "factorial")

_DEFAULT_MEANS = (0.006, 0.004, 0.003, 0.003, 0.003)
_DEFAULT_VOLS = (0.05, 0.03, 0.025, 0.02, 0.02)


def _diag_cov(vols):
    return tuple(tuple((v * v if i == j else 0.0) for j, v in enumerate(vols)) for i in range(len(vols)))


@dataclass(frozen=True)
class DgpConfig:
    """Parameters of the synthetic data-generating process.

    ``design="factorial"`` ignores the loading ranges and uses a balanced
    design of 200 securities (or a multiple of 200) in which every 2x3 leg
    has exactly unit exposure to its own factor and none to the others, so
    that noiseless panels reproduce the true factors exactly.
    """

    n_securities: int = 200
    n_months: int = 240
    seed: int = 0
    start_year: int = 2005
    start_month: int = 1
    factor_means: tuple = _DEFAULT_MEANS
    factor_cov: tuple = _diag_cov(_DEFAULT_VOLS)
    loading_b: tuple = (0.8, 1.2)
    loading_s: tuple = (-0.5, 1.5)
    loading_h: tuple = (-0.5, 1.0)
    loading_r: tuple = (-0.5, 1.0)
    loading_c: tuple = (-0.5, 1.0)
    alpha: object = 0.0
    idio_vol: float = 0.05
    rf: float = 0.002
    char_jitter: float = 0.05
    design: str = "random"

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"design must be one of {DESIGNS}, got {self.design!r}")
        if self.n_securities < 1:
            raise ValueError("n_securities must be positive")
        if self.design == "factorial" and self.n_securities % 200:
            raise ValueError("factorial design needs a multiple of 200 securities")
        if self.n_months <= 5 + 25:
            raise ValueError("n_months must exceed 30 so a 25-asset five-factor GRS is feasible")
        if self.idio_vol < 0 or self.char_jitter < 0:
            raise ValueError("volatilities must be non-negative")
        if len(self.factor_means) != 5:
            raise ValueError("factor_means needs 5 values")
        cov = np.asarray(self.factor_cov, dtype=float)
        if cov.shape != (5, 5):
            raise ValueError("factor_cov must be 5x5")
        for name in LOADINGS:
            lo, hi = getattr(self, f"loading_{name}")
            if lo > hi:
                raise ValueError(f"loading_{name} range is reversed")
        np.broadcast_to(np.asarray(self.alpha, dtype=float), (self.n_securities,))
        _psd_root(cov)

    def loading_range(self, name):
        return getattr(self, f"loading_{name}")


def _psd_root(cov, tol=1e-14):
    """Lower-triangular ``L`` with ``L L' = cov``, allowing zero pivots.

    A plain Cholesky with zero columns for numerically null directions; it
    is deterministic (unlike an eigendecomposition, whose sign conventions
    vary across LAPACK builds).
    """
    cov = np.asarray(cov, dtype=float)
    if np.max(np.abs(cov - cov.T)) > 1e-12:
        raise ValueError("factor covariance is not symmetric")
    n = cov.shape[0]
    scale = max(float(np.max(np.abs(np.diag(cov)))), 0.0)
    eps = tol * max(scale, 1e-300)
    L = np.zeros_like(cov)
    for j in range(n):
        pivot = cov[j, j] - L[j, :j] @ L[j, :j]
        if pivot < -eps:
            raise ValueError("factor covariance is not positive semi-definite")
        if pivot <= eps:
            rest = cov[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]
            if np.any(np.abs(rest) > math.sqrt(eps) * max(math.sqrt(scale), 1e-300)):
                raise ValueError("factor covariance is not positive semi-definite")
            continue
        L[j, j] = math.sqrt(pivot)
        L[j + 1:, j] = (cov[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


@dataclass(frozen=True)
class Simulation:
    """A simulated panel together with the truth that generated it."""

    panel: object
    factors: pd.DataFrame
    loadings: pd.DataFrame
    config: DgpConfig = field(repr=False)

    def excess_returns(self):
        """Security excess returns as a months x securities frame."""
        r = self.panel.returns.pivot(index="period", columns="security_id", values="return")
        return r.sub(self.panel.riskfree.reindex(r.index), axis=0)


def _scale(u, lo, hi):
    return lo + (hi - lo) * u


def _centered(values, lo, hi):
    # position of each loading in its range, mapped to [-1, 1]
    if hi == lo:
        return np.zeros_like(values)
    return 2.0 * (values - lo) / (hi - lo) - 1.0


def _random_design(cfg, rng):
    n = cfg.n_securities
    u = rng.uniform(size=(n, 5))
    jitter = rng.standard_normal((n, 4)) * cfg.char_jitter
    load = np.column_stack([_scale(u[:, k], *cfg.loading_range(name)) for k, name in enumerate(LOADINGS)])
    z = {name: _centered(load[:, k], *cfg.loading_range(name)) for k, name in enumerate(LOADINGS)}
    cap = 1e9 * np.exp(-2.0 * z["s"] + jitter[:, 0])
    bm = 0.5 * np.exp(1.0 * z["h"] + jitter[:, 1])
    op = 0.08 + 0.06 * z["r"] + 0.06 * jitter[:, 2]
    inv = 0.10 - 0.08 * z["c"] + 0.08 * jitter[:, 3]
    return load, cap, bm, op, inv


def _factorial_design(cfg, rng):
    # draws are still consumed so the factor/noise streams line up with "random"
    n = cfg.n_securities
    rng.uniform(size=(n, 5))
    rng.standard_normal((n, 4))
    i = np.arange(n)
    half = (i // 100) % 2  # 0 small, 1 big
    k = i % 100
    bm_sym, op_sym = k % 10, k // 10
    inv_sym = (bm_sym + op_sym) % 10

    def leg(sym):
        # 30% / 40% / 30% of each size half
        return np.where(sym <= 2, -0.5, np.where(sym <= 6, 0.0, 0.5))

    cap_small, cap_big = 1e9, 4e9
    s_small = cap_big / (cap_small + cap_big)
    cap = np.where(half == 0, cap_small, cap_big)
    load = np.column_stack([
        np.ones(n),
        np.where(half == 0, s_small, s_small - 1.0),
        leg(bm_sym),
        leg(op_sym),
        -leg(inv_sym),
    ])
    bm = 0.3 + 0.1 * bm_sym
    op = 0.02 * op_sym
    inv = 0.02 * inv_sym
    return load, cap, bm, op, inv


def simulate_panel(cfg):
    """Generate a panel, its true factor series and true loadings.

    Returns
    -------
    Simulation
        ``panel`` (clean flags, listings long seasoned),
        ``factors`` (``MKT..CMA`` and ``RF`` by period) and ``loadings``
        (``alpha, b, s, h, r, c`` by security id).
    """
    rng = np.random.default_rng(cfg.seed)
    design = _factorial_design if cfg.design == "factorial" else _random_design
    load, cap, bm, op, inv = design(cfg, rng)
    n, T = cfg.n_securities, cfg.n_months

    root = _psd_root(cfg.factor_cov)
    f = np.asarray(cfg.factor_means, dtype=float) + rng.standard_normal((T, 5)) @ root.T
    e = rng.standard_normal((T, n)) * cfg.idio_vol
    alpha = np.broadcast_to(np.asarray(cfg.alpha, dtype=float), (n,))
    excess = alpha + f @ load.T + e
    ret = cfg.rf + excess
    if np.any(ret <= -1):
        raise ValueError("simulated return at or below -100%; lower the volatilities")

    if cfg.design == "random":
        # month-end cap moves with that month's return; static caps would make
        # MKT an exact combination of any set of partitioning portfolios
        caps = cap * (1.0 + ret)
    else:
        caps = np.broadcast_to(cap, ret.shape)
    width = max(3, len(str(n)))
    ids = np.array([f"S{j + 1:0{width}d}" for j in range(n)])
    start = month_index(cfg.start_year, cfg.start_month)
    periods = np.arange(start, start + T)
    returns = pd.DataFrame({
        "security_id": np.tile(ids, T),
        "period": np.repeat(periods, n),
        "return": ret.ravel(),
        "market_cap": caps.ravel(),
        "is_st_pt": False,
        "is_financial": False,
        "ipo_period": start - 120,
    })
    years = np.arange(cfg.start_year - 1, cfg.start_year + (cfg.start_month - 1 + T) // 12 + 1)
    ta_prior = 1000.0
    fundamentals = pd.DataFrame({
        "security_id": np.repeat(ids, len(years)),
        "fiscal_year": np.tile(years, n),
        "book_equity": np.repeat(bm * cap, len(years)),
        "operating_profitability": np.repeat(op, len(years)),
        "total_assets": np.repeat(ta_prior * (1.0 + inv), len(years)),
        "total_assets_prior": ta_prior,
    })
    rf = pd.Series(cfg.rf, index=periods)
    panel = make_panel(returns, fundamentals, rf, start, start + T - 1)

    factors = pd.DataFrame(f, index=pd.Index(periods, name="period"), columns=list(BASE_FACTORS))
    factors["RF"] = cfg.rf
    loadings = pd.DataFrame(load, index=pd.Index(ids, name="security_id"), columns=list(LOADINGS))
    loadings.insert(0, "alpha", alpha)
    return Simulation(panel, factors, loadings, cfg)


def write_simulation(sim, directory):
    """Write the panel CSVs plus ``true_factors.csv`` and ``true_loadings.csv``."""
    from .reports import write_factors_csv

    directory = Path(directory)
    write_panel(sim.panel, directory)
    write_factors_csv(sim.factors, directory / "true_factors.csv")
    sim.loadings.to_csv(directory / "true_loadings.csv", float_format="%.10g", lineterminator="\n")
    return directory


# --- key-value configuration -------------------------------------------------

_TUPLE_KEYS = {"factor_means", "loading_b", "loading_s", "loading_h", "loading_r", "loading_c"}


def parse_key_values(text, source="<config>"):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def _floats(value):
    return tuple(float(v) for v in value.replace(";", ",").split(",") if v.strip())


def dgp_config_from_mapping(values, **overrides):
    """Build a :class:`DgpConfig` from string key-values.

    Besides the dataclass fields, ``factor_vols`` (5 values) with an optional
    ``factor_corr`` (25 values, row-major) may replace ``factor_cov``.
    """
    known = {f.name for f in fields(DgpConfig)}
    kw = {}
    values = dict(values)
    vols = values.pop("factor_vols", None)
    corr = values.pop("factor_corr", None)
    for key, value in values.items():
        if key not in known:
            raise ValueError(f"unknown simulation key {key!r}")
        if key in ("n_securities", "n_months", "seed", "start_year", "start_month"):
            kw[key] = int(value)
        elif key in ("idio_vol", "rf", "char_jitter"):
            kw[key] = float(value)
        elif key == "design":
            kw[key] = value
        elif key == "alpha":
            a = _floats(value)
            kw[key] = a[0] if len(a) == 1 else a
        elif key == "factor_cov":
            c = _floats(value)
            if len(c) != 25:
                raise ValueError("factor_cov needs 25 values (row-major 5x5)")
            kw[key] = tuple(tuple(c[5 * i:5 * i + 5]) for i in range(5))
        elif key in _TUPLE_KEYS:
            kw[key] = _floats(value)
    if vols is not None:
        if "factor_cov" in kw:
            raise ValueError("give either factor_cov or factor_vols, not both")
        v = np.asarray(_floats(vols))
        rho = np.eye(5) if corr is None else np.asarray(_floats(corr)).reshape(5, 5)
        cov = rho * np.outer(v, v)
        kw["factor_cov"] = tuple(tuple(float(x) for x in row) for row in cov)
    elif corr is not None:
        raise ValueError("factor_corr needs factor_vols")
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return DgpConfig(**kw)


def load_dgp_config(path, **overrides):
    text = Path(path).read_text(encoding="utf-8")
    return dgp_config_from_mapping(parse_key_values(text, str(path)), **overrides)


# --- planted-effect diagnostics -------------------------------------------------

@dataclass(frozen=True)
class GridEffect:
    grid: str
    averages: pd.DataFrame
    size_direction: int
    col_direction: int
    row_violations: int
    col_violations: int
    small_beats_big: tuple

    @property
    def size_effect_holds(self):
        return self.size_direction != 0 and all(self.small_beats_big)


@dataclass(frozen=True)
class EffectReport:
    grids: tuple

    def __getitem__(self, name):
        for g in self.grids:
            if g.grid == name:
                return g
        raise KeyError(name)

    def lines(self):
        out = []
        for g in self.grids:
            out.append(
                f"{g.grid}: size direction {g.size_direction:+d}, row violations {g.row_violations}; "
                f"column direction {g.col_direction:+d}, column violations {g.col_violations}; "
                f"Small>Big in {sum(g.small_beats_big)}/{len(g.small_beats_big)} columns"
            )
        return out


def _planted_direction(cfg, loading, mean, orientation):
    lo, hi = cfg.loading_range(loading)
    if cfg.design == "random" and hi == lo:
        return 0
    return int(np.sign(mean)) * orientation


def _violations(values, direction):
    # adjacent pairs that move against the planted direction
    if direction == 0:
        return 0
    d = np.diff(values)
    return int(np.sum(d * direction < 0))


def planted_effect_check(panel, truth, formation_month=6):
    """Compare 5x5 grid averages with the directions the generator planted.

    Rows run from Small to Big; with a positive SMB premium and small caps
    loading on SMB, averages should fall down each column. Columns should
    rise with B/M (HML premium), with OP (RMW premium) and fall with
    investment (CMA premium). Violations count adjacent cells that move the
    wrong way; a zero direction means nothing was planted.
    """
    cfg = truth.config if isinstance(truth, Simulation) else truth
    means = dict(zip(BASE_FACTORS, cfg.factor_means))
    size_dir = -_planted_direction(cfg, "s", means["SMB"], 1)
    col_dirs = {
        SortVariable.BM: _planted_direction(cfg, "h", means["HML"], 1),
        SortVariable.OP: _planted_direction(cfg, "r", means["RMW"], 1),
        SortVariable.INV: _planted_direction(cfg, "c", means["CMA"], -1),
    }
    out = []
    for var, cdir in col_dirs.items():
        grid = build_grid(panel, SortVariable.SIZE, var, "5x5", formation_month)
        avg = grid.averages()
        a = avg.to_numpy()
        row_v = sum(_violations(a[:, j], size_dir) for j in range(a.shape[1]))
        col_v = sum(_violations(a[i, :], cdir) for i in range(a.shape[0]))
        small_big = tuple(bool(a[0, j] > a[-1, j]) for j in range(a.shape[1]))
        out.append(GridEffect(grid.name, avg, size_dir, cdir, row_v, col_v, small_big))
    return EffectReport(tuple(out))


def with_seed(cfg, seed):
    return replace(cfg, seed=int(seed))
