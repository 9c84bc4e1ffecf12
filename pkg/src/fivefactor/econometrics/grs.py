"""Gibbons-Ross-Shanken test and batch time-series factor regressions."""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .distributions import f_sf
from .linalg import solve_spd
from .regression import ols

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GrsResult:
    statistic: float
    df1: int
    df2: int
    p_value: float
    mean_abs_alpha: float


def grs_test(alpha, residuals, factors):
    """Joint test that all intercepts of a set of factor regressions are zero.

    Parameters
    ----------
    alpha : array_like, shape (n,)
        Intercepts of the ``n`` test-asset regressions.
    residuals : array_like, shape (t, n)
        Residuals of those regressions, one column per asset, on a common
        sample of ``t`` months.
    factors : array_like, shape (t, l) or (t,)
        The ``l`` factor series used as regressors.

    Returns
    -------
    GrsResult
        ``statistic = (t-n-l)/n * a' S^-1 a / (1 + m' W^-1 m)`` where ``S``
        and ``W`` are the residual and factor covariance matrices with
        divisor ``t`` and ``m`` the factor means; F(n, t-n-l) under the null.
    """
    alpha = np.asarray(alpha, dtype=float).ravel()
    resid = np.asarray(residuals, dtype=float)
    f = np.asarray(factors, dtype=float)
    if resid.ndim == 1:
        resid = resid[:, None]
    if f.ndim == 1:
        f = f[:, None]
    t, n = resid.shape
    l = f.shape[1]
    if alpha.shape[0] != n:
        raise ValueError(f"{alpha.shape[0]} alphas but {n} residual columns")
    if f.shape[0] != t:
        raise ValueError(f"residuals have {t} rows but factors have {f.shape[0]}")
    if t <= n + l:
        raise ValueError(f"GRS needs t > n + l, got t={t}, n={n}, l={l}")
    df2 = t - n - l
    if not np.any(alpha):
        return GrsResult(0.0, n, df2, 1.0, 0.0)

    sigma = resid.T @ resid / t
    mu = f.mean(axis=0)
    fc = f - mu
    omega = fc.T @ fc / t
    quad_alpha = float(alpha @ solve_spd(sigma, alpha))
    quad_mu = float(mu @ solve_spd(omega, mu))
    stat = df2 / n * quad_alpha / (1.0 + quad_mu)
    stat = max(stat, 0.0)
    return GrsResult(
        statistic=stat,
        df1=n,
        df2=df2,
        p_value=f_sf(stat, n, df2),
        mean_abs_alpha=float(np.mean(np.abs(alpha))),
    )


@dataclass(frozen=True)
class FactorModelFit:
    """Time-series regressions of several test assets on one factor set."""

    assets: tuple
    factors: tuple
    results: tuple
    grs: GrsResult
    months: pd.Index

    @property
    def alphas(self):
        return pd.Series([r.intercept for r in self.results], index=list(self.assets))

    def coefficient_frame(self, what="coef"):
        """Assets x parameters frame of ``coef``, ``t``, ``std_err`` or ``p``."""
        attr = {"coef": "coefficients", "t": "t_stats", "std_err": "std_errors", "p": "p_values"}[what]
        rows = [getattr(r, attr) for r in self.results]
        return pd.DataFrame(rows, index=list(self.assets), columns=list(self.results[0].names))


EXACT_FIT_RTOL = 1e-10


def _exactly_priced(results, assets):
    scale = max(float(np.max(np.abs(assets))), np.finfo(float).tiny)
    for r in results:
        rms = np.sqrt(r.rss / r.n_obs)
        if rms > EXACT_FIT_RTOL * scale or abs(r.intercept) > EXACT_FIT_RTOL * scale:
            return False
    return True


def fit_factor_model(assets, factors):
    """Regress each column of ``assets`` on ``factors`` and run GRS.

    Months where any asset or factor is missing are dropped for every
    regression, so all fits share one sample (listwise deletion).
    """
    assets = pd.DataFrame(assets)
    factors = pd.DataFrame(factors)
    joined = assets.join(factors, how="inner", lsuffix="_asset")
    complete = joined.dropna()
    dropped = len(joined) - len(complete)
    if dropped:
        logger.info("dropped %d incomplete months before factor regressions", dropped)
    a = complete.iloc[:, : assets.shape[1]]
    f = complete.iloc[:, assets.shape[1]:]
    fnames = [str(c) for c in factors.columns]
    results = tuple(ols(a.iloc[:, j], f.to_numpy(), names=fnames) for j in range(a.shape[1]))
    alpha = np.array([r.intercept for r in results])
    resid = np.column_stack([r.residuals for r in results])
    if _exactly_priced(results, a.to_numpy()):
        # residual covariance is numerically zero; the alphas are round-off
        logger.info("test assets are exact factor combinations; GRS set to 0")
        alpha = np.zeros_like(alpha)
    grs = grs_test(alpha, resid, f.to_numpy())
    return FactorModelFit(
        assets=tuple(assets.columns),
        factors=tuple(fnames),
        results=results,
        grs=grs,
        months=complete.index,
    )
