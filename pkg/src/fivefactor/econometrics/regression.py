"""Ordinary least squares with classical (homoskedastic) inference."""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .distributions import t_two_sided_p
from .linalg import SingularMatrixError, inverse_spd


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class RegressionResult:
    """Coefficients and classical inference from one OLS fit.

    Coefficient order is the design order; when an intercept was added it
    comes first under the name ``"const"``.
    """

    names: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    adj_r_squared: float
    residuals: np.ndarray
    fitted: np.ndarray
    n_obs: int
    n_params: int
    has_intercept: bool
    rss: float
    tss: float
    index: object = field(default=None, compare=False)

    @property
    def df_resid(self):
        return self.n_obs - self.n_params

    @property
    def sigma(self):
        return float(np.sqrt(self.rss / self.df_resid))

    @property
    def intercept(self):
        if not self.has_intercept:
            raise AttributeError("regression was fit without an intercept")
        return float(self.coefficients[0])

    def params(self):
        return pd.Series(self.coefficients, index=list(self.names))

    def table(self):
        return pd.DataFrame(
            {
                "coef": self.coefficients,
                "std_err": self.std_errors,
                "t": self.t_stats,
                "p": self.p_values,
            },
            index=list(self.names),
        )


def ols(y, X, add_intercept=True, names=None):
    """Fit ``y`` on the columns of ``X`` by least squares.

    Parameters
    ----------
    y : array_like, shape (n,)
        Dependent variable. A ``pandas.Series`` keeps its index on the result.
    X : array_like, shape (n, k) or (n,)
        Regressors; may have zero columns when ``add_intercept`` is set.
    add_intercept : bool
        Prepend a column of ones.
    names : sequence of str, optional
        Regressor names; taken from ``X.columns`` for DataFrames.

    Returns
    -------
    RegressionResult

    Notes
    -----
    Standard errors are ``sqrt(diag(s2 (X'X)^-1))`` with
    ``s2 = RSS / (n - k)``; p-values come from the t distribution with
    ``n - k`` degrees of freedom.
    """
    index = y.index if isinstance(y, pd.Series) else None
    if names is None:
        if isinstance(X, pd.DataFrame):
            names = [str(c) for c in X.columns]
        elif isinstance(X, pd.Series):
            names = [str(X.name)]
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    n = y.shape[0]
    if X.ndim == 1:
        X = X.reshape(n, -1) if X.size else np.empty((n, 0))
    if X.shape[0] != n:
        raise ValueError(f"y has {n} observations but X has {X.shape[0]} rows")
    if names is None:
        names = [f"x{j + 1}" for j in range(X.shape[1])]
    names = list(names)
    if len(names) != X.shape[1]:
        raise ValueError("names do not match the number of regressors")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
        raise ValueError("y and X must be finite; drop incomplete months first")
    if add_intercept:
        X = np.column_stack([np.ones(n), X])
        names = ["const"] + names

    k = X.shape[1]
    if k == 0:
        raise ValueError("empty design")
    if n <= k:
        raise ValueError(f"need more observations ({n}) than parameters ({k})")

    xtx = X.T @ X
    try:
        xtx_inv = inverse_spd(xtx)
    except SingularMatrixError as exc:
        raise RankDeficientError(
            f"design matrix is rank deficient at column {names[exc.pivot_index]!r}"
        ) from exc
    beta = xtx_inv @ (X.T @ y)
    fitted = X @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    df_resid = n - k
    s2 = rss / df_resid
    se = np.sqrt(np.clip(np.diag(xtx_inv), 0.0, None) * s2)
    with np.errstate(divide="ignore", invalid="ignore"):
        tstats = beta / se
    pvals = np.array([t_two_sided_p(t, df_resid) for t in tstats])

    if add_intercept:
        centered = y - y.mean()
        tss = float(centered @ centered)
    else:
        tss = float(y @ y)
    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 1.0 if rss == 0 else 0.0
    r2 = min(max(r2, 0.0), 1.0)
    dof_total = n - 1 if add_intercept else n
    adj = 1.0 - (1.0 - r2) * dof_total / df_resid

    return RegressionResult(
        names=tuple(names),
        coefficients=beta,
        std_errors=se,
        t_stats=tstats,
        p_values=pvals,
        r_squared=r2,
        adj_r_squared=adj,
        residuals=resid,
        fitted=fitted,
        n_obs=n,
        n_params=k,
        has_intercept=add_intercept,
        rss=rss,
        tss=tss,
        index=index,
    )
