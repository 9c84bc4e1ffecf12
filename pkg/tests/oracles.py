"""Independent reference implementations used by the unit and acceptance tests.

The distribution oracles integrate hand-written densities with adaptive
quadrature; the OLS oracle inverts the normal equations directly. Neither
shares code with the library.
"""

import math

import numpy as np
from scipy import integrate


def f_density(x, d1, d2):
    if x <= 0:
        return 0.0
    logc = math.lgamma((d1 + d2) / 2) - math.lgamma(d1 / 2) - math.lgamma(d2 / 2)
    return math.exp(logc + (d1 / 2) * math.log(d1 / d2) + (d1 / 2 - 1) * math.log(x)
                    - ((d1 + d2) / 2) * math.log1p(d1 * x / d2))


def t_density(x, df):
    logc = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(logc - ((df + 1) / 2) * math.log1p(x * x / df))


def f_cdf_quad(x, d1, d2):
    if x <= 0:
        return 0.0
    # split at the mode region so quad sees the (possibly singular) origin separately
    mid = min(x, 1.0)
    a, _ = integrate.quad(f_density, 0.0, mid, args=(d1, d2), epsabs=1e-13, epsrel=1e-12, limit=200)
    b = 0.0
    if x > mid:
        b, _ = integrate.quad(f_density, mid, x, args=(d1, d2), epsabs=1e-13, epsrel=1e-12, limit=200)
    return a + b


def t_cdf_quad(x, df):
    v, _ = integrate.quad(t_density, 0.0, abs(x), args=(df,), epsabs=1e-13, epsrel=1e-12, limit=200)
    return 0.5 + v if x >= 0 else 0.5 - v


def brute_force_ols(y, X):
    """Normal equations with a general-purpose inverse."""
    n, k = X.shape
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ (X.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    sigma2 = rss / (n - k)
    se = np.sqrt(np.diag(xtx_inv) * sigma2)
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1 - rss / tss
    adj = 1 - (1 - r2) * (n - 1) / (n - k)
    return beta, se, beta / se, r2, adj
