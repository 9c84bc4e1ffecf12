"""F and Student-t distribution functions via the regularized incomplete beta."""

import math

from scipy.special import betainc


def _check_df(*dfs):
    for d in dfs:
        if not d > 0:
            raise ValueError(f"degrees of freedom must be positive, got {d}")


def f_cdf(x, d1, d2):
    """P(F <= x) for F ~ F(d1, d2).

    Uses ``I_z(d1/2, d2/2)`` with ``z = d1 x / (d1 x + d2)``, switching to
    the complementary form in the upper tail so neither side loses digits.
    """
    _check_df(d1, d2)
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    z = d1 * x / (d1 * x + d2)
    if z < 0.5:
        return float(betainc(d1 / 2.0, d2 / 2.0, z))
    return 1.0 - float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d1 * x + d2)))


def f_sf(x, d1, d2):
    """Upper tail P(F > x); accurate for tiny p-values."""
    _check_df(d1, d2)
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    z = d1 * x / (d1 * x + d2)
    if z < 0.5:
        return 1.0 - float(betainc(d1 / 2.0, d2 / 2.0, z))
    return float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d1 * x + d2)))


def t_sf(x, df):
    """Upper tail P(T > x) for Student t with ``df`` degrees of freedom."""
    _check_df(df)
    if math.isinf(x):
        return 0.0 if x > 0 else 1.0
    tail = 0.5 * float(betainc(df / 2.0, 0.5, df / (df + x * x)))
    return tail if x >= 0 else 1.0 - tail


def t_cdf(x, df):
    """P(T <= x) for Student t with ``df`` degrees of freedom."""
    return t_sf(-x, df)


def t_two_sided_p(t, df):
    """Two-sided p-value ``P(|T| >= |t|)``."""
    _check_df(df)
    if math.isnan(t):
        return math.nan
    return float(betainc(df / 2.0, 0.5, df / (df + t * t))) if math.isfinite(t) else 0.0
