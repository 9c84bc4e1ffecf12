from .distributions import f_cdf, f_sf, t_cdf, t_sf, t_two_sided_p
from .grs import FactorModelFit, GrsResult, fit_factor_model, grs_test
from .linalg import SingularMatrixError, cholesky, inverse_spd, solve_spd
from .regression import RankDeficientError, RegressionResult, ols

__all__ = [
    "FactorModelFit",
    "GrsResult",
    "RankDeficientError",
    "RegressionResult",
    "SingularMatrixError",
    "cholesky",
    "f_cdf",
    "f_sf",
    "fit_factor_model",
    "grs_test",
    "inverse_spd",
    "ols",
    "solve_spd",
    "t_cdf",
    "t_sf",
    "t_two_sided_p",
]
