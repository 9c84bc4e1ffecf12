import warnings

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fivefactor.econometrics import (
    RankDeficientError,
    SingularMatrixError,
    f_cdf,
    f_sf,
    fit_factor_model,
    grs_test,
    inverse_spd,
    ols,
    solve_spd,
    t_cdf,
    t_two_sided_p,
)
from fivefactor.econometrics.linalg import IllConditionedWarning
from oracles import brute_force_ols, f_cdf_quad, t_cdf_quad


# --- linear algebra ------------------------------------------------------------------

def test_solve_identity():
    b = np.array([1.0, -2.0, 3.5])
    np.testing.assert_allclose(solve_spd(np.eye(3), b), b, rtol=0, atol=1e-15)


def test_solve_two_by_two():
    x = solve_spd(np.array([[4.0, 2.0], [2.0, 3.0]]), np.array([8.0, 7.0]))
    np.testing.assert_allclose(x, [1.25, 1.5], rtol=0, atol=1e-14)


def test_solve_hilbert():
    h = np.array([[1.0 / (i + j + 1) for j in range(4)] for i in range(4)])
    x = solve_spd(h, h.sum(axis=1))
    np.testing.assert_allclose(x, np.ones(4), atol=1e-6)


def test_solve_multiple_rhs_residual():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((6, 6))
    a = a @ a.T + 6 * np.eye(6)
    b = rng.standard_normal((6, 3))
    x = solve_spd(a, b)
    assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_singular_pivot_index():
    a = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
    with pytest.raises(SingularMatrixError) as info:
        solve_spd(a, np.ones(3))
    assert info.value.pivot_index == 1


def test_asymmetric_rejected():
    with pytest.raises(ValueError):
        solve_spd(np.array([[2.0, 1.0], [0.0, 2.0]]), np.ones(2))


def test_ill_conditioned_warns():
    a = np.diag([1.0, 1e-11])
    with pytest.warns(IllConditionedWarning):
        solve_spd(a, np.ones(2))


def test_inverse_spd():
    a = np.array([[4.0, 2.0], [2.0, 3.0]])
    np.testing.assert_allclose(inverse_spd(a) @ a, np.eye(2), atol=1e-14)


# --- OLS -----------------------------------------------------------------------------

def test_exact_line():
    x = np.arange(1.0, 6.0)
    res = ols(2 + 3 * x, x)
    np.testing.assert_allclose(res.coefficients, [2.0, 3.0], atol=1e-12)
    assert res.r_squared == 1.0
    np.testing.assert_allclose(res.residuals, 0.0, atol=1e-12)


def test_intercept_only():
    res = ols(np.array([1.0, 2.0, 3.0]), np.empty((3, 0)))
    np.testing.assert_allclose(res.coefficients, [2.0])
    assert res.r_squared == 0.0
    assert res.names == ("const",)


def test_matches_brute_force_twenty_obs():
    rng = np.random.default_rng(20)
    X = rng.standard_normal((20, 3))
    y = 0.3 + X @ np.array([1.0, -0.5, 2.0]) + rng.standard_normal(20)
    res = ols(y, X)
    beta, se, t, r2, adj = brute_force_ols(y, np.column_stack([np.ones(20), X]))
    np.testing.assert_allclose(res.coefficients, beta, rtol=0, atol=1e-10)
    np.testing.assert_allclose(res.std_errors, se, rtol=0, atol=1e-10)
    np.testing.assert_allclose(res.t_stats, t, rtol=0, atol=1e-10)
    assert abs(res.r_squared - r2) < 1e-10
    assert abs(res.adj_r_squared - adj) < 1e-10


def test_pandas_inputs_keep_names_and_index():
    idx = pd.RangeIndex(24060, 24080, name="period")
    rng = np.random.default_rng(1)
    X = pd.DataFrame(rng.standard_normal((20, 2)), index=idx, columns=["MKT", "SMB"])
    y = pd.Series(X["MKT"] * 1.1 + rng.standard_normal(20) * 0.1, index=idx)
    res = ols(y, X)
    assert res.names == ("const", "MKT", "SMB")
    assert list(res.params().index) == ["const", "MKT", "SMB"]
    assert res.n_obs == 20 and res.n_params == 3 and res.df_resid == 17


def test_projection_and_decomposition():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((40, 4))
    y = X @ rng.standard_normal(4) + rng.standard_normal(40)
    res = ols(y, X)
    design = np.column_stack([np.ones(40), X])
    np.testing.assert_allclose(design.T @ res.residuals, 0.0, atol=1e-10)
    assert abs(res.residuals.sum()) < 1e-10
    ess = float(np.sum((res.fitted - y.mean()) ** 2))
    assert abs(res.tss - ess - res.rss) <= 1e-8 * res.tss
    assert 0 <= res.r_squared <= 1 and res.adj_r_squared <= res.r_squared


def test_rank_deficient():
    x = np.arange(10.0)
    with pytest.raises(RankDeficientError):
        ols(np.arange(10.0) ** 2, np.column_stack([x, 2 * x]))


def test_too_few_observations():
    with pytest.raises(ValueError):
        ols(np.ones(2), np.array([1.0, 2.0]))


def test_p_values_two_sided():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 2))
    res = ols(X[:, 0] + rng.standard_normal(30), X)
    np.testing.assert_allclose(res.p_values, 2 * stats.t.sf(np.abs(res.t_stats), 27), rtol=1e-9, atol=1e-14)


# --- distributions ---------------------------------------------------------------------

@pytest.mark.parametrize("d", [1, 2, 7, 30, 200])
def test_f_median_symmetry(d):
    assert abs(f_cdf(1.0, d, d) - 0.5) <= 1e-8


def test_f_cdf_zero_and_negative():
    assert f_cdf(0.0, 3, 4) == 0.0
    assert f_sf(0.0, 3, 4) == 1.0
    with pytest.raises(ValueError):
        f_cdf(-0.1, 3, 4)


def test_f_cdf_against_quadrature():
    assert abs(f_cdf(2.0, 5, 10) - f_cdf_quad(2.0, 5, 10)) <= 1e-8


def test_t_cdf_against_quadrature():
    assert t_cdf(0.0, 7) == 0.5
    assert abs(t_cdf(1.5, 10) - t_cdf_quad(1.5, 10)) <= 1e-8


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-40, 40), df=st.integers(1, 500))
def test_t_symmetry(x, df):
    assert abs(t_cdf(x, df) + t_cdf(-x, df) - 1.0) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0, 50), b=st.floats(0, 50), d1=st.integers(1, 1000), d2=st.integers(1, 1000))
def test_f_cdf_monotone_and_bounded(a, b, d1, d2):
    lo, hi = sorted((a, b))
    p_lo, p_hi = f_cdf(lo, d1, d2), f_cdf(hi, d1, d2)
    assert 0.0 <= p_lo <= p_hi <= 1.0
    assert abs(f_sf(hi, d1, d2) - (1.0 - p_hi)) <= 1e-12


def test_two_sided_star_threshold():
    # |t| = 2.00 with many degrees of freedom lies between the 1% and 5% critical values
    p = t_two_sided_p(2.0, 1000)
    assert 0.01 < p < 0.05


# --- GRS -----------------------------------------------------------------------------

def _grs_inputs(seed, t=120, n=4, l=2):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) * 0.01, rng.standard_normal((t, n)) * 0.02, 0.01 + rng.standard_normal((t, l)) * 0.04


def test_grs_zero_alpha():
    _, e, f = _grs_inputs(0)
    res = grs_test(np.zeros(4), e, f)
    assert res.statistic == 0.0 and res.p_value == 1.0
    assert (res.df1, res.df2) == (4, 120 - 4 - 2)


def test_grs_scalar_oracle():
    rng = np.random.default_rng(9)
    t = 60
    alpha = 0.004
    e = rng.standard_normal(t) * 0.03
    f = 0.005 + rng.standard_normal(t) * 0.05
    sig2 = sum(v * v for v in e) / t
    mu = sum(f) / t
    om2 = sum((v - mu) ** 2 for v in f) / t
    expected = ((t - 2) * alpha * alpha / sig2) / (1 + mu * mu / om2)
    res = grs_test(np.array([alpha]), e.reshape(-1, 1), f.reshape(-1, 1))
    assert abs(res.statistic - expected) <= 1e-10 * expected
    assert abs(res.p_value - f_sf(expected, 1, t - 2)) <= 1e-14
    assert res.mean_abs_alpha == pytest.approx(alpha)


@pytest.mark.parametrize("c", [1e-3, 0.5, 7.0])
def test_grs_scale_invariance(c):
    a, e, f = _grs_inputs(4)
    base = grs_test(a, e, f).statistic
    assert grs_test(c * a, c * e, f).statistic == pytest.approx(base, rel=1e-10)


def test_grs_dimension_errors():
    a, e, f = _grs_inputs(1, t=6, n=4, l=2)
    with pytest.raises(ValueError):
        grs_test(a, e, f)
    a, e, f = _grs_inputs(1)
    with pytest.raises(ValueError):
        grs_test(a[:3], e, f)


def test_fit_factor_model_exact_pricing():
    rng = np.random.default_rng(2)
    idx = pd.RangeIndex(60, name="period")
    f = pd.DataFrame(0.01 + rng.standard_normal((60, 3)) * 0.05, index=idx, columns=["MKT", "SMB", "HML"])
    b = rng.uniform(-1, 1.5, size=(3, 6))
    assets = pd.DataFrame(f.to_numpy() @ b, index=idx, columns=[f"p{i}" for i in range(6)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = fit_factor_model(assets, f)
    assert abs(fit.grs.statistic) <= 1e-8
    assert fit.grs.p_value == 1.0


def test_fit_factor_model_listwise_and_frames():
    rng = np.random.default_rng(8)
    idx = pd.RangeIndex(80, name="period")
    f = pd.DataFrame(rng.standard_normal((80, 2)) * 0.05, index=idx, columns=["MKT", "SMB"])
    assets = pd.DataFrame(f.to_numpy() @ rng.uniform(0, 1, (2, 5)) + rng.standard_normal((80, 5)) * 0.02,
                          index=idx, columns=list("abcde"))
    f.iloc[3, 1] = np.nan
    assets.iloc[10, 2] = np.nan
    fit = fit_factor_model(assets, f)
    assert fit.grs.df1 == 5 and fit.grs.df2 == 78 - 5 - 2
    coef = fit.coefficient_frame("coef")
    assert list(coef.columns) == ["const", "MKT", "SMB"] and list(coef.index) == list("abcde")
    np.testing.assert_allclose(fit.alphas.to_numpy(), coef["const"].to_numpy())
