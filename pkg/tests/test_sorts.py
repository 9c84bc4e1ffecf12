import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURE
from fivefactor.panel import make_panel, month_index
from fivefactor.sorts import (
    SortError,
    SortVariable,
    assign_cells,
    build_grid,
    cell_return,
    cell_weights,
    characteristics,
    compute_breakpoints,
    holding_formation_year,
)
from fivefactor.synthlab import DgpConfig, simulate_panel

SIZE, BM, OP, INV = SortVariable.SIZE, SortVariable.BM, SortVariable.OP, SortVariable.INV


def one_month_panel(caps, bms, year=2005, month=6, returns=None):
    t = month_index(year, month)
    ids = [f"A{i}" for i in range(len(caps))]
    r = pd.DataFrame({
        "security_id": ids,
        "period": t,
        "return": returns if returns is not None else 0.0,
        "market_cap": caps,
    })
    f = pd.DataFrame({
        "security_id": ids,
        "fiscal_year": year - 1,
        "book_equity": np.asarray(bms, dtype=float) * np.asarray(caps, dtype=float),
        "operating_profitability": 0.1,
        "total_assets": 110.0,
        "total_assets_prior": 100.0,
    })
    return make_panel(r, f, pd.Series(0.0, index=[t]))


# --- breakpoints -----------------------------------------------------------------------

def test_median_even():
    assert compute_breakpoints(range(1, 11), "median").cuts == (5.5,)


def test_median_odd():
    assert compute_breakpoints([3, 1, 2], "median").cuts == (2.0,)


def test_p30_70():
    assert compute_breakpoints(range(1, 11), "p30_70").cuts == (3.0, 7.0)


def test_quintile_degenerate():
    assert compute_breakpoints([4.2] * 9, "quintile").cuts == (4.2, 4.2, 4.2, 4.2)


def test_quintile_nearest_rank():
    # ceil(0.2*7)=2, ceil(0.4*7)=3, ceil(0.6*7)=5, ceil(0.8*7)=6
    assert compute_breakpoints([70, 10, 20, 30, 40, 50, 60], "quintile").cuts == (20, 30, 50, 60)


def test_breakpoint_errors():
    with pytest.raises(SortError):
        compute_breakpoints([], "median")
    with pytest.raises(SortError):
        compute_breakpoints([1.0, np.nan], "median")
    with pytest.raises(ValueError):
        compute_breakpoints([1.0], "tercile")


def test_ties_go_low():
    bp = compute_breakpoints(range(1, 11), "p30_70")
    np.testing.assert_array_equal(bp.assign([3.0, 3.0001, 7.0, 7.5, -100]), [0, 1, 1, 2, 0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), st.sampled_from(["median", "p30_70", "quintile"]))
def test_bucket_monotone(values, scheme):
    bp = compute_breakpoints(values, scheme)
    assert list(bp.cuts) == sorted(bp.cuts)
    order = np.argsort(values, kind="mergesort")
    buckets = bp.assign(np.asarray(values)[order])
    assert np.all(np.diff(buckets) >= 0)


# --- assignment --------------------------------------------------------------------------

def test_four_security_example():
    p = one_month_panel([1.0, 2.0, 3.0, 4.0], [4.0, 3.0, 2.0, 1.0])
    cells = assign_cells(p, 2005, SIZE, BM, "2x3")
    assert tuple(cells.loc["A0", ["row_bucket", "col_bucket"]]) == (0, 2)  # (S, H)
    assert tuple(cells.loc["A3", ["row_bucket", "col_bucket"]]) == (1, 0)  # (B, L)


def test_identical_securities_share_one_cell():
    p = one_month_panel([5.0] * 6, [0.7] * 6)
    cells = assign_cells(p, 2005, SIZE, BM, "5x5")
    assert len(cells.groupby(["row_bucket", "col_bucket"])) == 1


def test_too_few_eligible_names_year():
    p = one_month_panel([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0, 1.0])
    with pytest.raises(SortError, match="2005"):
        assign_cells(p, 2005, SIZE, BM, "5x5")


def test_negative_book_equity_ineligible_for_bm_only(fixture_panel):
    ch = characteristics(fixture_panel, 2006)
    assert np.isnan(ch.loc["S08", "bm"])
    assert not np.isnan(ch.loc["S08", "op"])
    bm = assign_cells(fixture_panel, 2006, SIZE, BM, "2x3")
    op = assign_cells(fixture_panel, 2006, SIZE, OP, "2x3")
    assert "S08" not in bm.index and "S08" in op.index


def test_golden_membership(fixture_panel):
    gold = pd.read_csv(FIXTURE / "golden_membership_2005_size_bm.csv").set_index("security_id")
    cells = assign_cells(fixture_panel, 2005, SIZE, BM, "2x3")
    assert sorted(cells.index) == sorted(gold.index)
    got_size = cells["row_bucket"].map({0: "S", 1: "B"})
    got_bm = cells["col_bucket"].map({0: "L", 1: "N", 2: "H"})
    pd.testing.assert_series_equal(got_size.sort_index(), gold["size"].sort_index(), check_names=False)
    pd.testing.assert_series_equal(got_bm.sort_index(), gold["bm"].sort_index(), check_names=False)
    np.testing.assert_allclose(cells["cap"].sort_index(), gold["cap"].sort_index(), rtol=0, atol=0)


def test_golden_cell_series(fixture_panel):
    gold = pd.read_csv(FIXTURE / "golden_cells_size_bm.csv")
    grid = build_grid(fixture_panel, SIZE, BM, "2x3")
    for row in gold.itertuples(index=False):
        got = grid.leg(row.size, row.bm).loc[month_index(row.year, row.month)]
        if np.isnan(row.excess_return):
            assert np.isnan(got)
        else:
            assert abs(got - row.excess_return) <= 1e-12


# --- cell returns --------------------------------------------------------------------------

def test_cell_return_weighted():
    p = one_month_panel([100.0, 300.0], [1.0, 1.0], returns=[0.02, 0.04])
    assert cell_return({"A0": 100.0, "A1": 300.0}, p, month_index(2005, 6)) == pytest.approx(0.035, abs=1e-15)


def test_cell_return_single_member_and_empty():
    t = month_index(2005, 6)
    r = pd.DataFrame({"security_id": ["A"], "period": [t], "return": [0.05], "market_cap": [1.0]})
    f = pd.DataFrame(columns=["security_id", "fiscal_year", "book_equity", "operating_profitability",
                              "total_assets", "total_assets_prior"])
    p = make_panel(r, f, pd.Series(0.01, index=[t]))
    assert cell_return({"A": 9.0}, p, t) == pytest.approx(0.04, abs=1e-15)
    assert np.isnan(cell_return({"Z": 9.0}, p, t))


def test_weights_sum_to_one(fixture_panel):
    grid = build_grid(fixture_panel, SIZE, INV, "2x3")
    for (year, rb, cb), g in grid.membership.groupby(["formation_year", "row_bucket", "col_bucket"]):
        members = dict(zip(g["security_id"], g["cap"]))
        for t in range(month_index(year, 7), min(month_index(year + 1, 6), fixture_panel.end) + 1):
            w = cell_weights(members, fixture_panel, t)
            if len(w):
                assert abs(w.sum() - 1.0) <= 1e-12


def test_grid_matches_cell_return(fixture_panel):
    grid = build_grid(fixture_panel, SIZE, OP, "2x3")
    for (year, rb, cb), g in grid.membership.groupby(["formation_year", "row_bucket", "col_bucket"]):
        members = dict(zip(g["security_id"], g["cap"]))
        t = month_index(year, 9)
        assert abs(grid.cell(rb, cb).loc[t] - cell_return(members, fixture_panel, t)) <= 1e-14


# --- grids ---------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def sim_panel():
    return simulate_panel(DgpConfig(n_securities=200, n_months=60, seed=3)).panel


def test_partition(sim_panel):
    grid = build_grid(sim_panel, SIZE, BM, "5x5")
    for year, g in grid.membership.groupby("formation_year"):
        ch = characteristics(sim_panel, year).dropna(subset=["size", "bm"])
        assert sorted(g["security_id"]) == sorted(ch.index)
        assert not g["security_id"].duplicated().any()
    assert grid.returns.shape == (60 - 6, 25)


def test_scale_invariance(sim_panel):
    r = sim_panel.returns.copy()
    r["market_cap"] *= 37.5
    f = sim_panel.fundamentals.copy()
    f["book_equity"] *= 37.5
    scaled = make_panel(r, f, sim_panel.riskfree, sim_panel.start, sim_panel.end)
    a = build_grid(sim_panel, SIZE, INV, "5x5")
    b = build_grid(scaled, SIZE, INV, "5x5")
    np.testing.assert_array_equal(a.membership[["row_bucket", "col_bucket"]], b.membership[["row_bucket", "col_bucket"]])
    np.testing.assert_allclose(a.returns.to_numpy(), b.returns.to_numpy(), rtol=0, atol=1e-15)


def test_uniform_returns_give_constant_grid(sim_panel):
    r = sim_panel.returns.copy()
    r["return"] = 0.013
    flat = make_panel(r, sim_panel.fundamentals, sim_panel.riskfree, sim_panel.start, sim_panel.end)
    avg = build_grid(flat, SIZE, OP, "5x5").averages().to_numpy()
    np.testing.assert_allclose(avg, 0.013 - 0.002, rtol=0, atol=1e-15)


def test_planted_size_effect_rows_decrease():
    cfg = DgpConfig(n_securities=500, n_months=240, seed=1, factor_means=(0.006, 0.01, 0.0, 0.0, 0.0))
    grid = build_grid(simulate_panel(cfg).panel, SIZE, BM, "5x5")
    rows = grid.averages().mean(axis=1).to_numpy()
    assert np.all(np.diff(rows) < 0)


def test_holding_year_mapping():
    assert holding_formation_year(month_index(2005, 7), 6) == 2005
    assert holding_formation_year(month_index(2006, 6), 6) == 2005
    assert holding_formation_year(month_index(2006, 7), 6) == 2006


def test_grid_needs_full_holding_year(fixture_panel):
    short = make_panel(
        fixture_panel.returns[fixture_panel.returns["period"] <= month_index(2006, 3)],
        fixture_panel.fundamentals, fixture_panel.riskfree, fixture_panel.start, month_index(2006, 3),
    )
    with pytest.raises(SortError, match="holding year"):
        build_grid(short, SIZE, BM, "2x3")


def test_labels(sim_panel):
    grid = build_grid(sim_panel, SIZE, BM, "5x5")
    assert grid.row_labels() == ("Small", "2", "3", "4", "Big")
    assert grid.col_labels() == ("Low", "2", "3", "4", "High")
    assert grid.name == "Size-B/M"
    assert list(grid.asset_frame().columns)[:3] == ["1-1", "1-2", "1-3"]
