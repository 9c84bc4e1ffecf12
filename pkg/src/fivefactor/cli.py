"""Command-line entry point: ``fivefactor <command> [options]``.

Commands
--------
simulate  write a synthetic panel (returns/fundamentals/riskfree CSVs)
factors   build MKT, SMB, HML, RMW, CMA (+ HMLO, CMAO) -> factors.csv
grids     5x5 Size-B/M, Size-OP, Size-Inv average excess returns
regress   aggregate regression or 25-portfolio coefficient grids
grs       GRS model comparison per test-asset grid
report    everything above in one output tree

Options may also come from a flat ``key = value`` file given with
``--config``; command-line flags override the file.
"""

import argparse
import io
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import pandas as pd

from . import factors as fac
from . import reports
from .econometrics import RankDeficientError, fit_factor_model, ols
from .panel import FilterConfig, PanelError, apply_filters, load_panel
from .sorts import SortError, SortVariable, build_grid
from .synthlab import DgpConfig, dgp_config_from_mapping, parse_key_values, simulate_panel, write_simulation

logger = logging.getLogger("fivefactor")

PRESETS = {
    "ff3": ("MKT", "SMB", "HML"),
    "ff4": ("MKT", "SMB", "HML", "CMA"),
    "ff5": ("MKT", "SMB", "HML", "RMW", "CMA"),
    "ff5o": ("MKT", "SMB", "HMLO", "RMW", "CMA"),
    "ff5oo": ("MKT", "SMB", "HMLO", "RMW", "CMAO"),
}
KNOWN_FACTORS = {"MKT", "SMB", "HML", "RMW", "CMA", "HMLO", "CMAO"}
TEST_GRIDS = (
    ("Size-BM", SortVariable.BM, "size_bm"),
    ("Size-OP", SortVariable.OP, "size_op"),
    ("Size-Inv", SortVariable.INV, "size_inv"),
)


class ConfigError(ValueError):
    pass


def parse_factor_sets(text):
    """``"ff3,ff5"`` or ``"MKT+SMB+HML,ff5o"`` -> list of factor tuples."""
    sets = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        if item.lower() in PRESETS:
            sets.append(PRESETS[item.lower()])
            continue
        names = tuple(n.strip().upper() for n in item.split("+") if n.strip())
        unknown = [n for n in names if n not in KNOWN_FACTORS]
        if unknown:
            raise ConfigError(f"unknown factor(s) {', '.join(unknown)} in {item!r}")
        if len(set(names)) != len(names):
            raise ConfigError(f"repeated factor in {item!r}")
        sets.append(names)
    if not sets:
        raise ConfigError("empty factor set selection")
    for s in sets:
        if "MKT" not in s:
            raise ConfigError(f"factor set {'+'.join(s)} must include MKT")
    return sets


def _bool(value):
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


@dataclass
class RunConfig:
    returns: Path = None
    fundamentals: Path = None
    riskfree: Path = None
    out: Path = Path("out")
    format: str = "text"
    formation_month: int = 6
    factors: list = field(default_factory=lambda: [PRESETS["ff3"], PRESETS["ff5"]])
    exclude_st_pt: bool = True
    exclude_financial: bool = True
    exclude_new_listings: bool = True
    ipo_window: int = 6
    dependent: str = "ew"
    mode: str = "grid"

    def filters(self):
        return FilterConfig(self.exclude_st_pt, self.exclude_financial, self.exclude_new_listings, self.ipo_window)

    def validate(self):
        for name in ("returns", "fundamentals", "riskfree"):
            if getattr(self, name) is None:
                raise ConfigError(f"no {name} input given (use --{name}, --input-dir or the config file)")
        if self.format not in ("text", "csv", "json"):
            raise ConfigError(f"format must be text, csv or json, got {self.format!r}")
        if not 1 <= self.formation_month <= 12:
            raise ConfigError(f"formation month must be in 1..12, got {self.formation_month}")
        if self.dependent not in ("ew", "vw"):
            raise ConfigError(f"dependent must be ew or vw, got {self.dependent!r}")
        if self.mode not in ("aggregate", "grid", "both"):
            raise ConfigError(f"mode must be aggregate, grid or both, got {self.mode!r}")
        for name in ("returns", "fundamentals", "riskfree"):
            p = getattr(self, name)
            if not Path(p).is_file():
                raise FileNotFoundError(f"input file not found: {p}")


_CONVERT = {
    "returns": Path, "fundamentals": Path, "riskfree": Path, "out": Path,
    "format": str, "formation_month": int, "factors": parse_factor_sets,
    "exclude_st_pt": _bool, "exclude_financial": _bool, "exclude_new_listings": _bool,
    "ipo_window": int, "dependent": str, "mode": str,
}


def build_run_config(args, file_values=None):
    cfg = RunConfig()
    merged = {}
    for key, value in (file_values or {}).items():
        if key == "input_dir":
            d = Path(value)
            merged.update(returns=d / "returns.csv", fundamentals=d / "fundamentals.csv", riskfree=d / "riskfree.csv")
            continue
        if key not in _CONVERT:
            raise ConfigError(f"unknown configuration key {key!r}")
        merged[key] = value
    if getattr(args, "input_dir", None):
        d = Path(args.input_dir)
        merged.update(returns=d / "returns.csv", fundamentals=d / "fundamentals.csv", riskfree=d / "riskfree.csv")
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            merged[f.name] = v
    for key, value in merged.items():
        conv = _CONVERT[key]
        try:
            setattr(cfg, key, value if not isinstance(value, str) or conv is str else conv(value))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return cfg


# --- pipeline pieces ------------------------------------------------------------------

@dataclass
class Context:
    cfg: RunConfig
    panel: object = None
    factor_grids: dict = None
    factors: pd.DataFrame = None
    test_grids: dict = None


def _prepare(cfg, need_test_grids=False):
    ctx = Context(cfg)
    raw = load_panel(cfg.returns, cfg.fundamentals, cfg.riskfree)
    ctx.panel = apply_filters(raw, cfg.filters())
    ctx.factor_grids = fac.build_factor_grids(ctx.panel, cfg.formation_month)
    base = fac.build_factors(ctx.panel, cfg.formation_month, ctx.factor_grids)
    try:
        ctx.factors = fac.add_orthogonalized(base)
    except (RankDeficientError, fac.FactorError) as exc:
        logger.warning("HMLO/CMAO undefined: %s", exc)
        ctx.factors = base.assign(HMLO=float("nan"), CMAO=float("nan"))
    if need_test_grids:
        ctx.test_grids = {
            key: build_grid(ctx.panel, SortVariable.SIZE, var, "5x5", cfg.formation_month)
            for _, var, key in TEST_GRIDS
        }
    return ctx


def _factors_doc(ctx):
    summary = fac.factor_summary(ctx.factors)
    try:
        corr = fac.factor_correlations(ctx.factors)
    except fac.FactorError as exc:
        # constant factors (e.g. a noiseless simulation) have no correlations
        logger.warning("correlations undefined: %s", exc)
        names = list(fac.BASE_FACTORS)
        corr = pd.DataFrame(float("nan"), index=names, columns=names)
    text = reports.render_factor_summary(summary, corr)
    doc = {
        "summary": {k: {"mean": float(r["mean"]), "std": float(r["std"])} for k, r in summary.iterrows()},
        "correlations": {k: {c: float(v) for c, v in r.items()} for k, r in corr.iterrows()},
    }
    buf = io.StringIO()
    summary.join(corr).to_csv(buf, float_format="%.10g", lineterminator="\n")
    return text, doc, buf.getvalue()


def _grids_doc(ctx):
    texts, docs, csvs = [], [], []
    for title, _, key in TEST_GRIDS:
        g = ctx.test_grids[key]
        texts.append(reports.render_grid_table(g, title=title))
        docs.append(reports.grid_json(g))
        for i, row in (g.averages() * 100.0).iterrows():
            for j, v in row.items():
                csvs.append(f"{title},{i + 1},{j + 1},{reports._num(float(v), '%.6f')}")
    csv_text = "grid,row_bucket,col_bucket,avg_excess_return_pct\n" + "\n".join(csvs) + "\n"
    return "\n\n".join(texts), {"grids": docs}, csv_text


def _aggregate_dependent(ctx):
    if ctx.cfg.dependent == "vw":
        return fac.mkt_series(ctx.panel).rename("vw_excess")
    r = ctx.panel.returns
    ew = r.groupby("period", sort=True)["return"].mean()
    return (ew - ctx.panel.riskfree.reindex(ew.index)).rename("ew_excess")


def _regress_docs(ctx, mode=None):
    mode = mode or ctx.cfg.mode
    texts, rows, doc = [], [], {}
    fset = list(ctx.cfg.factors[0])
    mname = reports.model_name(fset)
    if mode in ("aggregate", "both"):
        y = _aggregate_dependent(ctx)
        data = pd.concat([y, ctx.factors[fset]], axis=1, join="inner").dropna()
        res = ols(data.iloc[:, 0], data[fset])
        texts.append(f"Aggregate regression ({mname}), dependent: {y.name}\n" + reports.render_regression(res, y.name))
        rows += reports.regression_rows(res, mname, y.name)
        doc["aggregate"] = {
            "dependent": y.name,
            "model": mname,
            "coefficients": dict(zip(res.names, res.coefficients.tolist())),
            "std_errors": dict(zip(res.names, res.std_errors.tolist())),
            "t": dict(zip(res.names, res.t_stats.tolist())),
            "p": dict(zip(res.names, res.p_values.tolist())),
            "r_squared": res.r_squared,
            "adj_r_squared": res.adj_r_squared,
            "n_obs": res.n_obs,
        }
    if mode in ("grid", "both"):
        doc["grids"] = {}
        for title, _, key in TEST_GRIDS:
            fit = fit_factor_model(ctx.test_grids[key].asset_frame(), ctx.factors[fset])
            for asset, res in zip(fit.assets, fit.results):
                rows += reports.regression_rows(res, mname, f"{title} {asset}")
            for f in fset[1:]:
                if f in ("HML", "HMLO", "CMA", "CMAO"):
                    texts.append(reports.render_coefficient_grid(fit, f, f"25 {title}, {mname}: {f} loadings"))
            doc["grids"][title] = {
                "model": mname,
                "coef": fit.coefficient_frame("coef").to_dict(orient="index"),
                "t": fit.coefficient_frame("t").to_dict(orient="index"),
            }
    buf = io.StringIO()
    w = reports._writer(buf)
    w.writerow(reports.REGRESSION_CSV_HEADER)
    w.writerows(rows)
    return "\n\n".join(texts), doc, buf.getvalue(), rows


def _grs_docs(ctx):
    lines, rows, doc = [], [], []
    used = sorted({f for s in ctx.cfg.factors for f in s})
    for title, _, key in TEST_GRIDS:
        assets = ctx.test_grids[key].asset_frame()
        # one month sample for every model on this grid
        common = pd.concat([assets, ctx.factors[used]], axis=1, join="inner").dropna().index
        label = f"{assets.shape[1]} {title}"
        for fset in ctx.cfg.factors:
            fit = fit_factor_model(assets.loc[common], ctx.factors.loc[common, list(fset)])
            lines.append(reports.render_grs_line(label, fset, fit.grs))
            rows.append(reports.grs_row(label, fset, fit.grs))
            doc.append({
                "assets": label, "model": reports.model_name(fset), "grs": fit.grs.statistic,
                "df1": fit.grs.df1, "df2": fit.grs.df2, "p_value": fit.grs.p_value,
                "mean_abs_alpha": fit.grs.mean_abs_alpha,
            })
    buf = io.StringIO()
    w = reports._writer(buf)
    w.writerow(reports.GRS_CSV_HEADER)
    w.writerows(rows)
    return "\n".join(lines), {"grs": doc}, buf.getvalue(), rows


def _emit(cfg, text, doc, csv_text, out=sys.stdout):
    if cfg.format == "text":
        out.write(text + "\n")
    elif cfg.format == "json":
        out.write(reports.to_json(doc))
    else:
        out.write(csv_text)


def cmd_factors(cfg, out=sys.stdout):
    ctx = _prepare(cfg)
    text, doc, csv_text = _factors_doc(ctx)
    cfg.out.mkdir(parents=True, exist_ok=True)
    reports.write_factors_csv(ctx.factors, cfg.out / "factors.csv")
    _emit(cfg, text, doc, csv_text, out)
    return ctx


def _write_grids(ctx):
    for _, _, key in TEST_GRIDS:
        g = ctx.test_grids[key]
        reports.write_grid_csv(g, ctx.cfg.out / f"grid_{key}.csv")
        reports.write_grid_summary_csv(g, ctx.cfg.out / f"grid_{key}_summary.csv")


def cmd_grids(cfg, out=sys.stdout):
    ctx = _prepare(cfg, need_test_grids=True)
    text, doc, csv_text = _grids_doc(ctx)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_grids(ctx)
    _emit(cfg, text, doc, csv_text, out)
    return ctx


def cmd_regress(cfg, out=sys.stdout):
    ctx = _prepare(cfg, need_test_grids=True)
    text, doc, csv_text, rows = _regress_docs(ctx)
    cfg.out.mkdir(parents=True, exist_ok=True)
    reports.write_regression_csv(rows, cfg.out / "regression.csv")
    _emit(cfg, text, doc, csv_text, out)
    return ctx


def cmd_grs(cfg, out=sys.stdout):
    ctx = _prepare(cfg, need_test_grids=True)
    text, doc, csv_text, rows = _grs_docs(ctx)
    cfg.out.mkdir(parents=True, exist_ok=True)
    reports.write_grs_csv(rows, cfg.out / "grs.csv")
    _emit(cfg, text, doc, csv_text, out)
    return ctx


def cmd_report(cfg, out=sys.stdout):
    ctx = _prepare(cfg, need_test_grids=True)
    f_text, f_doc, _ = _factors_doc(ctx)
    g_text, g_doc, _ = _grids_doc(ctx)
    r_text, r_doc, _, r_rows = _regress_docs(ctx, mode="both")
    s_text, s_doc, _, s_rows = _grs_docs(ctx)

    cfg.out.mkdir(parents=True, exist_ok=True)
    reports.write_factors_csv(ctx.factors, cfg.out / "factors.csv")
    _write_grids(ctx)
    reports.write_regression_csv(r_rows, cfg.out / "regression.csv")
    reports.write_grs_csv(s_rows, cfg.out / "grs.csv")
    sections = [
        ("Factors", f_text),
        ("Average monthly excess returns of 5x5 portfolios (%)", g_text),
        ("Regressions", r_text),
        ("GRS model comparison", s_text),
    ]
    text = "\n\n".join(f"== {h} ==\n{body}" for h, body in sections) + "\n"
    doc = {"factors": f_doc, **g_doc, "regressions": r_doc, **s_doc}
    if cfg.format == "json":
        (cfg.out / "report.json").write_text(reports.to_json(doc), encoding="utf-8")
    else:
        (cfg.out / "report.txt").write_text(text, encoding="utf-8")
    _emit(cfg, text.rstrip("\n"), doc, (cfg.out / "grs.csv").read_text(encoding="utf-8"), out)
    return ctx


DGP_KEYS = {f.name for f in fields(DgpConfig)} | {"factor_vols", "factor_corr"}
RUN_KEYS = set(_CONVERT) | {"input_dir"}


def cmd_simulate(args, file_values, out=sys.stdout):
    dgp_values = {k: v for k, v in file_values.items() if k in DGP_KEYS}
    cfg = dgp_config_from_mapping(dgp_values, seed=args.seed)
    outdir = Path(args.out or file_values.get("out", "out"))
    sim = simulate_panel(cfg)
    write_simulation(sim, outdir)
    out.write(
        f"simulated {cfg.n_securities} securities x {cfg.n_months} months "
        f"(seed {cfg.seed}, {cfg.design} design) -> {outdir}\n"
    )
    return sim


# --- argument parsing ---------------------------------------------------------------

def _common(parser, simulate=False):
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--out", help="output directory (default: out)")
    parser.add_argument("--format", choices=("text", "csv", "json"), help="stdout/report format")
    if simulate:
        parser.add_argument("--seed", type=int, help="random seed")
        return
    parser.add_argument("--formation-month", type=int, dest="formation_month", help="portfolio formation month 1-12 (default 6)")
    parser.add_argument("--factors", help="factor sets, e.g. ff3,ff5 or MKT+SMB+HML,ff5o")
    parser.add_argument("--input-dir", dest="input_dir", help="directory with returns.csv, fundamentals.csv, riskfree.csv")
    parser.add_argument("--returns")
    parser.add_argument("--fundamentals")
    parser.add_argument("--riskfree")
    parser.add_argument("--ipo-window", type=int, dest="ipo_window", help="months dropped from listing (default 6)")
    parser.add_argument("--keep-st", dest="exclude_st_pt", action="store_const", const=False, help="keep ST/PT records")
    parser.add_argument("--keep-financial", dest="exclude_financial", action="store_const", const=False, help="keep financial stocks")
    parser.add_argument("--keep-new-listings", dest="exclude_new_listings", action="store_const", const=False,
                        help="keep records inside the post-IPO window")
    parser.add_argument("--dependent", choices=("ew", "vw"), help="aggregate regression series (default ew)")
    parser.add_argument("--mode", choices=("aggregate", "grid", "both"), help="regress: aggregate or 25-portfolio grids")


def make_parser():
    p = argparse.ArgumentParser(prog="fivefactor", description="Five-factor construction, portfolio sorts, regressions and GRS tests.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("simulate", "write a synthetic panel"),
        ("factors", "build the monthly factor series"),
        ("grids", "5x5 average excess return tables"),
        ("regress", "factor regressions"),
        ("grs", "GRS model comparison"),
        ("report", "run everything and write one report"),
    ):
        sp = sub.add_parser(name, help=help_)
        _common(sp, simulate=(name == "simulate"))
    return p


COMMANDS = {
    "factors": cmd_factors,
    "grids": cmd_grids,
    "regress": cmd_regress,
    "grs": cmd_grs,
    "report": cmd_report,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        file_values = {}
        if args.config:
            path = Path(args.config)
            if not path.is_file():
                raise FileNotFoundError(f"config file not found: {path}")
            file_values = parse_key_values(path.read_text(encoding="utf-8"), str(path))
            unknown = sorted(set(file_values) - DGP_KEYS - RUN_KEYS)
            if unknown:
                raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")
        if args.command == "simulate":
            cmd_simulate(args, file_values, out)
            return 0
        file_values = {k: v for k, v in file_values.items() if k in RUN_KEYS}
        cfg = build_run_config(args, file_values)
        cfg.validate()
        COMMANDS[args.command](cfg, out)
        return 0
    except FileNotFoundError as exc:
        print(f"fivefactor: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, PanelError, SortError, fac.FactorError, ValueError, ArithmeticError) as exc:
        print(f"fivefactor: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
