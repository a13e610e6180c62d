"""Command-line entry point.

Subcommands: simulate, backtest, fit-sharpe, fit-scaling, spectrum,
decompose, verify-theory.  Every run writes its artifacts plus a
``manifest.ini`` echoing the fully resolved configuration; re-running
``trendlab --config <manifest.ini> <command>`` reproduces the artifacts
byte for byte.  Options resolve as: built-in default < config file
section < command-line flag.

Exit codes: 0 ok, 2 parameter/config error, 3 data error, 4 numerical
failure.  Failures also emit a one-line JSON error report on stderr.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, concordance, theory
from .calibrate import SharpeCurve, fit_scaling_curve, fit_sharpe_curve, subuniverse_sampler
from .errors import DataError, ParameterError, TrendLabError
from .matrices import correlation_from_csv, correlation_to_csv
from .metrics import report as backtest_report
from .metrics import sharpe, strategy_correlation
from .panel import ingest_csv, panel_from_returns
from .portfolio import PortfolioConfig, run_backtest
from .process import ProcessParams, simulate, uniform_correlation
from .signals import IndicatorSpec, ema_to_sma_weights, sensitivity_spectrum

DEFAULT_ETA_DAYS = "20,50,80,100,120,150,180,400,1000"


# ---------------------------------------------------------------------------
# option plumbing
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _resolve(args: argparse.Namespace, config: configparser.ConfigParser, section: str, spec: dict) -> dict:
    """Merge defaults, config-file section, and CLI flags into one dict."""
    out = {}
    for key, (default, cast) in spec.items():
        val = getattr(args, key.replace("-", "_"), None)
        if val is None and config.has_option(section, key):
            raw = config.get(section, key)
            val = None if raw == "" else cast(raw)
        if val is None:
            val = default
        out[key] = val
    return out


def _write_manifest(outdir: Path, command: str, resolved: dict) -> None:
    cp = configparser.ConfigParser()
    cp["meta"] = {"tool": "trendlab", "version": __version__, "command": command}
    cp[command] = {k: ("" if v is None else str(v)) for k, v in resolved.items()}
    with open(outdir / "manifest.ini", "w") as fh:
        cp.write(fh)


def _outdir(resolved: dict) -> Path:
    out = Path(resolved["output-dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if str(x).strip() != ""]
    except ValueError as exc:
        raise ParameterError(f"cannot parse list {text!r}") from exc


def _etas_from_days(text: str) -> list[tuple[float, float]]:
    """'20,50' -> [(20, 1/20), (50, 1/50)]; fractional day counts allowed."""
    days = _parse_float_list(text)
    if not days or any(d <= 1 for d in days):
        raise ParameterError(f"eta day counts must be > 1, got {text!r}")
    return [(d, 1.0 / d) for d in days]


def _correlation_from_option(value, n: int):
    if value is None:
        return None
    try:
        rho = float(value)
    except (TypeError, ValueError):
        mat, _ = correlation_from_csv(value)
        return mat
    return uniform_correlation(n, rho)


def _indicator_from(resolved: dict, eta: float | None = None) -> IndicatorSpec:
    kind = resolved["indicator"]
    if kind == "ema":
        return IndicatorSpec.ema(eta)
    if kind == "cubic":
        return IndicatorSpec.cubic(eta, resolved["cubic-c"])
    if kind == "macd3":
        etas = [1.0 / d for d in _parse_float_list(resolved["macd-days"])]
        omegas = _parse_float_list(resolved["macd-omegas"])
        if len(etas) != 3 or len(omegas) != 3:
            raise ParameterError("macd3 needs three day counts and three weights")
        return IndicatorSpec.macd3(etas, omegas, zero_slope=bool(resolved["zero-slope"]))
    raise ParameterError(f"unknown indicator {kind!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(args, config) -> int:
    spec = {
        "output-dir": ("out_simulate", str),
        "seed": (0, int),
        "lam": (1.0 / 180.0, float),
        "beta0": (0.12, float),
        "n-assets": (1, int),
        "t-steps": (255 * 10, int),
        "burn-in": (None, int),
        "corr-eps": (None, str),
        "corr-xi": (None, str),
        "start-date": ("1990-01-01", str),
    }
    r = _resolve(args, config, "simulate", spec)
    n = r["n-assets"]
    params = ProcessParams(
        lam=r["lam"],
        beta0=r["beta0"],
        n_assets=n,
        corr_eps=_correlation_from_option(r["corr-eps"], n),
        corr_xi=_correlation_from_option(r["corr-xi"], n),
    )
    path = simulate(params, r["t-steps"], burn_in=r["burn-in"], seed=r["seed"])
    panel = panel_from_returns(path.returns, start=r["start-date"])
    out = _outdir(r)
    panel.to_csv(out / "returns.csv")
    _write_csv(
        out / "trend.csv",
        ["date", *panel.instruments],
        (
            [panel.dates[t].strftime("%Y-%m-%d"), *(_fmt(x) for x in path.trend[t])]
            for t in range(panel.n_days)
        ),
    )
    _write_manifest(out, "simulate", r)
    print(f"wrote {out / 'returns.csv'} ({panel.n_days} days x {n} instruments)")
    return 0


_BACKTEST_SPEC = {
    "output-dir": ("out_backtest", str),
    "seed": (0, int),
    "data": (None, str),
    "etas": (DEFAULT_ETA_DAYS, str),
    "indicator": ("ema", str),
    "macd-days": ("20,120,400", str),
    "macd-omegas": ("0,1,0", str),
    "zero-slope": (False, lambda s: s.lower() in ("1", "true", "yes")),
    "cubic-c": (0.33, float),
    "scheme": ("arp", str),
    "rule": ("linear", str),
    "smoothing-rho": (1.0 / 20.0, float),
    "target-vol": (0.10, float),
    "cost-bps": (0.0, float),
    "corr-span": (750, int),
    "vol-span": (40, int),
    "corr-method": ("clip", str),
    "ci": (True, lambda s: s.lower() in ("1", "true", "yes")),
    "n-resamples": (2000, int),
    "block-len": (60, int),
}


def _run_backtests(r: dict):
    if r["data"] is None:
        raise ParameterError("backtest needs --data <returns.csv>")
    panel = ingest_csv(r["data"])
    cfg = PortfolioConfig(
        scheme=r["scheme"],
        rule=r["rule"],
        smoothing_rho=r["smoothing-rho"],
        target_vol=r["target-vol"],
        cost_bps=r["cost-bps"],
    )
    runs = []
    if r["indicator"] == "macd3":
        spec = _indicator_from(r)
        runs.append(("macd3", None, run_backtest(panel, spec, cfg, r["corr-span"], r["vol-span"], r["corr-method"])))
    else:
        for days, eta in _etas_from_days(r["etas"]):
            spec = _indicator_from(r, eta)
            runs.append(
                (f"eta{int(days):05d}", eta, run_backtest(panel, spec, cfg, r["corr-span"], r["vol-span"], r["corr-method"]))
            )
    return panel, cfg, runs


def cmd_backtest(args, config) -> int:
    r = _resolve(args, config, "backtest", _BACKTEST_SPEC)
    out = _outdir(r)
    (out / "runs").mkdir(exist_ok=True)
    _, _, runs = _run_backtests(r)
    rows = []
    for tag, eta, series in runs:
        series.to_csv(out / "runs" / f"{tag}.csv")
        rep = backtest_report(
            series,
            with_ci=r["ci"],
            n_resamples=r["n-resamples"],
            block_len=r["block-len"],
            seed=r["seed"],
        )
        ci = rep.bootstrap_ci or (float("nan"), float("nan"))
        rows.append(
            [
                tag,
                "" if eta is None else _fmt(eta),
                _fmt(rep.sharpe_gross),
                _fmt(rep.sharpe_net),
                _fmt(rep.holding_period_days),
                _fmt(rep.vol_realized),
                rep.n_days,
                _fmt(ci[0]),
                _fmt(ci[1]),
            ]
        )
        print(
            f"{tag}: sharpe_gross={rep.sharpe_gross:.4f} net={rep.sharpe_net:.4f} "
            f"holding={rep.holding_period_days:.1f}d"
        )
    _write_csv(
        out / "summary.csv",
        ["run", "eta", "sharpe_gross", "sharpe_net", "holding_period_days",
         "vol_realized", "n_days", "sharpe_ci_low", "sharpe_ci_high"],
        rows,
    )
    if len(runs) >= 2:
        corr = strategy_correlation([series for _, _, series in runs])
        correlation_to_csv(corr, [tag for tag, _, _ in runs], out / "strategy_corr.csv")
    _write_manifest(out, "backtest", r)
    return 0


def cmd_fit_sharpe(args, config) -> int:
    spec = {
        "output-dir": ("out_fit_sharpe", str),
        "seed": (0, int),
        "backtest-dir": (None, str),
        "curve": (None, str),
        "theta": (0.0, float),
        "n-boot": (500, int),
        "block-len": (60, int),
    }
    r = _resolve(args, config, "fit-sharpe", spec)
    out = _outdir(r)

    daily = None
    if r["backtest-dir"] is not None:
        bdir = Path(r["backtest-dir"])
        etas, sharpes, cols = [], [], []
        with open(bdir / "summary.csv") as fh:
            for row in csv.DictReader(fh):
                if not row["eta"]:
                    raise DataError("fit-sharpe needs an EMA eta sweep (missing eta column values)")
                etas.append(float(row["eta"]))
                run_csv = bdir / "runs" / f"{row['run']}.csv"
                g, valid = [], []
                with open(run_csv) as rf:
                    for rr in csv.DictReader(rf):
                        g.append(float(rr["gross"]))
                        valid.append(rr["valid"] == "1")
                cols.append((np.array(g), np.array(valid)))
        common = np.logical_and.reduce([v for _, v in cols])
        if common.sum() < 100:
            raise DataError("runs share fewer than 100 valid days; cannot fit")
        daily = np.column_stack([g[common] for g, _ in cols])
        sharpes = [sharpe(daily[:, j]) for j in range(daily.shape[1])]
        curve = SharpeCurve(np.array(etas), np.array(sharpes), strategy_tag="backtest")
    elif r["curve"] is not None:
        rows = np.loadtxt(r["curve"], delimiter=",", skiprows=1, ndmin=2)
        se = rows[:, 2] if rows.shape[1] > 2 else None
        curve = SharpeCurve(rows[:, 0], rows[:, 1], se, strategy_tag="file")
    else:
        raise ParameterError("fit-sharpe needs --backtest-dir or --curve")

    fit = fit_sharpe_curve(
        curve,
        theta=r["theta"],
        daily_returns=daily,
        n_boot=r["n-boot"],
        block_len=r["block-len"],
        seed=r["seed"],
    )
    lam, b0 = fit.params["lam"], fit.params["beta0"]
    lines = [
        f"lam = {lam!r}",
        f"inv_lam_days = {1.0 / lam!r}",
        f"beta0 = {b0!r}",
        f"r_squared = {fit.r_squared!r}",
        f"eta_opt = {theory.eta_opt(lam, b0)!r}",
    ]
    if fit.ci95 is not None:
        lines += [
            f"lam_ci95 = ({fit.ci95['lam'][0]!r}, {fit.ci95['lam'][1]!r})",
            f"beta0_ci95 = ({fit.ci95['beta0'][0]!r}, {fit.ci95['beta0'][1]!r})",
        ]
    (out / "fit.txt").write_text("\n".join(lines) + "\n")
    _write_csv(
        out / "fitted_curve.csv",
        ["eta", "empirical", "fitted"],
        (
            [_fmt(e), _fmt(y), _fmt(f)]
            for e, y, f in zip(curve.etas, curve.sharpes, fit.fitted)
        ),
    )
    _write_manifest(out, "fit-sharpe", r)
    print("\n".join(lines))
    return 0


def cmd_fit_scaling(args, config) -> int:
    spec = dict(_BACKTEST_SPEC)
    spec.update(
        {
            "output-dir": ("out_fit_scaling", str),
            "sizes": ("1,3,6,9,15,20,27", str),
            "trials": (20, int),
            "eta-days": (120.0, float),
        }
    )
    r = _resolve(args, config, "fit-scaling", spec)
    if r["data"] is None:
        raise ParameterError("fit-scaling needs --data <returns.csv>")
    out = _outdir(r)
    panel = ingest_csv(r["data"])
    sizes = [int(s) for s in _parse_float_list(r["sizes"])]
    eta = 1.0 / r["eta-days"]
    cfg = PortfolioConfig(
        scheme=r["scheme"], rule=r["rule"], smoothing_rho=r["smoothing-rho"],
        target_vol=r["target-vol"], cost_bps=r["cost-bps"],
    )
    draws = subuniverse_sampler(panel, sizes, r["trials"], seed=r["seed"])
    per_size: dict[int, list[float]] = {s: [] for s in sizes}
    for size, _trial, sub in draws:
        series = run_backtest(sub, IndicatorSpec.ema(eta), cfg, r["corr-span"], r["vol-span"], r["corr-method"])
        per_size[size].append(sharpe(series.returns_gross[series.valid]))
    points = [(s, float(np.mean(v)), float(np.std(v, ddof=1))) for s, v in per_size.items()]
    _write_csv(
        out / "scaling_points.csv",
        ["n", "mean_sharpe", "std_sharpe", "trials"],
        ([s, _fmt(m), _fmt(sd), r["trials"]] for s, m, sd in points),
    )
    fit = fit_scaling_curve(points, s_ref_eta=eta, n_trials=r["trials"], seed=r["seed"])
    s1, rho2 = fit.params["s1"], fit.params["rho_sq"]
    lines = [
        f"s1 = {s1!r}",
        f"rho_sq = {rho2!r}",
        f"r_squared = {fit.r_squared!r}",
        f"ss_res = {fit.extras['ss_res']!r}",
        f"sqrt_law_s1 = {fit.extras['sqrt_law_s1']!r}",
        f"sqrt_law_ss_res = {fit.extras['sqrt_law_ss_res']!r}",
    ]
    if fit.ci95 is not None:
        lines += [
            f"s1_ci95 = ({fit.ci95['s1'][0]!r}, {fit.ci95['s1'][1]!r})",
            f"rho_sq_ci95 = ({fit.ci95['rho_sq'][0]!r}, {fit.ci95['rho_sq'][1]!r})",
        ]
    (out / "fit.txt").write_text("\n".join(lines) + "\n")
    _write_csv(
        out / "fitted_curve.csv",
        ["n", "mean_sharpe", "fitted"],
        ([s, _fmt(m), _fmt(f)] for (s, m, _), f in zip(points, fit.fitted)),
    )
    _write_manifest(out, "fit-scaling", r)
    print("\n".join(lines))
    return 0


def cmd_spectrum(args, config) -> int:
    spec = {
        "output-dir": ("out_spectrum", str),
        "indicator": ("ema", str),
        "eta-days": (120.0, float),
        "macd-days": ("20,120,400", str),
        "macd-omegas": ("0,1,0", str),
        "zero-slope": (False, lambda s: s.lower() in ("1", "true", "yes")),
        "cubic-c": (0.33, float),
        "mom-n": (100, int),
        "sma-n": (100, int),
        "max-lag": (600, int),
    }
    r = _resolve(args, config, "spectrum", spec)
    kind = r["indicator"]
    if kind == "mom":
        ind = IndicatorSpec.mom(r["mom-n"])
    elif kind == "sma":
        ind = IndicatorSpec.sma(r["sma-n"])
    else:
        ind = _indicator_from(r, 1.0 / r["eta-days"])
    psi = sensitivity_spectrum(ind, r["max-lag"])
    out = _outdir(r)
    _write_csv(out / "spectrum.csv", ["lag", "weight"], ([k, _fmt(w)] for k, w in enumerate(psi)))
    _write_manifest(out, "spectrum", r)
    print(f"wrote {out / 'spectrum.csv'} ({ind.kind}, {r['max-lag']} lags)")
    return 0


def cmd_decompose(args, config) -> int:
    spec = {
        "output-dir": ("out_decompose", str),
        "eta-days": (112.0, float),
        "max-n": (3000, int),
    }
    r = _resolve(args, config, "decompose", spec)
    ns, w = ema_to_sma_weights(1.0 / r["eta-days"], r["max-n"])
    out = _outdir(r)
    _write_csv(out / "decompose.csv", ["window", "weight"], ([int(n), _fmt(x)] for n, x in zip(ns, w)))
    _write_manifest(out, "decompose", r)
    dens = ns * w
    print(f"wrote {out / 'decompose.csv'}; log-density peak at {int(ns[np.argmax(dens)])} days")
    return 0


def cmd_theory_curve(args, config) -> int:
    spec = {
        "output-dir": ("out_theory_curve", str),
        "lam": (1.0 / 180.0, float),
        "beta0": (0.12, float),
        "thetas": ("0", str),
        "eta-days-min": (10.0, float),
        "eta-days-max": (2000.0, float),
        "n-points": (200, int),
    }
    r = _resolve(args, config, "theory-curve", spec)
    etas = 1.0 / np.geomspace(r["eta-days-max"], r["eta-days-min"], r["n-points"])
    thetas = _parse_float_list(r["thetas"])
    out = _outdir(r)
    header = ["eta"] + [f"sharpe_theta_{th:g}" for th in thetas]
    cols = [theory.sharpe_curve(etas, r["lam"], r["beta0"], th) for th in thetas]
    _write_csv(
        out / "theory_curve.csv",
        header,
        ([_fmt(e), *(_fmt(c[i]) for c in cols)] for i, e in enumerate(etas)),
    )
    _write_manifest(out, "theory-curve", r)
    print(
        f"wrote {out / 'theory_curve.csv'}; eta_opt = {theory.eta_opt(r['lam'], r['beta0']):.6f} "
        f"(1/{1.0 / theory.eta_opt(r['lam'], r['beta0']):.1f} days)"
    )
    return 0


def cmd_verify_theory(args, config) -> int:
    spec = {
        "output-dir": ("out_verify", str),
        "seed": (0, int),
        "lam": (0.01, float),
        "beta0": (0.1, float),
        "eta": (0.01, float),
        "t-steps": (2_000_000, int),
        "n-seeds": (8, int),
        "tolerance-se": (3.0, float),
    }
    r = _resolve(args, config, "verify-theory", spec)
    rows = concordance.run_concordance(
        lam=r["lam"],
        beta0=r["beta0"],
        eta=r["eta"],
        t_steps=r["t-steps"],
        seeds=tuple(r["seed"] + i for i in range(r["n-seeds"])),
    )
    out = _outdir(r)
    text = concordance.format_report(rows)
    (out / "concordance_report.txt").write_text(text + "\n")
    _write_csv(
        out / "concordance.csv",
        ["name", "mc_value", "mc_se", "closed_form", "deviation_se", "asserted"],
        (
            [
                row.name,
                _fmt(row.mc_value),
                _fmt(row.mc_se),
                "" if row.closed_form is None else _fmt(row.closed_form),
                "" if row.deviation_se is None else _fmt(row.deviation_se),
                int(row.asserted),
            ]
            for row in rows
        ),
    )
    _write_manifest(out, "verify-theory", r)
    print(text)
    bad = [
        row.name
        for row in rows
        if row.asserted and row.deviation_se is not None and abs(row.deviation_se) > r["tolerance-se"]
    ]
    if bad:
        print(f"CONCORDANCE FAILURES: {bad}", file=sys.stderr)
        return 4
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sp):
    sp.add_argument("--output-dir")
    sp.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trendlab", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="INI file with per-command option sections")
    p.add_argument("--version", action="version", version=f"trendlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="simulate the diffusive trend process to CSV")
    _add_common(sp)
    sp.add_argument("--lam", type=float)
    sp.add_argument("--beta0", type=float)
    sp.add_argument("--n-assets", type=int)
    sp.add_argument("--t-steps", type=int)
    sp.add_argument("--burn-in", type=int)
    sp.add_argument("--corr-eps", help="uniform rho value or a CSV matrix path")
    sp.add_argument("--corr-xi", help="uniform rho value or a CSV matrix path")
    sp.add_argument("--start-date")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("backtest", help="run the portfolio pipeline over an eta grid")
    _add_common(sp)
    sp.add_argument("--data")
    sp.add_argument("--etas", help="comma-separated EMA day counts")
    sp.add_argument("--indicator", choices=["ema", "macd3", "cubic"])
    sp.add_argument("--macd-days")
    sp.add_argument("--macd-omegas")
    sp.add_argument("--zero-slope", action="store_const", const=True)
    sp.add_argument("--cubic-c", type=float)
    sp.add_argument("--scheme", choices=["arp", "naive", "markowitz"])
    sp.add_argument("--rule", choices=["linear", "binary"])
    sp.add_argument("--smoothing-rho", type=float)
    sp.add_argument("--target-vol", type=float)
    sp.add_argument("--cost-bps", type=float)
    sp.add_argument("--corr-span", type=int)
    sp.add_argument("--vol-span", type=int)
    sp.add_argument("--corr-method", choices=["none", "clip", "shrink"])
    sp.add_argument("--ci", action="store_const", const=True)
    sp.add_argument("--no-ci", dest="ci", action="store_const", const=False)
    sp.add_argument("--n-resamples", type=int)
    sp.add_argument("--block-len", type=int)
    sp.set_defaults(func=cmd_backtest)

    sp = sub.add_parser("fit-sharpe", help="fit the theoretical Sharpe curve to a backtest sweep")
    _add_common(sp)
    sp.add_argument("--backtest-dir")
    sp.add_argument("--curve", help="CSV with eta,sharpe[,se] columns")
    sp.add_argument("--theta", type=float)
    sp.add_argument("--n-boot", type=int)
    sp.add_argument("--block-len", type=int)
    sp.set_defaults(func=cmd_fit_sharpe)

    sp = sub.add_parser("fit-scaling", help="sub-universe experiment and scaling-law fit")
    _add_common(sp)
    sp.add_argument("--data")
    sp.add_argument("--sizes")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--eta-days", type=float)
    sp.add_argument("--scheme", choices=["arp", "naive", "markowitz"])
    sp.add_argument("--rule", choices=["linear", "binary"])
    sp.add_argument("--smoothing-rho", type=float)
    sp.add_argument("--target-vol", type=float)
    sp.add_argument("--cost-bps", type=float)
    sp.add_argument("--corr-span", type=int)
    sp.add_argument("--vol-span", type=int)
    sp.add_argument("--corr-method", choices=["none", "clip", "shrink"])
    sp.set_defaults(func=cmd_fit_scaling)

    sp = sub.add_parser("spectrum", help="export an indicator's sensitivity to past returns")
    _add_common(sp)
    sp.add_argument("--indicator", choices=["ema", "macd3", "mom", "sma"])
    sp.add_argument("--eta-days", type=float)
    sp.add_argument("--macd-days")
    sp.add_argument("--macd-omegas")
    sp.add_argument("--zero-slope", action="store_const", const=True)
    sp.add_argument("--mom-n", type=int)
    sp.add_argument("--sma-n", type=int)
    sp.add_argument("--max-lag", type=int)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("decompose", help="export EMA-as-SMA-mixture weights")
    _add_common(sp)
    sp.add_argument("--eta-days", type=float)
    sp.add_argument("--max-n", type=int)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("theory-curve", help="closed-form Sharpe-vs-eta sweep to CSV")
    _add_common(sp)
    sp.add_argument("--lam", type=float)
    sp.add_argument("--beta0", type=float)
    sp.add_argument("--thetas", help="comma-separated cost coefficients")
    sp.add_argument("--eta-days-min", type=float)
    sp.add_argument("--eta-days-max", type=float)
    sp.add_argument("--n-points", type=int)
    sp.set_defaults(func=cmd_theory_curve)

    sp = sub.add_parser("verify-theory", help="Monte Carlo vs closed-form concordance suite")
    _add_common(sp)
    sp.add_argument("--lam", type=float)
    sp.add_argument("--beta0", type=float)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--t-steps", type=int)
    sp.add_argument("--n-seeds", type=int)
    sp.add_argument("--tolerance-se", type=float)
    sp.set_defaults(func=cmd_verify_theory)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = configparser.ConfigParser()
    if args.config:
        if not Path(args.config).exists():
            print(json.dumps({"error": "ParameterError", "message": f"config file {args.config} not found"}),
                  file=sys.stderr)
            return 2
        config.read(args.config)
    try:
        return args.func(args, config)
    except TrendLabError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}),
            file=sys.stderr,
        )
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
