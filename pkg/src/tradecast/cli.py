"""Command-line pipeline: join, correlate, rank, project, cluster, forecast, boost."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import arima, kmeans, panel as pn, stats, svg
from .config import GBDT_KEYS, RunConfig, read_config_file
from .errors import ConfigError, TooFewPairs, TooShort, TradecastError, UnknownColumn
from .gbdt import (GbdtParams, feature_importance, gbdt_fit, gbdt_predict, load_model,
                   save_model)


def _num(v: float) -> str:
    return format(float(v), ".10g")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_panel(cfg: RunConfig) -> pn.PanelTable:
    if cfg.panel:
        table = pn.read_panel_csv(cfg.panel)
    else:
        cfg.require("trade", "econ")
        table = pn.inner_join(pn.parse_trade_csv(cfg.trade), pn.parse_econ_csv(cfg.econ))
    return table


def _check_commodity(name: str | None) -> None:
    if name is not None and name not in pn.COMMODITIES:
        raise ConfigError(f"unknown commodity {name!r}; choose from {', '.join(pn.COMMODITIES)}")


def _by_commodity(cfg: RunConfig, table: pn.PanelTable) -> pn.PanelTable:
    _check_commodity(cfg.commodity)
    return pn.filter_commodity(table, cfg.commodity) if cfg.commodity else table


def cmd_join(cfg: RunConfig) -> int:
    cfg.require("trade", "econ")
    trade = pn.parse_trade_csv(cfg.trade)
    econ = pn.parse_econ_csv(cfg.econ)
    table = pn.inner_join(trade, econ)
    path = _out_dir(cfg) / "panel.csv"
    pn.write_panel_csv(table, path)
    print(f"join: {len(trade)} → {len(table)} rows ({len(table.feature_names)} features) -> {path}")
    if len(table) == 0:
        print("warning: join produced 0 rows; trade and econ keys do not overlap", file=sys.stderr)
    return 0


def cmd_correlate(cfg: RunConfig) -> int:
    table = _by_commodity(cfg, _load_panel(cfg))
    names = cfg.features or [n for n in table.feature_names if table.kinds[n] == pn.NUMERIC]
    if not names:
        raise UnknownColumn("no numeric feature columns to correlate")
    cm = stats.correlation_matrix(table, names)
    out = _out_dir(cfg)
    cm.to_csv(out / "correlation.csv")
    svg.heatmap(cm.names, cm.values, "Correlations of economic variables", out / "correlation.svg")
    print(f"correlate: {len(names)}x{len(names)} matrix over {len(table)} rows"
          f" ({len(cm.reasons)} undefined cells) -> {out / 'correlation.csv'}")
    return 0


def cmd_top_exporters(cfg: RunConfig) -> int:
    cfg.require("commodity")
    _check_commodity(cfg.commodity)
    table = _load_panel(cfg)
    ranking = pn.top_exporters(table, cfg.commodity, cfg.n)
    out = _out_dir(cfg)
    _write_csv(out / "top_exporters.csv", ["rank", "country", "total_value_usd"],
               [[i, c, _num(v)] for i, (c, v) in enumerate(ranking, start=1)])
    svg.bar_chart([c for c, _ in ranking], [v for _, v in ranking],
                  f"Top {cfg.commodity} exporters", out / "top_exporters.svg")
    for i, (c, v) in enumerate(ranking, start=1):
        print(f"{i}. {c}  {_num(v)}")
    return 0


def _future_years(cfg: RunConfig, last_year: int, default: int) -> list[int]:
    if cfg.years:
        return list(cfg.years)
    h = cfg.horizon if cfg.horizon is not None else default
    return list(range(last_year + 1, last_year + 1 + h))


def cmd_project(cfg: RunConfig) -> int:
    cfg.require("exporter")
    _check_commodity(cfg.commodity)
    years, totals = pn.exporter_series(_load_panel(cfg), cfg.exporter, cfg.commodity)
    if len(years) == 0:
        raise TooFewPairs(f"no exports recorded for {cfg.exporter}")
    model = stats.ols_fit(years, totals)
    future = _future_years(cfg, int(years[-1]), 3)
    rows = [[int(y), _num(a), _num(f)] for y, a, (_, f) in
            zip(years, totals, stats.ols_forecast(model, years))]
    projection = stats.ols_forecast(model, future)
    rows += [[y, "", _num(f)] for y, f in projection]
    out = _out_dir(cfg)
    _write_csv(out / "projection.csv", ["year", "actual", "forecast"], rows)
    label = f"{cfg.exporter} {cfg.commodity or 'all commodities'} exports"
    svg.line_chart({"history": list(zip(years.tolist(), totals.tolist())),
                    "projection": [(int(years[-1]), float(model.intercept + model.slope * years[-1])),
                                   *projection]},
                   label, out / "projection.svg")
    print(f"project: slope {_num(model.slope)} per year, intercept {_num(model.intercept)}, "
          f"R² {model.r_squared:.4f} on {model.n} years")
    return 0


def country_matrix(table: pn.PanelTable, features: list[str]) -> tuple[list[str], np.ndarray]:
    """One row per exporting country.

    ``total_value`` is the country's summed export value; any other name is a
    numeric panel feature averaged over the country's export rows.  Countries
    with no present value for a feature take that feature's mean over countries.
    """
    countries = sorted(set(table.origin.tolist()))
    M = np.full((len(countries), len(features)), np.nan)
    for j, name in enumerate(features):
        if name == "total_value":
            col = table.value
        else:
            if table.kinds.get(name) != pn.NUMERIC:
                raise UnknownColumn(f"{name!r} is not a numeric feature")
            col = table.features[name]
        for i, c in enumerate(countries):
            vals = col[(table.origin == c) & ~np.isnan(col)]
            if len(vals):
                M[i, j] = vals.sum() if name == "total_value" else vals.mean()
        fill = np.nanmean(M[:, j]) if np.isfinite(M[:, j]).any() else 0.0
        M[np.isnan(M[:, j]), j] = fill
    return countries, M


def cmd_cluster(cfg: RunConfig) -> int:
    table = _by_commodity(cfg, _load_panel(cfg))
    features = cfg.features or ["total_value"]
    countries, M = country_matrix(table, features)
    Z, st = kmeans.standardize(M)
    model = kmeans.kmeans_fit(Z, cfg.k, cfg.seed, feature_names=features, standardization=st)
    assignments = kmeans.assign(model, Z, countries, standardized=True)
    out = _out_dir(cfg)
    kmeans.write_cluster_report(assignments, out / "clusters.csv")
    for label in range(model.k):
        members = sorted(c for c, lab, _ in assignments if lab == label)
        print(f"Cluster {label + 1}: {', '.join(members)}")
    print(f"inertia {_num(model.inertia)}")
    return 0


def cmd_arima(cfg: RunConfig) -> int:
    cfg.require("exporter")
    _check_commodity(cfg.commodity)
    years, totals = pn.exporter_series(_load_panel(cfg), cfg.exporter, cfg.commodity)
    if len(years) == 0:
        raise TooShort(f"no exports recorded for {cfg.exporter}")
    end = cfg.train_end if cfg.train_end is not None else int(years[-1])
    train = totals[years <= end]
    if cfg.order == "auto":
        spec = arima.select_order(train, 2, 2, (0, 1))
    else:
        try:
            spec = arima.ArimaSpec.parse(cfg.order)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    fit = arima.arima_fit(train, spec)
    future = _future_years(cfg, end, 3)
    horizon = future[-1] - end
    actual_by_year = dict(zip(years.tolist(), totals.tolist()))
    actuals = [actual_by_year.get(y) for y in range(end + 1, end + 1 + horizon)]
    table = arima.forecast_intervals(fit, horizon, end + 1, actuals)
    out = _out_dir(cfg)
    table.to_csv(out / "arima.csv")
    print(f"ARIMA{spec}: mu {_num(fit.mu)}, sigma {_num(np.sqrt(fit.sigma2))}, n {fit.n_obs}")
    print(table.to_console())
    return 0


def _params(cfg: RunConfig) -> GbdtParams:
    try:
        return GbdtParams(seed=cfg.seed, **cfg.gbdt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _model_path(cfg: RunConfig) -> Path:
    return Path(cfg.model) if cfg.model else Path(cfg.out) / "model.txt"


def cmd_gbdt(cfg: RunConfig, action: str) -> int:
    out = _out_dir(cfg)
    if action == "train":
        table = _by_commodity(cfg, _load_panel(cfg))
        train, valid = pn.time_split(table, cfg.holdout_years)
        model = gbdt_fit(train, valid, pn.TARGET, _params(cfg), cfg.features)
        path = _model_path(cfg)
        save_model(model, path)
        best = model.eval_history[model.best_round - 1] if model.best_round else float("nan")
        print(f"gbdt train: {len(train)} train / {len(valid)} valid rows, "
              f"{model.rounds_used} rounds, best round {model.best_round} "
              f"(valid MSE {_num(best)}) -> {path}")
        return 0
    model = load_model(_model_path(cfg))
    if action == "importance":
        if cfg.kind not in ("split", "gain"):
            raise ConfigError("kind must be split or gain")
        imp = feature_importance(model, cfg.kind)
        imp.to_csv(out / "importance.csv")
        print("\n".join(imp.lines()))
        return 0
    table = _by_commodity(cfg, _load_panel(cfg))
    if action == "predict":
        pred = gbdt_predict(model, table)
        rows = [[o, d, c, int(y), _num(v), _num(p)] for (o, d, c, y), v, p in
                zip(table.keys(), table.value, pred)]
        _write_csv(out / "predictions.csv", [*pn.TRADE_HEADER, "prediction"], rows)
        print(f"gbdt predict: {len(rows)} rows -> {out / 'predictions.csv'}")
        return 0
    # evaluate
    _, valid = pn.time_split(table, cfg.holdout_years)
    for commodity in sorted(set(valid.commodity.tolist())):
        part = pn.filter_commodity(valid, commodity)
        r2 = stats.r_squared(part.value, gbdt_predict(model, part))
        metrics = {"commodity": commodity, "r2": r2, "rounds_used": model.rounds_used,
                   "best_round": model.best_round}
        (out / f"metrics_{commodity}.json").write_text(
            json.dumps(metrics, sort_keys=True) + "\n", encoding="utf-8")
        print(f"{commodity}: R² {r2:.4f} on {len(part)} holdout rows")
    return 0


COMMANDS = {
    "join": cmd_join,
    "correlate": cmd_correlate,
    "top-exporters": cmd_top_exporters,
    "project": cmd_project,
    "cluster": cmd_cluster,
    "arima": cmd_arima,
}


def _global_options() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g.add_argument("--config", help="flat key = value config file")
    g.add_argument("--out", help="output directory (default: current directory)")
    g.add_argument("--seed", type=int, help="random seed")
    g.add_argument("--commodity", help="commodity filter, one of " + ", ".join(pn.COMMODITIES))
    return g


def _data_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trade", help="trade.csv path")
    p.add_argument("--econ", help="econ.csv path")
    p.add_argument("--panel", help="joined panel.csv (instead of --trade/--econ)")


def build_parser() -> argparse.ArgumentParser:
    glob = _global_options()
    parser = argparse.ArgumentParser(prog="tradecast", parents=[glob],
                                     description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("join", parents=[glob], argument_default=argparse.SUPPRESS,
                       help="inner-join trade and econ files into panel.csv")
    _data_options(p)

    p = sub.add_parser("correlate", parents=[glob], argument_default=argparse.SUPPRESS,
                       help="Pearson correlation matrix CSV + heatmap SVG")
    _data_options(p)
    p.add_argument("--features", help="comma-separated numeric columns")

    p = sub.add_parser("top-exporters", parents=[glob], argument_default=argparse.SUPPRESS,
                       help="rank exporters of a commodity")
    _data_options(p)
    p.add_argument("--n", type=int, help="number of countries (default 5)")

    for name, helptext in (("project", "straight-line OLS projection of exports"),
                           ("arima", "ARIMA forecast with 80/95%% intervals")):
        p = sub.add_parser(name, parents=[glob], argument_default=argparse.SUPPRESS, help=helptext)
        _data_options(p)
        p.add_argument("--exporter", help="ISO3 exporting country")
        p.add_argument("--years", help="comma-separated years to forecast")
        p.add_argument("--horizon", type=int, help="years ahead to forecast (default 3)")
        if name == "arima":
            p.add_argument("--order", help="'auto' or p,d,q[,drift|nodrift]")
            p.add_argument("--train-end", type=int, help="last year used for fitting")

    p = sub.add_parser("cluster", parents=[glob], argument_default=argparse.SUPPRESS,
                       help="K-means clustering of exporting countries")
    _data_options(p)
    p.add_argument("--k", type=int, help="cluster count (default 3)")
    p.add_argument("--features", help="comma-separated: total_value and/or numeric features")

    p = sub.add_parser("gbdt", parents=[glob], argument_default=argparse.SUPPRESS,
                       help="gradient-boosted trees")
    p.add_argument("action", choices=["train", "predict", "importance", "evaluate"])
    _data_options(p)
    p.add_argument("--model", help="model file (default OUT/model.txt)")
    p.add_argument("--features", help="comma-separated feature columns")
    p.add_argument("--holdout-years", type=int, help="validation years (default 2)")
    p.add_argument("--kind", choices=["split", "gain"], help="importance ranking")
    for key, typ in GBDT_KEYS.items():
        p.add_argument("--" + key.replace("_", "-"), type=typ)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    action = args.pop("action", None)
    try:
        file_values = read_config_file(args.pop("config")) if "config" in args else {}
        cfg = RunConfig.build(file_values, args)
        if command == "gbdt":
            return cmd_gbdt(cfg, action)
        return COMMANDS[command](cfg)
    except TradecastError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
