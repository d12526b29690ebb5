"""Command-line entry point.

Subcommands:
  gen-data   write a synthetic price CSV (seeded, byte-reproducible)
  run        simulated end-to-end experiment over a set of trade dates
  report     aggregate result files into a mean/variance table
  serve      launch the HTTP service (and the web UI, if built)

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from datetime import date
from pathlib import Path

import click
import numpy as np

from . import market
from .efficient import alpha_distinct_set, evaluate_strategies
from .session import ConfigError, DataSpec, SessionConfig, canonical_json, run_session

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class CliError(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _config_error(msg: str) -> CliError:
    return CliError(msg, EXIT_CONFIG)


def _runtime_error(msg: str) -> CliError:
    return CliError(msg, EXIT_RUNTIME)


@click.group()
def main():
    """Preference-guided Bayesian optimization for portfolio construction."""


def _parse_scalar_or_list(text: str, n: int, what: str) -> float | tuple:
    parts = [p for p in text.split(",") if p.strip()]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise _config_error(f"{what} must be a number or comma list, got {text!r}")
    if len(values) == 1:
        return values[0]
    if len(values) != n:
        raise _config_error(f"{what} needs 1 or {n} values, got {len(values)}")
    return tuple(values)


@main.command("gen-data")
@click.option("--assets", default=",".join(market.DEFAULT_ASSETS), show_default=True,
              help="Comma-separated asset column names.")
@click.option("--days", default=260, show_default=True)
@click.option("--start", default="2016-01-04", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--correlation", default="identity", show_default=True,
              help="Preset name (identity, two-group) or path to a JSON matrix.")
@click.option("--drift", default="0.0", show_default=True, help="Scalar or comma list.")
@click.option("--vol", default="0.01", show_default=True, help="Scalar or comma list.")
@click.option("--initial", default="100.0", show_default=True, help="Scalar or comma list.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def cmd_gen_data(assets, days, start, seed, correlation, drift, vol, initial, out):
    """Generate a synthetic price CSV."""
    names = tuple(a.strip() for a in assets.split(",") if a.strip())
    corr = correlation
    if corr not in ("identity", "two-group"):
        corr_path = Path(corr)
        if not corr_path.exists():
            raise _config_error(f"correlation must be a preset or a JSON file, got {corr!r}")
        corr = np.asarray(json.loads(corr_path.read_text()), dtype=float)
    try:
        series = market.generate_price_series(
            assets=names, days=days, start=date.fromisoformat(start), seed=seed,
            correlation=corr,
            drift=_parse_scalar_or_list(drift, len(names), "--drift"),
            daily_vol=_parse_scalar_or_list(vol, len(names), "--vol"),
            initial=_parse_scalar_or_list(initial, len(names), "--initial"),
        )
    except ValueError as e:
        raise _config_error(str(e))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(market.write_csv(series), encoding="utf-8")
    click.echo(f"wrote {len(series.dates)} days x {len(series.assets)} assets to {out}")


# ---------------------------------------------------------------------------
# experiment runner


def _load_experiment(path: Path) -> dict:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise _config_error(f"cannot read config {path}: {e}")
    if "session" not in obj:
        raise _config_error("experiment config requires a 'session' section")
    return obj


def _experiment_trade_dates(obj: dict, series: market.PriceSeries) -> list[date]:
    spec = obj.get("trade_dates")
    if isinstance(spec, list) and spec:
        return [date.fromisoformat(d) for d in spec]
    if isinstance(spec, dict) and "second_wednesdays" in spec:
        rng_spec = spec["second_wednesdays"]
        return market.second_wednesdays(
            date.fromisoformat(rng_spec["start"]), date.fromisoformat(rng_spec["end"])
        )
    raise _config_error(
        "config needs trade_dates: a list of ISO dates or "
        '{"second_wednesdays": {"start": ..., "end": ...}}'
    )


def _session_config_for(base: dict, anchor: date, seed: int, date_idx: int) -> SessionConfig:
    obj = json.loads(json.dumps(base))  # deep copy
    obj.setdefault("objective", {})["anchor"] = anchor.isoformat()
    # one independent stream per (seed, date); SeedSequence keys the pair
    obj["seed"] = [seed, date_idx]
    return SessionConfig.from_json(obj)


def _run_one_seed(args: tuple) -> dict:
    """Worker for one seed: run all trade dates, evaluate strategies."""
    experiment, seed = args
    base = experiment["session"]
    oracle_spec = base.get("oracle")
    if oracle_spec is None or oracle_spec.get("kind") == "deferred":
        raise ConfigError("cli run needs a simulated oracle; deferred oracles go through `prefolio serve`")
    rule = base.get("efficient_rule", "all-preceding")

    series = DataSpec.from_json(base.get("objective", {}).get("data", {})).load()
    trade_dates = _experiment_trade_dates(experiment, series)
    alphas = [float(a) for a in experiment.get("alphas", [base.get("alpha_default", 0.7)])]
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {a}")
    horizon = int(experiment.get("horizon", 1))
    rs = experiment.get("random_supplement", {})

    per_date = []
    sessions = []
    for idx, anchor in enumerate(trade_dates):
        config = _session_config_for(base, anchor, seed, idx)
        result = run_session(config)
        per_date.append(result)
        sessions.append((result.pool, result.preference_model))

    reports = {}
    alpha_sets: dict[str, list[list[int]]] = {}
    for alpha in alphas:
        report = evaluate_strategies(
            series, trade_dates, sessions, alpha,
            horizon=horizon,
            rule=rule,
            random_draws=int(rs.get("draws", 8)),
            random_k=rs.get("k"),
            random_seed=int(rs.get("seed", 1000 + seed)),
        )
        reports[repr(alpha)] = report.to_json()
        members_per_date = []
        for pool, model in sessions:
            if len(pool) == 0 or model is None:
                members_per_date.append([])
            else:
                members_per_date.append(
                    list(alpha_distinct_set(pool, model, alpha, rule=rule).members)
                )
        alpha_sets[repr(alpha)] = members_per_date

    # the sets for a larger alpha must be subsets of those for a smaller one
    nesting_ok = True
    ordered = sorted(alphas)
    for lo_a, hi_a in zip(ordered, ordered[1:]):
        for lo_members, hi_members in zip(alpha_sets[repr(lo_a)], alpha_sets[repr(hi_a)]):
            if not set(hi_members) <= set(lo_members):
                nesting_ok = False
    return {
        "seed": seed,
        "trade_dates": [d.isoformat() for d in trade_dates],
        "alphas": alphas,
        "horizon": horizon,
        "reports": reports,
        "alpha_sets": alpha_sets,
        "nesting_ok": nesting_ok,
        "results": [r.to_json() for r in per_date],
    }


@main.command("run")
@click.option("--config", "config_path", type=click.Path(exists=False, path_type=Path), required=True)
@click.option("--seeds", default=None, help="Overrides config seeds: '1..10' or '1,2,3'.")
@click.option("--alpha", "alpha_opt", default=None, help="Comma list, overrides config alphas.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--parallel", default=1, show_default=True, help="Worker processes across seeds.")
@click.option("--emit-frontier", is_flag=True, help="Also write per-candidate (value, alpha threshold) dumps.")
def cmd_run(config_path, seeds, alpha_opt, out_dir, parallel, emit_frontier):
    """Run simulated sessions for every (seed, trade date) and report."""
    if not config_path.exists():
        raise _config_error(f"config file not found: {config_path}")
    experiment = _load_experiment(config_path)
    if seeds is not None:
        experiment["seeds"] = _parse_seeds(seeds)
    if alpha_opt is not None:
        try:
            experiment["alphas"] = [float(a) for a in alpha_opt.split(",") if a.strip()]
        except ValueError:
            raise _config_error(f"bad --alpha list: {alpha_opt!r}")
    seed_list = [int(s) for s in experiment.get("seeds", [0])]

    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(experiment, s) for s in seed_list]
    try:
        if parallel > 1:
            with ProcessPoolExecutor(max_workers=parallel) as pool:
                outcomes = list(pool.map(_run_one_seed, jobs))
        else:
            outcomes = [_run_one_seed(j) for j in jobs]
    except ConfigError as e:
        raise _config_error(str(e))
    except Exception as e:
        raise _runtime_error(f"{type(e).__name__}: {e}")

    for outcome in outcomes:
        seed = outcome["seed"]
        (out_dir / f"result_seed_{seed}.json").write_text(
            canonical_json(outcome), encoding="utf-8"
        )
        csv_lines = ["alpha,strategy,mean,variance"]
        for alpha_key, rows in sorted(outcome["reports"].items()):
            for row in rows:
                csv_lines.append(f"{alpha_key},{row['strategy']},{row['mean']!r},{row['variance']!r}")
        (out_dir / f"report_seed_{seed}.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
        if emit_frontier:
            frontier_lines = ["date_index,candidate,value,alpha_threshold"]
            for di, result in enumerate(outcome["results"]):
                thresholds = result.get("thresholds") or []
                for ci, (cand, thr) in enumerate(zip(result["candidates"], thresholds)):
                    frontier_lines.append(f"{di},{ci},{cand['value']!r},{thr!r}")
            (out_dir / f"frontier_seed_{seed}.csv").write_text(
                "\n".join(frontier_lines) + "\n", encoding="utf-8"
            )
    click.echo(f"wrote {len(outcomes)} result file(s) to {out_dir}")


def _parse_seeds(text: str) -> list[int]:
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise _config_error(f"bad --seeds spec {text!r}, want '1..10' or '1,2,3'")


@main.command("report")
@click.option("--out-dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
def cmd_report(out_dir):
    """Print the aggregate strategy table from result files in a directory."""
    files = sorted(out_dir.glob("result_seed_*.json"))
    if not files:
        raise _config_error(f"no result_seed_*.json files in {out_dir}")
    click.echo("seed,alpha,strategy,mean,variance")
    for f in files:
        outcome = json.loads(f.read_text(encoding="utf-8"))
        for alpha_key, rows in sorted(outcome["reports"].items()):
            for row in rows:
                click.echo(
                    f"{outcome['seed']},{alpha_key},{row['strategy']},{row['mean']!r},{row['variance']!r}"
                )


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8800, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default="./sessions",
              show_default=True)
@click.option("--ui-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory of built UI assets to serve at /.")
def cmd_serve(host, port, data_dir, ui_dir):
    """Start the HTTP service; resumes any persisted sessions."""
    import uvicorn

    from .service import SessionStore, create_app

    store = SessionStore(data_dir)
    store.resume_all()
    app = create_app(store, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
