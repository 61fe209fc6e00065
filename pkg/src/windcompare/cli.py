"""Command-line interface.

Subcommands mirror the pipeline stages: ``select`` (covariate subset),
``match`` (covariate matching), ``compare`` (GP difference curve),
``metrics`` (reduce a curve to the difference metrics), ``synth``
(synthetic farm generation) and ``farm run`` (whole-farm batch).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dataset import concat_datasets
from .farm import FarmConfig, run_farm
from .gp import (
    DifferenceCurve,
    TestGrid,
    build_test_grid,
    difference_band,
    fit_gp,
    fit_hyperparameters,
    pooled_mean,
)
from .ingest import read_dataset, write_dataset
from .matching import MatchSpec, match_two_way, matching_diagnostics
from .metrics import compute_metrics
from .selection import backward_select, forward_select
from .synthetic import RNG_NAME, SyntheticConfig, generate


def _covariate_list(text: str) -> list[str]:
    return [c.strip() for c in text.split(",") if c.strip()]


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# -- curve file format --------------------------------------------------------


def write_curve(curve: DifferenceCurve, path) -> None:
    """Plot-ready table: grid coordinates, both curves, difference, band."""
    cols = [*curve.grid.covariates, "f1_hat", "f2_hat", "diff", "band_lower", "band_upper"]
    lines = [f"# alpha={curve.alpha!r}", ",".join(cols)]
    data = np.column_stack(
        [curve.grid.points, curve.f1_hat, curve.f2_hat, curve.diff,
         curve.band_lower, curve.band_upper]
    )
    for row in data:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_curve(path) -> DifferenceCurve:
    """Rebuild a DifferenceCurve (including its grid) from a curve file."""
    lines = Path(path).read_text().strip().splitlines()
    alpha = 0.05
    if lines and lines[0].startswith("#"):
        alpha = float(lines.pop(0).split("=", 1)[1])
    header = lines[0].split(",")
    fixed = ["f1_hat", "f2_hat", "diff", "band_lower", "band_upper"]
    covariates = header[: len(header) - len(fixed)]
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    p = len(covariates)
    axes = [np.unique(data[:, l]) for l in range(p)]
    n_expected = int(np.prod([len(a) for a in axes]))
    if n_expected != data.shape[0]:
        raise ValueError(f"curve file is not a full lattice: {data.shape[0]} rows, "
                         f"expected {n_expected}")
    grid = TestGrid(covariates, axes, data[:, :p])
    return DifferenceCurve(
        grid=grid,
        f1_hat=data[:, p],
        f2_hat=data[:, p + 1],
        diff=data[:, p + 2],
        band_lower=data[:, p + 3],
        band_upper=data[:, p + 4],
        alpha=alpha,
    )


# -- subcommand handlers -------------------------------------------------------


def _cmd_select(args) -> int:
    dataset = read_dataset(args.input, turbine_id=args.turbine_id)
    select = backward_select if args.method == "backward" else forward_select
    result = select(
        dataset, _covariate_list(args.candidates), args.k, args.rated_power,
        args.folds, args.seed,
    )
    _emit_json(result.to_dict(), args.out)
    return 0


def _cmd_match(args) -> int:
    d1 = read_dataset(args.a)
    d2 = read_dataset(args.b)
    spec = MatchSpec(tuple(_covariate_list(args.order)), args.varpi)
    result = match_two_way(d1, d2, spec)
    write_dataset(result.matched_1, args.out_a)
    write_dataset(result.matched_2, args.out_b)
    diag = matching_diagnostics(d1, d2, result)
    payload = diag.to_dict()
    payload["matched_a"] = result.matched_1.n
    payload["matched_b"] = result.matched_2.n
    _emit_json(payload, args.report)
    return 0


def _cmd_compare(args) -> int:
    d1 = read_dataset(args.a)
    d2 = read_dataset(args.b)
    covariates = _covariate_list(args.covariates)
    kernel, noise = fit_hyperparameters(
        d1, d2, covariates, args.seed, args.starts, args.fit_cap
    )
    offset = pooled_mean(d1, d2)
    g1 = fit_gp(d1, covariates, kernel, noise, offset, args.data_cap)
    g2 = fit_gp(d2, covariates, kernel, noise, offset, args.data_cap)
    grid = build_test_grid(d1, d2, covariates, args.grid)
    curve = difference_band(g1, g2, grid, args.alpha)
    write_curve(curve, args.out)
    return 0


def _cmd_metrics(args) -> int:
    curve = read_curve(args.curve)
    orig_a = read_dataset(args.orig_a)
    orig_b = read_dataset(args.orig_b)
    result = compute_metrics(
        curve, orig_a, orig_b, args.rated_power, args.bins, args.stat_mode
    )
    _emit_json(result.to_dict(), args.out)
    return 0


def _cmd_synth(args) -> int:
    raw = yaml.safe_load(Path(args.config).read_text()) or {}
    config = SyntheticConfig.from_dict(raw)
    farm, _truth = generate(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for turbine_id in sorted(farm):
        parts = [farm[turbine_id][p.label] for p in config.periods]
        write_dataset(concat_datasets(parts), out / f"{turbine_id}.csv")
    manifest = {"config": config.to_dict(), "rng": RNG_NAME, "version": __version__}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_farm_run(args) -> int:
    config = FarmConfig.from_yaml(args.config)
    run_farm(args.data_dir, config, args.out, args.layout, n_jobs=args.jobs)
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windcompare",
        description="Space-time power performance comparison for wind turbine fleets",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="rank covariates by CV kNN RMSE")
    p.add_argument("--input", required=True)
    p.add_argument("--candidates", default="W,T,D,TI,sdD")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--rated-power", type=float, required=True)
    p.add_argument("--turbine-id", default=None)
    p.add_argument("--method", choices=["forward", "backward"], default="forward")
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("match", help="two-way covariate matching")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--order", required=True, help="comma-separated, most important first")
    p.add_argument("--varpi", type=float, default=0.2)
    p.add_argument("--out-a", default="matched_a.csv")
    p.add_argument("--out-b", default="matched_b.csv")
    p.add_argument("--report", default=None, help="write diagnostics JSON here")
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("compare", help="GP difference curve with confidence band")
    p.add_argument("--a", required=True, help="matched dataset, side 1")
    p.add_argument("--b", required=True, help="matched dataset, side 2")
    p.add_argument("--covariates", default="W,T")
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--starts", type=int, default=3)
    p.add_argument("--fit-cap", type=int, default=512)
    p.add_argument("--data-cap", type=int, default=2500)
    p.add_argument("--out", default="curve.csv")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("metrics", help="reduce a difference curve to metrics")
    p.add_argument("--curve", required=True)
    p.add_argument("--orig-a", required=True, help="pre-matching dataset, side 1")
    p.add_argument("--orig-b", required=True, help="pre-matching dataset, side 2")
    p.add_argument("--bins", type=int, default=15)
    p.add_argument("--rated-power", type=float, required=True)
    p.add_argument("--stat-mode", choices=["excess", "full"], default="excess")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("synth", help="generate a synthetic farm")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("farm", help="whole-farm analyses")
    farm_sub = p.add_subparsers(dest="farm_command", required=True)
    p = farm_sub.add_parser("run", help="run configured analyses over a data directory")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--layout", default=None)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_farm_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
