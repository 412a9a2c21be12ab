"""Command-line surface: simulate | estimate | curve | reproduce | validate-divergence.

Configuration is a single JSON document; command-line flags override JSON
keys (flag > environment > JSON > default).  Unknown JSON keys are
rejected.  Every output embeds the effective-config hash and the library
version, contains no timestamps, and is byte-identical across re-runs
with the same configuration.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .divergence import make_spec, validate_spec
from .dual import NumericalDivergenceError
from .effects import confidence_interval
from .estimator import Dataset, EstimatorConfig, estimate_bound, TARGETS
from .nuisance import RegressorSpec
from .sensitivity import compute_curve, invert
from .sieve import SieveConfig
from . import simulation as sim

OUTPUT_DIR_ENV = "FSENS_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _config_hash(cfg: dict) -> str:
    # file paths are reduced to basenames so outputs are location-portable
    norm = {k: (Path(v).name if k == "dataset" and isinstance(v, str) else v)
            for k, v in cfg.items()}
    blob = json.dumps(norm, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: Path, payload: dict):
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header: list[str], rows, meta: dict | None = None):
    lines = []
    if meta:
        pairs = " ".join(f"{k}={v}" for k, v in sorted(meta.items()))
        lines.append(f"# {pairs}")
    lines.append(",".join(header))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append("" if math.isnan(v) else _fmt(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    _write_text(path, "\n".join(lines) + "\n")


def write_dataset_csv(path: Path, data: Dataset, meta: dict | None = None):
    header = [f"x{i + 1}" for i in range(data.d)] + ["t", "y"]
    rows = [
        tuple(float(v) for v in data.X[i]) + (int(data.T[i]), float(data.Y[i]))
        for i in range(data.n)
    ]
    _write_csv(path, header, rows, meta=meta)


def read_dataset_csv(path: Path) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise DataError(f"cannot read dataset: {exc}") from exc
    if not lines:
        raise DataError("dataset file is empty")
    header = lines[0].split(",")
    d = sum(1 for h in header if h.startswith("x"))
    expected = [f"x{i + 1}" for i in range(d)] + ["t", "y"]
    for col in expected:
        if col not in header:
            raise DataError(f"dataset is missing column '{col}'")
    if header != expected:
        raise DataError(f"dataset columns must be {expected}, got {header}")
    try:
        body = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise DataError(f"non-numeric cell in dataset: {exc}") from exc
    if body.size == 0:
        raise DataError("dataset has a header but no rows")
    X, t, y = body[:, :d], body[:, d], body[:, d + 1]
    if not np.isin(t, (0.0, 1.0)).all():
        raise DataError("column 't' must be binary")
    try:
        return Dataset(X=X, T=t.astype(int), Y=y)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def _check_keys(cfg: dict, allowed: set[str], where: str):
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config key(s) in {where}: {sorted(unknown)}")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _merged(cfg: dict, args: argparse.Namespace, keys: list[str]) -> dict:
    out = dict(cfg)
    for key in keys:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            out[key] = val
    return out


def _resolve_outdir(cfg: dict, args) -> Path:
    if getattr(args, "output_dir", None):
        return Path(args.output_dir)
    if os.environ.get(OUTPUT_DIR_ENV):
        return Path(os.environ[OUTPUT_DIR_ENV])
    return Path(cfg.get("output_dir", "."))


def _positive_int(cfg: dict, key: str, default=None) -> int:
    val = cfg.get(key, default)
    if not isinstance(val, int) or isinstance(val, bool) or val < 1:
        raise ConfigError(f"'{key}' must be a positive integer, got {val!r}")
    return val


def _level(cfg: dict) -> float:
    level = cfg.get("level", 0.95)
    if not isinstance(level, (int, float)) or not 0.5 < level < 1:
        raise ConfigError(f"'level' must lie in (0.5, 1), got {level!r}")
    return float(level)


def _spec_from(cfg: dict):
    name = cfg.get("divergence", "KL")
    k = cfg.get("k")
    try:
        return make_spec(name, k)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _estimator_config(cfg: dict) -> EstimatorConfig:
    reg_cfg = cfg.get("regressor", {})
    _check_keys(reg_cfg, {"kind", "n_trees", "min_leaf", "max_depth", "bandwidth", "k"},
                "regressor")
    sieve_cfg = cfg.get("sieve", {})
    _check_keys(sieve_cfg, {"kind", "spline_order", "J", "p"}, "sieve")
    try:
        regressor = RegressorSpec(**reg_cfg)
        sieve = SieveConfig(**sieve_cfg)
        return EstimatorConfig(
            regressor=regressor, sieve=sieve,
            eps=float(cfg.get("eps", 1e-3)), seed=int(cfg.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _dgp_from(cfg: dict) -> sim.DgpConfig:
    n = _positive_int(cfg, "n", 15000)
    d = _positive_int(cfg, "d", 4)
    kwargs = dict(n=n, d=d, delta=float(cfg.get("delta", 0.5)),
                  seed=int(cfg.get("seed", 0)))
    for key in ("gamma", "beta1", "beta0"):
        if key in cfg:
            kwargs[key] = tuple(float(v) for v in cfg[key])
    if "sigma2_coef" in cfg:
        kwargs["sigma2_coef"] = tuple(float(v) for v in cfg["sigma2_coef"])
    try:
        return sim.DgpConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- commands

SIMULATE_KEYS = {"n", "d", "delta", "seed", "gamma", "beta1", "beta0",
                 "sigma2_coef", "output_dir", "name"}


def cmd_simulate(cfg: dict, outdir: Path) -> int:
    _check_keys(cfg, SIMULATE_KEYS, "simulate")
    dgp = _dgp_from(cfg)
    name = cfg.get("name", "dataset")
    effective = {"command": "simulate", **{k: cfg.get(k) for k in sorted(cfg)}}
    h = _config_hash(effective)
    data = sim.generate(dgp)
    write_dataset_csv(outdir / f"{name}.csv", data,
                      meta={"config_hash": h, "version": __version__})
    sidecar = {
        "config_hash": h, "version": __version__,
        "dgp": dataclasses.asdict(dgp), "rho_kl": dgp.rho_kl,
        "n_treated": int(data.T.sum()), "n_control": int(data.n - data.T.sum()),
    }
    _write_json(outdir / f"{name}.json", sidecar)
    print(f"wrote {outdir / (name + '.csv')} ({data.n} rows) and sidecar")
    return EXIT_OK


ESTIMATE_KEYS = {"dataset", "divergence", "k", "rho", "target", "level", "eps",
                 "seed", "regressor", "sieve", "output_dir", "name"}


def cmd_estimate(cfg: dict, outdir: Path) -> int:
    _check_keys(cfg, ESTIMATE_KEYS, "estimate")
    if "dataset" not in cfg:
        raise ConfigError("'dataset' (CSV path) is required")
    rho = cfg.get("rho")
    if not isinstance(rho, (int, float)) or rho <= 0:
        raise ConfigError(f"'rho' must be a positive number, got {rho!r}")
    target = cfg.get("target", "mu10_lower")
    if target not in TARGETS:
        raise ConfigError(f"'target' must be one of {list(TARGETS)}")
    level = _level(cfg)
    spec = _spec_from(cfg)
    est_cfg = _estimator_config(cfg)
    data = read_dataset_csv(Path(cfg["dataset"]))

    try:
        est = estimate_bound(data, spec, float(rho), target, est_cfg)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    ci2 = confidence_interval(est, level, "two_sided_bound")
    ci1 = confidence_interval(est, level, "one_sided_bound")
    effective = {"command": "estimate", **{k: cfg.get(k) for k in sorted(cfg)}}
    h = _config_hash(effective)
    name = cfg.get("name", "estimate")
    payload = {
        "config_hash": h, "version": __version__,
        "target": target, "divergence": spec.label(), "rho": float(rho),
        "point": est.point, "sigma_hat": est.sigma_hat, "n": est.n,
        "fold_values": list(est.fold_values),
        "ci_two_sided": {"level": level, "lo": ci2.lo, "hi": ci2.hi},
        "ci_one_sided": {"level": level,
                         "lo": None if math.isinf(ci1.lo) else ci1.lo,
                         "hi": None if math.isinf(ci1.hi) else ci1.hi},
        "alpha_floor_hit": est.diagnostics["alpha_floor_hit"],
    }
    _write_json(outdir / f"{name}.json", payload)
    rows = []
    for arr, idx, arm in ((est.d1, est.treated_index, 1), (est.d0, est.control_index, 0)):
        for i, v in zip(idx, arr):
            rows.append((int(i), arm, int(est.fold_of[i]), float(v)))
    rows.sort(key=lambda r: r[0])
    _write_csv(outdir / f"{name}_influence.csv", ["row", "arm", "fold", "component"],
               rows, meta={"config_hash": h, "version": __version__})
    print(f"{target}: point={est.point:.6f} sigma_hat={est.sigma_hat:.6f} "
          f"ci=({ci2.lo:.6f}, {ci2.hi:.6f})")
    return EXIT_OK


CURVE_KEYS = {"dataset", "divergence", "k", "rho_grid", "effect", "level",
              "threshold", "eps", "seed", "regressor", "sieve", "output_dir", "name"}


def cmd_curve(cfg: dict, outdir: Path) -> int:
    _check_keys(cfg, CURVE_KEYS, "curve")
    if "dataset" not in cfg:
        raise ConfigError("'dataset' (CSV path) is required")
    grid_cfg = cfg.get("rho_grid")
    if isinstance(grid_cfg, dict):
        _check_keys(grid_cfg, {"start", "stop", "num"}, "rho_grid")
        try:
            grid = np.linspace(float(grid_cfg["start"]), float(grid_cfg["stop"]),
                               int(grid_cfg["num"]))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad rho_grid: {exc}") from exc
    elif isinstance(grid_cfg, list) and grid_cfg:
        grid = np.asarray([float(v) for v in grid_cfg])
    else:
        raise ConfigError("'rho_grid' must be a nonempty list or {start, stop, num}")
    if len(np.unique(grid)) != len(grid):
        raise ConfigError("rho_grid contains duplicate entries")
    effect = cfg.get("effect", "ATC")
    level = _level(cfg)
    threshold = float(cfg.get("threshold", 0.0))
    spec = _spec_from(cfg)
    est_cfg = _estimator_config(cfg)
    data = read_dataset_csv(Path(cfg["dataset"]))

    try:
        curve = compute_curve(data, spec, grid, effect=effect, level=level, cfg=est_cfg)
    except ValueError as exc:
        # grid/effect problems are configuration; anything else is data
        msg = str(exc)
        if "rho_grid" in msg or "effect" in msg:
            raise ConfigError(msg) from exc
        raise DataError(msg) from exc
    inv = invert(curve, threshold)
    effective = {"command": "curve", **{k: cfg.get(k) for k in sorted(cfg)}}
    h = _config_hash(effective)
    name = cfg.get("name", "curve")
    rows = [
        (float(curve.rho_grid[i]), float(curve.lcb[i]), float(curve.ucb[i]),
         float(curve.lcb_monotone[i]), float(curve.ucb_monotone[i]))
        for i in range(len(curve))
    ]
    _write_csv(outdir / f"{name}.csv", ["rho", "lcb", "ucb", "lcb_monotone", "ucb_monotone"],
               rows, meta={"config_hash": h, "version": __version__})
    _write_json(outdir / f"{name}_rho_hat.json", {
        "config_hash": h, "version": __version__,
        "effect": effect, "level": level, "threshold": threshold,
        "rho_hat": inv.rho_hat if inv.rho_hat is not None else "none",
        "neighbor_below": inv.neighbor_below, "neighbor_above": inv.neighbor_above,
        "interpretation": inv.interpretation,
        "failures": list(curve.failures),
    })
    print(f"curve over {len(curve)} budgets; rho_hat="
          f"{inv.rho_hat if inv.rho_hat is not None else 'none'}")
    return EXIT_OK


REPRODUCE_KEYS = {"figure", "scale", "seed", "threads", "output_dir"}

VALID_FIGURES = (1, 2, 3, 4, 5, 6)


def cmd_reproduce(cfg: dict, outdir: Path) -> int:
    _check_keys(cfg, REPRODUCE_KEYS, "reproduce")
    figure = cfg.get("figure")
    if figure not in VALID_FIGURES:
        raise ConfigError(f"'figure' must be one of {list(VALID_FIGURES)}, got {figure!r}")
    scale = cfg.get("scale", "desk")
    if scale not in ("paper", "desk"):
        raise ConfigError("'scale' must be 'paper' or 'desk'")
    seed = int(cfg.get("seed", 0))
    threads = cfg.get("threads") or (os.cpu_count() or 1)
    effective = {"command": "reproduce", **{k: cfg.get(k) for k in sorted(cfg)}}
    h = _config_hash(effective)
    meta = {"config_hash": h, "version": __version__, "scale": scale}
    paper = scale == "paper"

    if figure == 1:
        deltas = [0.25 * i for i in range(1, 13)]
        rows_a = [(d, sim.logistic_confounding_budget(d)) for d in deltas]
        _write_csv(outdir / "figure1_budget.csv", ["delta", "budget"], rows_a, meta=meta)
        rhos = [sim.logistic_confounding_budget(d) for d in (0.5, 1.0, 1.5, 2.0)]
        reps = 20 if paper else 5
        rows_b = sim.bound_replicates_no_covariates(rhos, n=2000, repeats=reps, seed=seed)
        _write_csv(outdir / "figure1_bounds.csv", ["rho", "repeat", "lower", "upper"],
                   [(r["rho"], r["repeat"], r["lower"], r["upper"]) for r in rows_b],
                   meta=meta)
    elif figure == 2:
        deltas = [0.1, 0.3, 0.5, 0.7, 1.0, 1.5] if paper else [0.1, 0.3, 0.5]
        rows = sim.odds_ratio_quantiles(sim.DgpConfig(seed=seed),
                                        deltas, n_draws=100_000 if paper else 20_000)
        header = list(rows[0].keys())
        _write_csv(outdir / "figure2_or_quantiles.csv", header,
                   [tuple(r[k] for k in header) for r in rows], meta=meta)
    elif figure == 3:
        n = 15000 if paper else 5000
        dgp = sim.DgpConfig(n=n, delta=0.5, seed=seed)
        data = sim.generate(dgp)
        grid = np.round(np.arange(0.05, 1.0001, 0.05), 10)
        curve = compute_curve(data, make_spec("KL"), grid, effect="ATC",
                              level=0.95, cfg=EstimatorConfig(seed=seed))
        truth = sim.kl_truth(dgp)
        rows = [
            (float(curve.rho_grid[i]), float(curve.lcb[i]), float(curve.ucb[i]),
             float(curve.lcb_monotone[i]), float(curve.ucb_monotone[i]), truth.atc)
            for i in range(len(curve))
        ]
        _write_csv(outdir / "figure3_curve.csv",
                   ["rho", "lcb", "ucb", "lcb_monotone", "ucb_monotone", "true_atc"],
                   rows, meta=meta)
        inv0 = invert(curve, 0.0)
        inv_truth = invert(curve, truth.atc)
        _write_json(outdir / "figure3_rho_hat.json", {
            "config_hash": h, "version": __version__,
            "rho_hat_zero": inv0.rho_hat if inv0.rho_hat is not None else "none",
            "rho_hat_truth": inv_truth.rho_hat if inv_truth.rho_hat is not None else "none",
        })
    elif figure == 4:
        n = 15000 if paper else 2000
        reps = 500 if paper else 20
        deltas = [0.1 * i for i in range(1, 16)] if paper else [0.3, 0.5, 1.0]
        from ._seeds import child_seed

        rows = []
        for dlt in deltas:
            dgp = sim.DgpConfig(n=n, delta=dlt, seed=seed)
            rho = dgp.rho_kl
            truth = sim.kl_truth(dgp)
            for rep in range(reps):
                rep_dgp = sim.DgpConfig(n=n, delta=dlt,
                                        seed=child_seed(seed, "fig4", rep))
                data = sim.generate(rep_dgp)
                cfg_r = EstimatorConfig(seed=child_seed(seed, "fig4-est", rep))
                lo = estimate_bound(data, make_spec("KL"), rho, "mu10_lower", cfg_r)
                up = estimate_bound(data, make_spec("KL"), rho, "mu10_upper", cfg_r,
                                    plan=lo.plan)
                rows.append((dlt, rho, rep, lo.point, up.point,
                             truth.mu10_lower, truth.mu10_upper, truth.ey1_t0))
        _write_csv(outdir / "figure4_estimates.csv",
                   ["delta", "rho", "rep", "mu10_lower_hat", "mu10_upper_hat",
                    "truth_lower", "truth_upper", "truth_mean"], rows, meta=meta)
    else:  # figures 5 and 6 share the coverage run
        n = 15000 if paper else 2000
        reps = 500 if paper else 200
        deltas = [0.1 * i for i in range(1, 16)] if paper else [0.5, 1.0]
        cells = [sim.DgpConfig(n=n, delta=d, seed=seed) for d in deltas]
        table = sim.coverage_experiment(cells, reps=reps, level=0.95,
                                        workers=threads, seed=seed)
        if figure == 5:
            rows = [(r["delta"], r["rho"], r["coverage_lower"], r["coverage_upper"],
                     r["coverage_mean"], r["se"]) for r in table]
            _write_csv(outdir / "figure5_coverage.csv",
                       ["delta", "rho", "coverage_lower", "coverage_upper",
                        "coverage_mean", "se"], rows, meta=meta)
        else:
            rows = [(r["delta"], r["rho"], r["coverage_onesided_lower"],
                     r["coverage_onesided_upper"], r["se"]) for r in table]
            _write_csv(outdir / "figure6_onesided_coverage.csv",
                       ["delta", "rho", "coverage_onesided_lower",
                        "coverage_onesided_upper", "se"], rows, meta=meta)
    print(f"figure {figure} tables written to {outdir}")
    return EXIT_OK


VALIDATE_KEYS = {"divergence", "k", "output_dir", "name"}


def cmd_validate_divergence(cfg: dict, outdir: Path) -> int:
    _check_keys(cfg, VALIDATE_KEYS, "validate-divergence")
    spec = _spec_from(cfg)
    report = validate_spec(spec)
    payload = {
        "config_hash": _config_hash({"command": "validate-divergence",
                                     **{k: cfg.get(k) for k in sorted(cfg)}}),
        "version": __version__,
        "spec": report.spec_label,
        "ok": report.ok,
        "f_at_one": report.f_at_one,
        "max_convexity_violation": report.max_convexity_violation,
        "max_fenchel_violation": report.max_fenchel_violation,
        "max_conjugate_mismatch": report.max_conjugate_mismatch,
        "max_conjugate_derivative_mismatch": report.max_conjugate_derivative_mismatch,
        "f_at_zero_error": report.f_at_zero_error,
        "messages": list(report.messages),
    }
    name = cfg.get("name", "divergence_report")
    _write_json(outdir / f"{name}.json", payload)
    status = "ok" if report.ok else "violations: " + "; ".join(report.messages)
    print(f"{report.spec_label}: {status}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsens",
        description="Bounds and confidence intervals for treatment effects under "
                    "average bounds on unmeasured confounding.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--output-dir", help=f"output directory (or ${OUTPUT_DIR_ENV})")
        p.add_argument("--seed", type=int)
        p.add_argument("--name", help="basename for output files")

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--delta", type=float)

    p = sub.add_parser("estimate", help="estimate one counterfactual-mean bound")
    common(p)
    p.add_argument("--dataset")
    p.add_argument("--divergence")
    p.add_argument("--k", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--target", choices=list(TARGETS))
    p.add_argument("--level", type=float)

    p = sub.add_parser("curve", help="sweep budgets and invert the curve")
    common(p)
    p.add_argument("--dataset")
    p.add_argument("--divergence")
    p.add_argument("--k", type=float)
    p.add_argument("--effect", choices=["ATC", "ATT", "ATE"])
    p.add_argument("--level", type=float)
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("reproduce", help="emit experiment tables for figures 1-6")
    common(p)
    p.add_argument("--figure", type=int)
    p.add_argument("--scale", choices=["paper", "desk"])
    p.add_argument("--threads", type=int, help="worker-pool cap")

    p = sub.add_parser("validate-divergence", help="numerically certify a divergence")
    common(p)
    p.add_argument("--divergence")
    p.add_argument("--k", type=float)
    return parser


_COMMANDS = {
    "simulate": (cmd_simulate, ["n", "d", "delta", "seed", "name"]),
    "estimate": (cmd_estimate, ["dataset", "divergence", "k", "rho", "target",
                                "level", "seed", "name"]),
    "curve": (cmd_curve, ["dataset", "divergence", "k", "effect", "level",
                          "threshold", "seed", "name"]),
    "reproduce": (cmd_reproduce, ["figure", "scale", "seed", "threads"]),
    "validate-divergence": (cmd_validate_divergence, ["divergence", "k", "name"]),
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    fn, flag_keys = _COMMANDS[args.command]
    try:
        cfg = _load_config(args.config)
        cfg = _merged(cfg, args, flag_keys)
        outdir = _resolve_outdir(cfg, args)
        cfg.pop("output_dir", None)
        return fn(cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalDivergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
