"""Command-line driver: simulate, fit, evaluate, shrinkage.

Configuration precedence is flags > config file (flat key=value text) >
defaults. A manifest.json is written next to each command's outputs and
can be replayed with --replay to reproduce them byte-identically (the
manifest itself carries wall-clock timings and is exempt).

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .basis import BasisSpec, fit_basis, read_basis_csv, to_basis_space
from .dataset import read_dataset, write_long_csv
from .dataspace import (
    EdgeFunction,
    lagged_profile,
    select_edges,
    summarize,
    write_edges_csv,
    write_lagprofile_csv,
)
from .errors import ConfigError, DataError, FunGraphError, NotPositiveDefinite
from .graphmodel import Hyperparameters
from .hypoexp import Hypoexponential, ShrinkageDiagnostic, hypo_pdf, predictive_mixture, shrinkage_S
from .sampler import SamplerConfig, dump_chains, pair_list, run_chain
from .simgen import (
    ScenarioConfig,
    generate,
    imtpr_imfpr,
    read_truth_csv,
    roc_points,
    scenario_manifest,
    write_truth_csv,
)

_EXIT_CONFIG = 2
_EXIT_DATA = 3
_EXIT_NUMERIC = 4


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _read_kv_config(path) -> dict:
    """Flat key=value text; '#' starts a comment; dashes equal underscores."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(args: argparse.Namespace, file_cfg: dict, casts: dict) -> dict:
    """Apply precedence flag > config file > default for every known key."""
    resolved = {}
    for key, (cast, default) in casts.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            resolved[key] = flag_val
        elif key in file_cfg:
            raw = file_cfg[key]
            resolved[key] = (raw.lower() in ("1", "true", "yes")) if cast is bool else cast(raw)
        else:
            resolved[key] = default
    unknown = set(file_cfg) - set(casts)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return resolved


def _load_layer(args) -> dict:
    if getattr(args, "replay", None):
        with open(args.replay) as fh:
            manifest = json.load(fh)
        cfg = manifest.get("resolved_config", {})
        return {k: str(v) for k, v in cfg.items() if v is not None}
    if getattr(args, "config", None):
        return _read_kv_config(args.config)
    return {}


def _workers_default() -> int:
    env = os.environ.get("FUNGRAPH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"FUNGRAPH_THREADS must be an integer, got {env!r}") from exc
    return 1


def _write_manifest(out_dir, command, resolved, checksums, timings) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "resolved_config": resolved,
        "input_checksums": checksums,
        "seed": resolved.get("seed"),
        "timings_sec": {k: round(v, 6) for k, v in timings.items()},
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, count = text.split(":")
        return np.linspace(float(lo), float(hi), int(count))
    except ValueError as exc:
        raise ConfigError(f"grid must be 'lo:hi:count', got {text!r}") from exc


_FIT_KEYS = {
    "data": (str, None),
    "basis": (str, "wavelet-db2"),
    "basis_file": (str, None),
    "levels": (int, 6),
    "energy_keep": (float, 1.0),
    "epsilon": (float, 1e-8),
    "iters": (int, 6000),
    "burnin": (int, 1000),
    "thin": (int, 5),
    "ci": (float, 0.95),
    "seed": (int, 0),
    "workers": (int, None),
    "grid_points": (int, 100),
    "s_step": (float, 0.3),
    "alpha_s": (float, 0.1),
    "beta_s": (float, 0.1),
    "alpha_lambda": (float, 0.1),
    "beta_lambda": (float, 0.1),
    "dump_chains": (bool, False),
    "normalize": (bool, False),
    "lag_pair": (str, None),
    "lag_t": (int, None),
    "out_dir": (str, "."),
}


def cmd_fit(args) -> int:
    resolved = _resolve(args, _load_layer(args), _FIT_KEYS)
    if resolved["data"] is None:
        raise ConfigError("--data is required")
    if resolved["workers"] is None:
        resolved["workers"] = _workers_default()
    out_dir = resolved["out_dir"]
    os.makedirs(out_dir, exist_ok=True)

    timings = {}
    checksums = {"data": _sha256(resolved["data"])}
    t0 = time.perf_counter()
    data = read_dataset(resolved["data"])
    spec = BasisSpec(
        kind=resolved["basis"],
        levels=resolved["levels"],
        energy_keep=resolved["energy_keep"],
        epsilon=resolved["epsilon"],
    )
    matrix = None
    if resolved["basis"] == "external-matrix":
        if resolved["basis_file"] is None:
            raise ConfigError("--basis-file is required with --basis external-matrix")
        checksums["basis_file"] = _sha256(resolved["basis_file"])
        matrix = read_basis_csv(resolved["basis_file"])
    basis = fit_basis(spec, data, matrix=matrix)
    coeffs = to_basis_space(data, basis)
    timings["transform"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    config = SamplerConfig(
        iterations=resolved["iters"],
        burn_in=resolved["burnin"],
        thin=resolved["thin"],
        seed=resolved["seed"],
        grid_points=resolved["grid_points"],
        workers=resolved["workers"],
        hyper=Hyperparameters(
            alpha_s=resolved["alpha_s"],
            beta_s=resolved["beta_s"],
            alpha_lambda=resolved["alpha_lambda"],
            beta_lambda=resolved["beta_lambda"],
        ),
        ci_level=resolved["ci"],
        s_step=resolved["s_step"],
    )
    draws = run_chain(coeffs, config)
    timings["sample"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    summary = summarize(draws, basis, ci_level=config.ci_level, normalize=resolved["normalize"])
    edges = select_edges(summary)
    write_edges_csv(summary, edges, os.path.join(out_dir, "edges.csv"))
    if resolved["lag_pair"] is not None:
        try:
            j, l = (int(v) for v in resolved["lag_pair"].split(","))
        except ValueError as exc:
            raise ConfigError(f"--lag-pair must be 'j,l', got {resolved['lag_pair']!r}") from exc
        lag_t = resolved["lag_t"] if resolved["lag_t"] is not None else 1
        tprimes = np.arange(data.T)
        means = lagged_profile(draws, basis, j - 1, l - 1, lag_t - 1, tprimes)
        write_lagprofile_csv(lag_t - 1, tprimes, j - 1, l - 1, means, os.path.join(out_dir, "lagprofile.csv"))
    if resolved["dump_chains"]:
        dump_chains(draws, os.path.join(out_dir, "chains"))
    timings["summarize"] = time.perf_counter() - t0

    _write_manifest(out_dir, "fit", resolved, checksums, timings)
    retained = draws.M
    print(f"fit: K={basis.K} slabs, {retained} retained draws per slab, outputs in {out_dir}")
    return 0


_SIM_KEYS = {
    "scenario": (str, "ar1"),
    "dynamic": (int, 1),
    "n": (int, 50),
    "p": (int, 10),
    "grid_len": (int, 128),
    "t0": (int, None),
    "ar_coeff": (float, 0.7),
    "seed": (int, 0),
    "out_dir": (str, "."),
}


def cmd_simulate(args) -> int:
    resolved = _resolve(args, _load_layer(args), _SIM_KEYS)
    out_dir = resolved["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    config = ScenarioConfig(
        autocorrelation=resolved["scenario"],
        dynamic=resolved["dynamic"],
        n=resolved["n"],
        p=resolved["p"],
        T=resolved["grid_len"],
        t0=resolved["t0"],
        ar_coeff=resolved["ar_coeff"],
        seed=resolved["seed"],
    )
    t0 = time.perf_counter()
    data, truth = generate(config)
    write_long_csv(data, os.path.join(out_dir, "data.csv"))
    write_truth_csv(truth, os.path.join(out_dir, "truth.csv"))
    with open(os.path.join(out_dir, "scenario.json"), "w", newline="\n") as fh:
        json.dump(scenario_manifest(config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    timings = {"generate": time.perf_counter() - t0}
    _write_manifest(out_dir, "simulate", resolved, {}, timings)
    print(f"simulate: n={config.n}, p={config.p}, T={config.T}, outputs in {out_dir}")
    return 0


_EVAL_KEYS = {
    "truth": (str, None),
    "edges": (str, None),
    "scores": (str, None),
    "out_dir": (str, "."),
}


def _read_edges_csv(path):
    rows = []
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
        if header != ["t", "j", "l", "mean", "lb", "ub", "selected"]:
            raise DataError(f"{path}: unexpected header {header}")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 7:
                raise DataError(f"{path}: bad row {line!r}")
            rows.append([float(v) for v in parts])
    arr = np.array(rows)
    T = int(arr[:, 0].max())
    p = int(arr[:, 2].max())
    pairs = pair_list(p)
    index = {pair: i for i, pair in enumerate(pairs)}
    mean = np.zeros((T, len(pairs)))
    lb = np.zeros((T, len(pairs)))
    ub = np.zeros((T, len(pairs)))
    selected = np.zeros((T, len(pairs)), dtype=bool)
    for t, j, l, m, lo, hi, sel in arr:
        i = index[(int(j) - 1, int(l) - 1)]
        mean[int(t) - 1, i] = m
        lb[int(t) - 1, i] = lo
        ub[int(t) - 1, i] = hi
        selected[int(t) - 1, i] = bool(sel)
    return EdgeFunction(selected, lb, ub, pairs), mean, p, T


def _read_scores_csv(path):
    rows = []
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
        if header != ["t", "j", "l", "score"]:
            raise DataError(f"{path}: expected header 't,j,l,score', got {header}")
        for line in fh:
            parts = line.strip().split(",")
            rows.append([float(v) for v in parts])
    arr = np.array(rows)
    T = int(arr[:, 0].max())
    p = int(arr[:, 2].max())
    pairs = pair_list(p)
    index = {pair: i for i, pair in enumerate(pairs)}
    scores = np.zeros((T, len(pairs)))
    for t, j, l, s in arr:
        scores[int(t) - 1, index[(int(j) - 1, int(l) - 1)]] = s
    return scores, p, T


def cmd_evaluate(args) -> int:
    resolved = _resolve(args, _load_layer(args), _EVAL_KEYS)
    if resolved["truth"] is None:
        raise ConfigError("--truth is required")
    if resolved["edges"] is None and resolved["scores"] is None:
        raise ConfigError("one of --edges or --scores is required")
    out_dir = resolved["out_dir"]
    os.makedirs(out_dir, exist_ok=True)

    lines = []
    if resolved["edges"] is not None:
        estimate, mean, p, T = _read_edges_csv(resolved["edges"])
        truth = read_truth_csv(resolved["truth"], p, T)
        tpr, fpr = imtpr_imfpr(estimate, truth)
        lines.append(f"IMTPR,{tpr:.6g}")
        lines.append(f"IMFPR,{fpr:.6g}")
        scores = np.abs(mean)
    else:
        scores, p, T = _read_scores_csv(resolved["scores"])
        truth = read_truth_csv(resolved["truth"], p, T)
    points, auc = roc_points(np.abs(scores), truth)
    lines.append(f"AUC,{auc:.6g}")
    with open(os.path.join(out_dir, "roc.csv"), "w", newline="\n") as fh:
        fh.write("fpr,tpr\n")
        for f, t in points:
            fh.write(f"{f:.12g},{t:.12g}\n")
    for line in lines:
        print(line)
    _write_manifest(out_dir, "evaluate", resolved, {"truth": _sha256(resolved["truth"])}, {})
    return 0


_SHRINK_KEYS = {
    "rates": (str, None),
    "n": (int, 1),
    "grid": (str, "-8:8:161"),
    "x_grid": (str, "0:10:201"),
    "out_dir": (str, "."),
}


def cmd_shrinkage(args) -> int:
    resolved = _resolve(args, _load_layer(args), _SHRINK_KEYS)
    if resolved["rates"] is None:
        raise ConfigError("--rates is required")
    try:
        rates = np.array([float(v) for v in resolved["rates"].split(",")])
    except ValueError as exc:
        raise ConfigError(f"--rates must be comma-separated numbers, got {resolved['rates']!r}") from exc
    out_dir = resolved["out_dir"]
    os.makedirs(out_dir, exist_ok=True)

    dist = Hypoexponential(rates)
    xs = _parse_grid(resolved["x_grid"])
    pdf = hypo_pdf(dist, xs)
    with open(os.path.join(out_dir, "hypopdf.csv"), "w", newline="\n") as fh:
        fh.write("x,pdf\n")
        for x, f in zip(xs, np.atleast_1d(pdf)):
            fh.write(f"{x:.12g},{f:.12g}\n")

    diag = ShrinkageDiagnostic(n=resolved["n"], rates=rates)
    ybars = _parse_grid(resolved["grid"])
    svals = np.atleast_1d(shrinkage_S(diag, ybars))
    mvals = np.atleast_1d(predictive_mixture(diag, ybars))
    with open(os.path.join(out_dir, "shrinkage.csv"), "w", newline="\n") as fh:
        fh.write("ybar,S,m\n")
        for y, s, m in zip(ybars, svals, mvals):
            fh.write(f"{y:.12g},{s:.12g},{m:.12g}\n")
    _write_manifest(out_dir, "shrinkage", resolved, {}, {})
    print(f"shrinkage: wrote hypopdf.csv and shrinkage.csv to {out_dir}")
    return 0


def _add_common(parser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--replay", help="manifest.json from a previous run to reproduce")
    parser.add_argument("--out-dir", dest="out_dir", help="output directory (default .)")
    parser.add_argument("--seed", type=int, help="RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fungraph", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate the evolving graph from functional data")
    _add_common(fit)
    fit.add_argument("--data", help="long-format CSV or FGD1 binary data file")
    fit.add_argument("--basis", choices=["wavelet-db2", "fourier", "identity", "external-matrix"])
    fit.add_argument("--basis-file", dest="basis_file", help="CSV matrix for --basis external-matrix")
    fit.add_argument("--levels", type=int, help="wavelet decomposition depth")
    fit.add_argument("--energy-keep", dest="energy_keep", type=float)
    fit.add_argument("--epsilon", type=float, help="lossless bound on relative error")
    fit.add_argument("--iters", type=int)
    fit.add_argument("--burnin", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--ci", type=float, help="credible level for edge selection")
    fit.add_argument("--workers", type=int)
    fit.add_argument("--grid-points", dest="grid_points", type=int)
    fit.add_argument("--s-step", dest="s_step", type=float)
    fit.add_argument("--alpha-s", dest="alpha_s", type=float)
    fit.add_argument("--beta-s", dest="beta_s", type=float)
    fit.add_argument("--alpha-lambda", dest="alpha_lambda", type=float)
    fit.add_argument("--beta-lambda", dest="beta_lambda", type=float)
    fit.add_argument("--dump-chains", dest="dump_chains", action="store_const", const=True)
    fit.add_argument("--normalize", action="store_const", const=True)
    fit.add_argument("--lag-pair", dest="lag_pair", help="'j,l' (1-based) to emit lagprofile.csv")
    fit.add_argument("--lag-t", dest="lag_t", type=int, help="1-based anchor position for the lag profile")
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="generate a synthetic dataset with known truth")
    _add_common(sim)
    sim.add_argument("--scenario", choices=["ar1", "changepoint"])
    sim.add_argument("--dynamic", type=int, choices=[1, 2])
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--T", dest="grid_len", type=int)
    sim.add_argument("--t0", type=int)
    sim.add_argument("--ar-coeff", dest="ar_coeff", type=float)
    sim.set_defaults(func=cmd_simulate)

    ev = sub.add_parser("evaluate", help="score an edge estimate against a truth file")
    _add_common(ev)
    ev.add_argument("--truth", help="truth.csv from simulate")
    ev.add_argument("--edges", help="edges.csv from fit")
    ev.add_argument("--scores", help="t,j,l,score CSV (alternative to --edges)")
    ev.set_defaults(func=cmd_evaluate)

    sh = sub.add_parser("shrinkage", help="tabulate prior density and shrinkage curves")
    _add_common(sh)
    sh.add_argument("--rates", help="comma-separated positive rates")
    sh.add_argument("--n", type=int, help="pseudo-sample size")
    sh.add_argument("--grid", help="ybar grid 'lo:hi:count'")
    sh.add_argument("--x-grid", dest="x_grid", help="pdf grid 'lo:hi:count'")
    sh.set_defaults(func=cmd_shrinkage)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except (NotPositiveDefinite, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except FunGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
