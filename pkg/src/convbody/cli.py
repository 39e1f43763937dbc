"""Batch experiment driver.

    convbody --body K.json --cmd radial --deltas 0.9,0.99 --dirs 64 --seed 0 --out run.csv

The body file holds one JSON object (schema in :mod:`convbody.bodies`), e.g.
``{"type": "box", "dim": 3, "half_side": 1}``. Each run writes the CSV data to
``--out`` and a JSON manifest (config echo, library version, timings) next to
it as ``<out>.manifest.json``.

CSV columns per command (every table ends with ``status``):

* meanwidth:  method, value, std_error, n_samples
* radial:     x0..x{n-1}, delta, lambda_star, rho, T
* converge:   delta, sup_dev, n_directions, method
* cube-check: x0..x{n-1}, delta, rho_times_l1norm, constant_estimate
* rate:       slope, intercept, r_squared, n_points, constant, converging

``T`` is limit_radius / rho with limit_radius = 2 M*(K) / c_n. Floats are
written with 17 significant digits. Rows whose solve failed carry the error
in ``status`` and the process exits with code 3 after the whole table is
written; configuration errors exit with code 2.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import Body, Box, body_from_spec
from .convolution import (
    DEFAULT_SAMPLES, DeficitModel, fit_rate, in_validity_region, l1_alt_constant, limit_radius,
    normalized_radial, radial_lambda,
)
from .errors import ConvBodyError, InvalidArgumentError, NumericalFailureError
from .geom import cn_closed_form, sample_sphere
from .meanwidth import mean_width_mc

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("meanwidth", "radial", "converge", "cube-check", "rate")
METHODS = ("auto", "mc", "deterministic")
U64 = 2**64


@dataclass
class ExperimentConfig:
    body: dict
    command: str
    deltas: list = field(default_factory=list)
    dirs: int = 64
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    jobs: int = 1
    method: str = "auto"
    out: str = "results.csv"
    tol: float = 1e-8

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidArgumentError(f"unknown command {self.command!r}")
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        if not 0 <= self.seed < U64:
            raise InvalidArgumentError("seed must be an unsigned 64-bit integer")
        if self.jobs < 1 or self.dirs < 1:
            raise InvalidArgumentError("jobs and dirs must be >= 1")
        if not self.tol > 0:
            raise InvalidArgumentError("tol must be positive")
        if self.samples < 2 or self.samples % 2:
            raise InvalidArgumentError("samples must be an even integer >= 2")
        if any(not 0.0 < d < 1.0 for d in self.deltas):
            raise InvalidArgumentError("every delta must lie in (0, 1)")
        if self.command != "meanwidth" and not self.deltas:
            raise InvalidArgumentError(f"--deltas is required for {self.command}")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def direction_sample(n: int, count: int, seed: int) -> np.ndarray:
    # stream seed+1 keeps the test directions independent of the MC sample
    return sample_sphere(n, count, (seed + 1) % U64, antithetic=False).directions


# Worker state: one model per process, built once from the (picklable) config.
_WORKER: dict = {}


def _build_model(cfg: ExperimentConfig) -> tuple[Body, DeficitModel]:
    K = body_from_spec(cfg.body)
    return K, DeficitModel(K, cfg.method, n_samples=cfg.samples, seed=cfg.seed, tol=cfg.tol)


def _init_worker(cfg: ExperimentConfig) -> None:
    _WORKER["K"], _WORKER["model"] = _build_model(cfg)


def _solve_task(task):
    delta, x = task
    K, model = _WORKER["K"], _WORKER["model"]
    try:
        s = radial_lambda(K, x, delta, model=model)
    except NumericalFailureError as exc:
        return math.nan, math.nan, f"numerical-failure: {exc}"
    return s.lambda_star, normalized_radial(s), "saturated" if s.saturated else "ok"


def _run_tasks(cfg: ExperimentConfig, tasks: list) -> list:
    if cfg.jobs == 1 or len(tasks) < 2:
        _init_worker(cfg)
        return [_solve_task(t) for t in tasks]
    with ProcessPoolExecutor(cfg.jobs, initializer=_init_worker, initargs=(cfg,)) as pool:
        return list(pool.map(_solve_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.jobs))))


def _cmd_meanwidth(cfg, K, model, manifest):
    header = ["method", "value", "std_error", "n_samples"]
    if model.method == "mc":
        est = mean_width_mc(K, model.sample)
        return header, [[est.method, est.value, est.std_error, est.n_samples, "ok"]]
    return header, [[model.method, model.mstar, 0.0, 0, "ok"]]


def _cmd_radial(cfg, K, model, manifest):
    X = direction_sample(K.dim, cfg.dirs, cfg.seed)
    tasks = [(d, x) for d in cfg.deltas for x in X]
    rho_lim = limit_radius(K.dim, model.mstar)
    header = [f"x{j}" for j in range(K.dim)] + ["delta", "lambda_star", "rho", "T"]
    results = _run_tasks(cfg, tasks)
    return header, [[*x, d, lam, rho, rho_lim / rho, st] for (d, x), (lam, rho, st) in zip(tasks, results)]


def _sup_devs(cfg, K, model):
    X = direction_sample(K.dim, cfg.dirs, cfg.seed)
    tasks = [(d, x) for d in cfg.deltas for x in X]
    results = _run_tasks(cfg, tasks)
    rho_lim = limit_radius(K.dim, model.mstar)
    out = []
    for i, d in enumerate(cfg.deltas):
        chunk = results[i * len(X):(i + 1) * len(X)]
        failed = [st for _, _, st in chunk if st.startswith("numerical-failure")]
        sup = max(abs(rho_lim / rho - 1.0) for _, rho, _ in chunk) if not failed else math.nan
        out.append((d, sup, failed[0] if failed else "ok"))
    return out, len(X)


def _cmd_converge(cfg, K, model, manifest):
    devs, count = _sup_devs(cfg, K, model)
    manifest["limit_radius"] = limit_radius(K.dim, model.mstar)
    return ["delta", "sup_dev", "n_directions", "method"], [[d, s, count, model.method, st] for d, s, st in devs]


def _cmd_rate(cfg, K, model, manifest):
    kept = sorted(d for d in cfg.deltas if in_validity_region(K.dim, d))
    if len(kept) < 3:
        raise InvalidArgumentError("rate needs at least 3 deltas with n(1-delta)^2 <= 4/27")
    manifest["deltas_in_validity_region"] = kept
    cfg_kept = ExperimentConfig(**{**asdict(cfg), "deltas": kept})
    devs, _ = _sup_devs(cfg_kept, K, model)
    header = ["slope", "intercept", "r_squared", "n_points", "constant", "converging"]
    bad = [st for _, _, st in devs if st != "ok"]
    if bad:
        return header, [[math.nan] * 4 + [math.nan, False, bad[0]]]
    fit = fit_rate(K.dim, model.mstar, [d for d, _, _ in devs], [s for _, s, _ in devs])
    manifest["sup_devs"] = fit.sup_devs
    manifest["validity_ok"] = fit.validity_ok
    status = "ok" if fit.converging else "not-converging"
    return header, [[fit.slope, fit.intercept, fit.r_squared, len(kept), fit.constant, fit.converging, status]]


def _cmd_cube_check(cfg, K, model, manifest):
    if not isinstance(K, Box):
        raise InvalidArgumentError("cube-check needs a box body")
    n = K.dim
    s_mean = float(np.mean(K.half_sides))
    manifest["derived_constant"] = 2 * n
    manifest["l1_alt_constant"] = l1_alt_constant(n)
    X = direction_sample(n, cfg.dirs, cfg.seed)
    tasks = [(d, x) for d in cfg.deltas for x in X]
    results = _run_tasks(cfg, tasks)
    header = [f"x{j}" for j in range(n)] + ["delta", "rho_times_l1norm", "constant_estimate"]
    rows = []
    for (d, x), (_, rho, st) in zip(tasks, results):
        # the box formula (and the homothety) needs λ*|x_j| < 2 s_j
        if st == "saturated":
            st = "out-of-range"
        v = rho * float(np.sum(np.abs(x)))
        rows.append([*x, d, v, v / s_mean, st])
    return header, rows


HANDLERS = {
    "meanwidth": _cmd_meanwidth,
    "radial": _cmd_radial,
    "converge": _cmd_converge,
    "cube-check": _cmd_cube_check,
    "rate": _cmd_rate,
}


def manifest_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header + ["status"])
        for row in rows:
            w.writerow([fmt(v) for v in row])


def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit code."""
    t0 = time.perf_counter()
    try:
        cfg.validate()
        K, model = _build_model(cfg)
    except (ConvBodyError, ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = {
        "version": __version__,
        "config": asdict(cfg),
        "mw_method": model.method,
        "mstar": model.mstar,
        "mstar_std_error": model.std_error,
        "c_n": cn_closed_form(K.dim),
    }
    t1 = time.perf_counter()
    try:
        header, rows = HANDLERS[cfg.command](cfg, K, model, manifest)
    except InvalidArgumentError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    failed = sum(1 for r in rows if str(r[-1]).startswith("numerical-failure"))
    write_csv(Path(cfg.out), header, rows)
    manifest["timings"] = {"setup_s": t1 - t0, "compute_s": time.perf_counter() - t1}
    manifest["failed_rows"] = failed
    manifest_path(cfg.out).write_text(json.dumps(manifest, indent=2, default=float) + "\n")
    if failed:
        print(f"{failed} row(s) failed; see status column in {cfg.out}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _deltas(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad delta list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convbody", description="Convolution-body experiments.")
    p.add_argument("--body", required=True, help="JSON body spec file")
    p.add_argument("--cmd", required=True, choices=COMMANDS)
    p.add_argument("--deltas", type=_deltas, default=[], help="comma-separated list in (0, 1)")
    p.add_argument("--dirs", type=int, default=64)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--out", default="results.csv")
    p.add_argument("--tol", type=float, default=1e-8, help="infconv support tolerance (mc path)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        body = json.loads(Path(args.body).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: cannot read body spec: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = ExperimentConfig(body=body, command=args.cmd, deltas=args.deltas, dirs=args.dirs,
                           samples=args.samples, seed=args.seed, jobs=args.jobs,
                           method=args.method, out=args.out, tol=args.tol)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
