"""Command line entry point.

One command drives all pipelines from a JSON config file:

    laplift --config run.json [--out DIR] [--seed N] [--workers N]
            [--deterministic] [--max-iter N] [--log-progress PATH]

Exit codes: 0 success, 2 config error, 3 solver divergence, 4 failed
verification suite.
"""

import argparse
import json
import os
import sys

import numpy as np

from .checks import run_checks
from .config import load_config_file, parse_config
from .energies import DataTermSamples, sample_absdiff_squared, sample_registration
from .errors import ConfigError, DivergenceError, LapliftError
from .grid import Grid
from .images import load_pgm, rotation_displacement
from .labelspace import build_disk, build_interval
from .lifting import assemble, save_dual_vars, save_lifted_field
from .registration import RegistrationConfig, run_registration
from .solver import pdhg_solve
from .toy import ToyConfig, run_toy1d

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_CHECK_FAILED = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="laplift",
        description="Lifted solver for variational problems with Laplacian "
        "regularization: toy study, image registration, generic lift-solve, "
        "and verification suites.",
    )
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--workers", type=int, help="worker count override")
    parser.add_argument(
        "--deterministic", action="store_true", default=None,
        help="force deterministic mode",
    )
    parser.add_argument("--max-iter", type=int, help="solver iteration cap override")
    parser.add_argument("--log-progress", help="write line-delimited JSON progress")
    return parser


def _build_labels(spec):
    if spec["kind"] == "interval":
        return build_interval(spec["a"], spec["b"], spec["count"])
    return build_disk(spec["radius"], spec["rings"])


def _load_image(path):
    try:
        return load_pgm(path)
    except OSError as exc:
        raise ConfigError("cannot read image %s: %s" % (path, exc)) from None


def cmd_toy1d(cfg):
    tc = cfg.task_config
    toy_cfg = ToyConfig(
        n_grid=tc["n_grid"],
        domain=tc["domain"],
        n_labels=tc["labels"]["count"],
        label_range=(tc["labels"]["a"], tc["labels"]["b"]),
        reg=tc["regularizer"],
        solver=cfg.solver,
        out_dir=cfg.output_dir,
        s_thresh=tc["threshold"],
        mass_tol=tc["mass_tol"],
        max_modes=tc["max_modes"],
        make_figures=cfg.figures,
        progress_path=cfg.progress_path,
    )
    run_toy1d(toy_cfg)
    return EXIT_OK


def cmd_register(cfg):
    tc = cfg.task_config
    reference = _load_image(tc["reference"])
    template = _load_image(tc["template"])
    tri = _build_labels(tc["labels"])
    gt = None
    if tc["ground_truth"] is not None:
        gt = rotation_displacement(
            reference.values.shape, tc["ground_truth"]["degrees"]
        )
    reg_cfg = RegistrationConfig(
        reference=reference,
        template=template,
        tri=tri,
        reg=tc["regularizer"],
        solver=cfg.solver,
        out_dir=cfg.output_dir,
        gt_displacement=gt,
        make_figures=cfg.figures,
        progress_path=cfg.progress_path,
    )
    run_registration(reg_cfg)
    return EXIT_OK


def cmd_lift_solve(cfg):
    tc = cfg.task_config
    grid = Grid(tc["grid_shape"])
    tri = _build_labels(tc["labels"])
    data = tc["data"]
    if data["kind"] == "absdiff-squared":
        rho = sample_absdiff_squared(grid, tri, domain=data["domain"])
    elif data["kind"] == "file":
        try:
            rho = DataTermSamples.load(data["path"])
        except (OSError, ValueError) as exc:
            raise ConfigError("cannot load data term: %s" % exc) from None
    else:
        rho = sample_registration(
            _load_image(data["reference"]), _load_image(data["template"]), grid, tri
        )
    try:
        problem = assemble(grid, tri, rho, tc["regularizer"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    lifted, dual, _multipliers, report = pdhg_solve(
        problem, cfg.solver, progress_path=cfg.progress_path
    )
    os.makedirs(cfg.output_dir, exist_ok=True)
    save_lifted_field(lifted, cfg.output_dir)
    save_dual_vars(dual, cfg.output_dir)
    summary = {
        "saddle_value": report.saddle_value,
        "iterations": report.iterations,
        "termination": report.termination,
        "residuals": {
            "primal": report.primal_residuals[-1] if report.primal_residuals else None,
            "dual": report.dual_residuals[-1] if report.dual_residuals else None,
        },
        "max_row_sum_error": float(np.max(np.abs(lifted.u.sum(axis=1) - 1.0))),
    }
    with open(os.path.join(cfg.output_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
    if cfg.figures:
        from . import report as figures

        figures.save_residual_figure(
            os.path.join(cfg.output_dir, "residuals.png"), report
        )
        figures.save_mesh_figure(os.path.join(cfg.output_dir, "label_mesh.png"), tri)
    return EXIT_OK


def cmd_check(cfg):
    options = cfg.task_config["options"]
    options.seed = cfg.seed
    report = run_checks(options)
    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(os.path.join(cfg.output_dir, "report.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
    if report["passed"]:
        return EXIT_OK
    failed = sorted(n for n, s in report["suites"].items() if not s["passed"])
    print("failed verification suites: %s" % ", ".join(failed), file=sys.stderr)
    return EXIT_CHECK_FAILED


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {
        "output_dir": args.out,
        "seed": args.seed,
        "workers": args.workers,
        "deterministic": args.deterministic,
        "max_iter": args.max_iter,
        "log_progress": args.log_progress,
    }
    try:
        cfg = parse_config(load_config_file(args.config), overrides)
        handler = {
            "toy1d": cmd_toy1d,
            "register": cmd_register,
            "lift-solve": cmd_lift_solve,
            "check": cmd_check,
        }[cfg.task]
        return handler(cfg)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print("solver diverged: %s" % exc, file=sys.stderr)
        return EXIT_DIVERGED
    except LapliftError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
