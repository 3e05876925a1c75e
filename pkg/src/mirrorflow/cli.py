"""Command-line entry point.

Subcommands:
  run        full pipeline: simulation, baselines, stability, CSV/JSON outputs
  stability  assemble the linearization and write the certificate only
  oracle     closed-form optimum plus a centralized mirror-descent run
  validate   parse and check a config, run nothing

Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 I/O error. Verbosity via the MIRRORFLOW_LOG environment variable
(debug, info, warning, error). All outputs embed the config hash and
are byte-identical across repeated runs of the same config.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .config import (
    ExperimentConfig,
    SyntheticProblem,
    config_hash,
    construct_cost_set,
    construct_dgf,
    construct_graph,
    construct_x0,
    default_config_toml,
    load_config,
)
from .dynamics import (
    centralized_mirror_descent,
    default_step_size,
    equilibrium_state,
    simulate,
    simulate_no_feedback,
)
from .exceptions import (
    ConfigError,
    InsufficientDataError,
    MirrorflowError,
    NumericalOverflowError,
)
from .metrics import ConvergenceCurve, curve_from_trajectory, export_csv, fit_exponential_rate
from .objective import closed_form_optimum
from .stability import assemble_linearization, check_stability

log = logging.getLogger("mirrorflow")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    _setup_logging()
    if args.print_defaults:
        sys.stdout.write(default_config_toml())
        return EXIT_OK
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalOverflowError as exc:
        print(f"error: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MirrorflowError as exc:
        # remaining domain errors stem from an unrunnable problem setup
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirrorflow",
        description="Distributed mirror descent with integral feedback: "
        "simulation, baselines, and stability certificates.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to the TOML experiment config")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--seed", type=int, help="override problem and graph seeds")
    common.add_argument(
        "--print-defaults",
        action="store_true",
        help="print the fully explicit default config and exit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="full experiment pipeline")
    run.add_argument(
        "--validate-only",
        action="store_true",
        help="parse and check the config, run nothing",
    )
    run.set_defaults(handler=_cmd_run)

    stability = sub.add_parser(
        "stability", parents=[common], help="stability certificate only"
    )
    stability.set_defaults(handler=_cmd_stability)

    oracle = sub.add_parser(
        "oracle", parents=[common], help="closed-form optimum and centralized run"
    )
    oracle.set_defaults(handler=_cmd_oracle)

    validate = sub.add_parser(
        "validate", parents=[common], help="config check without running"
    )
    validate.set_defaults(handler=_cmd_validate)
    return parser


def _setup_logging():
    name = os.environ.get("MIRRORFLOW_LOG", "warning").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    config = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        config = _override_seed(config, args.seed)
    if args.out:
        config = dataclasses.replace(
            config, output=dataclasses.replace(config.output, directory=args.out)
        )
    return config


def _override_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    problem = config.problem
    if isinstance(problem, SyntheticProblem):
        problem = dataclasses.replace(problem, seed=seed)
    graph = dataclasses.replace(config.graph, seed=seed)
    return dataclasses.replace(config, problem=problem, graph=graph)


def _cmd_validate(args) -> int:
    config = _load(args)
    print(f"config OK {config_hash(config)}")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = _load(args)
    if getattr(args, "validate_only", False):
        print(f"config OK {config_hash(config)}")
        return EXIT_OK

    digest = config_hash(config)
    cost_set = construct_cost_set(config)
    graph = construct_graph(config)
    dgf = construct_dgf(config, cost_set.dim)
    x0 = construct_x0(config, cost_set.dim)
    x_star = closed_form_optimum(cost_set)
    dt = config.dynamics.dt
    if dt is None:
        dt = default_step_size(cost_set, graph)
        log.info("resolved default step size dt=%g", dt)

    outdir = config.output.directory
    os.makedirs(outdir, exist_ok=True)
    stamp = {"config_hash": digest}

    log.info("main run: %d steps, dt=%g, dgf=%s", config.dynamics.steps, dt, dgf.name)
    main_traj = simulate(
        cost_set=cost_set,
        graph=graph,
        dgf=dgf,
        x0=x0,
        dt=dt,
        steps=config.dynamics.steps,
        stride=config.dynamics.stride,
        x_star=x_star,
        metadata={"config_hash": digest, "run_name": "integral_feedback"},
    )
    curves = {}
    runs_meta = {}
    _record_run(
        "integral_feedback",
        main_traj,
        cost_set,
        x_star,
        curves,
        runs_meta,
        outdir,
        config.output.curve_stride,
        stamp,
    )

    for spec in config.baselines:
        name = _unique_name(f"baseline_{spec.kind}", curves, runs_meta)
        eta0 = spec.eta0 if spec.eta0 is not None else dt
        log.info("baseline %s: eta0=%g", name, eta0)
        try:
            traj = simulate_no_feedback(
                cost_set=cost_set,
                graph=graph,
                dgf=dgf,
                x0=x0,
                eta0=eta0,
                steps=config.dynamics.steps,
                schedule=spec.kind,
                stride=config.dynamics.stride,
                x_star=x_star,
                metadata={"config_hash": digest, "run_name": name},
            )
        except MirrorflowError as exc:
            # a failing baseline must not abort the main result
            log.warning("baseline %s failed: %s", name, exc)
            runs_meta[name] = {"error": f"{type(exc).__name__}: {exc}"}
            continue
        runs_meta[name] = {"eta0": float(eta0)}
        _record_run(
            name,
            traj,
            cost_set,
            x_star,
            curves,
            runs_meta,
            outdir,
            config.output.curve_stride,
            stamp,
        )

    export_csv(curves, os.path.join(outdir, "comparison.csv"), metadata=stamp)

    if config.stability.enabled:
        system = assemble_linearization(cost_set, graph, dgf, x_star)
        report = check_stability(system, tolerance=config.stability.tolerance)
        payload = report.to_dict()
        payload["config_hash"] = digest
        _write_json(os.path.join(outdir, "stability.json"), payload)
        log.info(
            "stability: certified=%s rate=%g", report.certified, report.rate_estimate
        )

    metadata = {
        "config_hash": digest,
        "config": config.to_dict(),
        "resolved": {"dt": float(dt)},
        "optimum": [float(v) for v in x_star],
        "runs": runs_meta,
    }
    if config.baselines:
        metadata["baseline_definition"] = "baseline definition v1"
    _write_json(os.path.join(outdir, "metadata.json"), metadata)

    if main_traj.diverged:
        print("main run diverged; partial outputs written", file=sys.stderr)
        return EXIT_DIVERGED
    print(f"run complete: {len(curves)} curve(s) in {outdir} [{digest[:12]}]")
    return EXIT_OK


def _cmd_stability(args) -> int:
    config = _load(args)
    digest = config_hash(config)
    cost_set = construct_cost_set(config)
    graph = construct_graph(config)
    dgf = construct_dgf(config, cost_set.dim)
    x_star = closed_form_optimum(cost_set)

    system = assemble_linearization(cost_set, graph, dgf, x_star)
    report = check_stability(system, tolerance=config.stability.tolerance)
    outdir = config.output.directory
    os.makedirs(outdir, exist_ok=True)
    payload = report.to_dict()
    payload["config_hash"] = digest
    _write_json(os.path.join(outdir, "stability.json"), payload)
    status = "certified" if report.certified else f"violations: {list(report.violations)}"
    print(f"stability {status} (rate {report.rate_estimate:.6g}) [{digest[:12]}]")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    config = _load(args)
    digest = config_hash(config)
    cost_set = construct_cost_set(config)
    dgf = construct_dgf(config, cost_set.dim)
    x_star = closed_form_optimum(cost_set)
    gradient_norm = float(np.linalg.norm(cost_set.global_gradient(x_star)))
    _, targets = cost_set.stacked_design()
    threshold = 1e-8 * (1.0 + float(np.linalg.norm(targets)))

    graph = construct_graph(config)
    dt = config.dynamics.dt
    if dt is None:
        dt = default_step_size(cost_set, graph)
    x0 = construct_x0(config, cost_set.dim)[0]
    trajectory = centralized_mirror_descent(
        cost_set, dgf, x0, dt=dt, steps=config.dynamics.steps,
        stride=config.dynamics.stride,
    )
    curve = curve_from_trajectory(trajectory, cost_set, x_star)

    outdir = config.output.directory
    os.makedirs(outdir, exist_ok=True)
    export_csv(
        {"centralized": curve},
        os.path.join(outdir, "centralized.csv"),
        metadata={"config_hash": digest},
    )
    terminal_distance = float(
        np.linalg.norm(trajectory.final_state.primal[0] - x_star)
    )
    payload = {
        "config_hash": digest,
        "optimum": [float(v) for v in x_star],
        "gradient_norm": gradient_norm,
        "gradient_threshold": threshold,
        "gradient_check_passed": bool(gradient_norm < threshold),
        "centralized": {
            "diverged": bool(trajectory.diverged),
            "terminal_distance": terminal_distance,
            "terminal_suboptimality": float(curve.suboptimality[-1]),
        },
    }
    _write_json(os.path.join(outdir, "oracle.json"), payload)
    print(
        f"oracle gradient norm {gradient_norm:.3e} "
        f"(check {'passed' if payload['gradient_check_passed'] else 'FAILED'}) "
        f"[{digest[:12]}]"
    )
    return EXIT_OK


def _record_run(
    name, trajectory, cost_set, x_star, curves, runs_meta, outdir, curve_stride, stamp
):
    curve = curve_from_trajectory(trajectory, cost_set, x_star)
    curve = _downsample(curve, curve_stride)
    curves[name] = curve
    export_csv(
        {name: curve},
        os.path.join(outdir, f"trajectory_{name}.csv"),
        metadata={**stamp, "run_name": name, "scheme": trajectory.metadata.get("scheme", "")},
    )
    entry = runs_meta.setdefault(name, {})
    entry.update(
        {
            "diverged": bool(trajectory.diverged),
            "steps_completed": int(trajectory.steps[-1]),
            "terminal_suboptimality": float(curve.suboptimality[-1]),
            "terminal_consensus_error": float(curve.consensus_error[-1]),
            "terminal_distance_to_opt": float(curve.distance_to_opt[-1]),
        }
    )
    try:
        fit = fit_exponential_rate(curve)
        entry["rate_fit"] = {
            "slope": fit.slope,
            "r_squared": fit.r_squared,
            "n_samples": fit.n_samples,
            "saturated": fit.saturated,
        }
    except InsufficientDataError:
        entry["rate_fit"] = None


def _downsample(curve: ConvergenceCurve, stride: int) -> ConvergenceCurve:
    if stride <= 1 or len(curve) <= 2:
        return curve
    idx = np.arange(0, len(curve), stride)
    if idx[-1] != len(curve) - 1:
        idx = np.append(idx, len(curve) - 1)
    return ConvergenceCurve(
        steps=curve.steps[idx],
        suboptimality=curve.suboptimality[idx],
        consensus_error=curve.consensus_error[idx],
        distance_to_opt=curve.distance_to_opt[idx],
    )


def _unique_name(base: str, *tables) -> str:
    name = base
    index = 2
    while any(name in table for table in tables):
        name = f"{base}_{index}"
        index += 1
    return name


def _write_json(path, payload):
    with open(path, "w") as handle:
        handle.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


if __name__ == "__main__":
    sys.exit(main())
