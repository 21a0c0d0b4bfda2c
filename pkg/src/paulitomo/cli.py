"""Command-line front end: spec files in, CSV/JSON tables and figures out.

Every output embeds the sha256 of the fully resolved spec and the seed, so
re-running a command with identical inputs reproduces identical files.
Results are assembled in memory and written only after the whole command
succeeded; partial results never reach disk.

Exit codes: 0 success, 2 invalid spec or usage, 3 singular information,
4 other computation errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, figures, specio
from .basis import validate_effect
from .channel import GeneralizedPauliChannel, QubitPauliChannel
from .errors import PauliTomoError, SingularInformationError, SpecFileError
from .estimator import full_direction_estimate
from .fisher import (
    ConfigurationSet,
    MeasurementConfiguration,
    block_fisher_diag,
    cramer_rao_bound,
    max_fisher_info,
    optimal_block_config,
    qubit_fisher_matrix,
    total_fisher_det,
)
from .optimizer import maximize_det_fisher
from .simulator import (
    OrthogonalitySweep,
    ScalingSweep,
    run_monte_carlo,
    sweep_orthogonality,
    sweep_scaling,
)

WORKERS_ENV = "PAULITOMO_WORKERS"

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_SINGULAR = 3
EXIT_COMPUTE = 4


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv_table(schema: str, spec_sha: str, seed: int, header: list[str], rows) -> bytes:
    lines = [f"# schema={schema} spec_sha256={spec_sha} seed={seed}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(value) for value in row))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _json_table(schema: str, spec_sha: str, seed: int, header, rows, meta: dict) -> bytes:
    payload = {
        "schema": schema,
        "spec_sha256": spec_sha,
        "seed": seed,
        "version": __version__,
        "rows": [dict(zip(header, [_jsonable(v) for v in row])) for row in rows],
        "meta": _jsonable(meta),
    }
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _jsonable(value):
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    return value


def _sidecar(schema: str, spec_sha: str, seed: int, resolved: dict, extra: dict) -> bytes:
    payload = {
        "schema": schema,
        "spec_sha256": spec_sha,
        "seed": seed,
        "version": __version__,
        "spec": _jsonable(resolved),
    }
    payload.update({key: _jsonable(value) for key, value in extra.items()})
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _channel_mapping(ch) -> dict:
    if isinstance(ch, GeneralizedPauliChannel):
        return {
            "dim": ch.dim,
            "decomposition": {
                "dim": ch.decomposition.dim,
                "blocks": [list(block) for block in ch.decomposition.blocks],
                "kinds": list(ch.decomposition.kinds),
            },
            "lambdas": ch.lambdas.tolist(),
        }
    return {"dim": 2, "lambdas": ch.lambdas.tolist(), "angles": ch.angles.tolist()}


def _experiment_mapping(spec) -> dict:
    mapping = {
        "channel": _channel_mapping(spec.truth),
        "input_triple": spec.input_triple.matrix.T.tolist(),
        "measurement_triple": spec.measurement_triple.matrix.T.tolist(),
        "shots_per_cell": spec.shots_per_cell,
        "repetitions": spec.repetitions,
        "weight": spec.weight,
        "seed": spec.seed,
    }
    if isinstance(spec.sweep, OrthogonalitySweep):
        mapping["sweep"] = {"kind": "orthogonality", "angles_deg": list(spec.sweep.angles_deg)}
    elif isinstance(spec.sweep, ScalingSweep):
        mapping["sweep"] = {
            "kind": "scaling",
            "shots": list(spec.sweep.shots),
            "weights": list(spec.sweep.weights),
        }
    return mapping


def _vector_cell(values) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(values, dtype=float))


def _emit(outputs: dict, out_dir: Path, base: str, schema: str, spec_sha: str, seed: int,
          header, rows, resolved: dict, extra: dict, fmt: str):
    if fmt == "json":
        outputs[f"{base}.json"] = _json_table(schema, spec_sha, seed, header, rows, {**extra, "spec": resolved})
    else:
        outputs[f"{base}.csv"] = _csv_table(schema, spec_sha, seed, header, rows)
        outputs[f"{base}.meta.json"] = _sidecar(schema, spec_sha, seed, resolved, extra)


# --- commands ---------------------------------------------------------------


def cmd_fisher(spec: dict, seed: int, fmt: str, workers: int, outputs: dict, out_dir: Path):
    ch = specio.resolve_channel(spec.get("channel", {}))
    config_entries = spec.get("configs")
    if not isinstance(config_entries, list) or not config_entries:
        raise SpecFileError("fisher spec needs a non-empty 'configs' list")
    rows = []
    resolved_configs = []
    if isinstance(ch, QubitPauliChannel):
        configs = []
        for index, entry in enumerate(config_entries):
            try:
                cfg = MeasurementConfiguration.qubit(entry["theta"], entry["m"])
            except (KeyError, TypeError, ValueError) as exc:
                raise SpecFileError(f"config {index}: {exc}") from exc
            configs.append(cfg)
            resolved_configs.append({"theta": list(entry["theta"]), "m": list(entry["m"])})
        total = np.zeros((3, 3))
        for index, cfg in enumerate(configs):
            matrix = qubit_fisher_matrix(ch.lambdas, cfg).entries
            total += matrix
            record = f"config-{index}"
            c = cfg.bloch_c()
            for axis in range(3):
                rows.append((record, f"c_{axis + 1}", c[axis]))
            for i in range(3):
                for j in range(i, 3):
                    rows.append((record, f"f_{i + 1}{j + 1}", matrix[i, j]))
            rows.append((record, "trace", float(np.trace(matrix))))
        if len(configs) == 3:
            det = total_fisher_det(ch.lambdas, ConfigurationSet(configs=tuple(configs)))
        else:
            det = float(np.linalg.det(total))
        rows.append(("total", "det_fisher_sum", det))
        rows.append(("total", "trace_fisher_sum", float(np.trace(total))))
        bound = cramer_rao_bound(total)
        if bound.bounded:
            for i in range(3):
                for j in range(i, 3):
                    rows.append(("total", f"crb_{i + 1}{j + 1}", bound.covariance[i, j]))
        else:
            rows.append(("total", "crb_null_directions", len(bound.null_directions)))
    else:
        for index, entry in enumerate(config_entries):
            try:
                block = int(entry["block"])
            except (KeyError, TypeError, ValueError) as exc:
                raise SpecFileError(f"config {index}: needs a 'block' index: {exc}") from exc
            cfg = optimal_block_config(ch.decomposition, block)
            record = f"block-{block}"
            value = block_fisher_diag(ch, cfg, block)
            rank = validate_effect(cfg.effect).rank
            rows.append((record, "f_diag", value))
            rows.append((record, "multiplicity", rank))
            rows.append((record, "m0", cfg.m0))
            rows.append((record, "d", cfg.c_vector()[block]))
            rows.append((record, "i_max", max_fisher_info(ch.dim, rank, float(ch.lambdas[block]))))
            rows.append((record, "crb_diag", 1.0 / value))
            resolved_configs.append({"block": block})
    resolved = {"command": "fisher", "channel": _channel_mapping(ch), "configs": resolved_configs}
    spec_sha = specio.spec_hash(resolved)
    _emit(outputs, out_dir, "fisher_report", "paulitomo.fisher.v1", spec_sha, seed,
          ["record", "metric", "value"], rows, resolved, {}, fmt)


def cmd_optimal_config(spec: dict, seed: int, fmt: str, workers: int, outputs: dict, out_dir: Path):
    ch = specio.resolve_channel(spec.get("channel", {}))
    header = ["block", "kind", "multiplicity", "contraction", "m0", "d", "i_max",
              "state_coeffs", "effect_coeffs"]
    rows = []
    extra: dict = {}
    if isinstance(ch, QubitPauliChannel):
        config_set = []
        for j in range(3):
            axis = np.zeros(3)
            axis[j] = 1.0
            cfg = MeasurementConfiguration.qubit(axis, axis)
            config_set.append(cfg)
            lam = float(ch.lambdas[j])
            rows.append((
                j, "C2", 1, lam, cfg.m0, cfg.d, max_fisher_info(2, 1, lam),
                _vector_cell(cfg.state.coeffs), _vector_cell(cfg.effect.coeffs),
            ))
        extra["c_matrix"] = ConfigurationSet(configs=tuple(config_set)).c_matrix()
    else:
        for j in range(ch.decomposition.n_blocks):
            cfg = optimal_block_config(ch.decomposition, j)
            rank = validate_effect(cfg.effect).rank
            lam = float(ch.lambdas[j])
            rows.append((
                j, ch.decomposition.kinds[j] or "", rank, lam, cfg.m0,
                cfg.c_vector()[j], max_fisher_info(ch.dim, rank, lam),
                _vector_cell(cfg.state.coeffs), _vector_cell(cfg.effect.coeffs),
            ))
    resolved = {"command": "optimal-config", "channel": _channel_mapping(ch)}
    spec_sha = specio.spec_hash(resolved)
    _emit(outputs, out_dir, "optimal_configs", "paulitomo.optimal-config.v1", spec_sha, seed,
          header, rows, resolved, extra, fmt)


def cmd_optimize(spec: dict, seed_override, fmt: str, workers: int, outputs: dict, out_dir: Path):
    ch = specio.resolve_channel(spec.get("channel", {}))
    if not isinstance(ch, QubitPauliChannel):
        raise SpecFileError("the determinant objective is defined for qubit channels")
    settings = specio.resolve_optimizer_settings(spec, seed_override)
    result = maximize_det_fisher(ch.lambdas, settings)
    header = ["start", "value", "converged", "iterations",
              "c_11", "c_21", "c_31", "c_12", "c_22", "c_32", "c_13", "c_23", "c_33"]
    rows = []
    for index, outcome in enumerate(result.starts):
        rows.append((index, outcome.value, outcome.converged, outcome.iterations,
                     *outcome.c_matrix.ravel(order="F")))
    rows.append(("best", result.best_value, result.converged,
                 sum(o.iterations for o in result.starts),
                 *result.best_set.c_matrix().ravel(order="F")))
    resolved = {
        "command": "optimize",
        "channel": _channel_mapping(ch),
        "optimizer": {
            "grid_points_per_axis": settings.grid_points_per_axis,
            "max_iterations": settings.max_iterations,
            "step_size": settings.step_size,
            "tolerance": settings.tolerance,
            "seed": settings.seed,
        },
    }
    spec_sha = specio.spec_hash(resolved)
    extra = {
        "best_value": result.best_value,
        "best_c_matrix": result.best_set.c_matrix(),
        "starts_agreeing": result.starts_agreeing,
        "n_starts": len(result.starts),
        "converged": result.converged,
    }
    _emit(outputs, out_dir, "optimize_report", "paulitomo.optimize.v1", spec_sha,
          settings.seed, header, rows, resolved, extra, fmt)


def cmd_estimate(spec: dict, seed: int, fmt: str, workers: int, outputs: dict, out_dir: Path):
    section = spec.get("estimate")
    if not isinstance(section, dict):
        raise SpecFileError("spec needs an 'estimate' section")
    input_triple = specio.resolve_triple(section.get("input_triple", "identity"), seed)
    m_triple = specio.resolve_triple(section.get("measurement_triple", "identity"), seed)
    freq = specio.resolve_frequencies(section)
    estimate = full_direction_estimate(input_triple, m_triple, freq)
    rows = []
    for i in range(3):
        rows.append((f"lambda_{i + 1}", estimate.lambdas[i]))
    for i in range(3):
        rows.append((f"angle_{i + 1}", estimate.angles[i]))
    rows.append(("degenerate", estimate.degenerate))
    rows.append(("gimbal_locked", estimate.gimbal_locked))
    for i in range(3):
        for j in range(3):
            rows.append((f"raw_a_{i + 1}{j + 1}", estimate.raw_a[i, j]))
    for i in range(3):
        for j in range(i, 3):
            rows.append((f"symmetrized_a_{i + 1}{j + 1}", estimate.symmetrized_a[i, j]))
    resolved = {
        "command": "estimate",
        "input_triple": input_triple.matrix.T.tolist(),
        "measurement_triple": m_triple.matrix.T.tolist(),
        "frequencies": freq.nu.tolist(),
        "counts": freq.counts.tolist(),
        "seed": seed,
    }
    spec_sha = specio.spec_hash(resolved)
    extra = {"lambdas": estimate.lambdas, "angles": estimate.angles}
    _emit(outputs, out_dir, "channel_estimate", "paulitomo.estimate.v1", spec_sha, seed,
          ["metric", "value"], rows, resolved, extra, fmt)


_MSE_COLUMNS = ["mse_lambda_1", "mse_lambda_2", "mse_lambda_3",
                "mse_angle_1", "mse_angle_2", "mse_angle_3",
                "objective_v", "n_times_v", "failed_trials"]


def _report_cells(report):
    row = report.as_row()
    return [row[column] for column in _MSE_COLUMNS]


def cmd_simulate(spec: dict, seed_override, fmt: str, workers: int, outputs: dict, out_dir: Path):
    experiment = specio.resolve_experiment(spec, seed_override)
    report = run_monte_carlo(experiment, workers=workers)
    resolved = {"command": "simulate", **_experiment_mapping(experiment)}
    spec_sha = specio.spec_hash(resolved)
    header = ["shots_per_cell", "repetitions", "weight", *_MSE_COLUMNS]
    rows = [(experiment.shots_per_cell, experiment.repetitions, experiment.weight,
             *_report_cells(report))]
    _emit(outputs, out_dir, "mse_report", "paulitomo.simulate.v1", spec_sha,
          experiment.seed, header, rows, resolved, {"failed_trials": report.failed_trials}, fmt)
    outputs["mse_report.png"] = figures.render_mse_figure(report)


def cmd_sweep(spec: dict, seed_override, fmt: str, workers: int, outputs: dict, out_dir: Path):
    experiment = specio.resolve_experiment(spec, seed_override)
    if experiment.sweep is None:
        raise SpecFileError("sweep command needs a 'sweep' section in the spec")
    resolved = {"command": "sweep", **_experiment_mapping(experiment)}
    spec_sha = specio.spec_hash(resolved)
    if isinstance(experiment.sweep, OrthogonalitySweep):
        result = sweep_orthogonality(experiment, experiment.sweep.angles_deg, workers=workers)
        header = ["alpha_deg", "det_input", *_MSE_COLUMNS]
        rows = [(row.alpha_deg, row.det_input, *_report_cells(row.report)) for row in result.rows]
        extra = {
            "skipped_angles_deg": list(result.skipped),
            "measurement_triple": result.measurement_triple.matrix.T,
        }
        _emit(outputs, out_dir, "sweep_orthogonality", "paulitomo.sweep-orthogonality.v1",
              spec_sha, experiment.seed, header, rows, resolved, extra, fmt)
        outputs["sweep_orthogonality.png"] = figures.render_orthogonality_figure(result.rows)
    else:
        rows_data = sweep_scaling(
            experiment, experiment.sweep.shots, experiment.sweep.weights, workers=workers
        )
        header = ["weight", "shots_per_cell", *_MSE_COLUMNS]
        rows = [(row.weight, row.shots, *_report_cells(row.report)) for row in rows_data]
        _emit(outputs, out_dir, "sweep_scaling", "paulitomo.sweep-scaling.v1",
              spec_sha, experiment.seed, header, rows, resolved, {}, fmt)
        outputs["sweep_scaling.png"] = figures.render_scaling_figure(rows_data)


_COMMANDS = {
    "fisher": cmd_fisher,
    "optimal-config": cmd_optimal_config,
    "optimize": cmd_optimize,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paulitomo",
        description="Optimal measurement design and Monte Carlo estimation "
                    "for qubit and generalized Pauli channels.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--spec", required=True, help="spec file path or preset name")
        sub.add_argument("--out", default=".", help="output directory (default: .)")
        sub.add_argument("--seed", type=int, default=None, help="override the spec seed")
        sub.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _workers_from_env() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise SpecFileError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = specio.load_spec_file(args.spec)
        workers = _workers_from_env()
        out_dir = Path(args.out)
        outputs: dict[str, bytes] = {}
        _COMMANDS[args.command](spec, _command_seed(args.command, args.seed, spec),
                                args.format, workers, outputs, out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, payload in outputs.items():
            (out_dir / name).write_bytes(payload)
        for name in sorted(outputs):
            print(out_dir / name)
        return EXIT_OK
    except SpecFileError as exc:
        _print_error(exc)
        return EXIT_SPEC
    except SingularInformationError as exc:
        _print_error(exc)
        return EXIT_SINGULAR
    except (PauliTomoError, np.linalg.LinAlgError) as exc:
        _print_error(exc)
        return EXIT_COMPUTE


def _spec_seed(spec: dict) -> int:
    for section_name in ("experiment", "optimizer", "estimate"):
        section = spec.get(section_name)
        if isinstance(section, dict) and "seed" in section:
            return int(section["seed"])
    return 0


def _command_seed(command: str, override, spec: dict):
    # simulate/sweep/optimize resolve the override against the spec themselves
    if command in ("simulate", "sweep", "optimize"):
        return override
    return int(override) if override is not None else _spec_seed(spec)


def _print_error(exc: Exception) -> None:
    record = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
