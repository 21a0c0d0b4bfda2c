import csv
import json
import math

import numpy as np
import pytest

from paulitomo.cli import main

THEOREM_DET = 1024 / 315


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# schema=")
    rows = list(csv.DictReader(lines[1:]))
    return lines[0], rows


@pytest.fixture
def fisher_spec(tmp_path):
    return write(
        tmp_path / "fisher.yaml",
        """
channel:
  lambdas: [0.75, 0.5, 0.25]
configs:
  - {theta: [1, 0, 0], m: [1, 0, 0]}
  - {theta: [0, 1, 0], m: [0, 1, 0]}
  - {theta: [0, 0, 1], m: [0, 0, 1]}
""",
    )


@pytest.fixture
def simulate_spec(tmp_path):
    return write(
        tmp_path / "sim.yaml",
        """
channel:
  lambdas: [0.75, 0.5, 0.25]
experiment:
  input_triple: identity
  measurement_triple: random-orthogonal
  shots_per_cell: 500
  repetitions: 40
  weight: 0.5
  seed: 77
""",
    )


def test_fisher_reports_theorem_values(tmp_path, fisher_spec):
    out = tmp_path / "out"
    assert main(["fisher", "--spec", fisher_spec, "--out", str(out)]) == 0
    header, rows = read_csv(out / "fisher_report.csv")
    assert "schema=paulitomo.fisher.v1" in header
    values = {(r["record"], r["metric"]): float(r["value"]) for r in rows}
    assert values[("total", "det_fisher_sum")] == pytest.approx(THEOREM_DET, abs=1e-9)
    assert values[("config-0", "f_11")] == pytest.approx(16 / 7, abs=1e-9)
    assert values[("total", "crb_11")] == pytest.approx(7 / 16, abs=1e-9)
    assert (out / "fisher_report.meta.json").exists()


def test_fisher_block_config_reports_i_max(tmp_path):
    spec = write(
        tmp_path / "block.yaml",
        """
channel:
  decomposition: M4-mixed
  lambdas: [0.5, 0.5, 0.5, 0.5, 0.5]
configs:
  - {block: 2}
""",
    )
    out = tmp_path / "out"
    assert main(["fisher", "--spec", spec, "--out", str(out)]) == 0
    _, rows = read_csv(out / "fisher_report.csv")
    values = {(r["record"], r["metric"]): float(r["value"]) for r in rows}
    assert values[("block-2", "i_max")] == pytest.approx(2.4, abs=1e-9)
    assert values[("block-2", "f_diag")] == pytest.approx(2.4, abs=1e-9)


def test_fisher_singular_config_exits_with_code(tmp_path, capsys):
    spec = write(
        tmp_path / "singular.yaml",
        """
channel:
  lambdas: [1.0, 0.5, 0.25]
configs:
  - {theta: [1, 0, 0], m: [1, 0, 0]}
""",
    )
    out = tmp_path / "out"
    assert main(["fisher", "--spec", spec, "--out", str(out)]) == 3
    record = json.loads(capsys.readouterr().err.strip())
    assert record["error"] == "SingularInformationError"
    assert not out.exists()  # no partial results


def test_invalid_spec_exits_2(tmp_path, capsys):
    spec = write(tmp_path / "bad.yaml", "channel:\n  angles: [0, 0, 0]\n")
    assert main(["fisher", "--spec", spec, "--out", str(tmp_path / "o")]) == 2
    record = json.loads(capsys.readouterr().err.strip())
    assert record["error"] == "SpecFileError"


def test_optimal_config_qubit_identity_c_matrix(tmp_path):
    spec = write(tmp_path / "oc.yaml", "channel:\n  lambdas: [0.75, 0.5, 0.25]\n")
    out = tmp_path / "out"
    assert main(["optimal-config", "--spec", spec, "--out", str(out)]) == 0
    meta = json.loads((out / "optimal_configs.meta.json").read_text())
    np.testing.assert_allclose(np.asarray(meta["c_matrix"]), np.eye(3), atol=1e-12)
    _, rows = read_csv(out / "optimal_configs.csv")
    assert [row["block"] for row in rows] == ["0", "1", "2"]
    assert float(rows[0]["i_max"]) == pytest.approx(16 / 7, abs=1e-12)


def test_optimal_config_presets(tmp_path):
    spec = write(
        tmp_path / "c2.yaml",
        "channel:\n  decomposition: M4-C2\n  lambdas: [%s]\n" % ", ".join(["0.3"] * 15),
    )
    out = tmp_path / "c2out"
    assert main(["optimal-config", "--spec", spec, "--out", str(out)]) == 0
    _, rows = read_csv(out / "optimal_configs.csv")
    assert len(rows) == 15
    for row in rows:
        assert float(row["i_max"]) == pytest.approx(1.0 / (1 - 0.09), abs=1e-9)

    spec = write(
        tmp_path / "mixed.yaml",
        "channel:\n  decomposition: M4-mixed\n  lambdas: [0.3, 0.3, 0.3, 0.3, 0.3]\n",
    )
    out = tmp_path / "mixedout"
    assert main(["optimal-config", "--spec", spec, "--out", str(out)]) == 0
    _, rows = read_csv(out / "optimal_configs.csv")
    i_max = sorted({round(float(row["i_max"]), 9) for row in rows})
    assert i_max == sorted(
        {round(1.0 / (0.7 * 1.3), 9), round(1.0 / (0.7 * (1 / 3 + 0.3)), 9)}
    )


def test_optimize_command(tmp_path):
    spec = write(
        tmp_path / "opt.yaml",
        """
channel:
  lambdas: [0.75, 0.5, 0.25]
optimizer:
  grid_points_per_axis: 2
  seed: 3
""",
    )
    out = tmp_path / "out"
    assert main(["optimize", "--spec", spec, "--out", str(out)]) == 0
    meta = json.loads((out / "optimize_report.meta.json").read_text())
    assert meta["best_value"] == pytest.approx(THEOREM_DET, abs=1e-6)
    assert meta["starts_agreeing"] == meta["n_starts"]
    assert meta["spec"]["optimizer"]["grid_points_per_axis"] == 2
    _, rows = read_csv(out / "optimize_report.csv")
    assert rows[-1]["start"] == "best"


def test_estimate_command_exact_recovery(tmp_path):
    spec = write(
        tmp_path / "est.yaml",
        """
estimate:
  input_triple: identity
  measurement_triple: identity
  frequencies: [[0.875, 0.5, 0.5], [0.5, 0.75, 0.5], [0.5, 0.5, 0.625]]
  counts: 1000
""",
    )
    out = tmp_path / "out"
    assert main(["estimate", "--spec", spec, "--out", str(out)]) == 0
    _, rows = read_csv(out / "channel_estimate.csv")
    values = {row["metric"]: row["value"] for row in rows}
    assert float(values["lambda_1"]) == pytest.approx(0.75, abs=1e-12)
    assert float(values["lambda_3"]) == pytest.approx(0.25, abs=1e-12)
    assert values["degenerate"] == "false"


def test_simulate_deterministic_and_figure(tmp_path, simulate_spec):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--spec", simulate_spec, "--out", str(out_a)]) == 0
    assert main(["simulate", "--spec", simulate_spec, "--out", str(out_b)]) == 0
    assert (out_a / "mse_report.csv").read_bytes() == (out_b / "mse_report.csv").read_bytes()
    assert (out_a / "mse_report.png").exists()
    meta = json.loads((out_a / "mse_report.meta.json").read_text())
    assert meta["failed_trials"] == 0
    assert meta["seed"] == 77


def test_simulate_parallel_identical(tmp_path, simulate_spec, monkeypatch):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--spec", simulate_spec, "--out", str(out_a)]) == 0
    monkeypatch.setenv("PAULITOMO_WORKERS", "4")
    assert main(["simulate", "--spec", simulate_spec, "--out", str(out_b)]) == 0
    assert (out_a / "mse_report.csv").read_bytes() == (out_b / "mse_report.csv").read_bytes()


def test_simulate_seed_override_changes_rows_not_schema(tmp_path, simulate_spec):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--spec", simulate_spec, "--out", str(out_a)]) == 0
    assert main(["simulate", "--spec", simulate_spec, "--seed", "555", "--out", str(out_b)]) == 0
    header_a, rows_a = read_csv(out_a / "mse_report.csv")
    header_b, rows_b = read_csv(out_b / "mse_report.csv")
    assert rows_a[0].keys() == rows_b[0].keys()
    assert rows_a[0]["objective_v"] != rows_b[0]["objective_v"]
    assert "seed=555" in header_b


def test_sweep_scaling_command(tmp_path):
    spec = write(
        tmp_path / "sweep.yaml",
        """
channel:
  lambdas: [0.75, 0.5, 0.25]
experiment:
  input_triple: identity
  measurement_triple: random-orthogonal
  shots_per_cell: 500
  repetitions: 30
  weight: 0.0
  seed: 5
sweep:
  kind: scaling
  shots: [500, 1000]
  weights: [0.0, 1.0]
""",
    )
    out = tmp_path / "out"
    assert main(["sweep", "--spec", spec, "--out", str(out)]) == 0
    header, rows = read_csv(out / "sweep_scaling.csv")
    assert "schema=paulitomo.sweep-scaling.v1" in header
    assert len(rows) == 4
    assert (out / "sweep_scaling.png").exists()


def test_sweep_orthogonality_command(tmp_path):
    spec = write(
        tmp_path / "sweep.yaml",
        """
channel:
  lambdas: [0.75, 0.5, 0.25]
experiment:
  shots_per_cell: 400
  repetitions: 30
  weight: 0.5
  seed: 5
sweep:
  kind: orthogonality
  angles_deg: [0, 30, 60, 90]
""",
    )
    out = tmp_path / "out"
    assert main(["sweep", "--spec", spec, "--out", str(out)]) == 0
    _, rows = read_csv(out / "sweep_orthogonality.csv")
    assert len(rows) == 3  # the singular 0-degree point is skipped
    meta = json.loads((out / "sweep_orthogonality.meta.json").read_text())
    assert meta["skipped_angles_deg"] == [0.0]
    assert "measurement_triple" in meta
    dets = [float(row["det_input"]) for row in rows]
    assert dets == sorted(dets)


def test_json_format_single_file(tmp_path, fisher_spec):
    out = tmp_path / "out"
    assert main(["fisher", "--spec", fisher_spec, "--format", "json", "--out", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["fisher_report.json"]
    payload = json.loads((out / "fisher_report.json").read_text())
    assert payload["schema"] == "paulitomo.fisher.v1"
    det_rows = [
        row for row in payload["rows"] if row["record"] == "total" and row["metric"] == "det_fisher_sum"
    ]
    assert det_rows[0]["value"] == pytest.approx(THEOREM_DET, abs=1e-9)


def test_shipped_sweep_specs_resolve_by_name(tmp_path):
    # resolution only; the full K=1000 runs live in the acceptance suite
    from paulitomo import specio

    for name in ("fig1a.spec", "fig1b.spec"):
        experiment = specio.resolve_experiment(specio.load_spec_file(name))
        assert experiment.sweep is not None


def test_missing_spec_exits_2(tmp_path, capsys):
    assert main(["simulate", "--spec", "nope.yaml", "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err.strip())["error"] == "SpecFileError"
