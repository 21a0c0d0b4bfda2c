"""Matplotlib renderings of simulation reports, written next to the CSVs."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_DPI = 150


def _to_png(fig) -> bytes:
    buffer = io.BytesIO()
    fig.savefig(buffer, format="png", dpi=_DPI)
    plt.close(fig)
    return buffer.getvalue()


def render_mse_figure(report) -> bytes:
    """Bar chart of the six per-parameter mean square errors."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    labels = [
        r"$\lambda_1$", r"$\lambda_2$", r"$\lambda_3$",
        r"$\varphi_1$", r"$\varphi_2$", r"$\varphi_3$",
    ]
    values = [*report.lambda_mse, *report.angle_mse]
    ax.bar(range(6), values, color=["#336699"] * 3 + ["#994433"] * 3)
    ax.set_xticks(range(6), labels)
    ax.set_yscale("log")
    ax.set_ylabel("empirical MSE")
    ax.set_title(f"per-parameter MSE (weighted objective {report.objective_v:.3e})")
    fig.tight_layout()
    return _to_png(fig)


def render_orthogonality_figure(rows) -> bytes:
    """Weighted error versus determinant of the input-state triple."""
    dets = [row.det_input for row in rows]
    values = [row.report.objective_v for row in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(dets, values, "o-", color="#336699")
    ax.set_xlabel(r"$\det$ of the input-state triple")
    ax.set_ylabel(r"weighted error $\hat{V}$")
    ax.set_yscale("log")
    ax.set_title("estimation error versus input orthogonality")
    fig.tight_layout()
    return _to_png(fig)


def render_scaling_figure(rows) -> bytes:
    """N times the weighted error versus shot count, one line per weight."""
    weights = sorted({row.weight for row in rows})
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for weight in weights:
        points = sorted((row.shots, row.report.n_times_v) for row in rows if row.weight == weight)
        ax.plot(
            [p[0] for p in points],
            [p[1] for p in points],
            "o-",
            label=f"c = {weight:g}",
        )
    ax.set_xscale("log")
    ax.set_xlabel("measurements per cell N")
    ax.set_ylabel(r"$N \cdot \hat{V}$")
    ax.set_title("error scaling with the number of measurements")
    ax.legend()
    fig.tight_layout()
    return _to_png(fig)
