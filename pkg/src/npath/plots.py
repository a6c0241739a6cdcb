"""Vector-graphic figures for experiment results.

Every figure is written as a standalone SVG with the plotted numbers
appended as a CSV table inside a trailing comment, so downstream tooling can
recover the data without parsing the graphics.  The Agg backend and a fixed
hash salt keep the output independent of any display and stable across runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "npath"

import matplotlib.pyplot as plt
import numpy as np

from .noise import model_curves

__all__ = ["fringe_figure", "sweep_figure", "duality_figure", "fit_figure"]

_QUANTITY_STYLE = {
    "VC": ("tab:blue", "o", "coherence visibility"),
    "VP": ("tab:purple", "s", "purity visibility"),
    "D": ("tab:green", "^", "which-path information"),
}


def _write(fig, path, table_header, table_rows) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    lines = [",".join(table_header)]
    lines.extend(",".join(str(cell) for cell in row) for row in table_rows)
    body = "\n".join(lines)
    text = path.read_text()
    path.write_text(text.replace("</svg>", f"<!-- data\n{body}\n-->\n</svg>"))


def fringe_figure(panels, path) -> None:
    """One panel per coupling angle: recorded rate and the fitted sine.

    ``panels`` holds (theta, phi grid, zero rate, SineFit) tuples.
    """
    columns = min(2, len(panels))
    rows = (len(panels) + columns - 1) // columns
    fig, axes = plt.subplots(
        rows, columns, figsize=(5.0 * columns, 3.2 * rows), squeeze=False
    )
    table = []
    for index, (theta, phi, rate, fit) in enumerate(panels):
        axis = axes[index // columns][index % columns]
        dense = np.linspace(float(np.min(phi)), float(np.max(phi)), 256)
        model = fit.amplitude * np.sin(dense + fit.phase_shift) + fit.offset
        axis.plot(dense, model, color="tab:blue", lw=1.2)
        axis.plot(phi, rate, "o", color="tab:red", ms=3.5)
        axis.set_ylim(-0.05, 1.05)
        axis.set_xlabel("relative phase (rad)")
        axis.set_ylabel("zero-outcome rate")
        axis.set_title(f"coupling angle {theta:.4g}, visibility {fit.visibility:.4f}")
        table.extend((theta, p, r) for p, r in zip(phi, rate))
    for index in range(len(panels), rows * columns):
        axes[index // columns][index % columns].set_axis_off()
    fig.tight_layout()
    _write(fig, path, ("theta", "phi", "zero_rate"), table)


def sweep_figure(records, path) -> None:
    """Estimated quantifiers versus the coupling angle, one series each.

    ``records`` holds dicts with theta, quantity, value and std_error keys.
    """
    fig, axis = plt.subplots(figsize=(6.4, 4.2))
    table = []
    for quantity in ("VC", "VP", "D"):
        chosen = [r for r in records if r["quantity"] == quantity]
        if not chosen:
            continue
        color, marker, label = _QUANTITY_STYLE[quantity]
        thetas = [r["theta"] for r in chosen]
        values = [r["value"] for r in chosen]
        errors = [r["std_error"] for r in chosen]
        axis.errorbar(
            thetas, values, yerr=errors, fmt=marker, color=color, label=label,
            ms=4, capsize=2, lw=1,
        )
        table.extend(
            (quantity, t, v, e) for t, v, e in zip(thetas, values, errors)
        )
    axis.set_xlabel("coupling angle (rad)")
    axis.set_ylabel("quantifier value")
    axis.set_ylim(-0.05, 1.05)
    axis.legend()
    fig.tight_layout()
    _write(fig, path, ("quantity", "theta", "value", "std_error"), table)


def duality_figure(pairs, path) -> None:
    """Squared visibility against squared which-path information.

    The anti-diagonal marks the saturation bound; ideal exact data sits on
    it and every noisy point falls inside.
    """
    fig, axis = plt.subplots(figsize=(4.8, 4.8))
    line = np.linspace(0.0, 1.0, 2)
    axis.plot(line, 1.0 - line, color="black", lw=1, label="saturation bound")
    table = []
    for quantity in ("VC", "VP"):
        chosen = [p for p in pairs if p["quantity"] == quantity]
        if not chosen:
            continue
        color, marker, label = _QUANTITY_STYLE[quantity]
        d_sq = [p["d_value"] ** 2 for p in chosen]
        v_sq = [p["value"] ** 2 for p in chosen]
        axis.plot(d_sq, v_sq, marker, color=color, ms=4, label=label)
        table.extend((quantity, d, v) for d, v in zip(d_sq, v_sq))
    axis.set_xlabel("squared which-path information")
    axis.set_ylabel("squared visibility")
    axis.set_xlim(-0.05, 1.05)
    axis.set_ylim(-0.05, 1.05)
    axis.legend()
    fig.tight_layout()
    _write(fig, path, ("quantity", "d_squared", "v_squared"), table)


def fit_figure(observations, params, num_paths, path) -> None:
    """Observed quantifier data with the fitted model curves."""
    fig, axis = plt.subplots(figsize=(6.4, 4.2))
    table = []
    quantities = sorted({obs.quantity for obs in observations})
    for quantity in quantities:
        chosen = [obs for obs in observations if obs.quantity == quantity]
        color, marker, label = _QUANTITY_STYLE[quantity]
        thetas = np.array([obs.theta for obs in chosen])
        values = [obs.value for obs in chosen]
        sigmas = [obs.sigma for obs in chosen]
        axis.errorbar(
            thetas, values, yerr=sigmas, fmt=marker, color=color, label=label,
            ms=4, capsize=2, lw=1,
        )
        dense = np.linspace(float(np.min(thetas)), float(np.max(thetas)), 200)
        curve = model_curves(num_paths, dense, params, quantity)
        axis.plot(dense, curve, color=color, lw=1.2)
        table.extend(
            (quantity, t, v, s) for t, v, s in zip(thetas, values, sigmas)
        )
    axis.set_xlabel("coupling angle (rad)")
    axis.set_ylabel("quantifier value")
    axis.set_ylim(-0.05, 1.05)
    axis.legend()
    fig.tight_layout()
    _write(fig, path, ("quantity", "theta", "value", "sigma"), table)
