"""Slope pictures for scan reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .eigencurve import ScanReport  # noqa: E402


def plot_slopes(report: ScanReport, path: str | Path) -> Path:
    """Scatter of slopes against the weight, one marker per eigen-system."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for side, marker, offset in (("half", "o", -0.08), ("integral", "x", 0.08)):
        xs, ys = [], []
        for pt in report.points:
            if pt.error is not None:
                continue
            systems = pt.half_systems if side == "half" else pt.integral_systems
            for s in systems:
                if s.slope is None:
                    continue
                xs.append(pt.weight.lam + pt.weight.j / max(report.p - 1, 1) + offset)
                ys.append(float(s.slope))
        label = "U_{p^2} on weight lambda+1/2" if side == "half" else "U_p on weight 2 lambda"
        ax.scatter(xs, ys, marker=marker, label=label)
    lams = sorted({w.lam for w in report.grid})
    if lams:
        ax.plot(lams, [2 * lam - 1 for lam in lams], linestyle="--", color="grey", label="2 lambda - 1")
    ax.set_xlabel("lambda + j/(p-1)")
    ax.set_ylabel("slope")
    ax.set_title(f"p = {report.p}, N = {report.N}")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
