"""Sweep figure rendering for the simulate report path."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import SweepPointResult

_METRICS = (
    ("ccr_v2i", "V2I CCR"),
    ("ccr_v2v", "V2V CCR"),
    ("ccr_total", "Total CCR"),
)


def render_sweep_figures(
    results: list[SweepPointResult],
    out_dir,
    sweep_var: str | None,
    policy_name: str = "",
) -> list[Path]:
    """Render one mean-with-error-band panel per CCR metric; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    var = sweep_var or "point"
    values = [p.sweep_value for p in results]
    numeric = all(isinstance(v, (int, float)) and v is not None for v in values)
    x = np.array(values, dtype=float) if numeric else np.arange(len(values))

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4), sharex=True)
    for ax, (name, label) in zip(axes, _METRICS):
        means = np.array([p.report.mean(name) for p in results])
        errs = np.array([p.report.stderr(name) for p in results])
        ax.errorbar(x, means, yerr=errs, marker="o", capsize=3)
        ax.set_xlabel(var)
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
        if not numeric:
            ax.set_xticks(x)
            ax.set_xticklabels([str(v) for v in values], rotation=20)
    title = f"{policy_name} policy" if policy_name else "sweep"
    fig.suptitle(f"Connectivity ratios vs {var} ({title}, {results[0].report.n_runs} runs)")
    fig.tight_layout()
    path = out_dir / f"ccr_vs_{var}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
