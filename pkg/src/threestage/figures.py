"""Render run-report figures next to the machine-readable outputs.

The JSON report and JSONL trace stay the canonical formats; the figures
are a convenience rendering of the same numbers. matplotlib is imported
lazily and pinned to the Agg backend so importing the library never draws
on a display.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence


def render_report_figures(
    report: dict, qber_values: Sequence[Optional[float]], report_path: Path
) -> list[Path]:
    """Write outcome and QBER figures alongside the report file.

    Returns the paths written. ``qber_values`` holds one entry per trial,
    None for trials that aborted before a QBER existed.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stem = report_path.with_suffix("")
    written: list[Path] = []

    # Outcome histogram: recoveries plus the abort-reason breakdown.
    labels = ["Recovered"] + sorted(report["abort_reasons"])
    counts = [report["recovered"]] + [report["abort_reasons"][k] for k in sorted(report["abort_reasons"])]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(labels)), 3.2))
    ax.bar(range(len(labels)), counts, color=["#2a7e43"] + ["#b04a4a"] * (len(labels) - 1))
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("sessions")
    ax.set_title(f"outcomes over {report['trials']} trials ({report['adversary']})")
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    outcome_path = Path(f"{stem}_outcomes.png")
    fig.savefig(outcome_path, dpi=120)
    plt.close(fig)
    written.append(outcome_path)

    rates = [q for q in qber_values if q is not None]
    if rates:
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        ax.hist(rates, bins=min(20, max(5, len(set(rates)))), color="#3a6ea5")
        ax.set_xlabel("per-session QBER")
        ax.set_ylabel("sessions")
        ax.set_title("payload error rate distribution")
        ax.spines["right"].set_visible(False)
        ax.spines["top"].set_visible(False)
        fig.tight_layout()
        qber_path = Path(f"{stem}_qber.png")
        fig.savefig(qber_path, dpi=120)
        plt.close(fig)
        written.append(qber_path)

    return written
