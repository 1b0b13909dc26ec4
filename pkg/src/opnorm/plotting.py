"""Figure rendering for the CLI report paths (written next to the CSVs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_accuracy_curve(points, path, kappa: float | None = None) -> None:
    """Step plot of certified linf accuracy against the translated radius."""
    eps = [p[0] for p in points]
    acc = [p[1] for p in points]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.step(eps, acc, where="post")
    ax.set_xlabel(r"certified $\ell_\infty$ radius")
    ax.set_ylabel("certified accuracy")
    ax.set_ylim(-0.02, 1.02)
    title = "Certified accuracy curve"
    if kappa is not None:
        title += rf"  ($\kappa$ = {kappa:.4g})"
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bench_scaling(rows, path) -> None:
    """Mean +/- std wall time against instance size."""
    by_n: dict[int, list[float]] = {}
    for row in rows:
        by_n.setdefault(int(row["n"]), []).append(float(row["wall_ms"]))
    ns = sorted(by_n)
    means = [sum(by_n[n]) / len(by_n[n]) for n in ns]
    stds = [
        (sum((t - mu) ** 2 for t in by_n[n]) / len(by_n[n])) ** 0.5
        for n, mu in zip(ns, means)
    ]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(ns, means, yerr=stds, marker="o", capsize=3)
    ax.set_xlabel("matrix dimension n")
    ax.set_ylabel("wall time (ms)")
    ax.set_title("Certification wall time vs. dimension")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
