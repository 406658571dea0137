"""Report figures, rendered to files next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_PNG_META = {"Software": "rcpsp-bench"}  # fixed so repeated renders are byte-stable


def save_feasibility_curves(
    dataset: str, by_agent: dict[str, tuple[list[int], list[float]]], path: Path
) -> None:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for agent in sorted(by_agent):
        levels, smoothed = by_agent[agent]
        ax.plot(levels, smoothed, label=agent, linewidth=1.5)
    ax.set_xlabel("constraint level k")
    ax.set_ylabel("feasibility rate (smoothed)")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"Feasibility vs. constraint level — {dataset}")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def save_wauc_bars(wauc_by_dataset: dict[str, dict[str, float]], path: Path) -> None:
    datasets = sorted(wauc_by_dataset)
    agents = sorted({a for d in wauc_by_dataset.values() for a in d})
    fig, ax = plt.subplots(figsize=(8, 4.5))
    width = 0.8 / max(1, len(datasets))
    for di, dataset in enumerate(datasets):
        xs = [i + di * width for i in range(len(agents))]
        ys = [wauc_by_dataset[dataset].get(a, 0.0) for a in agents]
        ax.bar(xs, ys, width=width, label=dataset)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(agents))])
    ax.set_xticklabels(agents, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("WAUC")
    ax.set_ylim(0, 1.05)
    ax.set_title("WAUC per agent and dataset")
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def save_breakdown_bars(breakdown_by_agent: dict[str, dict[str, float]], path: Path) -> None:
    agents = sorted(breakdown_by_agent)
    categories = sorted({c for b in breakdown_by_agent.values() for c in b})
    fig, ax = plt.subplots(figsize=(8, 4.5))
    bottoms = [0.0] * len(agents)
    for category in categories:
        heights = [breakdown_by_agent[a].get(category, 0.0) for a in agents]
        ax.bar(range(len(agents)), heights, bottom=bottoms, label=category)
        bottoms = [b + h for b, h in zip(bottoms, heights)]
    ax.set_xticks(range(len(agents)))
    ax.set_xticklabels(agents, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("share of failed schedules (%)")
    ax.set_title("Failure taxonomy breakdown")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
