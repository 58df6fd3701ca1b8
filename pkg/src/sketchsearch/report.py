"""Metrics reporting: delimited summary tables plus rendered figures.

Reads the per-arm JSONL files a batch wrote, emits a CSV summary and a CSV of
raw per-episode rows, and renders the standard comparison figures (capture
ratio bars, time-to-capture distributions, and sweep heat grids when arm
names encode a true/assumed parameter grid) as PNG files next to the tables.
"""

from __future__ import annotations

import csv
import os
import re

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .harness import load_results, summarize

ARM_FILE = re.compile(r"^(?P<arm>.+)\.jsonl$")
GRID_ARM = re.compile(r"^(?P<prefix>acc|avail)_t(?P<true>[0-9.]+)_a(?P<assumed>[0-9.]+)$")

SUMMARY_FIELDS = ("arm", "episodes", "failures", "captures", "capture_ratio",
                  "mean_ttc", "median_ttc", "mean_queries", "mean_sketches")


def discover_arms(metrics_dir: str) -> list[str]:
    names = []
    for fn in sorted(os.listdir(metrics_dir)):
        m = ARM_FILE.match(fn)
        if m:
            names.append(m.group("arm"))
    return names


def write_summary_csv(metrics_dir: str, out_path: str) -> list[dict]:
    rows = []
    for arm in discover_arms(metrics_dir):
        s = summarize(load_results(metrics_dir, arm))
        s["arm"] = arm
        rows.append(s)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: r.get(k) for k in SUMMARY_FIELDS})
    return rows


def write_episodes_csv(metrics_dir: str, out_path: str) -> None:
    fields = ("arm", "index", "seed", "captured", "time_to_capture", "queries_asked",
              "queries_answered", "sketches", "statements", "degenerate_events",
              "reward_sum", "decisions", "error")
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for arm in discover_arms(metrics_dir):
            for row in load_results(metrics_dir, arm):
                writer.writerow(row)


def figure_capture_ratio(summaries: list[dict], out_path: str) -> None:
    arms = [s["arm"] for s in summaries]
    ratios = [s["capture_ratio"] for s in summaries]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(arms) + 1.5), 3.2))
    ax.bar(range(len(arms)), ratios, color="#4878cf")
    ax.set_xticks(range(len(arms)))
    ax.set_xticklabels(arms, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1)
    ax.set_ylabel("capture ratio")
    for i, r in enumerate(ratios):
        ax.text(i, r + 0.02, f"{r:.2f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def figure_ttc(metrics_dir: str, out_path: str) -> None:
    data, labels = [], []
    for arm in discover_arms(metrics_dir):
        ttc = [r["time_to_capture"] for r in load_results(metrics_dir, arm)
               if r.get("captured")]
        if ttc:
            data.append(ttc)
            labels.append(arm)
    if not data:
        return
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(labels) + 1.5), 3.2))
    ax.boxplot(data, tick_labels=labels)
    ax.set_ylabel("time to capture (s)")
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def axis_marginals(summaries: list[dict], prefix: str) -> dict:
    """Average capture ratio by true and by assumed parameter value for a
    t/a-named sweep grid (the per-axis marginal view of the heat grid)."""
    by_true: dict[float, list[float]] = {}
    by_assumed: dict[float, list[float]] = {}
    for s in summaries:
        m = GRID_ARM.match(s["arm"])
        if m and m.group("prefix") == prefix:
            by_true.setdefault(float(m.group("true")), []).append(s["capture_ratio"])
            by_assumed.setdefault(float(m.group("assumed")), []).append(s["capture_ratio"])
    return {
        "true": {v: sum(r) / len(r) for v, r in sorted(by_true.items())},
        "assumed": {v: sum(r) / len(r) for v, r in sorted(by_assumed.items())},
    }


def figure_marginals(summaries: list[dict], prefix: str, out_path: str) -> bool:
    marg = axis_marginals(summaries, prefix)
    if not marg["true"]:
        return False
    fig, axes = plt.subplots(1, 2, figsize=(6.4, 2.8), sharey=True)
    for ax, axis in zip(axes, ("true", "assumed")):
        xs = list(marg[axis])
        ax.plot(xs, [marg[axis][x] for x in xs], marker="o")
        ax.set_xlabel(f"{axis} value")
        ax.set_ylim(0, 1)
    axes[0].set_ylabel("capture ratio")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return True


def figure_grid(summaries: list[dict], prefix: str, out_path: str) -> bool:
    """True/assumed heat grid when arms follow the acc_/avail_ naming scheme."""
    cells = {}
    for s in summaries:
        m = GRID_ARM.match(s["arm"])
        if m and m.group("prefix") == prefix:
            cells[(float(m.group("true")), float(m.group("assumed")))] = s["capture_ratio"]
    if not cells:
        return False
    trues = sorted({k[0] for k in cells})
    assumed = sorted({k[1] for k in cells})
    grid = [[cells.get((tv, av), float("nan")) for av in assumed] for tv in trues]
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(grid, origin="lower", cmap="viridis", vmin=0, vmax=1)
    ax.set_xticks(range(len(assumed)))
    ax.set_xticklabels([f"{v:g}" for v in assumed])
    ax.set_yticks(range(len(trues)))
    ax.set_yticklabels([f"{v:g}" for v in trues])
    ax.set_xlabel("assumed")
    ax.set_ylabel("true")
    fig.colorbar(im, ax=ax, label="capture ratio")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return True


def render_report(metrics_dir: str, out_dir: str | None = None) -> list[str]:
    """Write summary.csv, episodes.csv, and the figures; returns written paths."""
    out_dir = out_dir or metrics_dir
    os.makedirs(out_dir, exist_ok=True)
    written = []
    summary_path = os.path.join(out_dir, "summary.csv")
    summaries = write_summary_csv(metrics_dir, summary_path)
    written.append(summary_path)
    episodes_path = os.path.join(out_dir, "episodes.csv")
    write_episodes_csv(metrics_dir, episodes_path)
    written.append(episodes_path)
    fig_path = os.path.join(out_dir, "capture_ratio.png")
    figure_capture_ratio(summaries, fig_path)
    written.append(fig_path)
    ttc_path = os.path.join(out_dir, "time_to_capture.png")
    figure_ttc(metrics_dir, ttc_path)
    if os.path.exists(ttc_path):
        written.append(ttc_path)
    for prefix in ("acc", "avail"):
        grid_path = os.path.join(out_dir, f"{prefix}_grid.png")
        if figure_grid(summaries, prefix, grid_path):
            written.append(grid_path)
        marg_path = os.path.join(out_dir, f"{prefix}_marginals.png")
        if figure_marginals(summaries, prefix, marg_path):
            written.append(marg_path)
    return written
