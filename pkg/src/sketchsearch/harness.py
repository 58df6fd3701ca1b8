"""Batch experiment runner and statistics for the simulated sweeps.

Arms share one base seed: episode i of every arm runs from the same derived
seed, so paired comparisons (and the never-sketching human's exact
equivalence to the no-human baseline) hold by construction. Results persist
incrementally as JSON lines, one file per arm, and interrupted batches resume
by skipping finished episode indices.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from multiprocessing import Pool

import numpy as np
from scipy.stats import hypergeom

from .episode import EpisodeConfig, RunMetrics, run_episode
from .planner import PlannerConfig
from .sim_human import HumanModel, SketchParams
from .world import WorldParams


def sim_world() -> WorldParams:
    """Calibrated batch-experiment dynamics (documented defaults elsewhere
    unchanged): slower on/off-road mode churn with long off-road dwells, and
    target spawns outside the robot's immediate reach."""
    return WorldParams(mode_stay_prob=0.96, offroad_stay_prob=0.99,
                       spawn_min_distance=400.0)


@dataclass
class ArmConfig:
    name: str
    episodes: int = 100
    human: HumanModel | None = None
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    n_particles: int = 1500
    map_path: str | None = None
    world: WorldParams = field(default_factory=sim_world)
    sketch_params: SketchParams = field(default_factory=SketchParams)
    glimpse_period: float | None = 30.0
    glimpse_noise: float = 20.0


def episode_seed(base_seed: int, index: int) -> int:
    """Arm-independent seed for episode `index` (equal seeds across arms)."""
    return int(np.random.SeedSequence((base_seed, index)).generate_state(1)[0])


def episode_config(arm: ArmConfig, base_seed: int, index: int) -> EpisodeConfig:
    return EpisodeConfig(
        seed=episode_seed(base_seed, index),
        map_path=arm.map_path,
        n_particles=arm.n_particles,
        world=arm.world,
        planner=arm.planner,
        human=arm.human,
        sketch_params=arm.sketch_params,
        glimpse_period=arm.glimpse_period,
        glimpse_noise=arm.glimpse_noise,
    )


def _run_one(task):
    arm_name, index, cfg = task
    try:
        metrics, _ = run_episode(cfg)
        row = {"arm": arm_name, "index": index, **metrics.to_dict()}
    except Exception as err:  # per-episode failures recorded, batch continues
        row = {"arm": arm_name, "index": index, "seed": cfg.seed, "error": str(err)}
    return row


def _results_path(out_dir: str, arm: str) -> str:
    return os.path.join(out_dir, f"{arm}.jsonl")


def load_results(out_dir: str, arm: str) -> list[dict]:
    path = _results_path(out_dir, arm)
    if not os.path.exists(path):
        return []
    with open(path, "r", encoding="utf-8") as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    rows.sort(key=lambda r: r["index"])
    return rows


def run_batch(arms: list[ArmConfig], base_seed: int, out_dir: str,
              workers: int | None = None, progress=None) -> dict[str, list[dict]]:
    """Run every missing episode of every arm; returns rows per arm name."""
    os.makedirs(out_dir, exist_ok=True)
    done: dict[str, set[int]] = {}
    for arm in arms:
        done[arm.name] = {r["index"] for r in load_results(out_dir, arm.name)}
    tasks = []
    for arm in arms:
        for i in range(arm.episodes):
            if i not in done[arm.name]:
                tasks.append((arm.name, i, episode_config(arm, base_seed, i)))
    if tasks:
        workers = workers or min(os.cpu_count() or 1, 8)
        handles = {arm.name: open(_results_path(out_dir, arm.name), "a",
                                  encoding="utf-8") for arm in arms}
        try:
            if workers > 1:
                with Pool(workers) as pool:
                    for row in pool.imap_unordered(_run_one, tasks, chunksize=1):
                        handles[row["arm"]].write(json.dumps(row, separators=(",", ":")) + "\n")
                        handles[row["arm"]].flush()
                        if progress:
                            progress(row)
            else:
                for task in tasks:
                    row = _run_one(task)
                    handles[row["arm"]].write(json.dumps(row, separators=(",", ":")) + "\n")
                    handles[row["arm"]].flush()
                    if progress:
                        progress(row)
        finally:
            for fh in handles.values():
                fh.close()
    return {arm.name: load_results(out_dir, arm.name) for arm in arms}


# ---------------------------------------------------------------------------
# statistics


def binomial_test(k1: int, n1: int, k2: int, n2: int,
                  alternative: str = "greater") -> float:
    """Exact conditional test on two capture proportions (Fisher).

    'greater' tests arm 1's proportion above arm 2's; conditioning is on the
    total number of captures, p-values from the hypergeometric tail. With no
    captures anywhere the test is uninformative and returns 1.
    """
    if not (0 <= k1 <= n1 and 0 <= k2 <= n2):
        raise ValueError("need k <= n for both arms")
    k, n = k1 + k2, n1 + n2
    dist = hypergeom(n, k, n1)
    if alternative == "greater":
        return float(min(1.0, dist.sf(k1 - 1)))
    if alternative == "less":
        return float(min(1.0, dist.cdf(k1)))
    if alternative == "two-sided":
        p_obs = dist.pmf(k1)
        support = np.arange(max(0, k - n2), min(k, n1) + 1)
        probs = dist.pmf(support)
        return float(min(1.0, probs[probs <= p_obs * (1 + 1e-9)].sum()))
    raise ValueError(f"unknown alternative {alternative!r}")


def summarize(rows: list[dict]) -> dict:
    """Capture ratio and time-to-capture aggregates for one arm's rows."""
    ok = [r for r in rows if "error" not in r]
    captures = [r for r in ok if r.get("captured")]
    ttc = sorted(r["time_to_capture"] for r in captures)
    out = {
        "episodes": len(ok),
        "failures": len(rows) - len(ok),
        "captures": len(captures),
        "capture_ratio": (len(captures) / len(ok)) if ok else 0.0,
        "mean_ttc": (sum(ttc) / len(ttc)) if ttc else None,
        "median_ttc": (ttc[len(ttc) // 2] if len(ttc) % 2 else
                       0.5 * (ttc[len(ttc) // 2 - 1] + ttc[len(ttc) // 2])) if ttc else None,
        "mean_queries": (sum(r["queries_asked"] for r in ok) / len(ok)) if ok else 0.0,
        "mean_sketches": (sum(r["sketches"] for r in ok) / len(ok)) if ok else 0.0,
    }
    return out


def compare_arms(rows_a: list[dict], rows_b: list[dict],
                 alternative: str = "greater") -> dict:
    sa, sb = summarize(rows_a), summarize(rows_b)
    p = binomial_test(sa["captures"], sa["episodes"], sb["captures"], sb["episodes"],
                      alternative)
    return {"a": sa, "b": sb, "p_value": p, "alternative": alternative}


# ---------------------------------------------------------------------------
# standard sweeps (the simulated experiment menu)

ACCURACY_GRID = (0.3, 0.5, 0.7, 0.9, 0.95)
SKETCH_PERIODS = (15.0, 30.0, 60.0, 120.0, None)  # None = never sketches


def desk_planner(predictive: bool = True, assumed_eta: float = 0.95,
                 assumed_xi: float = 0.9, simulations: int = 1000,
                 max_depth: int = 12) -> PlannerConfig:
    return PlannerConfig(simulations=simulations, max_depth=max_depth,
                         rollout_depth=6, pw_query_max=3,
                         predictive=predictive, assumed_eta=assumed_eta,
                         assumed_xi=assumed_xi)


def sim_human(eta: float = 0.95, xi: float = 0.9,
              sketch_period: float | None = 60.0) -> HumanModel:
    """Standard simulated collaborator: answers queries and pushes statements."""
    return HumanModel(eta=eta, xi=xi, sketch_period=sketch_period, mode="both",
                      push_period=20.0)


def human_vs_nonhuman_arms(episodes: int = 100) -> list[ArmConfig]:
    return [
        ArmConfig("nonhuman", episodes, human=None, planner=desk_planner()),
        ArmConfig("human", episodes, human=sim_human(), planner=desk_planner()),
    ]


def matched_accuracy_arms(values=(0.5, 0.95), episodes: int = 30) -> list[ArmConfig]:
    arms = []
    for v in values:
        arms.append(ArmConfig(
            f"matched_{v:g}", episodes, human=sim_human(eta=v, xi=v),
            planner=desk_planner(assumed_eta=v, assumed_xi=v)))
    return arms


def accuracy_grid_arms(episodes: int = 20, values=ACCURACY_GRID) -> list[ArmConfig]:
    arms = []
    for true_eta in values:
        for assumed_eta in values:
            arms.append(ArmConfig(
                f"acc_t{true_eta:g}_a{assumed_eta:g}", episodes,
                human=sim_human(eta=true_eta),
                planner=desk_planner(assumed_eta=assumed_eta)))
    return arms


def availability_grid_arms(episodes: int = 20, values=ACCURACY_GRID) -> list[ArmConfig]:
    arms = []
    for true_xi in values:
        for assumed_xi in values:
            arms.append(ArmConfig(
                f"avail_t{true_xi:g}_a{assumed_xi:g}", episodes,
                human=sim_human(xi=true_xi),
                planner=desk_planner(assumed_xi=assumed_xi)))
    return arms


def sketch_rate_arms(episodes: int = 50, periods=SKETCH_PERIODS) -> list[ArmConfig]:
    arms = [ArmConfig("nonhuman", episodes, human=None, planner=desk_planner())]
    for period in periods:
        name = "rate_inf" if period is None else f"rate_{period:g}"
        arms.append(ArmConfig(name, episodes, human=sim_human(sketch_period=period),
                              planner=desk_planner()))
    return arms


def predictive_arms(episodes: int = 50) -> list[ArmConfig]:
    return [
        ArmConfig("predictive", episodes, human=sim_human(), planner=desk_planner(True)),
        ArmConfig("blind", episodes, human=sim_human(), planner=desk_planner(False)),
    ]


SWEEPS = {
    "uplift": human_vs_nonhuman_arms,
    "matched_accuracy": matched_accuracy_arms,
    "accuracy_grid": accuracy_grid_arms,
    "availability_grid": availability_grid_arms,
    "sketch_rate": sketch_rate_arms,
    "predictive": predictive_arms,
}
