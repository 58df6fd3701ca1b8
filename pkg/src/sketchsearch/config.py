"""YAML experiment configuration for the batch CLI.

A config names an output directory, a base seed, shared defaults, and a list
of arms; `sweep:` can reference one of the built-in sweep menus instead of
spelling arms out. Everything not given falls back to the desk-scale
defaults, and the parsed arms echo back into the outputs for provenance.
"""

from __future__ import annotations

from dataclasses import replace

import yaml

from .harness import SWEEPS, ArmConfig, desk_planner, sim_world
from .planner import PlannerConfig
from .sim_human import HumanModel, SketchParams
from .world import WorldParams


class ConfigError(ValueError):
    pass


def _planner_from(d: dict | None, base: PlannerConfig) -> PlannerConfig:
    if not d:
        return base
    return replace(base, **d)


def _world_from(d: dict | None, base: WorldParams) -> WorldParams:
    if not d:
        return base
    return replace(base, **d)


def _human_from(d: dict | None) -> HumanModel | None:
    if d is None:
        return None
    return HumanModel(**d)


def _sketch_params_from(d: dict | None) -> SketchParams:
    if not d:
        return SketchParams()
    if "centroid" in d:
        d = {**d, "centroid": tuple(d["centroid"])}
    return SketchParams(**d)


def parse_experiment(doc: dict) -> dict:
    """Returns {'out_dir', 'base_seed', 'workers', 'arms': [ArmConfig, ...]}."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    out = {
        "out_dir": doc.get("out_dir", "results"),
        "base_seed": int(doc.get("base_seed", 1)),
        "workers": doc.get("workers"),
    }
    defaults = doc.get("defaults", {})
    base_planner = _planner_from(defaults.get("planner"), desk_planner())
    base_world = _world_from(defaults.get("world"), sim_world())
    base_particles = int(defaults.get("n_particles", 1500))
    base_map = defaults.get("map")

    if "sweep" in doc:
        name = doc["sweep"]
        if name not in SWEEPS:
            raise ConfigError(f"unknown sweep {name!r}; choose from {sorted(SWEEPS)}")
        kwargs = doc.get("sweep_args", {})
        arms = SWEEPS[name](**kwargs)
        if defaults:
            arms = [replace(a, n_particles=base_particles,
                            map_path=base_map if base_map else a.map_path)
                    for a in arms]
        out["arms"] = arms
        return out

    arm_docs = doc.get("arms")
    if not arm_docs:
        raise ConfigError("config needs either 'sweep' or a non-empty 'arms' list")
    arms = []
    for ad in arm_docs:
        if "name" not in ad:
            raise ConfigError("every arm needs a name")
        arms.append(ArmConfig(
            name=str(ad["name"]),
            episodes=int(ad.get("episodes", doc.get("episodes", 100))),
            human=_human_from(ad.get("human")),
            planner=_planner_from(ad.get("planner"), base_planner),
            n_particles=int(ad.get("n_particles", base_particles)),
            map_path=ad.get("map", base_map),
            world=_world_from(ad.get("world"), base_world),
            sketch_params=_sketch_params_from(ad.get("sketch_params",
                                                     defaults.get("sketch_params"))),
            glimpse_period=ad.get("glimpse_period", defaults.get("glimpse_period", 30.0)),
            glimpse_noise=ad.get("glimpse_noise", defaults.get("glimpse_noise", 20.0)),
        ))
    names = [a.name for a in arms]
    if len(names) != len(set(names)):
        raise ConfigError("arm names must be unique")
    out["arms"] = arms
    return out


def load_experiment(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_experiment(yaml.safe_load(fh))
