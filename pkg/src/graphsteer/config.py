"""Strict experiment-config parsing and self-describing result records.

Configs are single JSON documents. Parsing is strict: unknown keys anywhere
are fatal, and every referenced file must exist at load time, so a typo in
k / mu / N cannot silently fall back to a default. Relative paths resolve
against the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import (
    DATASET_FAMILIES,
    generate_dataset,
    load_graphs,
    percentile_bound,
)
from .errors import ConfigurationError
from .guidance import CONTROLLER_KINDS, MU_RULES, ControllerConfig
from .priors import EmpiricalMixturePrior, GaussianPrior, ScoreModel
from .rewards import (
    ConstraintSpec,
    ObservationMask,
    SensitiveAttributes,
    constraint_reward,
    Reward,
)
from .sampler import SamplerConfig
from .schedule import NoiseSchedule, build_schedule
from .state import GraphState


def _check_keys(section: dict, allowed: set[str], context: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) {sorted(unknown)} in {context}; allowed: {sorted(allowed)}"
        )


def _require(section: dict, key: str, context: str):
    if key not in section:
        raise ConfigurationError(f"missing required key {key!r} in {context}")
    return section[key]


def config_digest(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class Experiment:
    raw: dict
    schedule: NoiseSchedule
    prior: ScoreModel
    reference_graphs: list[GraphState] | None
    reward: Reward | None
    constraint: ConstraintSpec | None
    controller: ControllerConfig | None
    sampler: SamplerConfig
    n_chains: int
    seed: int
    out: Path

    @property
    def digest(self) -> str:
        return config_digest(self.raw)


def _resolve(path_str: str, base_dir: Path, context: str) -> Path:
    path = Path(path_str)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise ConfigurationError(f"{context}: file not found: {path}")
    return path


def load_observation_file(path: Path) -> ObservationMask:
    with path.open() as fh:
        record = json.load(fh)
    _check_keys(record, {"n", "mask", "values"}, f"observation file {path}")
    n = int(_require(record, "n", str(path)))
    mask = np.asarray(_require(record, "mask", str(path)), dtype=bool).reshape(n, n)
    values = np.asarray(_require(record, "values", str(path)), dtype=float).reshape(n, n)
    return ObservationMask(mask=mask, values=values)


def save_observation_file(path: Path, obs: ObservationMask) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {
        "n": obs.mask.shape[0],
        "mask": obs.mask.astype(int).ravel().tolist(),
        "values": obs.values.astype(int).ravel().tolist(),
    }
    path.write_text(json.dumps(record, separators=(",", ":")) + "\n")


def _build_prior(
    section: dict, schedule: NoiseSchedule, base_dir: Path
) -> tuple[ScoreModel, list[GraphState] | None]:
    kind = _require(section, "kind", "prior")
    if kind == "gaussian":
        _check_keys(section, {"kind", "n_nodes", "n_features", "std"}, "prior")
        return (
            GaussianPrior(
                schedule,
                int(_require(section, "n_nodes", "prior")),
                int(section.get("n_features", 0)),
                std=float(section.get("std", 1.0)),
            ),
            None,
        )
    if kind != "empirical":
        raise ConfigurationError(f"unknown prior kind {kind!r}")
    _check_keys(section, {"kind", "dataset", "generator"}, "prior")
    if ("dataset" in section) == ("generator" in section):
        raise ConfigurationError("empirical prior needs exactly one of dataset/generator")
    if "dataset" in section:
        graphs = load_graphs(_resolve(section["dataset"], base_dir, "prior.dataset"))
    else:
        gen = section["generator"]
        _check_keys(
            gen,
            {"family", "count", "seed", "feature_buckets", "block_size", "p_in",
             "p_out", "n", "p"},
            "prior.generator",
        )
        family = _require(gen, "family", "prior.generator")
        if family not in DATASET_FAMILIES:
            raise ConfigurationError(f"unknown dataset family {family!r}")
        params = {
            key: gen[key]
            for key in ("block_size", "p_in", "p_out", "n", "p")
            if key in gen
        }
        graphs = generate_dataset(
            family,
            params,
            int(_require(gen, "count", "prior.generator")),
            np.random.default_rng(int(gen.get("seed", 0))),
            n_feature_buckets=int(gen.get("feature_buckets", 4)),
        )
    return EmpiricalMixturePrior(schedule, graphs), graphs


_REWARD_KINDS = (
    "none",
    "edge_count",
    "triangle_count",
    "max_degree",
    "force_star",
    "fairness",
    "link_observation",
)


def build_constraint(
    section: dict,
    base_dir: Path,
    reference_graphs: list[GraphState] | None,
) -> ConstraintSpec | None:
    kind = _require(section, "kind", "reward")
    if kind not in _REWARD_KINDS:
        raise ConfigurationError(f"unknown reward kind {kind!r}")
    if kind == "none":
        _check_keys(section, {"kind"}, "reward")
        return None
    allowed = {"kind", "loss"}
    if kind in ("edge_count", "triangle_count", "max_degree"):
        allowed |= {"bound", "bound_percentile"}
    elif kind == "fairness":
        allowed |= {"attributes", "bound"}
    elif kind == "link_observation":
        allowed |= {"observations", "mode"}
    _check_keys(section, allowed, "reward")

    loss = section.get("loss", "l2")
    if kind in ("edge_count", "triangle_count", "max_degree"):
        if ("bound" in section) == ("bound_percentile" in section):
            raise ConfigurationError(
                "count constraint needs exactly one of bound/bound_percentile"
            )
        if "bound" in section:
            bound = float(section["bound"])
        else:
            if reference_graphs is None:
                raise ConfigurationError(
                    "bound_percentile requires an empirical prior to take the "
                    "percentile over"
                )
            bound = percentile_bound(
                reference_graphs, kind, float(section["bound_percentile"])
            )
        return ConstraintSpec(kind=kind, bound=bound, loss_variant=loss)
    if kind == "force_star":
        return ConstraintSpec(kind=kind, loss_variant="quantized_l2")
    if kind == "fairness":
        attrs = SensitiveAttributes(np.asarray(_require(section, "attributes", "reward")))
        return ConstraintSpec(
            kind=kind,
            bound=float(section.get("bound", 0.0)),
            loss_variant=loss,
            aux=attrs,
        )
    obs = load_observation_file(
        _resolve(_require(section, "observations", "reward"), base_dir, "reward.observations")
    )
    return ConstraintSpec(
        kind=kind,
        loss_variant=loss,
        mode=section.get("mode", "all_entries"),
        aux=obs,
    )


def load_experiment(path: str | Path, overrides: dict | None = None) -> Experiment:
    """Parse, validate, and build a runnable experiment from a config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}

    _check_keys(
        raw,
        {"schedule", "prior", "controller", "sampler", "reward", "n_chains", "seed", "out"},
        "config",
    )
    base_dir = path.parent

    sched_section = _require(raw, "schedule", "config")
    _check_keys(sched_section, {"steps", "beta_min", "beta_max"}, "schedule")
    schedule = build_schedule(
        int(_require(sched_section, "steps", "schedule")),
        float(_require(sched_section, "beta_min", "schedule")),
        float(_require(sched_section, "beta_max", "schedule")),
    )

    prior, reference = _build_prior(_require(raw, "prior", "config"), schedule, base_dir)

    reward_section = raw.get("reward", {"kind": "none"})
    constraint = build_constraint(reward_section, base_dir, reference)
    reward = constraint_reward(constraint) if constraint is not None else None

    controller = None
    if "controller" in raw:
        ctrl = raw["controller"]
        _check_keys(
            ctrl,
            {"kind", "k", "lambda", "mu0", "mu_rule", "n_candidates", "phi"},
            "controller",
        )
        kind = _require(ctrl, "kind", "controller")
        if kind not in CONTROLLER_KINDS:
            raise ConfigurationError(f"unknown controller kind {kind!r}")
        if ctrl.get("mu_rule", "sigma") not in MU_RULES:
            raise ConfigurationError(f"unknown mu_rule {ctrl.get('mu_rule')!r}")
        controller = ControllerConfig(
            kind=kind,
            k=float(ctrl.get("k", 1.0)),
            lam=float(ctrl.get("lambda", 1.0)),
            mu0=float(ctrl.get("mu0", 0.1)),
            mu_rule=ctrl.get("mu_rule", "sigma"),
            n_candidates=int(ctrl.get("n_candidates", 8)),
            phi=float(ctrl.get("phi", 1.0)),
        )
    if reward is not None and controller is None:
        raise ConfigurationError("a reward is configured but no controller section given")

    sampler_section = raw.get("sampler", {})
    _check_keys(
        sampler_section,
        {"add_ancestral_noise", "record_trajectory", "final_denoise", "scale_by_g", "k_ramp"},
        "sampler",
    )
    seed = int(raw.get("seed", 0))
    sampler = SamplerConfig(
        schedule=schedule,
        controller=controller,
        add_ancestral_noise=bool(sampler_section.get("add_ancestral_noise", True)),
        record_trajectory=bool(sampler_section.get("record_trajectory", False)),
        seed=seed,
        final_denoise=bool(sampler_section.get("final_denoise", True)),
        scale_by_g=bool(sampler_section.get("scale_by_g", False)),
        k_ramp=bool(sampler_section.get("k_ramp", False)),
    )

    n_chains = int(raw.get("n_chains", 1))
    if n_chains < 1:
        raise ConfigurationError(f"n_chains must be >= 1, got {n_chains}")

    return Experiment(
        raw=raw,
        schedule=schedule,
        prior=prior,
        reference_graphs=reference,
        reward=reward,
        constraint=constraint,
        controller=controller,
        sampler=sampler,
        n_chains=n_chains,
        seed=seed,
        out=Path(raw.get("out", "results")),
    )
