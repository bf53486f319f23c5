"""Run-configuration files: schema validation and construction of run pieces."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .abstraction import AtomUniverse, ConfigurationError, build_universe
from .envs import EnvironmentBundle, make_environment
from .evaluation import EvalConfig
from .learner import LearnerConfig

OUTPUT_ROOT_ENV = "CAPLEARN_OUT"


@dataclass
class RunConfig:
    environment: str
    env_params: dict = field(default_factory=dict)
    universe: str | dict = "builtin"
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    output_dir: str = "run"
    seed: int = 0

    def resolved_output_dir(self) -> Path:
        path = Path(self.output_dir)
        if path.is_absolute():
            return path
        root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
        return Path(root) / path

    def to_json(self) -> str:
        doc = {
            "environment": {"name": self.environment, "params": self.env_params},
            "universe": self.universe,
            "learner": {
                "variant": self.learner.variant,
                "runs_per_query": self.learner.runs_per_query,
                "horizon": self.learner.horizon,
                "theta": self.learner.theta,
                "mcts_iterations": self.learner.mcts_iterations,
                "kappa": self.learner.kappa,
                "depth": self.learner.depth,
                "early_stop_window": self.learner.early_stop_window,
                "max_queries": self.learner.max_queries,
                "wall_clock_budget": self.learner.wall_clock_budget,
                "random_policy_length": self.learner.random_policy_length,
                "bootstrap_steps": self.learner.bootstrap_steps,
            },
            "evaluation": {
                "episodes": self.evaluation.episodes,
                "min_len": self.evaluation.min_len,
                "max_len": self.evaluation.max_len,
            },
            "output_dir": self.output_dir,
            "seed": self.seed,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


_LEARNER_FIELDS = {
    "variant": str,
    "runs_per_query": int,
    "horizon": int,
    "theta": (int, type(None)),
    "mcts_iterations": int,
    "kappa": (int, float),
    "depth": int,
    "early_stop_window": int,
    "max_queries": (int, type(None)),
    "wall_clock_budget": (int, float, type(None)),
    "random_policy_length": int,
    "bootstrap_steps": (int, type(None)),
}

_EVAL_FIELDS = {"episodes": int, "min_len": int, "max_len": int}


def _typed(section: str, data: dict, fields: dict) -> dict:
    out = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigurationError(f"unknown {section} field {key!r}")
        expected = fields[key]
        if not isinstance(value, expected) or isinstance(value, bool):
            raise ConfigurationError(f"{section}.{key} has wrong type: {value!r}")
        out[key] = value
    return out


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    env = doc.get("environment")
    if not isinstance(env, dict) or not isinstance(env.get("name"), str):
        raise ConfigurationError("config needs environment.name")
    params = env.get("params", {})
    if not isinstance(params, dict):
        raise ConfigurationError("environment.params must be an object")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigurationError("seed must be an integer")

    learner_doc = doc.get("learner", {})
    if not isinstance(learner_doc, dict):
        raise ConfigurationError("learner must be an object")
    learner = LearnerConfig(**_typed("learner", learner_doc, _LEARNER_FIELDS), seed=seed)
    learner.validate()

    eval_doc = doc.get("evaluation", {})
    if not isinstance(eval_doc, dict):
        raise ConfigurationError("evaluation must be an object")
    evaluation = EvalConfig(**_typed("evaluation", eval_doc, _EVAL_FIELDS), seed=seed)
    evaluation.validate()

    universe = doc.get("universe", "builtin")
    if universe != "builtin" and not isinstance(universe, dict):
        raise ConfigurationError('universe must be "builtin" or an object')

    output_dir = doc.get("output_dir", "run")
    if not isinstance(output_dir, str):
        raise ConfigurationError("output_dir must be a string")

    return RunConfig(
        environment=env["name"],
        env_params=params,
        universe=universe,
        learner=learner,
        evaluation=evaluation,
        output_dir=output_dir,
        seed=seed,
    )


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)


def build_universe_from_definition(definition: dict) -> AtomUniverse:
    """Build a universe from the config's inline definition."""
    for key in ("objects", "predicates"):
        if key not in definition or not isinstance(definition[key], dict):
            raise ConfigurationError(f"universe definition needs object map {key!r}")
    return build_universe(definition["predicates"], definition["objects"])


def make_bundle(config: RunConfig) -> EnvironmentBundle:
    """Instantiate the configured environment, checking any inline universe."""
    try:
        bundle = make_environment(
            config.environment, seed=f"{config.seed}/env", **config.env_params
        )
    except TypeError as exc:
        raise ConfigurationError(f"bad environment params: {exc}") from exc
    if isinstance(config.universe, dict):
        declared = build_universe_from_definition(config.universe)
        if declared.atoms != bundle.universe.atoms:
            raise ConfigurationError(
                "inline universe does not match the built-in environment's atom set"
            )
    return bundle
