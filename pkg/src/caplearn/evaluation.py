"""Variational-distance evaluation against ground truth and by paired replay."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Iterable, Mapping, Sequence

from .abstraction import AbstractState, ConfigurationError
from .dataset import Transition, TransitionDataset
from .envs.base import EnvironmentBundle
from .learner import run_capability
from .model import Capability, CapabilityModel, predict


@dataclass
class EvalConfig:
    episodes: int = 1000
    min_len: int = 10
    max_len: int = 30
    seed: int = 0

    def validate(self) -> None:
        if self.episodes < 1:
            raise ConfigurationError("episodes must be positive")
        if not 1 <= self.min_len <= self.max_len:
            raise ConfigurationError("need 1 <= min_len <= max_len")


def generate_eval_dataset(
    bundle: EnvironmentBundle,
    capabilities: Mapping[str, Capability],
    config: EvalConfig,
    theta: int | None = None,
    horizon: int = 100,
) -> tuple[TransitionDataset, list[list[str]]]:
    """Drive the agent through uniform-random capability sequences from reset.

    Returns the observed transitions and the exact sequences used, so a model
    can replay them.
    """
    config.validate()
    rng = Random(f"{config.seed}/eval")
    names = sorted(capabilities)
    if not names:
        raise ConfigurationError("no capabilities to evaluate")
    dataset = TransitionDataset()
    sequences: list[list[str]] = []
    for _ in range(config.episodes):
        bundle.simulator.reset()
        seq = [rng.choice(names) for _ in range(rng.randint(config.min_len, config.max_len))]
        sequences.append(seq)
        for cap_name in seq:
            traj = run_capability(
                bundle.agent,
                bundle.simulator,
                capabilities[cap_name].intent,
                bundle.abstraction,
                theta,
                horizon,
            )
            dataset.record(traj, cap_name, bundle.abstraction, theta)
    return dataset, sequences


def model_replay(
    model: CapabilityModel,
    sequences: Sequence[Sequence[str]],
    start: AbstractState,
    seed: int | str = 0,
) -> TransitionDataset:
    """Replay capability sequences inside the model, open loop from `start`."""
    rng = Random(f"{seed}/replay")
    dataset = TransitionDataset()
    for seq in sequences:
        s = start
        for cap_name in seq:
            dist = predict(model, s, cap_name)
            ordered = sorted(dist.items(), key=lambda kv: kv[0].bits)
            u = rng.random()
            acc = 0.0
            s2 = ordered[-1][0]
            for cand, p in ordered:
                acc += p
                if u < acc:
                    s2 = cand
                    break
            dataset.add(Transition(s, cap_name, s2))
            s = s2
    return dataset


def _marginals(ds: TransitionDataset) -> dict[tuple[AbstractState, str], int]:
    out: dict[tuple[AbstractState, str], int] = {}
    for t, n in ds.counts.items():
        key = (t.s, t.c)
        out[key] = out.get(key, 0) + n
    return out


def sampled_vd(agent_ds: TransitionDataset, model_ds: TransitionDataset) -> float:
    """Mean absolute difference of conditional transition ratios.

    Ranges over the union of unique transitions; a missing (s, c) marginal
    contributes ratio 0 for that dataset.
    """
    union = set(agent_ds.counts) | set(model_ds.counts)
    if not union:
        return 0.0
    me = _marginals(agent_ds)
    mm = _marginals(model_ds)
    total = 0.0
    for t in union:
        key = (t.s, t.c)
        ne = me.get(key, 0)
        nm = mm.get(key, 0)
        re = agent_ds.counts.get(t, 0) / ne if ne else 0.0
        rm = model_ds.counts.get(t, 0) / nm if nm else 0.0
        total += abs(re - rm)
    return total / len(union)


def ground_truth_transitions(
    truth: CapabilityModel, states: Iterable[AbstractState]
) -> list[Transition]:
    """All non-zero-probability transitions of `truth` from the given states."""
    out = []
    for s in states:
        for c in truth.capability_names():
            for s2 in sorted(predict(truth, s, c), key=lambda x: x.bits):
                out.append(Transition(s, c, s2))
    return out


def reachable_states(truth: CapabilityModel, start: AbstractState) -> set[AbstractState]:
    """Closure of `start` under the truth model's non-zero transitions."""
    seen = {start}
    frontier = [start]
    while frontier:
        s = frontier.pop()
        for c in truth.capabilities:
            for s2 in predict(truth, s, c):
                if s2 not in seen:
                    seen.add(s2)
                    frontier.append(s2)
    return seen


def exact_vd(
    model: CapabilityModel, truth: CapabilityModel, transitions: Sequence[Transition]
) -> float:
    """Average absolute probability gap over the given transition set."""
    if not transitions:
        return 0.0
    total = 0.0
    for t in transitions:
        p_model = predict(model, t.s, t.c).get(t.s_next, 0.0)
        p_truth = predict(truth, t.s, t.c).get(t.s_next, 0.0)
        total += abs(p_model - p_truth)
    return total / len(transitions)


def evaluation_filter(model: CapabilityModel) -> CapabilityModel:
    """Drop rules that cannot achieve their capability's intent, then empty capabilities."""
    kept: dict[str, Capability] = {}
    for name, cap in model.capabilities.items():
        rules = tuple(
            r
            for r in cap.rules
            if any(
                eff.add & cap.intent.positives == cap.intent.positives
                and eff.delete & cap.intent.negatives == cap.intent.negatives
                for _, eff in r.effects
            )
        )
        if rules:
            kept[name] = Capability(cap.name, cap.intent, rules)
    return CapabilityModel(model.universe, kept, model.flavor)


@dataclass
class CheckpointRow:
    checkpoint: str
    queries: int
    unique_transitions: int
    vd_sampled: float
    vd_exact: float | None
    wall_seconds: float


def write_csv(rows: Sequence[CheckpointRow], path: str | Path | io.TextIOBase) -> None:
    header = [
        "checkpoint",
        "queries",
        "unique_transitions",
        "vd_sampled",
        "vd_exact_if_available",
        "wall_seconds",
    ]
    if isinstance(path, io.TextIOBase):
        writer = csv.writer(path)
        writer.writerow(header)
        for r in rows:
            writer.writerow(
                [r.checkpoint, r.queries, r.unique_transitions, r.vd_sampled,
                 "" if r.vd_exact is None else r.vd_exact, r.wall_seconds]
            )
        return
    with open(path, "w", newline="") as fh:
        write_csv(rows, fh)  # type: ignore[arg-type]
