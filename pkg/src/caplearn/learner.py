"""The active learning loop: bootstrap, query synthesis, execution, refit.

Each iteration synthesizes a distinguishing policy from the current
pessimistic/optimistic model pair (or samples a random one), executes it
against the black-box agent, folds the observed transitions into the dataset,
rediscovers capabilities, rebuilds the model pair, and picks the next query's
initial state from the previous query's outcomes.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Callable, Iterable, Mapping, Sequence

from .abstraction import AbstractState, AbstractionFn, AtomUniverse, ConfigurationError, LiteralConjunction
from .dataset import TransitionDataset
from .envs.base import EnvironmentBundle
from .model import (
    Capability,
    CapabilityModel,
    build_models,
    capability_name,
    model_to_json,
    model_to_text,
)
from .synthesis import (
    Query,
    SequencePolicy,
    policy_to_json,
    random_policy_query,
    synthesize_exact,
    synthesize_sampled,
)

VARIANTS = ("exact", "sampled", "random")


@dataclass
class LearnerConfig:
    """Run settings; defaults follow the reported hyperparameter table."""

    variant: str = "exact"
    runs_per_query: int = 25
    horizon: int = 100
    theta: int | None = None
    mcts_iterations: int = 1000
    kappa: float = math.sqrt(2)
    depth: int = 20
    early_stop_window: int = 20
    max_queries: int | None = None
    wall_clock_budget: float | None = None
    random_policy_length: int = 30
    bootstrap_steps: int | None = None
    seed: int = 0
    progress: bool = False

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        positive = {
            "runs_per_query": self.runs_per_query,
            "horizon": self.horizon,
            "mcts_iterations": self.mcts_iterations,
            "depth": self.depth,
            "early_stop_window": self.early_stop_window,
            "random_policy_length": self.random_policy_length,
        }
        for name, value in positive.items():
            if value < 1:
                raise ConfigurationError(f"{name} must be positive, got {value}")
        if self.theta is not None and self.theta < 1:
            raise ConfigurationError("theta must be >= 1 or null")
        if self.max_queries is not None and self.max_queries < 0:
            raise ConfigurationError("max_queries must be >= 0")
        if self.bootstrap_steps is not None and self.bootstrap_steps < 0:
            raise ConfigurationError("bootstrap_steps must be >= 0")
        if self.kappa < 0:
            raise ConfigurationError("kappa must be >= 0")


@dataclass
class QueryRecord:
    index: int
    policy: dict
    initial_state: list[str]
    novel: int
    unique_transitions: int
    total_transitions: int
    executions: int
    score: float | None
    elapsed: float
    snapshot: str | None
    failures: int = 0

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "policy": self.policy,
            "initial_state": self.initial_state,
            "novel": self.novel,
            "unique_transitions": self.unique_transitions,
            "total_transitions": self.total_transitions,
            "executions": self.executions,
            "score": self.score,
            "elapsed": self.elapsed,
            "snapshot": self.snapshot,
            "failures": self.failures,
        }


@dataclass
class RunLog:
    records: list[QueryRecord] = field(default_factory=list)
    stop_reason: str = ""
    capabilities: int = 0
    wall_seconds: float = 0.0

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_json(), sort_keys=True) for r in self.records]
        lines.append(
            json.dumps(
                {
                    "stop_reason": self.stop_reason,
                    "capabilities": self.capabilities,
                    "wall_seconds": self.wall_seconds,
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"


def random_walk(simulator, steps: int, rng: Random) -> list:
    """Uniform-random low-level actions from the reset state.

    Stops early if no action applies (environment dead end).
    """
    if steps < 0:
        raise ConfigurationError("steps must be >= 0")
    traj = [simulator.reset()]
    for _ in range(steps):
        actions = simulator.available_actions()
        if not actions:
            break
        traj.append(simulator.step(rng.choice(sorted(actions))))
    return traj


def discover_capabilities(
    trajectories: Iterable[Sequence], abstraction: AbstractionFn, universe: AtomUniverse
) -> dict[str, Capability]:
    """Single-literal intents from observed one-step deltas, re-grounded.

    Each changed atom contributes the literal with its post-change polarity;
    every type-consistent re-grounding of that atom's predicate is added with
    the same polarity.
    """
    schemas: set[tuple[str, bool]] = set()
    for traj in trajectories:
        prev = None
        for x in traj:
            cur = abstraction(x)
            if prev is not None and cur != prev:
                added = cur.bits & ~prev.bits
                removed = prev.bits & ~cur.bits
                for i in range(universe.num_atoms):
                    if added >> i & 1:
                        schemas.add((universe.atoms[i].predicate, True))
                    elif removed >> i & 1:
                        schemas.add((universe.atoms[i].predicate, False))
            prev = cur

    caps: dict[str, Capability] = {}
    for predicate, positive in sorted(schemas):
        for i, atom in enumerate(universe.atoms):
            if atom.predicate != predicate:
                continue
            bit = 1 << i
            intent = LiteralConjunction(bit, 0) if positive else LiteralConjunction(0, bit)
            name = capability_name(intent, universe)
            caps[name] = Capability(name, intent)
    return caps


@dataclass
class RunResult:
    """One policy-execution run: recorded segments and where it ended."""

    segments: list[tuple[str, list]]
    final_state: object
    env_steps: int
    error: str | None = None


def run_capability(
    agent,
    simulator,
    intent: LiteralConjunction,
    abstraction: AbstractionFn,
    theta: int | None,
    horizon: int,
) -> list:
    """One capability attempt, halted at the theta-th distinct abstract state.

    The simulator is left at the halting point, so callers continue from
    exactly what was observed.
    """
    start = simulator.current
    traj = agent.attempt(intent, simulator, start, horizon)
    if theta is None:
        return traj
    distinct = 0
    prev = None
    for idx, x in enumerate(traj):
        s = abstraction(x)
        if prev is None or s != prev:
            distinct += 1
            prev = s
            if distinct == theta:
                if idx < len(traj) - 1:
                    simulator.revert(traj[idx])
                return traj[: idx + 1]
    return traj


def execute_query(
    agent,
    simulator,
    query: Query,
    capabilities: Mapping[str, Capability],
    abstraction: AbstractionFn,
    theta: int | None,
    horizon: int,
    max_policy_steps: int,
) -> list[RunResult]:
    """Run the query's policy `n` times from its initial state.

    Each step looks up the capability for the current abstract state (or the
    next sequence element), hands its intent to the agent, and stops when the
    policy is undefined or exhausted. Agent exceptions are captured per run.
    """
    if query.n < 1:
        raise ConfigurationError("query repetition count must be >= 1")
    results: list[RunResult] = []
    for _ in range(query.n):
        simulator.revert(query.x0)
        segments: list[tuple[str, list]] = []
        steps = 0
        error = None
        if isinstance(query.policy, SequencePolicy):
            plan: Iterable[str | None] = query.policy.sequence
        else:
            plan = (None for _ in range(max_policy_steps))
        for planned in plan:
            if planned is None:
                cap_name = query.policy.lookup(abstraction(simulator.current))
                if cap_name is None:
                    break
            else:
                cap_name = planned
            cap = capabilities.get(cap_name)
            if cap is None:
                break
            try:
                traj = run_capability(agent, simulator, cap.intent, abstraction, theta, horizon)
            except Exception as exc:  # noqa: BLE001 - agent is untrusted
                error = f"{type(exc).__name__}: {exc}"
                break
            segments.append((cap_name, traj))
            steps += len(traj) - 1
        results.append(RunResult(segments, simulator.current, steps, error))
    return results


def sample_initial_state(
    outcomes: Sequence[tuple[object, int]],
    previous_initial: tuple[object, int],
    dataset: TransitionDataset,
    simulator,
    abstraction: AbstractionFn,
    horizon: int,
    rng: Random,
) -> tuple[object, int]:
    """Pick the next query's start from the previous query's outcome states.

    Sampling weight is inversely proportional to how often a state has been
    an observed transition source. The reset state always competes in the
    pool, so saturated regions are eventually abandoned; outcomes that ended
    beyond the step horizon fall back to reset outright.
    """
    candidates: dict[AbstractState, tuple[object, int]] = {}
    for env_state, distance in list(outcomes) + [previous_initial]:
        if distance > horizon:
            continue
        candidates.setdefault(abstraction(env_state), (env_state, distance))

    prev_abs = abstraction(previous_initial[0])
    if not candidates or set(candidates) == {prev_abs}:
        return simulator.reset(), 0
    reset_state = simulator.reset()
    candidates.setdefault(abstraction(reset_state), (reset_state, 0))

    ordered = sorted(candidates.items(), key=lambda kv: kv[0].bits)
    visit = [dataset.state_visit_count(s) for s, _ in ordered]
    n_max = max(visit)
    weights = [n_max + 1 - v for v in visit]
    total = sum(weights)
    u = rng.random() * total
    acc = 0.0
    for (state, payload), w in zip(ordered, weights):
        acc += w
        if u < acc:
            return payload
    return ordered[-1][1]


def run(
    config: LearnerConfig,
    bundle: EnvironmentBundle,
    out_dir: str | Path | None = None,
    checkpoint_hook: Callable[[int, CapabilityModel, "RunLog", TransitionDataset], None]
    | None = None,
) -> tuple[CapabilityModel, RunLog]:
    """Execute the full learning loop and return the final pessimistic model."""
    config.validate()
    universe = bundle.universe
    simulator = bundle.simulator
    abstraction = bundle.abstraction
    seed = config.seed
    walk_rng = Random(f"{seed}/walk")
    synth_rng = Random(f"{seed}/synth")
    policy_rng = Random(f"{seed}/policy")
    init_rng = Random(f"{seed}/init")

    out_path = Path(out_dir) if out_dir is not None else None
    snap_dir = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        snap_dir = out_path / "snapshots"
        snap_dir.mkdir(exist_ok=True)

    started = time.monotonic()
    bootstrap_steps = config.horizon if config.bootstrap_steps is None else config.bootstrap_steps
    # One horizon's worth of random-walk steps; a walk that dies in a dead end
    # (no applicable action) restarts from reset until the budget is consumed.
    walks = []
    remaining = bootstrap_steps
    while remaining > 0:
        walk = random_walk(simulator, remaining, walk_rng)
        walks.append(walk)
        remaining -= max(len(walk) - 1, 1)
    if not walks:
        walks.append(random_walk(simulator, 0, walk_rng))
    capabilities = discover_capabilities(walks, abstraction, universe)
    dataset = TransitionDataset()
    m_pess, m_opt = build_models(capabilities.values(), dataset, universe)

    x_i: tuple[object, int] = (simulator.reset(), 0)
    log = RunLog()
    novel_history: list[int] = []
    query_idx = 0

    def stop_reason() -> str | None:
        if config.max_queries is not None and query_idx >= config.max_queries:
            return "max_queries"
        if (
            config.wall_clock_budget is not None
            and time.monotonic() - started >= config.wall_clock_budget
        ):
            return "wall_clock"
        if (
            len(novel_history) >= config.early_stop_window
            and not any(novel_history[-config.early_stop_window :])
        ):
            return "early_stop"
        if not capabilities:
            return "no_capabilities"
        return None

    while True:
        reason = stop_reason()
        if reason is not None:
            log.stop_reason = reason
            break
        t0 = time.monotonic()
        s0 = abstraction(x_i[0])
        score: float | None = None
        if config.variant == "random":
            query = random_policy_query(
                x_i[0], list(capabilities), config.random_policy_length,
                config.runs_per_query, policy_rng,
            )
        else:
            synthesize = synthesize_exact if config.variant == "exact" else synthesize_sampled
            result = synthesize(
                s0, m_pess, m_opt, config.mcts_iterations, config.kappa, config.depth, synth_rng
            )
            score = result.score
            if result.score > 0.0 and result.policy.mapping:
                query = Query(x_i[0], result.policy, config.runs_per_query)
            else:
                query = random_policy_query(
                    x_i[0], list(capabilities), config.random_policy_length,
                    config.runs_per_query, policy_rng,
                )

        results = execute_query(
            bundle.agent, simulator, query, capabilities, abstraction,
            config.theta, config.horizon, config.depth,
        )

        novel = 0
        executions = 0
        failures = 0
        outcomes: list[tuple[object, int]] = []
        for res in results:
            depth_used = x_i[1]
            for cap_name, traj in res.segments:
                _, is_new = dataset.record(traj, cap_name, abstraction, config.theta)
                novel += int(is_new)
                executions += 1
            depth_used += res.env_steps
            outcomes.append((res.final_state, depth_used))
            failures += int(res.error is not None)
            discovered = discover_capabilities(
                [traj for _, traj in res.segments], abstraction, universe
            )
            for name, cap in discovered.items():
                if name not in capabilities:
                    capabilities[name] = cap
                    novel += 1

        m_pess, m_opt = build_models(capabilities.values(), dataset, universe)
        novel_history.append(novel)

        snapshot_name = None
        if snap_dir is not None:
            snapshot_name = f"query_{query_idx:04d}.json"
            (snap_dir / snapshot_name).write_text(model_to_json(m_pess))
        record = QueryRecord(
            index=query_idx,
            policy=policy_to_json(query.policy, universe),
            initial_state=universe.atom_names(s0),
            novel=novel,
            unique_transitions=len(dataset),
            total_transitions=dataset.total(),
            executions=executions,
            score=score,
            elapsed=time.monotonic() - t0,
            snapshot=snapshot_name,
            failures=failures,
        )
        log.records.append(record)
        if out_path is not None:
            (out_path / "last_query.json").write_text(
                json.dumps(policy_to_json(query.policy, universe), indent=2, sort_keys=True) + "\n"
            )
        if config.progress:
            print(
                f"query {query_idx:4d}  novel={novel:3d}  |D|={len(dataset):5d}  "
                f"elapsed={record.elapsed:.2f}s"
            )
        if checkpoint_hook is not None:
            checkpoint_hook(query_idx, m_pess, log, dataset)

        x_i = sample_initial_state(
            outcomes, x_i, dataset, simulator, abstraction, config.horizon, init_rng
        )
        query_idx += 1

    log.capabilities = len(capabilities)
    log.wall_seconds = time.monotonic() - started
    if out_path is not None:
        (out_path / "final_model.json").write_text(model_to_json(m_pess))
        (out_path / "final_model.txt").write_text(model_to_text(m_pess))
        (out_path / "dataset.jsonl").write_text(dataset.to_jsonl(universe))
        (out_path / "runlog.jsonl").write_text(log.to_jsonl())
    return m_pess, log
