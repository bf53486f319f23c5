"""Simulator and scripted-agent machinery shared by the built-in environments.

Environment states are frozensets of ground-atom names; the abstraction
encodes them against the environment's universe. All stochasticity lives in
the simulator's RNG, which can be snapshotted and restored so reverting to a
previously encountered state reproduces trajectory suffixes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Callable, Mapping, Sequence

from ..abstraction import (
    AbstractState,
    AtomUniverse,
    Condition,
    LiteralConjunction,
    literal_string,
)
from ..model import CapabilityModel

EnvState = frozenset


@dataclass(frozen=True)
class ActionOutcome:
    prob: float
    add: frozenset[str]
    delete: frozenset[str]


@dataclass(frozen=True)
class ActionDef:
    """A primitive action: DNF precondition plus stochastic atom edits."""

    name: str
    precondition: Condition
    outcomes: tuple[ActionOutcome, ...]

    def __post_init__(self) -> None:
        total = sum(o.prob for o in self.outcomes)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"action {self.name}: outcome probabilities sum to {total}")


class AtomSimulator:
    """Stateful, seedable simulator over atom-set environment states."""

    def __init__(
        self,
        universe: AtomUniverse,
        reset_atoms: frozenset[str],
        actions: Sequence[ActionDef],
        seed: int | str = 0,
    ) -> None:
        self.universe = universe
        self._reset_state = frozenset(reset_atoms)
        self.actions: dict[str, ActionDef] = {a.name: a for a in sorted(actions, key=lambda a: a.name)}
        if len(self.actions) != len(actions):
            raise ValueError("duplicate action names")
        self._rng = Random(f"{seed}/sim")
        self._state = self._reset_state
        self._bits_cache: dict[frozenset[str], int] = {}

    @property
    def current(self) -> EnvState:
        return self._state

    def reset(self) -> EnvState:
        self._state = self._reset_state
        return self._state

    def revert(self, state: EnvState) -> None:
        self._state = frozenset(state)

    def _bits(self, atoms: frozenset[str]) -> int:
        got = self._bits_cache.get(atoms)
        if got is None:
            got = self.universe.mask_of(atoms)
            self._bits_cache[atoms] = got
        return got

    def applicable(self, action: str, state: EnvState | None = None) -> bool:
        atoms = self._state if state is None else frozenset(state)
        return self.actions[action].precondition.accepts_bits(self._bits(atoms))

    def available_actions(self, state: EnvState | None = None) -> list[str]:
        atoms = self._state if state is None else frozenset(state)
        bits = self._bits(atoms)
        return [n for n, a in self.actions.items() if a.precondition.accepts_bits(bits)]

    def step(self, action: str) -> EnvState:
        """Apply `action`; an inapplicable action leaves the state unchanged."""
        adef = self.actions[action]
        if not adef.precondition.accepts_bits(self._bits(self._state)):
            return self._state
        u = self._rng.random()
        acc = 0.0
        chosen = adef.outcomes[-1]
        for outcome in adef.outcomes:
            acc += outcome.prob
            if u < acc:
                chosen = outcome
                break
        self._state = frozenset(self._state - chosen.delete | chosen.add)
        return self._state

    def rng_state(self):
        return self._rng.getstate()

    def set_rng_state(self, state) -> None:
        self._rng.setstate(state)


class TableAgent:
    """Black-box agent driven by an intent-to-primitive lookup table.

    For each intent the table lists candidate primitives in priority order;
    the agent executes the first applicable one. If the intent already holds,
    or no candidate applies, it returns the trivial one-state trajectory.
    """

    def __init__(self, universe: AtomUniverse, table: Mapping[str, Sequence[str]]) -> None:
        self.universe = universe
        self.table: dict[str, tuple[str, ...]] = {k: tuple(v) for k, v in table.items()}

    def attempt(
        self,
        intent: LiteralConjunction,
        simulator: AtomSimulator,
        start: EnvState,
        horizon: int,
    ) -> list[EnvState]:
        if simulator.current != start:
            simulator.revert(start)
        traj = [start]
        bits = simulator._bits(frozenset(start))
        if intent.satisfied_by(bits) or horizon < 1:
            return traj
        key = literal_string(intent, self.universe)
        for action in self.table.get(key, ()):
            if simulator.applicable(action):
                traj.append(simulator.step(action))
                break
        return traj


@dataclass
class EnvironmentBundle:
    """Everything a learner needs for one (environment, agent) pair."""

    name: str
    universe: AtomUniverse
    simulator: AtomSimulator
    agent: TableAgent
    abstraction: Callable[[EnvState], AbstractState]
    ground_truth: CapabilityModel
    params: dict = field(default_factory=dict)


def make_abstraction(universe: AtomUniverse) -> Callable[[EnvState], AbstractState]:
    def abstraction(atoms: EnvState) -> AbstractState:
        return universe.encode(atoms)

    return abstraction


def clause(universe: AtomUniverse, pos: Sequence[str] = (), neg: Sequence[str] = ()) -> LiteralConjunction:
    return LiteralConjunction(universe.mask_of(pos), universe.mask_of(neg))


def dnf(universe: AtomUniverse, clauses: Sequence[LiteralConjunction], negated: bool = False) -> Condition:
    return Condition(tuple(clauses), universe.num_atoms, negated=negated)
