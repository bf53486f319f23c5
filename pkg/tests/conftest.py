"""Shared fixtures and independent oracle helpers for the test suite.

The oracles here deliberately avoid the library's bit-mask machinery:
states are frozensets of atom indices and everything is evaluated with set
operations, so agreement with the implementation is meaningful.
"""

from __future__ import annotations

from random import Random

import pytest

from caplearn.abstraction import (
    AbstractState,
    AtomUniverse,
    Condition,
    LiteralConjunction,
    build_universe,
)
from caplearn.dataset import EffectPair, Transition, TransitionDataset
from caplearn.model import Capability, ConditionalEffectRule


@pytest.fixture
def two_atom_universe() -> AtomUniverse:
    return build_universe({"clean": ["loc"]}, {"l1": "loc", "l2": "loc"})


@pytest.fixture
def vacuum_universe() -> AtomUniverse:
    return build_universe(
        predicates={
            "charged": ["agent"],
            "at": ["dock", "agent"],
            "has": ["agent", "tool"],
            "clean": ["room"],
        },
        objects={
            "robot": "agent",
            "vacuum": "tool",
            "charger": "dock",
            "l1": "room",
            "l2": "room",
        },
    )


def bits_to_index_set(bits: int) -> frozenset[int]:
    return frozenset(i for i in range(bits.bit_length()) if bits >> i & 1)


def naive_satisfies(state_indices: frozenset[int], condition: Condition) -> bool:
    """Set-based DNF evaluation, independent of the bit-mask implementation."""
    hit = False
    for cl in condition.clauses:
        pos = bits_to_index_set(cl.positives)
        neg = bits_to_index_set(cl.negatives)
        if pos <= state_indices and not (neg & state_indices):
            hit = True
            break
    return not hit if condition.negated else hit


def naive_apply(state_indices: frozenset[int], effect: EffectPair) -> frozenset[int]:
    return (state_indices - bits_to_index_set(effect.delete)) | bits_to_index_set(effect.add)


def random_state(universe: AtomUniverse, rng: Random) -> AbstractState:
    return AbstractState(rng.randrange(1 << universe.num_atoms), universe.num_atoms)


def random_clause(num_atoms: int, rng: Random) -> LiteralConjunction:
    pos = neg = 0
    for i in range(num_atoms):
        r = rng.random()
        if r < 0.25:
            pos |= 1 << i
        elif r < 0.5:
            neg |= 1 << i
    return LiteralConjunction(pos, neg)


def random_condition(num_atoms: int, rng: Random) -> Condition:
    clauses = tuple(random_clause(num_atoms, rng) for _ in range(rng.randint(0, 3)))
    return Condition(clauses, num_atoms, negated=rng.random() < 0.3)


def random_effect(num_atoms: int, rng: Random) -> EffectPair:
    add = delete = 0
    for i in range(num_atoms):
        r = rng.random()
        if r < 0.2:
            add |= 1 << i
        elif r < 0.4:
            delete |= 1 << i
    return EffectPair(add, delete)


def random_rule(num_atoms: int, rng: Random, max_effects: int = 3) -> ConditionalEffectRule:
    effects: dict[EffectPair, float] = {}
    for _ in range(rng.randint(1, max_effects)):
        effects[random_effect(num_atoms, rng)] = rng.random() + 0.05
    total = sum(effects.values())
    return ConditionalEffectRule(
        random_condition(num_atoms, rng),
        tuple((w / total, e) for e, w in effects.items()),
    )


def small_universe(num_atoms: int) -> AtomUniverse:
    return build_universe(
        {f"p{i}": ["x"] for i in range(num_atoms)}, {"a": "x"}
    )


def random_dataset(
    universe: AtomUniverse, rng: Random, caps: int = 3, transitions: int = 30
) -> tuple[TransitionDataset, list[Capability]]:
    ds = TransitionDataset()
    names = [f"cap{i}" for i in range(caps)]
    for _ in range(transitions):
        ds.add(
            Transition(
                random_state(universe, rng),
                rng.choice(names),
                random_state(universe, rng),
            ),
            rng.randint(1, 3),
        )
    capabilities = [
        Capability(n, LiteralConjunction(1, 0)) for n in names
    ]
    return ds, capabilities
