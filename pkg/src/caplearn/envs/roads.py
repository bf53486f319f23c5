"""One-way road network with flat tires and consumable spare-tire pickups.

Driving any edge has an 80% chance of flattening the tire; a flat tire blocks
all driving until fixed, and a fix consumes the carried spare. Spares can be
picked up at stocked locations (each stock holds one). The road graph is a
lollipop (l1 feeds a 5-cycle), so l1 is unreachable from everywhere else.
"""

from __future__ import annotations

from ..abstraction import build_universe
from ..model import Capability, CapabilityModel, ConditionalEffectRule, capability_name, make_intent
from ..dataset import EffectPair
from .base import (
    ActionDef,
    ActionOutcome,
    AtomSimulator,
    EnvironmentBundle,
    TableAgent,
    clause,
    dnf,
    make_abstraction,
)

LOCATIONS = ["l1", "l2", "l3", "l4", "l5", "l6"]
EDGES = [("l1", "l2"), ("l2", "l3"), ("l3", "l4"), ("l4", "l5"), ("l5", "l6"), ("l6", "l2")]
SPARE_LOCATIONS = ["l2", "l5"]
FLAT = "flat(tire)"
CARRYING = "carrying(spare)"
FLAT_CHANCE = 0.8


def _at(loc: str) -> str:
    return f"at({loc})"


def _spare(loc: str) -> str:
    return f"spare_at({loc})"


def road_world(seed: int | str = 0) -> EnvironmentBundle:
    universe = build_universe(
        predicates={
            "at": ["location"],
            "flat": ["tire"],
            "spare_at": ["location"],
            "carrying": ["spare"],
        },
        objects={
            **{l: "location" for l in LOCATIONS},
            "tire": "tire",
            "spare": "spare",
        },
    )
    m = universe.mask_of

    actions = []
    for src, dst in EDGES:
        actions.append(
            ActionDef(
                f"drive_{src}_{dst}",
                dnf(universe, [clause(universe, pos=[_at(src)], neg=[FLAT, _at(dst)])]),
                (
                    ActionOutcome(FLAT_CHANCE, frozenset({_at(dst), FLAT}), frozenset({_at(src)})),
                    ActionOutcome(1 - FLAT_CHANCE, frozenset({_at(dst)}), frozenset({_at(src)})),
                ),
            )
        )
    for loc in SPARE_LOCATIONS:
        actions.append(
            ActionDef(
                f"pickup_spare_{loc}",
                dnf(universe, [clause(universe, pos=[_at(loc), _spare(loc)], neg=[CARRYING])]),
                (ActionOutcome(1.0, frozenset({CARRYING}), frozenset({_spare(loc)})),),
            )
        )
    actions.append(
        ActionDef(
            "fix_tire",
            dnf(universe, [clause(universe, pos=[FLAT, CARRYING])]),
            (ActionOutcome(1.0, frozenset(), frozenset({FLAT, CARRYING})),),
        )
    )

    reset = frozenset({_at("l1")} | {_spare(l) for l in SPARE_LOCATIONS})
    simulator = AtomSimulator(universe, reset, actions, seed)

    table = {
        f"!{FLAT}": ("fix_tire",),
        CARRYING: tuple(f"pickup_spare_{l}" for l in SPARE_LOCATIONS),
    }
    for dst in LOCATIONS:
        drives = tuple(f"drive_{src}_{d}" for src, d in EDGES if d == dst)
        if drives:
            table[_at(dst)] = drives
    agent = TableAgent(universe, table)

    caps = {}
    for dst in LOCATIONS:
        incoming = [src for src, d in EDGES if d == dst]
        if not incoming:
            continue
        intent = make_intent(_at(dst), universe)
        acting_clauses = [
            clause(universe, pos=[_at(src)], neg=[FLAT, _at(dst)]) for src in incoming
        ]
        rules = [
            ConditionalEffectRule(
                dnf(universe, [cl]),
                (
                    (FLAT_CHANCE, EffectPair(m([_at(dst), FLAT]), m([_at(src)]))),
                    (1 - FLAT_CHANCE, EffectPair(m([_at(dst)]), m([_at(src)]))),
                ),
            )
            for cl, src in zip(acting_clauses, incoming)
        ]
        rules.append(
            ConditionalEffectRule(dnf(universe, acting_clauses, negated=True), ((1.0, EffectPair(0, 0)),))
        )
        name = capability_name(intent, universe)
        caps[name] = Capability(name, intent, tuple(rules))

    pick_intent = make_intent(CARRYING, universe)
    pick_clauses = [
        clause(universe, pos=[_at(l), _spare(l)], neg=[CARRYING]) for l in SPARE_LOCATIONS
    ]
    pick_rules = [
        ConditionalEffectRule(
            dnf(universe, [cl]), ((1.0, EffectPair(m([CARRYING]), m([_spare(l)]))),)
        )
        for cl, l in zip(pick_clauses, SPARE_LOCATIONS)
    ]
    pick_rules.append(
        ConditionalEffectRule(dnf(universe, pick_clauses, negated=True), ((1.0, EffectPair(0, 0)),))
    )
    name = capability_name(pick_intent, universe)
    caps[name] = Capability(name, pick_intent, tuple(pick_rules))

    fix_intent = make_intent(f"!{FLAT}", universe)
    fix_clause = [clause(universe, pos=[FLAT, CARRYING])]
    name = capability_name(fix_intent, universe)
    caps[name] = Capability(
        name,
        fix_intent,
        (
            ConditionalEffectRule(
                dnf(universe, fix_clause), ((1.0, EffectPair(0, m([FLAT, CARRYING]))),)
            ),
            ConditionalEffectRule(
                dnf(universe, fix_clause, negated=True), ((1.0, EffectPair(0, 0)),)
            ),
        ),
    )

    ground_truth = CapabilityModel(universe, caps, "ground-truth")
    return EnvironmentBundle(
        "roads", universe, simulator, agent, make_abstraction(universe), ground_truth,
        params={"edges": EDGES, "spares": SPARE_LOCATIONS},
    )
