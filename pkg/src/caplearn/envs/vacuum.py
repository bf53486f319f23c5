"""Vacuum-cleaning robot: two rooms, a charger dock, and a stochastic cleaner.

The clean capability fires only with the vacuum in hand and either charge or
dock contact, and then has three outcomes: clean and drain the battery (0.50),
clean while ending up on the dock (0.25), or just drain the battery (0.25).
"""

from __future__ import annotations

from ..abstraction import build_universe
from ..model import Capability, CapabilityModel, ConditionalEffectRule, make_intent, capability_name
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

CHARGED = "charged(robot)"
AT = "at(charger,robot)"
HAS = "has(robot,vacuum)"


def _clean_action(universe, room: str) -> ActionDef:
    target = f"clean({room})"
    pre = dnf(
        universe,
        [
            clause(universe, pos=[HAS, CHARGED], neg=[target]),
            clause(universe, pos=[HAS, AT], neg=[target]),
        ],
    )
    return ActionDef(
        f"clean_{room}",
        pre,
        (
            ActionOutcome(0.50, frozenset({target}), frozenset({CHARGED})),
            ActionOutcome(0.25, frozenset({target, AT}), frozenset()),
            ActionOutcome(0.25, frozenset(), frozenset({CHARGED})),
        ),
    )


def _clean_capability(universe, room: str) -> Capability:
    target = f"clean({room})"
    acting = [
        clause(universe, pos=[HAS, CHARGED], neg=[target]),
        clause(universe, pos=[HAS, AT], neg=[target]),
    ]
    m = universe.mask_of
    rule = ConditionalEffectRule(
        dnf(universe, acting),
        (
            (0.50, EffectPair(m([target]), m([CHARGED]))),
            (0.25, EffectPair(m([target, AT]), 0)),
            (0.25, EffectPair(0, m([CHARGED]))),
        ),
    )
    noop = ConditionalEffectRule(dnf(universe, acting, negated=True), ((1.0, EffectPair(0, 0)),))
    intent = make_intent(target, universe)
    return Capability(capability_name(intent, universe), intent, (rule, noop))


def vacuum_world(seed: int | str = 0) -> EnvironmentBundle:
    universe = build_universe(
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
    m = universe.mask_of

    actions = [
        ActionDef(
            "grab",
            dnf(universe, [clause(universe, neg=[HAS])]),
            (ActionOutcome(1.0, frozenset({HAS}), frozenset()),),
        ),
        ActionDef(
            "dock",
            dnf(universe, [clause(universe, neg=[AT])]),
            (ActionOutcome(1.0, frozenset({AT}), frozenset()),),
        ),
        ActionDef(
            "undock",
            dnf(universe, [clause(universe, pos=[AT])]),
            (ActionOutcome(1.0, frozenset(), frozenset({AT})),),
        ),
        ActionDef(
            "dock_and_charge",
            dnf(universe, [clause(universe, neg=[CHARGED])]),
            (ActionOutcome(1.0, frozenset({CHARGED, AT}), frozenset()),),
        ),
        # Battery drains when idling off-dock; keeps discharge (and hence
        # recharge) reachable for random walks even after both rooms are clean.
        ActionDef(
            "drain",
            dnf(universe, [clause(universe, pos=[CHARGED], neg=[AT])]),
            (ActionOutcome(1.0, frozenset(), frozenset({CHARGED})),),
        ),
        _clean_action(universe, "l1"),
        _clean_action(universe, "l2"),
    ]

    simulator = AtomSimulator(universe, frozenset({CHARGED}), actions, seed)
    agent = TableAgent(
        universe,
        {
            HAS: ("grab",),
            AT: ("dock",),
            f"!{AT}": ("undock",),
            CHARGED: ("dock_and_charge",),
            "clean(l1)": ("clean_l1",),
            "clean(l2)": ("clean_l2",),
        },
    )

    caps = {}

    def declare(cap: Capability) -> None:
        caps[cap.name] = cap

    always = dnf(universe, [clause(universe)])
    for intent_str, add, delete in [
        (HAS, m([HAS]), 0),
        (AT, m([AT]), 0),
        (f"!{AT}", 0, m([AT])),
    ]:
        intent = make_intent(intent_str, universe)
        declare(
            Capability(
                capability_name(intent, universe),
                intent,
                (ConditionalEffectRule(always, ((1.0, EffectPair(add, delete)),)),),
            )
        )

    charge_intent = make_intent(CHARGED, universe)
    uncharged = [clause(universe, neg=[CHARGED])]
    declare(
        Capability(
            capability_name(charge_intent, universe),
            charge_intent,
            (
                ConditionalEffectRule(
                    dnf(universe, uncharged), ((1.0, EffectPair(m([CHARGED, AT]), 0)),)
                ),
                ConditionalEffectRule(
                    dnf(universe, uncharged, negated=True), ((1.0, EffectPair(0, 0)),)
                ),
            ),
        )
    )
    declare(_clean_capability(universe, "l1"))
    declare(_clean_capability(universe, "l2"))

    ground_truth = CapabilityModel(universe, caps, "ground-truth")
    return EnvironmentBundle(
        "vacuum", universe, simulator, agent, make_abstraction(universe), ground_truth
    )
