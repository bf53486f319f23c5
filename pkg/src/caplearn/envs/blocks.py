"""Stochastic blocksworld: pick/place with a slippery gripper.

Stacking drops the held block back onto the table with the configured slip
probability; picking and putting down are deterministic. The scripted agent
acts only when a single primitive directly serves the intent.
"""

from __future__ import annotations

from itertools import permutations

from ..abstraction import ConfigurationError, build_universe
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


def stochastic_blocks(n_blocks: int = 3, slip: float = 0.25, seed: int | str = 0) -> EnvironmentBundle:
    if not 3 <= n_blocks <= 5:
        raise ConfigurationError(f"n_blocks must be in [3, 5], got {n_blocks}")
    if not 0.0 <= slip < 1.0:
        raise ConfigurationError(f"slip must be in [0, 1), got {slip}")
    blocks = [f"b{i}" for i in range(1, n_blocks + 1)]
    universe = build_universe(
        predicates={
            "on": ["block", "block"],
            "ontable": ["block"],
            "clear": ["block"],
            "holding": ["block"],
        },
        objects={b: "block" for b in blocks},
    )
    m = universe.mask_of
    holding_all = [f"holding({b})" for b in blocks]

    def on(a, b):
        return f"on({a},{b})"

    def ontable(a):
        return f"ontable({a})"

    def clear_(a):
        return f"clear({a})"

    def holding(a):
        return f"holding({a})"

    actions = []
    for a in blocks:
        actions.append(
            ActionDef(
                f"pickup_{a}",
                dnf(universe, [clause(universe, pos=[ontable(a), clear_(a)], neg=holding_all)]),
                (ActionOutcome(1.0, frozenset({holding(a)}), frozenset({ontable(a), clear_(a)})),),
            )
        )
        actions.append(
            ActionDef(
                f"putdown_{a}",
                dnf(universe, [clause(universe, pos=[holding(a)])]),
                (ActionOutcome(1.0, frozenset({ontable(a), clear_(a)}), frozenset({holding(a)})),),
            )
        )
    for a, b in permutations(blocks, 2):
        actions.append(
            ActionDef(
                f"unstack_{a}_{b}",
                dnf(universe, [clause(universe, pos=[on(a, b), clear_(a)], neg=holding_all)]),
                (
                    ActionOutcome(
                        1.0, frozenset({holding(a), clear_(b)}), frozenset({on(a, b), clear_(a)})
                    ),
                ),
            )
        )
        stack_outcomes = [
            ActionOutcome(
                1.0 - slip,
                frozenset({on(a, b), clear_(a)}),
                frozenset({holding(a), clear_(b)}),
            )
        ]
        if slip > 0.0:
            stack_outcomes.append(
                ActionOutcome(slip, frozenset({ontable(a), clear_(a)}), frozenset({holding(a)}))
            )
        actions.append(
            ActionDef(
                f"stack_{a}_{b}",
                dnf(universe, [clause(universe, pos=[holding(a), clear_(b)])]),
                tuple(stack_outcomes),
            )
        )

    reset = frozenset({ontable(a) for a in blocks} | {clear_(a) for a in blocks})
    simulator = AtomSimulator(universe, reset, actions, seed)

    table = {}
    for a in blocks:
        table[holding(a)] = tuple([f"pickup_{a}"] + [f"unstack_{a}_{b}" for b in blocks if b != a])
        table[ontable(a)] = (f"putdown_{a}",)
    for a, b in permutations(blocks, 2):
        table[on(a, b)] = (f"stack_{a}_{b}",)
    agent = TableAgent(universe, table)

    caps = {}
    for a in blocks:
        intent = make_intent(holding(a), universe)
        from_table = clause(universe, pos=[ontable(a), clear_(a)], neg=holding_all)
        rules = [
            ConditionalEffectRule(
                dnf(universe, [from_table]),
                ((1.0, EffectPair(m([holding(a)]), m([ontable(a), clear_(a)]))),),
            )
        ]
        acting = [from_table]
        for b in blocks:
            if b == a:
                continue
            cl = clause(universe, pos=[on(a, b), clear_(a)], neg=holding_all)
            acting.append(cl)
            rules.append(
                ConditionalEffectRule(
                    dnf(universe, [cl]),
                    ((1.0, EffectPair(m([holding(a), clear_(b)]), m([on(a, b), clear_(a)]))),),
                )
            )
        rules.append(
            ConditionalEffectRule(dnf(universe, acting, negated=True), ((1.0, EffectPair(0, 0)),))
        )
        caps[capability_name(intent, universe)] = Capability(
            capability_name(intent, universe), intent, tuple(rules)
        )

        intent_t = make_intent(ontable(a), universe)
        hold_cl = clause(universe, pos=[holding(a)], neg=[ontable(a)])
        caps[capability_name(intent_t, universe)] = Capability(
            capability_name(intent_t, universe),
            intent_t,
            (
                ConditionalEffectRule(
                    dnf(universe, [hold_cl]),
                    ((1.0, EffectPair(m([ontable(a), clear_(a)]), m([holding(a)]))),),
                ),
                ConditionalEffectRule(
                    dnf(universe, [hold_cl], negated=True), ((1.0, EffectPair(0, 0)),)
                ),
            ),
        )

    for a, b in permutations(blocks, 2):
        intent = make_intent(on(a, b), universe)
        cl = clause(universe, pos=[holding(a), clear_(b)], neg=[on(a, b)])
        effects = [
            (
                1.0 - slip,
                EffectPair(m([on(a, b), clear_(a)]), m([holding(a), clear_(b)])),
            )
        ]
        if slip > 0.0:
            effects.append((slip, EffectPair(m([ontable(a), clear_(a)]), m([holding(a)]))))
        caps[capability_name(intent, universe)] = Capability(
            capability_name(intent, universe),
            intent,
            (
                ConditionalEffectRule(dnf(universe, [cl]), tuple(effects)),
                ConditionalEffectRule(dnf(universe, [cl], negated=True), ((1.0, EffectPair(0, 0)),)),
            ),
        )

    ground_truth = CapabilityModel(universe, caps, "ground-truth")
    return EnvironmentBundle(
        "blocks", universe, simulator, agent, make_abstraction(universe), ground_truth,
        params={"n_blocks": n_blocks, "slip": slip},
    )
