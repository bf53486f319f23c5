"""Capability models: conditional probabilistic effect rules built from data.

A capability model pairs each capability with rules ``(condition, effects)``
where effects is a probability distribution over add/delete masks. Learned
models come in two flavors built from the same state partition of the
dataset: the pessimistic model accepts exactly the observed states of each
partition, the optimistic model accepts every state not claimed by another
partition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .abstraction import (
    AbstractState,
    AtomUniverse,
    Condition,
    LiteralConjunction,
    literal_of,
    literal_string,
    parse_literal,
    satisfies,
)
from .dataset import EffectPair, Transition, TransitionDataset, effects_of

PROB_TOL = 1e-9


def apply_effect(state: AbstractState, effect: EffectPair) -> AbstractState:
    """Clear the deleted atoms, then set the added atoms."""
    return AbstractState(state.bits & ~effect.delete | effect.add, state.num_atoms)


@dataclass(frozen=True)
class ConditionalEffectRule:
    """One condition with a normalized distribution over effect pairs."""

    condition: Condition
    effects: tuple[tuple[float, EffectPair], ...]

    def __post_init__(self) -> None:
        total = sum(p for p, _ in self.effects)
        if self.effects and abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"effect probabilities sum to {total}, not 1")
        if any(p <= 0.0 or p > 1.0 for p, _ in self.effects):
            raise ValueError("effect probabilities must lie in (0, 1]")
        if len({e for _, e in self.effects}) != len(self.effects):
            raise ValueError("duplicate effect pair within one rule")


@dataclass(frozen=True)
class Capability:
    """A named intent plus the conditional effect rules modeling it."""

    name: str
    intent: LiteralConjunction
    rules: tuple[ConditionalEffectRule, ...] = ()


class CapabilityModel:
    """Immutable bundle of capabilities over one universe.

    `flavor` is "pessimistic", "optimistic", or "ground-truth". Prediction
    results are memoized; models must not be mutated after construction.
    """

    def __init__(
        self,
        universe: AtomUniverse,
        capabilities: Mapping[str, Capability],
        flavor: str,
    ) -> None:
        self.universe = universe
        self.capabilities: dict[str, Capability] = dict(capabilities)
        self.flavor = flavor
        self._predict_cache: dict[tuple[str, AbstractState], dict[AbstractState, float]] = {}

    def capability_names(self) -> list[str]:
        return sorted(self.capabilities)

    def rules_for(self, name: str) -> tuple[ConditionalEffectRule, ...]:
        cap = self.capabilities.get(name)
        return cap.rules if cap is not None else ()


@dataclass(frozen=True)
class Partition:
    """States sharing one observed effect set, with aggregated effect counts."""

    states: frozenset[AbstractState]
    effects: frozenset[EffectPair]
    effect_counts: tuple[tuple[EffectPair, int], ...]

    @property
    def total_count(self) -> int:
        return sum(n for _, n in self.effect_counts)


def _effect_key(e: EffectPair) -> tuple[int, int]:
    return (e.add, e.delete)


def partition(dataset: TransitionDataset, capability: str) -> list[Partition]:
    """Group observed initial states of `capability` by equal effect sets.

    Returned in canonical order (by sorted effect keys, then member states)
    so downstream rule lists are deterministic.
    """
    groups: dict[frozenset[EffectPair], set[AbstractState]] = {}
    for s in dataset.observed_states(capability):
        groups.setdefault(dataset.effect_set(capability, s), set()).add(s)

    parts = []
    for effs, states in groups.items():
        counts: dict[EffectPair, int] = {e: 0 for e in effs}
        for s in states:
            for t in dataset.transitions_from(capability, s):
                counts[effects_of(t)] += dataset.counts[t]
        ordered = tuple(sorted(counts.items(), key=lambda kv: _effect_key(kv[0])))
        parts.append(Partition(frozenset(states), effs, ordered))
    # No-op-only partitions sort last so that prediction for states accepted
    # by several optimistic conditions generalizes an informative partition.
    parts.sort(
        key=lambda p: (
            all(e.is_noop for e in p.effects),
            sorted(_effect_key(e) for e in p.effects),
            min(s.bits for s in p.states),
        )
    )
    return parts


def pessimistic_condition(part: Partition, universe: AtomUniverse) -> Condition:
    """Disjunction of the full literal representations of the member states."""
    clauses = tuple(
        literal_of(s) for s in sorted(part.states, key=lambda s: s.bits)
    )
    return Condition(clauses, universe.num_atoms, negated=False)


def optimistic_condition(
    all_parts: Sequence[Partition], target: Partition, universe: AtomUniverse
) -> Condition:
    """Negated disjunction of every state observed in the other partitions."""
    other_states: list[AbstractState] = []
    for p in all_parts:
        if p is target or p == target:
            continue
        other_states.extend(p.states)
    clauses = tuple(literal_of(s) for s in sorted(set(other_states), key=lambda s: s.bits))
    return Condition(clauses, universe.num_atoms, negated=True)


def _mle_effects(part: Partition) -> tuple[tuple[float, EffectPair], ...]:
    total = part.total_count
    return tuple((n / total, e) for e, n in part.effect_counts)


def build_models(
    capabilities: Iterable[Capability],
    dataset: TransitionDataset,
    universe: AtomUniverse,
) -> tuple[CapabilityModel, CapabilityModel]:
    """Build the pessimistic/optimistic model pair from the dataset.

    Capabilities without data get an empty rule list in both models; by the
    self-loop convention of predict() they then predict no change.
    """
    pess: dict[str, Capability] = {}
    opt: dict[str, Capability] = {}
    for cap in capabilities:
        parts = partition(dataset, cap.name)
        pess_rules = []
        opt_rules = []
        for part in parts:
            effects = _mle_effects(part)
            pess_rules.append(
                ConditionalEffectRule(pessimistic_condition(part, universe), effects)
            )
            opt_rules.append(
                ConditionalEffectRule(optimistic_condition(parts, part, universe), effects)
            )
        pess[cap.name] = Capability(cap.name, cap.intent, tuple(pess_rules))
        opt[cap.name] = Capability(cap.name, cap.intent, tuple(opt_rules))
    return (
        CapabilityModel(universe, pess, "pessimistic"),
        CapabilityModel(universe, opt, "optimistic"),
    )


def entails(model: CapabilityModel, transition: Transition) -> bool:
    """Whether some rule's condition accepts s and some effect maps s to s'."""
    for rule in model.rules_for(transition.c):
        if not satisfies(transition.s, rule.condition):
            continue
        for _, eff in rule.effects:
            if apply_effect(transition.s, eff) == transition.s_next:
                return True
    return False


def predict(
    model: CapabilityModel, state: AbstractState, capability: str
) -> dict[AbstractState, float]:
    """Successor distribution for executing `capability` in `state`.

    The first rule whose condition accepts the state fires; its effect masses
    are summed per successor. With no accepting rule the model predicts no
    change (point mass on `state`).
    """
    key = (capability, state)
    cached = model._predict_cache.get(key)
    if cached is not None:
        return cached
    dist: dict[AbstractState, float] = {}
    for rule in model.rules_for(capability):
        if satisfies(state, rule.condition):
            for p, eff in rule.effects:
                s2 = apply_effect(state, eff)
                dist[s2] = dist.get(s2, 0.0) + p
            break
    if not dist:
        dist = {state: 1.0}
    model._predict_cache[key] = dist
    return dist


def entailed_successors(
    model: CapabilityModel, state: AbstractState, capability: str
) -> set[AbstractState]:
    """Successors reachable through any accepting rule (entailment support)."""
    out: set[AbstractState] = set()
    for rule in model.rules_for(capability):
        if satisfies(state, rule.condition):
            out.update(apply_effect(state, eff) for _, eff in rule.effects)
    return out


def equivalent(
    model1: CapabilityModel,
    model2: CapabilityModel,
    states: Iterable[AbstractState],
) -> bool:
    """Functional equivalence: entailment agrees on every checked transition.

    For each state in `states` and each capability known to either model,
    successors range over the union of both models' entailment supports.
    Transitions outside that union are entailed by neither model, so they
    cannot disagree.
    """
    caps = sorted(set(model1.capabilities) | set(model2.capabilities))
    for s in states:
        for c in caps:
            succs = entailed_successors(model1, s, c) | entailed_successors(model2, s, c)
            for s2 in succs:
                t = Transition(s, c, s2)
                if entails(model1, t) != entails(model2, t):
                    return False
    return True


# -- serialization ---------------------------------------------------------


def _condition_to_json(cond: Condition, universe: AtomUniverse) -> dict:
    return {
        "negated": cond.negated,
        "clauses": [
            {
                "pos": [str(universe.atoms[i]) for i in range(universe.num_atoms) if cl.positives >> i & 1],
                "neg": [str(universe.atoms[i]) for i in range(universe.num_atoms) if cl.negatives >> i & 1],
            }
            for cl in cond.clauses
        ],
    }


def _condition_from_json(data: dict, universe: AtomUniverse) -> Condition:
    clauses = tuple(
        LiteralConjunction(universe.mask_of(cl["pos"]), universe.mask_of(cl["neg"]))
        for cl in data["clauses"]
    )
    return Condition(clauses, universe.num_atoms, negated=bool(data["negated"]))


def model_to_json(model: CapabilityModel) -> str:
    u = model.universe
    caps = []
    for name in sorted(model.capabilities):
        cap = model.capabilities[name]
        caps.append(
            {
                "name": cap.name,
                "intent": {
                    "pos": [str(u.atoms[i]) for i in range(u.num_atoms) if cap.intent.positives >> i & 1],
                    "neg": [str(u.atoms[i]) for i in range(u.num_atoms) if cap.intent.negatives >> i & 1],
                },
                "rules": [
                    {
                        "condition": _condition_to_json(r.condition, u),
                        "effects": [
                            {
                                "p": p,
                                "add": [str(u.atoms[i]) for i in range(u.num_atoms) if e.add >> i & 1],
                                "del": [str(u.atoms[i]) for i in range(u.num_atoms) if e.delete >> i & 1],
                            }
                            for p, e in r.effects
                        ],
                    }
                    for r in cap.rules
                ],
            }
        )
    doc = {
        "flavor": model.flavor,
        "universe": {
            "predicates": {n: list(t) for n, t in sorted(u.predicates.items())},
            "objects": dict(sorted(u.objects.items())),
        },
        "capabilities": caps,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def model_from_json(text: str, universe: AtomUniverse | None = None) -> CapabilityModel:
    doc = json.loads(text)
    if universe is None:
        udoc = doc["universe"]
        universe = AtomUniverse(udoc["predicates"], udoc["objects"])
    caps: dict[str, Capability] = {}
    for cdoc in doc["capabilities"]:
        intent = LiteralConjunction(
            universe.mask_of(cdoc["intent"]["pos"]), universe.mask_of(cdoc["intent"]["neg"])
        )
        rules = tuple(
            ConditionalEffectRule(
                _condition_from_json(r["condition"], universe),
                tuple(
                    (
                        eff["p"],
                        EffectPair(universe.mask_of(eff["add"]), universe.mask_of(eff["del"])),
                    )
                    for eff in r["effects"]
                ),
            )
            for r in cdoc["rules"]
        )
        caps[cdoc["name"]] = Capability(cdoc["name"], intent, rules)
    return CapabilityModel(universe, caps, doc.get("flavor", "ground-truth"))


def save_model(model: CapabilityModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model))


def load_model(path: str | Path, universe: AtomUniverse | None = None) -> CapabilityModel:
    return model_from_json(Path(path).read_text(), universe)


def _effect_string(e: EffectPair, universe: AtomUniverse) -> str:
    parts = []
    for i, atom in enumerate(universe.atoms):
        if e.add >> i & 1:
            parts.append(str(atom))
        elif e.delete >> i & 1:
            parts.append(f"!{atom}")
    return " & ".join(parts) if parts else "(no change)"


def _condition_string(cond: Condition, universe: AtomUniverse) -> str:
    if not cond.clauses:
        return "true" if cond.negated else "false"
    body = " | ".join(f"({literal_string(cl, universe)})" for cl in cond.clauses)
    return f"not[{body}]" if cond.negated else body


def model_to_text(model: CapabilityModel) -> str:
    """Human-readable rendering: name, intent, then each rule's condition/effects."""
    u = model.universe
    out = [f"# {model.flavor} capability model over {u.num_atoms} atoms", ""]
    for name in sorted(model.capabilities):
        cap = model.capabilities[name]
        out.append(f"Capability Name: {cap.name}")
        out.append(f"Intent: {literal_string(cap.intent, u)}")
        if not cap.rules:
            out.append("  (no rules learned)")
        for k, rule in enumerate(cap.rules, start=1):
            out.append(f"Conditional Effect r{k}:")
            out.append(f"  Condition: {_condition_string(rule.condition, u)}")
            out.append("  Effects:")
            for p, e in rule.effects:
                out.append(f"    {p:.4f}: {_effect_string(e, u)}")
        out.append("")
    return "\n".join(out)


def make_intent(text: str, universe: AtomUniverse) -> LiteralConjunction:
    """Parse an intent like ``clean(l1)`` or ``!charged(robot)``."""
    return parse_literal(text, universe)


def capability_name(intent: LiteralConjunction, universe: AtomUniverse) -> str:
    """Canonical capability id for an intent, e.g. ``achieve__clean(l1)``."""
    return f"achieve__{literal_string(intent, universe)}"
