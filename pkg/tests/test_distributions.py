from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caplearn.abstraction import AbstractState, Condition, LiteralConjunction, satisfies
from caplearn.dataset import EffectPair
from caplearn.distributions import (
    StateDistribution,
    push_distribution,
    sd_reward,
    tv_distance,
)
from caplearn.model import ConditionalEffectRule, apply_effect
from .conftest import random_rule, random_state, small_universe


def dense_push_oracle(probs, rules, num_atoms):
    """Probability-space push over explicit per-state scans (no caching, no logs)."""
    out = {}
    for state, p in probs.items():
        fired = None
        for rule in rules:
            if satisfies(state, rule.condition):
                fired = rule
                break
        if fired is None:
            out[state] = out.get(state, 0.0) + p
        else:
            for q, eff in fired.effects:
                s2 = apply_effect(state, eff)
                out[s2] = out.get(s2, 0.0) + p * q
    return out


def random_distribution(universe, rng, max_support=6):
    support = {random_state(universe, rng) for _ in range(rng.randint(1, max_support))}
    weights = {s: rng.random() + 0.01 for s in support}
    total = sum(weights.values())
    return StateDistribution.from_probs({s: w / total for s, w in weights.items()})


class TestStateDistribution:
    def test_point_mass(self):
        s = AbstractState(0b1, 2)
        d = StateDistribution.point(s)
        assert d.mass(s) == 1.0
        assert d.support() == {s}

    def test_no_zero_mass_entries(self):
        s = AbstractState(0, 2)
        d = StateDistribution.from_probs({s: 1.0, AbstractState(1, 2): 0.0})
        assert d.support() == {s}

    def test_total_is_one_after_pushes(self):
        rng = Random("norm")
        u = small_universe(6)
        d = random_distribution(u, rng)
        for _ in range(30):
            d = push_distribution(d, (random_rule(u.num_atoms, rng),))
        assert abs(d.total() - 1.0) <= 1e-9


class TestPushDistribution:
    def test_no_rule_fires_is_identity(self):
        u = small_universe(3)
        s = u.encode(["p0(a)"])
        d = StateDistribution.point(s)
        rule = ConditionalEffectRule(
            Condition.never(3), ((1.0, EffectPair(0b10, 0)),)
        )
        out = push_distribution(d, (rule,))
        assert out.probs() == pytest.approx({s: 1.0})

    def test_three_outcome_rule_three_successors(self, vacuum_universe):
        u = vacuum_universe
        s = u.encode(["has(robot,vacuum)", "charged(robot)"])
        clean1 = u.mask_of(["clean(l1)"])
        charged = u.mask_of(["charged(robot)"])
        at = u.mask_of(["at(charger,robot)"])
        rule = ConditionalEffectRule(
            Condition((LiteralConjunction(u.mask_of(["has(robot,vacuum)"]), 0),), u.num_atoms),
            (
                (0.50, EffectPair(clean1, charged)),
                (0.25, EffectPair(clean1 | at, 0)),
                (0.25, EffectPair(0, charged)),
            ),
        )
        out = push_distribution(StateDistribution.point(s), (rule,))
        assert sorted(out.probs().values(), reverse=True) == pytest.approx([0.50, 0.25, 0.25])

    def test_partial_firing_preserves_unmatched_mass(self):
        u = small_universe(3)
        s1, s2 = u.encode(["p0(a)"]), u.encode(["p1(a)"])
        d = StateDistribution.from_probs({s1: 0.5, s2: 0.5})
        rule = ConditionalEffectRule(
            Condition((LiteralConjunction(u.mask_of(["p0(a)"]), 0),), 3),
            ((1.0, EffectPair(u.mask_of(["p2(a)"]), 0)),),
        )
        out = push_distribution(d, (rule,)).probs()
        assert out == pytest.approx(
            {apply_effect(s1, EffectPair(u.mask_of(["p2(a)"]), 0)): 0.5, s2: 0.5}
        )

    def test_matches_dense_oracle_on_random_instances(self):
        rng = Random("push-oracle-unit")
        u = small_universe(8)
        for _ in range(300):
            d = random_distribution(u, rng)
            rules = tuple(random_rule(u.num_atoms, rng) for _ in range(rng.randint(1, 3)))
            got = push_distribution(d, rules).probs()
            want = dense_push_oracle(d.probs(), rules, u.num_atoms)
            assert set(got) == {s for s, p in want.items() if p > 0}
            for s, p in want.items():
                assert abs(got.get(s, 0.0) - p) <= 1e-9


class TestTvDistance:
    def test_identical_distributions(self):
        s = AbstractState(1, 3)
        d = StateDistribution.from_probs({s: 0.4, AbstractState(2, 3): 0.6})
        assert tv_distance(d, d) == 0.0

    def test_disjoint_supports(self):
        d1 = StateDistribution.point(AbstractState(1, 3))
        d2 = StateDistribution.point(AbstractState(2, 3))
        assert tv_distance(d1, d2) == 1.0

    def test_worked_example_exact(self):
        a, b = AbstractState(1, 3), AbstractState(2, 3)
        d1 = StateDistribution.from_probs({a: 0.5, b: 0.5})
        d2 = StateDistribution.from_probs({a: 1.0})
        assert abs(tv_distance(d1, d2) - 0.5) <= 1e-12

    @given(st.integers(0, 100_000))
    @settings(max_examples=60, deadline=None)
    def test_metric_properties(self, seed):
        rng = Random(seed)
        u = small_universe(5)
        d1, d2, d3 = (random_distribution(u, rng) for _ in range(3))
        assert tv_distance(d1, d2) == pytest.approx(tv_distance(d2, d1))
        assert tv_distance(d1, d3) <= tv_distance(d1, d2) + tv_distance(d2, d3) + 1e-12
        assert 0.0 <= tv_distance(d1, d2) <= 1.0 + 1e-12
        assert (tv_distance(d1, d2) <= 1e-12) == (
            {s: round(p, 12) for s, p in d1.probs().items()}
            == {s: round(p, 12) for s, p in d2.probs().items()}
        )


class TestSdReward:
    def test_identical_supports_zero(self):
        a, b = AbstractState(1, 3), AbstractState(2, 3)
        d1 = StateDistribution.from_probs({a: 0.9, b: 0.1})
        d2 = StateDistribution.from_probs({a: 0.2, b: 0.8})
        assert sd_reward(d1, d2) == 0.0

    def test_disjoint_supports_one(self):
        d1 = StateDistribution.point(AbstractState(1, 3))
        d2 = StateDistribution.point(AbstractState(2, 3))
        assert sd_reward(d1, d2) == 1.0

    def test_worked_example(self):
        a, b, c = (AbstractState(i, 3) for i in (1, 2, 4))
        d1 = StateDistribution.from_probs({a: 0.5, b: 0.5})
        d2 = StateDistribution.from_probs({b: 0.5, c: 0.5})
        assert abs(sd_reward(d1, d2) - 0.5) <= 1e-12

    @given(st.integers(0, 100_000))
    @settings(max_examples=60, deadline=None)
    def test_zero_iff_equal_supports(self, seed):
        rng = Random(seed)
        u = small_universe(4)
        d1, d2 = random_distribution(u, rng), random_distribution(u, rng)
        assert (sd_reward(d1, d2) == 0.0) == (d1.support() == d2.support())
