"""The capability-transition multiset and trajectory-to-transition conversion."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .abstraction import AbstractState, AbstractionFn, AtomUniverse


@dataclass(frozen=True)
class Transition:
    """One observed abstract transition under a capability."""

    s: AbstractState
    c: str
    s_next: AbstractState


@dataclass(frozen=True)
class EffectPair:
    """Atoms gained and atoms lost across a transition, as bit masks."""

    add: int
    delete: int

    def __post_init__(self) -> None:
        if self.add & self.delete:
            raise ValueError("effect adds and deletes the same atom")

    @property
    def is_noop(self) -> bool:
        return self.add == 0 and self.delete == 0


def effects_of(transition: Transition) -> EffectPair:
    """add = atoms that became true, delete = atoms that became false."""
    s, s2 = transition.s.bits, transition.s_next.bits
    return EffectPair(add=s2 & ~s, delete=s & ~s2)


def abstract_trajectory(
    env_trajectory: Sequence[object],
    abstraction: AbstractionFn,
    theta: int | None = None,
) -> list[AbstractState]:
    """Abstract a trajectory element-wise, collapse duplicates, truncate at theta.

    `theta` bounds the number of distinct abstract states kept (None for
    unbounded); theta=2 keeps one abstract change. The first element is always
    the abstraction of the initial environment state.
    """
    if not env_trajectory:
        raise ValueError("trajectory must contain at least the start state")
    if theta is not None and theta < 1:
        raise ValueError("theta must be >= 1 or None")
    out: list[AbstractState] = []
    for x in env_trajectory:
        s = abstraction(x)
        if not out or s != out[-1]:
            out.append(s)
            if theta is not None and len(out) == theta:
                break
    return out


class TransitionDataset:
    """Multiset of (s, c, s') triples with per-capability and per-state indexes."""

    def __init__(self) -> None:
        self.counts: dict[Transition, int] = {}
        self._by_cap: dict[str, set[Transition]] = {}
        self._by_cap_state: dict[tuple[str, AbstractState], set[Transition]] = {}
        self._state_counts: dict[AbstractState, int] = {}

    def __len__(self) -> int:
        return len(self.counts)

    def total(self) -> int:
        return sum(self.counts.values())

    def add(self, transition: Transition, count: int = 1) -> bool:
        """Insert `count` occurrences; returns True iff the triple was unseen."""
        if count < 1:
            raise ValueError("count must be positive")
        novel = transition not in self.counts
        self.counts[transition] = self.counts.get(transition, 0) + count
        if novel:
            self._by_cap.setdefault(transition.c, set()).add(transition)
            self._by_cap_state.setdefault((transition.c, transition.s), set()).add(transition)
        self._state_counts[transition.s] = self._state_counts.get(transition.s, 0) + count
        return novel

    def record(
        self,
        env_trajectory: Sequence[object],
        capability: str,
        abstraction: AbstractionFn,
        theta: int | None = None,
    ) -> tuple[Transition, bool]:
        """Record the endpoint transition of a capability execution."""
        seq = abstract_trajectory(env_trajectory, abstraction, theta)
        t = Transition(seq[0], capability, seq[-1])
        return t, self.add(t)

    def transitions_for(self, capability: str) -> set[Transition]:
        return self._by_cap.get(capability, set())

    def transitions_from(self, capability: str, state: AbstractState) -> set[Transition]:
        return self._by_cap_state.get((capability, state), set())

    def effect_set(self, capability: str, state: AbstractState) -> frozenset[EffectPair]:
        return frozenset(effects_of(t) for t in self.transitions_from(capability, state))

    def observed_states(self, capability: str) -> set[AbstractState]:
        return {t.s for t in self._by_cap.get(capability, set())}

    def capabilities(self) -> list[str]:
        return sorted(self._by_cap)

    def state_visit_count(self, state: AbstractState) -> int:
        """Total recorded transitions that start in `state`, across capabilities."""
        return self._state_counts.get(state, 0)

    def merge(self, other: "TransitionDataset") -> None:
        for t, n in other.counts.items():
            self.add(t, n)

    # -- JSON-lines persistence ------------------------------------------

    def to_jsonl(self, universe: AtomUniverse) -> str:
        lines = []
        for t in sorted(
            self.counts, key=lambda t: (t.c, t.s.bits, t.s_next.bits)
        ):
            lines.append(
                json.dumps(
                    {
                        "s": universe.atom_names(t.s),
                        "c": t.c,
                        "s_next": universe.atom_names(t.s_next),
                        "count": self.counts[t],
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    def save(self, path: str | Path, universe: AtomUniverse) -> None:
        Path(path).write_text(self.to_jsonl(universe))

    @classmethod
    def from_jsonl(cls, text: str, universe: AtomUniverse) -> "TransitionDataset":
        ds = cls()
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            t = Transition(
                universe.encode(rec["s"]), rec["c"], universe.encode(rec["s_next"])
            )
            ds.add(t, rec["count"])
        return ds

    @classmethod
    def load(cls, path: str | Path, universe: AtomUniverse) -> "TransitionDataset":
        return cls.from_jsonl(Path(path).read_text(), universe)


def unique_transitions(datasets: Iterable[TransitionDataset]) -> set[Transition]:
    out: set[Transition] = set()
    for ds in datasets:
        out.update(ds.counts)
    return out
