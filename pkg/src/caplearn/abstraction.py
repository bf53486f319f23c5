"""Ground-atom universes, bit-vector abstract states, and literal conditions.

An abstract state is an integer bitset over a fixed, canonically ordered
universe of well-typed ground atoms. Conditions are disjunctions of literal
conjunctions (or the negation of one such disjunction), each clause stored as
a pair of positive/negative bit masks so satisfaction checks reduce to two
bitwise operations per clause.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence


class ConfigurationError(ValueError):
    """Invalid universe, environment, or run configuration."""


class EncodingError(ValueError):
    """An atom set cannot be encoded against the given universe."""


class DimensionError(ValueError):
    """States and conditions belong to universes of different sizes."""


_ATOM_RE = re.compile(r"^([A-Za-z_][\w-]*)\((.*)\)$")


@dataclass(frozen=True, order=True)
class GroundAtom:
    """A predicate applied to a tuple of object names, e.g. ``clean(l1)``."""

    predicate: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"

    @staticmethod
    def parse(text: str) -> "GroundAtom":
        m = _ATOM_RE.match(text.strip())
        if m is None:
            raise EncodingError(f"malformed atom: {text!r}")
        args = tuple(a.strip() for a in m.group(2).split(",")) if m.group(2).strip() else ()
        return GroundAtom(m.group(1), args)


@dataclass(frozen=True)
class AbstractState:
    """Bit vector over a universe's atoms; bit j is the truth of atom j."""

    bits: int
    num_atoms: int

    def __post_init__(self) -> None:
        if self.bits < 0 or self.bits >> self.num_atoms:
            raise DimensionError(f"bits 0x{self.bits:x} exceed {self.num_atoms} atoms")

    def has_bit(self, index: int) -> bool:
        return bool(self.bits >> index & 1)

    def atom_indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.num_atoms) if self.bits >> i & 1)


@dataclass(frozen=True)
class LiteralConjunction:
    """A conjunction of literals: asserted atoms and denied atoms as masks."""

    positives: int
    negatives: int

    def __post_init__(self) -> None:
        if self.positives & self.negatives:
            raise ConfigurationError("an atom is both asserted and denied")

    def satisfied_by(self, bits: int) -> bool:
        return bits & self.positives == self.positives and bits & self.negatives == 0

    @property
    def touched(self) -> int:
        return self.positives | self.negatives


@dataclass(frozen=True)
class Condition:
    """DNF over literal conjunctions, optionally negated as a whole.

    An empty clause list is the vacuous disjunction: it accepts nothing,
    and its negation accepts everything.
    """

    clauses: tuple[LiteralConjunction, ...]
    num_atoms: int
    negated: bool = False

    @cached_property
    def _exact_states(self) -> frozenset[int] | None:
        # Learned conditions are disjunctions of full literals, each clause
        # matching exactly one state; those test as a set-membership lookup.
        full = (1 << self.num_atoms) - 1
        if all(cl.touched == full for cl in self.clauses):
            return frozenset(cl.positives for cl in self.clauses)
        return None

    def accepts_bits(self, bits: int) -> bool:
        exact = self._exact_states
        if exact is not None:
            hit = bits in exact
        else:
            hit = any(cl.satisfied_by(bits) for cl in self.clauses)
        return not hit if self.negated else hit

    @staticmethod
    def always(num_atoms: int) -> "Condition":
        return Condition((), num_atoms, negated=True)

    @staticmethod
    def never(num_atoms: int) -> "Condition":
        return Condition((), num_atoms, negated=False)


class AtomUniverse:
    """The totally ordered set of well-typed ground atoms for one problem.

    The ordering is lexicographic by predicate name, then by the object-name
    tuple, so rebuilding from the same definition always yields identical
    bit positions. Instances are immutable and safe to share.
    """

    def __init__(
        self,
        predicates: Mapping[str, Sequence[str]] | Iterable[tuple[str, Sequence[str]]],
        objects: Mapping[str, str] | Iterable[tuple[str, str]],
    ) -> None:
        pred_pairs = list(predicates.items() if isinstance(predicates, Mapping) else predicates)
        if len({name for name, _ in pred_pairs}) != len(pred_pairs):
            raise ConfigurationError("duplicate predicate names")
        obj_pairs = list(objects.items() if isinstance(objects, Mapping) else objects)
        if len({name for name, _ in obj_pairs}) != len(obj_pairs):
            raise ConfigurationError("duplicate object names")
        self.predicates: dict[str, tuple[str, ...]] = {
            name: tuple(types) for name, types in pred_pairs
        }
        self.objects: dict[str, str] = dict(obj_pairs)
        known_types = set(self.objects.values())
        for name, types in self.predicates.items():
            for t in types:
                if t not in known_types:
                    raise ConfigurationError(f"predicate {name} uses unknown type {t!r}")

        by_type: dict[str, list[str]] = {}
        for obj, t in sorted(self.objects.items()):
            by_type.setdefault(t, []).append(obj)
        atoms: list[GroundAtom] = []
        for name in sorted(self.predicates):
            pools = [by_type.get(t, []) for t in self.predicates[name]]
            for combo in product(*pools):
                atoms.append(GroundAtom(name, combo))
        atoms.sort()
        self.atoms: tuple[GroundAtom, ...] = tuple(atoms)
        self.index: dict[GroundAtom, int] = {a: i for i, a in enumerate(atoms)}
        if len(self.index) != len(self.atoms):
            raise ConfigurationError("duplicate ground atoms (duplicate object names?)")
        self.num_atoms = len(self.atoms)
        self.full_mask = (1 << self.num_atoms) - 1

    def atom_index(self, atom: GroundAtom | str) -> int:
        if isinstance(atom, str):
            atom = GroundAtom.parse(atom)
        try:
            return self.index[atom]
        except KeyError:
            raise EncodingError(f"unknown atom: {atom}") from None

    def encode(self, atoms: Iterable[GroundAtom | str]) -> AbstractState:
        bits = 0
        for atom in atoms:
            bits |= 1 << self.atom_index(atom)
        return AbstractState(bits, self.num_atoms)

    def decode(self, state: AbstractState) -> tuple[GroundAtom, ...]:
        if state.num_atoms != self.num_atoms:
            raise DimensionError("state does not belong to this universe")
        return tuple(self.atoms[i] for i in state.atom_indices())

    def atom_names(self, state: AbstractState) -> list[str]:
        return [str(a) for a in self.decode(state)]

    def mask_of(self, atoms: Iterable[GroundAtom | str]) -> int:
        bits = 0
        for atom in atoms:
            bits |= 1 << self.atom_index(atom)
        return bits

    def objects_of_type(self, type_name: str) -> list[str]:
        return sorted(o for o, t in self.objects.items() if t == type_name)

    def all_states(self) -> Iterable[AbstractState]:
        """Every abstract state; only sensible for small universes."""
        for bits in range(1 << self.num_atoms):
            yield AbstractState(bits, self.num_atoms)


AbstractionFn = Callable[[object], AbstractState]


def build_universe(
    predicates: Mapping[str, Sequence[str]] | Iterable[tuple[str, Sequence[str]]],
    objects: Mapping[str, str] | Iterable[tuple[str, str]],
) -> AtomUniverse:
    """Ground all well-typed atoms over the given vocabulary, in canonical order."""
    return AtomUniverse(predicates, objects)


def literal_of(state: AbstractState) -> LiteralConjunction:
    """Full literal representation: every atom asserted or denied as in `state`."""
    full = (1 << state.num_atoms) - 1
    return LiteralConjunction(state.bits, full & ~state.bits)


def satisfies(state: AbstractState, condition: Condition) -> bool:
    """Whether `state` satisfies the (possibly negated) DNF `condition`."""
    if state.num_atoms != condition.num_atoms:
        raise DimensionError(
            f"state has {state.num_atoms} atoms, condition {condition.num_atoms}"
        )
    return condition.accepts_bits(state.bits)


def literal_string(lit: LiteralConjunction, universe: AtomUniverse) -> str:
    """Render a conjunction as ``a(x) & !b(y)`` in atom-index order."""
    parts = []
    for i, atom in enumerate(universe.atoms):
        if lit.positives >> i & 1:
            parts.append(str(atom))
        elif lit.negatives >> i & 1:
            parts.append(f"!{atom}")
    return " & ".join(parts) if parts else "true"


def parse_literal(text: str, universe: AtomUniverse) -> LiteralConjunction:
    """Parse ``a(x) & !b(y)`` back into masks over `universe`."""
    pos = neg = 0
    text = text.strip()
    if text in ("", "true"):
        return LiteralConjunction(0, 0)
    for part in text.split("&"):
        part = part.strip()
        if part.startswith("!"):
            neg |= 1 << universe.atom_index(part[1:])
        else:
            pos |= 1 << universe.atom_index(part)
    return LiteralConjunction(pos, neg)
