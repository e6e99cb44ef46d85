"""Crossover transformations, the mixing chain, and the exact orbit oracle.

Two primitive transformations act on a population, both parametrised by a
similarity class and an unordered pair of tags:

* suffix crossover: if the two tagged states sit in distinct rollouts,
  the tails from those states (inclusive, terminals included) are
  exchanged; a same-rollout pair leaves the population fixed;
* position swap: the two tagged states themselves are exchanged in
  place, whether they sit in one rollout or two.

Every such transformation is an involution, so the chain that applies an
independently sampled transformation per step is a symmetric, aperiodic
Markov chain whose stationary distribution is uniform over the orbit of
the initial population.  The orbit oracle enumerates that orbit exactly.

Enumeration exploits a factorisation: position swaps generate every
relabelling of same-class tags, those relabellings act freely, and no
schema can see a tag.  The orbit therefore splits into tag-erased
canonical classes of identical size ``prod_i n_i!`` (n_i = occurrences of
class i), and only suffix-crossover moves connect distinct classes.  The
oracle walks the canonical classes and carries the fiber size exactly,
which keeps populations with astronomically many reachable tag
arrangements within reach of exact averaging.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from itertools import combinations, permutations, product
from math import factorial
from typing import Iterator, Mapping, Sequence

from .model import (
    ClassId,
    Population,
    Rollout,
    Schema,
    StateTag,
    TaggedState,
    WILDCARD,
    schema_count,
)
from .stats import Frequency


class OrbitCapExceeded(Exception):
    """The orbit is larger than the caller allowed."""


class TransformKind(Enum):
    ONE_POINT = "chi"
    SINGLE_SWAP = "nu"
    IDENTITY = "identity"


@dataclass(frozen=True)
class Transform:
    """One primitive transformation (or the identity)."""

    kind: TransformKind
    cls: ClassId | None = None
    tags: frozenset[StateTag] | None = None

    def __post_init__(self) -> None:
        if self.kind is TransformKind.IDENTITY:
            if self.cls is not None or self.tags is not None:
                raise ValueError("identity transform carries no parameters")
        else:
            if self.cls is None or self.tags is None or len(self.tags) != 2:
                raise ValueError("crossover transforms need a class and two distinct tags")


IDENTITY = Transform(TransformKind.IDENTITY)


def _locate(p: Population, cls: ClassId, tag: StateTag) -> tuple[int, int] | None:
    target = TaggedState(cls, tag)
    for i, r in enumerate(p.rollouts):
        for k, s in enumerate(r.states):
            if s == target:
                return i, k
    return None


def apply_chi(p: Population, cls: ClassId, c: StateTag, d: StateTag) -> Population:
    """Suffix crossover at the pair (cls, c), (cls, d).

    The suffixes starting at the two states (terminals included) are
    exchanged when the states lie in distinct rollouts; a same-rollout
    pair, or a missing state, leaves the population unchanged.
    """
    loc1 = _locate(p, cls, c)
    loc2 = _locate(p, cls, d)
    if loc1 is None or loc2 is None or loc1[0] == loc2[0]:
        return p
    (i1, k1), (i2, k2) = loc1, loc2
    r1, r2 = p.rollouts[i1], p.rollouts[i2]
    new1 = Rollout(r1.action, r1.states[:k1] + r2.states[k2:], r2.terminal)
    new2 = Rollout(r2.action, r2.states[:k2] + r1.states[k1:], r1.terminal)
    rollouts = list(p.rollouts)
    rollouts[i1], rollouts[i2] = new1, new2
    return Population(tuple(rollouts))


def apply_nu(p: Population, cls: ClassId, c: StateTag, d: StateTag) -> Population:
    """Position swap of the two states (cls, c) and (cls, d), in place."""
    loc1 = _locate(p, cls, c)
    loc2 = _locate(p, cls, d)
    if loc1 is None or loc2 is None:
        return p
    (i1, k1), (i2, k2) = loc1, loc2
    rollouts = list(p.rollouts)
    if i1 == i2:
        states = list(rollouts[i1].states)
        states[k1], states[k2] = states[k2], states[k1]
        rollouts[i1] = Rollout(rollouts[i1].action, tuple(states), rollouts[i1].terminal)
    else:
        r1, r2 = rollouts[i1], rollouts[i2]
        s1, s2 = list(r1.states), list(r2.states)
        s1[k1], s2[k2] = r2.states[k2], r1.states[k1]
        rollouts[i1] = Rollout(r1.action, tuple(s1), r1.terminal)
        rollouts[i2] = Rollout(r2.action, tuple(s2), r2.terminal)
    return Population(tuple(rollouts))


def apply_transform(p: Population, t: Transform) -> Population:
    if t.kind is TransformKind.IDENTITY:
        return p
    assert t.cls is not None and t.tags is not None
    c, d = sorted(t.tags)
    if t.kind is TransformKind.ONE_POINT:
        return apply_chi(p, t.cls, c, d)
    return apply_nu(p, t.cls, c, d)


def generator_index(p: Population) -> list[Transform]:
    """The identity plus every applicable (kind, class, tag pair) transform.

    Applicability means both tagged states occur in the population; the
    state multiset is preserved by every transform, so this index stays
    valid along any chain started from p.
    """
    by_class: dict[ClassId, list[StateTag]] = {}
    for _, _, s in p.states():
        by_class.setdefault(s.cls, []).append(s.tag)
    out: list[Transform] = [IDENTITY]
    for cls in sorted(by_class):
        tags = sorted(by_class[cls])
        for c, d in combinations(tags, 2):
            pair = frozenset((c, d))
            out.append(Transform(TransformKind.ONE_POINT, cls, pair))
            out.append(Transform(TransformKind.SINGLE_SWAP, cls, pair))
    return out


@dataclass(frozen=True)
class TransformDistribution:
    """Per-step sampling rule: identity with probability epsilon, else a
    uniformly chosen crossover generator.  The generator set is fixed at
    construction from the initial population."""

    epsilon: float
    generators: tuple[Transform, ...]

    def __post_init__(self) -> None:
        if not (0 < self.epsilon < 1):
            raise ValueError("identity probability must lie in (0, 1)")

    @classmethod
    def from_population(cls, p: Population, epsilon: float = 0.01) -> "TransformDistribution":
        gens = tuple(t for t in generator_index(p) if t.kind is not TransformKind.IDENTITY)
        return cls(epsilon, gens)

    def sample(self, rng: random.Random) -> Transform:
        if not self.generators or rng.random() < self.epsilon:
            return IDENTITY
        return self.generators[rng.randrange(len(self.generators))]


@dataclass(frozen=True)
class ChainTrace:
    """Outcome of a mixing run: per-schema visit totals over P^0..P^T."""

    initial: Population
    steps: int
    seed: int
    schema_counts: Mapping[Schema, int]
    visits: Mapping[Population, int] | None = None
    visit_stride: int | None = None

    @property
    def b(self) -> int:
        return self.initial.b

    def phi(self, h: Schema) -> Fraction:
        """Running frequency of the schema over the whole trajectory."""
        return Fraction(self.schema_counts[h], self.b * (self.steps + 1))


def run_chain(
    p0: Population,
    steps: int,
    mu: TransformDistribution,
    schemata: Sequence[Schema],
    seed: int,
    visit_stride: int | None = None,
) -> ChainTrace:
    """Iterate P^{t+1} = theta_t(P^t) for t < steps, accumulating schema counts.

    Counts cover the steps+1 populations P^0..P^steps.  With visit_stride
    set, every stride-th population is tallied into ``visits`` (used by the
    stationarity check, which needs approximately independent samples).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rng = random.Random(seed)
    counts = {h: 0 for h in schemata}
    visits: dict[Population, int] | None = {} if visit_stride else None
    current = p0
    for t in range(steps + 1):
        for h in counts:
            counts[h] += schema_count(h, current)
        if visits is not None and t % visit_stride == 0:  # type: ignore[operator]
            visits[current] = visits.get(current, 0) + 1
        if t < steps:
            current = apply_transform(current, mu.sample(rng))
    return ChainTrace(p0, steps, seed, counts, visits, visit_stride)


# --- exact orbit enumeration -------------------------------------------------

# A canonical class ("shape") erases tags: the positions tags occupy are all
# reachable relabelings of one another, so the orbit splits into equal-size
# fibers over these shapes and schema statistics only see the shape.  Shapes
# are stored integer-encoded for speed: one tuple per slot,
# (action id, terminal token, class, class, ...).
EncodedShape = tuple[tuple[int, ...], ...]
Shape = tuple[tuple[str, tuple[int, ...], str], ...]


def population_shape(p: Population) -> Shape:
    return tuple((r.action, r.classes, r.terminal) for r in p.rollouts)


def _suffix_move_images(shape: EncodedShape) -> Iterator[EncodedShape]:
    """Images of a shape under every suffix-crossover move.

    Position swaps never change a shape, so only suffix swaps at two
    same-class positions in distinct slots appear here.  Slot layout:
    index 0 action id, index 1 terminal token, classes from index 2.
    """
    positions: dict[int, list[tuple[int, int]]] = {}
    for slot_index, slot in enumerate(shape):
        for idx in range(2, len(slot)):
            positions.setdefault(slot[idx], []).append((slot_index, idx))
    for cls_positions in positions.values():
        for (s1, k1), (s2, k2) in combinations(cls_positions, 2):
            if s1 == s2:
                continue
            a = shape[s1]
            b = shape[s2]
            new = list(shape)
            new[s1] = (a[0], b[1]) + a[2:k1] + b[k2:]
            new[s2] = (b[0], a[1]) + b[2:k2] + a[k1:]
            yield tuple(new)


def _bfs_shapes(start: EncodedShape, fiber: int, cap: int) -> list[EncodedShape]:
    seen: set[EncodedShape] = {start}
    frontier = [start]
    while frontier:
        next_frontier: list[EncodedShape] = []
        for shape in frontier:
            for image in _suffix_move_images(shape):
                if image not in seen:
                    seen.add(image)
                    if len(seen) * fiber > cap:
                        raise OrbitCapExceeded(
                            f"orbit size exceeds cap {cap} "
                            f"({len(seen)} canonical classes of {fiber} populations each)"
                        )
                    next_frontier.append(image)
        frontier = next_frontier
    return sorted(seen)


def _class_fiber(p: Population) -> tuple[dict[ClassId, int], int]:
    counts: dict[ClassId, int] = {}
    for _, _, s in p.states():
        counts[s.cls] = counts.get(s.cls, 0) + 1
    fiber = 1
    for n in counts.values():
        fiber *= factorial(n)
    return counts, fiber


@dataclass(frozen=True)
class OrbitSet:
    """The reachable set of populations, held as canonical classes.

    ``size`` is the exact number of reachable populations: canonical
    classes times the fiber size (every relabelling of same-class tags is
    reachable, distinct, and invisible to schema statistics).
    """

    initial: Population
    encoded: tuple[EncodedShape, ...]
    action_names: tuple[str, ...]
    terminal_names: tuple[str, ...]
    class_counts: Mapping[ClassId, int]
    fiber: int
    size: int

    @property
    def b(self) -> int:
        return self.initial.b

    @property
    def n_classes(self) -> int:
        return len(self.encoded)

    @cached_property
    def shapes(self) -> tuple[Shape, ...]:
        """Readable canonical classes (decode on demand; small orbits only)."""
        return tuple(
            tuple(
                (self.action_names[slot[0]], slot[2:], self.terminal_names[slot[1]])
                for slot in shape
            )
            for shape in self.encoded
        )

    @cached_property
    def _lookup(self) -> tuple[dict[str, int], dict[str, int], frozenset[EncodedShape]]:
        actions = {name: i for i, name in enumerate(self.action_names)}
        terminals = {name: i for i, name in enumerate(self.terminal_names)}
        return actions, terminals, frozenset(self.encoded)

    def contains(self, p: Population) -> bool:
        actions, terminals, members = self._lookup
        try:
            encoded = tuple(
                (actions[r.action], terminals[r.terminal]) + r.classes for r in p.rollouts
            )
        except KeyError:
            return False
        return encoded in members

    def iter_members(self, limit: int = 100_000) -> Iterator[Population]:
        """Materialise every reachable population (small orbits only)."""
        if self.size > limit:
            raise OrbitCapExceeded(f"orbit has {self.size} members, limit {limit}")
        tags_by_class: dict[ClassId, list[StateTag]] = {}
        for _, _, s in self.initial.states():
            tags_by_class.setdefault(s.cls, []).append(s.tag)
        for tags in tags_by_class.values():
            tags.sort()
        classes_sorted = sorted(tags_by_class)
        for shape in self.shapes:
            slots: list[list[tuple[int, int]]] = []  # (class, per-class position)
            counters = {cls: 0 for cls in classes_sorted}
            for _, classes, _ in shape:
                entries = []
                for cls in classes:
                    entries.append((cls, counters[cls]))
                    counters[cls] += 1
                slots.append(entries)
            perms_per_class = [permutations(tags_by_class[cls]) for cls in classes_sorted]
            for assignment in product(*perms_per_class):
                chosen = dict(zip(classes_sorted, assignment))
                rollouts = []
                for (action, _, terminal), entries in zip(shape, slots):
                    states = tuple(
                        TaggedState(cls, chosen[cls][pos]) for cls, pos in entries
                    )
                    rollouts.append(Rollout(action, states, terminal))
                yield Population(tuple(rollouts))


def enumerate_orbit(p0: Population, cap: int = 10**6) -> OrbitSet:
    """Breadth-first closure of the initial population under all generators.

    Raises OrbitCapExceeded as soon as the exact orbit size would exceed
    ``cap``.  Memory grows only with the number of canonical classes.
    """
    class_counts, fiber = _class_fiber(p0)
    if fiber > cap:
        raise OrbitCapExceeded(f"orbit size is at least {fiber}, cap {cap}")

    action_names = tuple(sorted({r.action for r in p0.rollouts}))
    terminal_names = tuple(sorted(p0.terminals()))
    action_ids = {name: i for i, name in enumerate(action_names)}
    terminal_ids = {name: i for i, name in enumerate(terminal_names)}
    start: EncodedShape = tuple(
        (action_ids[r.action], terminal_ids[r.terminal]) + r.classes for r in p0.rollouts
    )
    shapes = _bfs_shapes(start, fiber, cap)
    return OrbitSet(
        p0,
        tuple(shapes),
        action_names,
        terminal_names,
        dict(class_counts),
        fiber,
        len(shapes) * fiber,
    )


def _encoded_matches(
    o: OrbitSet, action_id: int | None, classes: tuple[int, ...], tail_token: int | None, wildcard: bool
) -> int:
    total = 0
    k = len(classes)
    for shape in o.encoded:
        for slot in shape:
            if action_id is not None and slot[0] != action_id:
                continue
            slot_classes = slot[2:]
            if wildcard:
                if len(slot_classes) >= k and slot_classes[:k] == classes:
                    total += 1
            else:
                if slot[1] == tail_token and slot_classes == classes:
                    total += 1
    return total


def orbit_frequency(o: OrbitSet, h: Schema) -> Frequency:
    """Exact mean of (matching rollouts)/b over the whole orbit."""
    denominator = o.n_classes * o.b
    if h.is_root:
        return Fraction(1)
    actions, terminals, _ = o._lookup
    if h.action not in actions:
        return Fraction(0)
    if h.wildcard_tail:
        tail_token = None
    else:
        if h.tail not in terminals:
            return Fraction(0)
        tail_token = terminals[h.tail]
    total = _encoded_matches(o, actions[h.action], h.classes, tail_token, h.wildcard_tail)
    return Fraction(total, denominator)


def fitted_schema_counts(o: OrbitSet, max_height: int) -> dict[Schema, int]:
    """Total match counts, over all canonical classes, of every schema that
    at least one reachable rollout fits, up to the given class-prefix
    length.  Terminal-tailed schemata are included when the fitting
    rollout is short enough to be pinned exactly."""
    totals: dict[tuple, int] = {}
    for shape in o.encoded:
        for slot in shape:
            classes = slot[2:]
            for k in range(min(max_height, len(classes)) + 1):
                key = (slot[0], classes[:k], None)
                totals[key] = totals.get(key, 0) + 1
            if len(classes) <= max_height:
                key = (slot[0], classes, slot[1])
                totals[key] = totals.get(key, 0) + 1
    out: dict[Schema, int] = {}
    for (action_id, classes, tail_token), count in totals.items():
        tail = WILDCARD if tail_token is None else o.terminal_names[tail_token]
        out[Schema(o.action_names[action_id], classes, tail)] = count
    return out


# --- inflated-orbit oracle with the copy-family quotient ----------------------


@dataclass(frozen=True)
class InflatedOrbit:
    """Exact orbit data for an inflated population, quotiented by copies.

    Inflation copies carry fresh terminal labels, but every relabelling
    within one copy family is reachable (copies share their class
    sequences, so a last-state suffix swap plus a free tag relabelling
    exchanges any two family terminals) and acts freely, exactly like tag
    relabellings.  Collapsing each family to one token therefore keeps
    orbit averages exact while shrinking the class count by a factor of
    up to (m!)^b.  A schema of the base population is transported to the
    inflated one by letting its terminal stand for the whole copy family.
    """

    base: Population
    factor: int
    encoded: tuple[EncodedShape, ...]
    action_names: tuple[str, ...]
    family_names: tuple[str, ...]  # base terminal labels, token-indexed
    fiber: int
    size: int

    @property
    def b(self) -> int:
        return self.base.b * self.factor

    @property
    def n_classes(self) -> int:
        return len(self.encoded)

    def family_frequency(self, h: Schema) -> Frequency:
        """Exact orbit mean of (rollouts fitting the transported schema)/b."""
        if h.is_root:
            return Fraction(1)
        actions = {name: i for i, name in enumerate(self.action_names)}
        families = {name: i for i, name in enumerate(self.family_names)}
        if h.action not in actions:
            return Fraction(0)
        if h.wildcard_tail:
            tail_token = None
        else:
            if h.tail not in families:
                return Fraction(0)
            tail_token = families[h.tail]
        total = 0
        k = len(h.classes)
        for shape in self.encoded:
            for slot in shape:
                if slot[0] != actions[h.action]:
                    continue
                slot_classes = slot[2:]
                if h.wildcard_tail:
                    if len(slot_classes) >= k and slot_classes[:k] == h.classes:
                        total += 1
                elif slot[1] == tail_token and slot_classes == h.classes:
                    total += 1
        return Fraction(total, self.n_classes * self.b)


def enumerate_inflated_orbit(p0: Population, m: int, cap: int = 10**6) -> InflatedOrbit:
    """Exact orbit of inflate(p0, m), canonical in tags and copy families.

    Requires every rollout of p0 to have at least one state: a stateless
    rollout's terminal can never move, so its copies would not be
    interchangeable and the family quotient would overcount.
    """
    from .model import inflate

    if any(r.height == 0 for r in p0.rollouts):
        raise ValueError("family quotient needs every rollout to carry a state")
    inflated = inflate(p0, m)
    class_counts, class_fiber = _class_fiber(inflated)
    fiber = class_fiber * factorial(m) ** p0.b
    if fiber > cap:
        raise OrbitCapExceeded(f"orbit size is at least {fiber}, cap {cap}")

    action_names = tuple(sorted({r.action for r in p0.rollouts}))
    family_names = tuple(sorted(p0.terminals()))
    action_ids = {name: i for i, name in enumerate(action_names)}
    family_ids = {name: i for i, name in enumerate(family_names)}
    # Slot i*m + c of the inflated population is copy c of base rollout i.
    start: EncodedShape = tuple(
        (action_ids[p0.rollouts[j // m].action], family_ids[p0.rollouts[j // m].terminal])
        + r.classes
        for j, r in enumerate(inflated.rollouts)
    )
    shapes = _bfs_shapes(start, fiber, cap)
    return InflatedOrbit(
        p0,
        m,
        tuple(shapes),
        action_names,
        family_names,
        fiber,
        len(shapes) * fiber,
    )
