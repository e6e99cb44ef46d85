import random
from fractions import Fraction

from rollmix import ROOT, Schema
from rollmix.fixtures import population_a, population_b, random_population
from rollmix.recombine import apply_transform, generator_index
from rollmix.stats import (
    down_report,
    frequency_children,
    limiting_frequency,
    limiting_frequency_from_report,
)


class TestDownReport:
    def test_fixture_a_counts(self):
        r = down_report(population_a())
        assert r.action_classes == {"alpha": frozenset({1}), "beta": frozenset({1})}
        assert r.action_order == {("alpha", 1): 2, ("beta", 1): 1}
        assert r.class_classes == {1: frozenset({2})}
        assert r.order == {(1, 2): 3}
        assert r.terminal_count(1) == 0
        assert r.down(2) == frozenset({"f1", "f2", "f3"})
        assert r.terminal_count(2) == 3
        assert r.occ(1) == r.occ(2) == 3

    def test_fixture_b_counts(self):
        r = down_report(population_b())
        assert r.down(1) == frozenset({2, "f2"})
        assert r.order_count(1, 2) == 1
        assert r.terminal_count(1) == 1
        assert r.down(2) == frozenset({1, "f1"})
        assert r.order_count(2, 1) == 1
        assert r.terminal_count(2) == 1

    def test_absent_pairs_are_zero(self):
        r = down_report(population_a())
        assert r.order_count(2, 1) == 0
        assert r.order_count(7, 1) == 0
        assert r.action_order_count("alpha", 9) == 0
        assert r.occ(9) == 0

    def test_occurrence_identity(self):
        rng = random.Random(21)
        for _ in range(100):
            p = random_population(rng, allow_stateless=True)
            r = down_report(p)
            for cls in p.class_ids():
                expected = sum(1 for _, _, s in p.states() if s.cls == cls)
                outgoing = sum(n for (i, _), n in r.order.items() if i == cls)
                assert r.occ(cls) == expected == outgoing + r.terminal_count(cls)

    def test_terminal_counts_sum_to_population_size(self):
        rng = random.Random(22)
        for _ in range(100):
            p = random_population(rng)
            r = down_report(p)
            assert sum(r.terminal_count(i) for i in r.occurrences) == p.b

    def test_action_order_totals(self):
        rng = random.Random(23)
        for _ in range(50):
            p = random_population(rng, allow_stateless=True)
            r = down_report(p)
            stateless = sum(len(v) for v in r.action_terminals.values())
            assert sum(r.action_order.values()) + stateless == p.b


class TestLimitingFrequency:
    def test_fixture_a_pinned_value(self):
        assert limiting_frequency(population_a(), Schema("alpha", (1, 2), "f1")) == Fraction(2, 9)

    def test_fixture_b_pinned_value(self):
        assert limiting_frequency(population_b(), Schema("alpha", (1, 2), "f1")) == Fraction(1, 8)

    def test_root_is_one(self):
        rng = random.Random(31)
        for _ in range(10):
            assert limiting_frequency(random_population(rng), ROOT) == 1

    def test_absent_class_gives_zero(self):
        assert limiting_frequency(population_a(), Schema("alpha", (5,), "#")) == 0

    def test_absent_action_gives_zero(self):
        assert limiting_frequency(population_a(), Schema("omega", (1,), "#")) == 0

    def test_terminal_not_following_gives_zero(self):
        # f1 never follows class 1 in the loop fixture
        assert limiting_frequency(population_b(), Schema("alpha", (1,), "f1")) == 0

    def test_action_only_wildcard(self):
        assert limiting_frequency(population_a(), Schema("alpha", (), "#")) == Fraction(2, 3)
        assert limiting_frequency(population_b(), Schema("beta", (), "#")) == Fraction(1, 2)

    def test_values_within_unit_interval_and_tail_bound(self):
        rng = random.Random(32)
        for _ in range(50):
            p = random_population(rng, allow_stateless=True)
            report = down_report(p)
            for action in {"alpha", "beta"}:
                for classes in [(), (1,), (1, 2), (2, 2)]:
                    open_h = Schema(action, classes, "#")
                    open_f = limiting_frequency_from_report(report, open_h)
                    assert 0 <= open_f <= 1
                    for terminal in p.terminals():
                        closed = Schema(action, classes, terminal)
                        closed_f = limiting_frequency_from_report(report, closed)
                        assert 0 <= closed_f <= open_f

    def test_action_level_totals(self):
        rng = random.Random(33)
        for _ in range(50):
            p = random_population(rng)
            report = down_report(p)
            for action in {r.action for r in p.rollouts}:
                total = sum(
                    limiting_frequency_from_report(report, Schema(action, (i,), "#"))
                    for i in p.class_ids()
                )
                share = Fraction(sum(1 for r in p.rollouts if r.action == action), p.b)
                assert total == share


class TestFrequencyChildren:
    def test_fixture_a_one_step(self):
        children = frequency_children(population_a(), Schema("alpha", (1,), "#"))
        assert children == {Schema("alpha", (1, 2), "#"): Fraction(2, 3)}

    def test_fixture_b_splits_between_class_and_terminal(self):
        children = frequency_children(population_b(), Schema("alpha", (1,), "#"))
        assert children == {
            Schema("alpha", (1, 2), "#"): Fraction(1, 4),
            Schema("alpha", (1,), "f2"): Fraction(1, 4),
        }

    def test_fixture_a_terminal_fanout(self):
        children = frequency_children(population_a(), Schema("alpha", (1, 2), "#"))
        assert children == {
            Schema("alpha", (1, 2), f): Fraction(2, 9) for f in ("f1", "f2", "f3")
        }

    def test_root_children_partition_unity(self):
        rng = random.Random(41)
        for _ in range(30):
            p = random_population(rng, allow_stateless=True)
            children = frequency_children(p, ROOT)
            assert sum(children.values(), Fraction(0)) == 1

    def test_flow_conservation_random(self):
        rng = random.Random(42)
        for _ in range(60):
            p = random_population(rng, allow_stateless=True)
            for action in {r.action for r in p.rollouts}:
                for classes in [(), (1,), (2,), (1, 2), (3, 1)]:
                    h = Schema(action, classes, "#")
                    parent = limiting_frequency(p, h)
                    children = frequency_children(p, h)
                    assert sum(children.values(), Fraction(0)) == parent


def test_report_invariant_under_transform_sequences():
    rng = random.Random(51)
    for _ in range(40):
        p = random_population(rng)
        reference = down_report(p)
        gens = generator_index(p)
        q = p
        for _ in range(60):
            q = apply_transform(q, gens[rng.randrange(len(gens))])
        assert down_report(q) == reference
