from fractions import Fraction as F

import numpy as np
import pytest

import fairvote as fv
from fairvote.profiles import ProfileFormatError


class TestParsing:
    def test_triad(self, triad):
        assert triad.n == 3 and triad.m == 3
        assert triad.orders == ((0, 1, 2), (1, 0, 2), (0, 2, 1))

    def test_single_agent_single_alternative(self):
        p = fv.parse_profile("1 1\n1")
        assert p.n == p.m == 1 and p.orders == ((0,),)

    def test_multiplicity_equals_explicit_expansion(self):
        expanded = fv.parse_profile("2 3\n1 2 3\n1 2 3")
        compact = fv.parse_profile("2 3\n2: 1 2 3")
        assert compact == expanded
        assert compact.num_ballots == 1 and compact.n == 2

    def test_comments_and_blank_lines(self):
        p = fv.parse_profile("# a comment\n\n2 2\n1 2\n# mid\n2 1\n")
        assert p.n == 2

    @pytest.mark.parametrize("text,line", [
        ("3\n1 2 3", 1),              # malformed header
        ("1 3\n1 2 2", 2),            # not a permutation
        ("1 3\n1 2 4", 2),            # out of range
        ("2 2\n1 2", 1),              # weight total mismatch
        ("1 2\n0: 1 2", 2),           # bad multiplicity
        ("1 2\nx: 1 2", 2),
        ("1 2\n1 2 1", 2),            # wrong length
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(ProfileFormatError) as err:
            fv.parse_profile(text)
        assert err.value.line == line

    def test_round_trip(self, triad):
        assert fv.parse_profile(fv.serialize_profile(triad)) == triad

    def test_round_trip_random(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n, m = int(rng.integers(1, 8)), int(rng.integers(1, 7))
            p = fv.random_profile(n, m, rng)
            assert fv.parse_profile(fv.serialize_profile(p)) == p

    def test_round_trip_with_multiplicities(self):
        p = fv.parse_profile("7 3\n3: 1 2 3\n4: 2 3 1")
        assert fv.parse_profile(fv.serialize_profile(p)) == p


class TestPrefixMass:
    def test_triad_agent2_alt1(self, triad, x_half):
        # agent i2 ranks a2 > a1 > a3, so h covers a2 and a1
        assert fv.prefix_mass(x_half, triad, 1, 0) == F(3, 4)

    def test_top_is_singleton(self, triad, x_half):
        for b in range(3):
            top = triad.orders[b][0]
            assert fv.prefix_mass(x_half, triad, b, top) == x_half.probs[top]

    def test_bottom_is_one(self, triad, x_half):
        for b in range(3):
            bottom = triad.orders[b][-1]
            assert fv.prefix_mass(x_half, triad, b, bottom) == 1

    def test_monotone_down_the_ranking(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            p = fv.random_profile(3, 5, rng)
            x = fv.Distribution(tuple(rng.dirichlet(np.ones(5))))
            for b in range(3):
                masses = [fv.prefix_mass(x, p, b, a) for a in p.orders[b]]
                assert all(lo <= hi + 1e-15 for lo, hi in zip(masses, masses[1:]))
                assert masses[-1] == pytest.approx(1.0, abs=1e-12)

    def test_index_validation(self, triad, x_half):
        with pytest.raises(IndexError):
            fv.prefix_mass(x_half, triad, 5, 0)
        with pytest.raises(IndexError):
            fv.prefix_mass(x_half, triad, 0, 7)


class TestConsistency:
    def test_triad_u2_consistent(self, triad, u2):
        ok, violation = fv.check_consistency(u2, triad)
        assert ok and violation is None

    def test_reversed_pair(self):
        p = fv.parse_profile("1 2\n1 2")
        u = fv.UtilityProfile(utils=((0, 1),), class_tag=fv.UtilityClass.ALL, weights=(1,))
        ok, violation = fv.check_consistency(u, p)
        assert not ok
        assert violation.kind == "order"
        assert (violation.ballot, violation.better, violation.worse) == (0, 0, 1)

    def test_approval_class_violation(self, triad):
        u = fv.UtilityProfile(utils=((1, 0.5, 0),) * 3,
                              class_tag=fv.UtilityClass.APPROVAL, weights=(1, 1, 1))
        ok, violation = fv.check_consistency(u, triad)
        assert not ok and violation.kind == "class"

    def test_dimension_mismatch(self, triad):
        u = fv.UtilityProfile(utils=((1, 0),), class_tag=fv.UtilityClass.ALL, weights=(1,))
        with pytest.raises(ValueError):
            fv.check_consistency(u, triad)

    @pytest.mark.parametrize("tag", list(fv.UtilityClass))
    def test_random_generator_always_consistent(self, tag):
        # 1000 seeded draws across profiles, spread over the five classes
        rng = np.random.default_rng(hash(tag.value) % 2**32)
        for _ in range(200):
            n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            p = fv.random_profile(n, m, rng)
            u = fv.random_consistent_utilities(p, tag, rng)
            ok, violation = fv.check_consistency(u, p)
            assert ok, violation


class TestUtilityClasses:
    def test_containments(self):
        C = fv.UtilityClass
        assert fv.class_contains(C.UNIT_RANGE, C.APPROVAL)
        assert fv.class_contains(C.BALANCED, C.UNIT_RANGE)
        assert fv.class_contains(C.BALANCED, C.APPROVAL)
        assert fv.class_contains(C.BALANCED, C.UNIT_SUM)
        assert fv.class_contains(C.ALL, C.BALANCED)
        assert not fv.class_contains(C.UNIT_SUM, C.APPROVAL)
        assert not fv.class_contains(C.APPROVAL, C.UNIT_RANGE)


class TestDistribution:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            fv.Distribution((-0.1, 1.1))

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            fv.Distribution((0.5, 0.4))
        with pytest.raises(ValueError):
            fv.Distribution((F(1, 2), F(1, 3)))

    def test_exact_flag(self):
        assert fv.Distribution((F(1, 2), F(1, 2))).exact
        assert not fv.Distribution((0.5, 0.5)).exact

    def test_float_tolerance(self):
        fv.Distribution((0.1,) * 10)  # fp dust within 1e-12 is fine

    def test_immutability(self, triad, x_half):
        with pytest.raises(Exception):
            x_half.probs = (1, 0, 0)
        with pytest.raises(Exception):
            triad.m = 5
