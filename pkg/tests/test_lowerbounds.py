import math
from fractions import Fraction as F

import numpy as np
import pytest

import fairvote as fv


class TestSqrtLowerBound:
    def test_layout_n4(self):
        bundle = fv.gen_sqrt_lb(4)
        p = bundle.profile
        assert (p.n, p.m) == (4, 6)
        for i in range(4):
            assert p.orders[i][0] == i
            assert p.orders[i][1] == 4 + i // 2   # groups {0,1}->a5, {2,3}->a6
        assert bundle.claimed_bound == 1.0        # sqrt(4)/2

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            fv.gen_sqrt_lb(5)

    def test_witness_ratio_uniform_x(self):
        bundle = fv.gen_sqrt_lb(4)
        x = fv.Distribution.uniform(6, exact=True)
        w = fv.select_sqrt_witness(bundle, x)
        ratio = fv.social_welfare(w.deviation, w.utilities) / fv.social_welfare(x, w.utilities)
        assert ratio == F(2) / (F(4, 6) + F(2, 6))  # SW(a*)=2 vs mass-weighted welfare
        assert ratio >= 1

    def test_witness_ratio_any_x(self):
        bundle = fv.gen_sqrt_lb(16)
        rng = np.random.default_rng(31)
        for _ in range(100):
            x = fv.Distribution(tuple(rng.dirichlet(np.ones(bundle.profile.m))))
            w = fv.select_sqrt_witness(bundle, x)
            ratio = float(fv.social_welfare(w.deviation, w.utilities)) \
                / float(fv.social_welfare(x, w.utilities))
            assert ratio >= bundle.claimed_bound  # sqrt(16)/2 = 2

    def test_selected_group_has_small_mass(self):
        bundle = fv.gen_sqrt_lb(9)
        rng = np.random.default_rng(32)
        for _ in range(20):
            x = fv.Distribution(tuple(rng.dirichlet(np.ones(bundle.profile.m))))
            w = fv.select_sqrt_witness(bundle, x)
            r = int(w.name.split("-")[1])
            assert x.probs[9 + r] <= 1 / 3 + 1e-12  # pigeonhole


class TestNashLowerBound:
    def test_level_layout_k4(self):
        bundle = fv.gen_nash_lb(4)
        p = bundle.profile
        assert (p.n, p.m) == (8, 15)
        expected_top4 = {
            0: (7, 3, 1, 0), 1: (8, 3, 1, 0), 2: (9, 4, 1, 0), 3: (10, 4, 1, 0),
            4: (11, 5, 2, 0), 5: (12, 5, 2, 0), 6: (13, 6, 2, 0), 7: (14, 6, 2, 0),
        }
        for i, top in expected_top4.items():
            assert p.orders[i][:4] == top

    def test_deviation_welfare_exact(self):
        bundle = fv.gen_nash_lb(4)
        for level, w in enumerate(bundle.witnesses, start=1):
            assert fv.nash_welfare(w.deviation, w.utilities) == F(1, 2 ** (4 - level))

    def test_uniform_x_ratio(self):
        bundle = fv.gen_nash_lb(4)
        x = fv.Distribution.uniform(15, exact=True)
        ratios = [fv.nash_welfare(w.deviation, w.utilities) / fv.nash_welfare(x, w.utilities)
                  for w in bundle.witnesses]
        assert max(ratios) == F(15, 4)
        assert ratios == [F(15, 8), F(15, 8), F(5, 2), F(15, 4)]

    def test_random_x_beats_k_half(self):
        bundle = fv.gen_nash_lb(4)
        rng = np.random.default_rng(33)
        for _ in range(100):
            x = fv.Distribution(tuple(rng.dirichlet(np.ones(15))))
            best = max(float(fv.nash_welfare(w.deviation, w.utilities))
                       / float(fv.nash_welfare(x, w.utilities))
                       if float(fv.nash_welfare(x, w.utilities)) > 0 else math.inf
                       for w in bundle.witnesses)
            assert best > bundle.claimed_bound  # k/2 = 2

    def test_core_violation_witness(self):
        bundle = fv.gen_nash_lb(4)
        k = 4
        rng = np.random.default_rng(34)
        x = fv.Distribution(tuple(rng.dirichlet(np.ones(15))))
        # pick the level whose averaged utility is provably small
        best_level, best_score = None, math.inf
        for level, w in enumerate(bundle.witnesses, start=1):
            mean_u = float(fv.social_welfare(x, w.utilities)) / 8
            gamma = 2.0 ** -(k - level)
            score = mean_u / gamma
            if score < best_score:
                best_level, best_score = level, score
        assert best_score < 2 / k
        w = bundle.witnesses[best_level - 1]
        gamma = 2.0 ** -(k - best_level)
        expected = [float(sum(v * q for v, q in zip(row, x.probs))) for row in w.utilities.utils]
        group = [i for i, e in enumerate(expected) if e < (4 / k) * gamma]
        assert len(group) >= 4  # at least n/2 agents
        share = len(group) / 8
        for i in group:
            dev_u = float(sum(v * q for v, q in zip(w.utilities.utils[i], w.deviation.probs)))
            assert share * dev_u >= (k / 8) * expected[i] - 1e-12
        # cross-check with the core oracle
        report = fv.core_check(x, w.utilities, k / 8)
        assert report.violated

    def test_rejects_small_k(self):
        with pytest.raises(ValueError):
            fv.gen_nash_lb(1)


class TestCyclicSpecial:
    def test_smallest_instance(self):
        bundle = fv.gen_cyclic_special(3, r=2, prefix_width=1)
        p = bundle.profile
        assert (p.n, p.m) == (2, 3)
        special = bundle.params["special"]
        for order in p.orders:
            assert order[1] == special
        assert p.orders[0] != p.orders[1]  # others rotate

    def test_each_position_once(self):
        bundle = fv.gen_cyclic_special(6, r=3, prefix_width=2)
        p = bundle.profile
        special = bundle.params["special"]
        for pos in range(6):
            column = [order[pos] for order in p.orders]
            if pos == 2:
                assert all(a == special for a in column)
            else:
                assert sorted(column) == [a for a in range(6) if a != special]

    def test_unit_sum_witness_welfare(self):
        # r = width = k: the special alternative collects (m-1)/k welfare
        m, k = 9, 2
        bundle = fv.gen_cyclic_special(m, r=k, prefix_width=k, witness_kind="uniform")
        w = bundle.witnesses[0]
        special = bundle.params["special"]
        sw = sum(row[special] for row in w.utilities.utils)
        assert sw == F(m - 1, k)
        assert w.utilities.class_tag is fv.UtilityClass.UNIT_SUM

    def test_approval_witness_unanimous_on_special(self):
        m = 9
        bundle = fv.gen_cyclic_special(m, r=3, prefix_width=3, witness_kind="approval")
        special = bundle.params["special"]
        for row in bundle.witnesses[0].utilities.utils:
            assert row[special] == 1

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            fv.gen_cyclic_special(4, r=5, prefix_width=1)
        with pytest.raises(ValueError):
            fv.gen_cyclic_special(4, r=1, prefix_width=0)


class TestHarmonicFixtures:
    @pytest.mark.parametrize("m", [16, 25, 36, 49])
    def test_harmonic_distortion_bound(self, m):
        bundle = fv.harmonic_distortion_fixture(m)
        x = fv.harmonic_rule(bundle.profile)
        report = fv.distortion(x, bundle.profile, fv.UtilityClass.UNIT_SUM)
        assert float(report.value) >= bundle.claimed_bound

    @pytest.mark.parametrize("m", [16, 25, 36, 49])
    def test_harmonic_pf_bound(self, m):
        bundle = fv.harmonic_pf_fixture(m)
        x = fv.harmonic_rule(bundle.profile)
        value = fv.pf_value(x, bundle.witnesses[0].utilities)
        assert float(value) >= bundle.claimed_bound
