import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credence.decision import (
    Threshold,
    net_benefit,
    snb,
    threshold_from_utilities,
    treat_decision,
)
from credence.errors import RangeError, UndefinedMetric


class TestNetBenefit:
    def test_zero_at_threshold(self):
        assert net_benefit(0.05, Threshold(0.05)) == 0.0

    def test_formula(self):
        assert net_benefit(0.1, 0.05) == pytest.approx(0.05 / 0.95, abs=1e-12)

    def test_pi_zero(self):
        assert net_benefit(0.0, 0.1) == pytest.approx(-1.0 / 9.0, abs=1e-12)

    def test_threshold_domain(self):
        with pytest.raises(RangeError):
            Threshold(0.0)
        with pytest.raises(RangeError):
            net_benefit(0.5, 1.0)

    @settings(max_examples=100)
    @given(
        st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
        st.floats(0.01, 0.99),
    )
    def test_linearity(self, p1, p2, a, z):
        mix = a * p1 + (1 - a) * p2
        lhs = net_benefit(mix, z)
        rhs = a * net_benefit(p1, z) + (1 - a) * net_benefit(p2, z)
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestTreatDecision:
    def test_rule(self):
        assert treat_decision(0.049, 0.05) == "no-treat"
        assert treat_decision(0.051, 0.05) == "treat"

    def test_tie_treats(self):
        assert treat_decision(0.05, 0.05) == "treat"

    def test_matches_utility_enumeration(self, rng):
        # two-branch expected-utility oracle over random utility tables
        # respecting u11 > u01 and u00 > u10
        for _ in range(2000):
            u01, u10 = rng.uniform(-5, 5, size=2)
            u11 = u01 + rng.uniform(1e-6, 5)
            u00 = u10 + rng.uniform(1e-6, 5)
            pm = rng.random()
            z = threshold_from_utilities(u00, u01, u10, u11)
            eu_treat = u11 * pm + u10 * (1 - pm)
            eu_none = u01 * pm + u00 * (1 - pm)
            oracle = "treat" if eu_treat >= eu_none else "no-treat"
            assert treat_decision(pm, z) == oracle

    def test_invariant_under_increasing_transform(self, rng):
        # the decision depends on post_mean only through comparison with z
        for _ in range(200):
            pm, z = rng.random(), rng.uniform(0.01, 0.99)
            direct = treat_decision(pm, z)
            scale, shift = rng.uniform(0.5, 3.0), rng.uniform(-1, 1)
            eu_gap = (pm - z)  # any strictly increasing transform of the gap
            transformed = "treat" if scale * eu_gap + 0.0 >= 0 else "no-treat"
            assert direct == transformed


class TestSnb:
    def test_both_abstain(self):
        predictions = np.array([0.01, 0.02, 0.03])
        reference = np.array([0.0, 0.0, 1.0])
        # z high enough that treat-all has negative NB and no one is treated
        assert snb(predictions, reference, 0.5) == 0.0

    def test_perfect_oracle(self):
        reference = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        assert snb(reference, reference, 0.5) == pytest.approx(1.0)

    def test_matches_brute_force(self, rng):
        n = 20
        predictions = rng.random(n)
        reference = rng.random(n)
        z = 0.3
        nb_model = 0.0
        for pi, r in zip(predictions, reference):
            if pi >= z:
                nb_model += r - (z / (1 - z)) * (1 - r)
        nb_model /= n
        nb_all = float(np.mean(reference - (z / (1 - z)) * (1 - reference)))
        expected = (nb_model - max(nb_all, 0.0)) / float(np.mean(reference))
        assert snb(predictions, reference, z) == pytest.approx(expected, abs=1e-12)

    def test_zero_prevalence(self):
        with pytest.raises(UndefinedMetric):
            snb(np.array([0.5]), np.array([0.0]), 0.1)

    def test_cannot_beat_omniscience(self, rng):
        # treat exactly the events: the best any policy can do
        for _ in range(100):
            n = 50
            reference = rng.random(n)
            predictions = rng.random(n)
            z = float(rng.uniform(0.05, 0.9))
            prevalence = float(np.mean(reference))
            odds = z / (1 - z)
            best = float(np.mean(reference) - odds * 0.0)  # omniscient upper bound
            bound = (best - max(float(np.mean(reference - odds * (1 - reference))), 0.0)) / prevalence
            assert snb(predictions, reference, z) <= bound + 1e-12

    def test_length_mismatch(self):
        with pytest.raises(RangeError):
            snb(np.array([0.5, 0.4]), np.array([1.0]), 0.1)
