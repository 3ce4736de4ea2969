import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastrates.conditions import (FiniteDist, admissible_c, bernstein_profile,
                                  central_bound, cgf_profile, DataInconsistency,
                                  default_eta_grid, esi_chain_check, esi_check,
                                  esi_mixture_check, exact_cgf,
                                  expected_regret_bound, optimized_theorem_bound,
                                  squeezer_check, theorem_bound, tuned_gamma,
                                  zero_law)
from fastrates.core import ContractViolation, UnsupportedOperation, make_rng


def coin() -> FiniteDist:
    return FiniteDist((1.0, -1.0), (0.5, 0.5))


class TestFiniteDist:
    def test_validation(self):
        with pytest.raises(ContractViolation):
            FiniteDist((0.5,), (0.9,))          # probs must sum to 1
        with pytest.raises(ContractViolation):
            FiniteDist((1.5,), (1.0,))          # support outside [-1, 1]
        with pytest.raises(ContractViolation):
            FiniteDist((0.1, 0.2), (1.2, -0.2))

    def test_moments(self):
        d = FiniteDist((0.5, -0.5), (0.8, 0.2))
        assert d.mean() == pytest.approx(0.3)
        assert d.second_moment() == pytest.approx(0.25)


class TestExactCgf:
    def test_point_mass_at_one(self):
        d = FiniteDist((1.0,), (1.0,))
        for eta in (0.0, 0.3, 1.0, 1.79):
            assert exact_cgf(d, eta) == pytest.approx(-1.0)

    def test_fair_coin_log_cosh(self):
        # (1/1) ln E[e^{-x}] with x = +-1: ln cosh(1)
        assert exact_cgf(coin(), 1.0) == pytest.approx(math.log(math.cosh(1.0)),
                                                       abs=1e-12)
        assert exact_cgf(coin(), 1.0) == pytest.approx(0.433781, abs=1e-6)

    def test_eta_zero_is_negative_mean(self):
        d = FiniteDist((0.5, -0.25), (0.4, 0.6))
        assert exact_cgf(d, 0.0) == pytest.approx(-d.mean())

    def test_negative_eta_rejected(self):
        with pytest.raises(ContractViolation):
            exact_cgf(coin(), -0.1)

    @given(st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_monotone_and_range(self, seed):
        rng = make_rng(seed)
        vals = rng.uniform(-1, 1, 4)
        probs = rng.dirichlet(np.ones(4))
        d = FiniteDist(tuple(vals), tuple(probs))
        grid = np.linspace(0.0, 2.5, 12)
        values = [exact_cgf(d, float(e)) for e in grid]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
        for e, v in zip(grid, values):
            assert -1.0 - 1e-12 <= v <= 1.0 + 1e-12
            assert v >= -d.mean() - 1e-12   # Jensen lower bound

    @given(st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_half_eta_cap_for_nonnegative_means(self, seed):
        # The eta/2 cap is a property of excess losses, whose mean is >= 0.
        rng = make_rng(seed)
        vals = rng.uniform(-1, 1, 4)
        probs = rng.dirichlet(np.ones(4))
        if float(vals @ probs) < 0:
            vals = -vals
        d = FiniteDist(tuple(vals), tuple(probs))
        for e in np.linspace(0.0, 2.5, 12):
            assert exact_cgf(d, float(e)) <= e / 2.0 + 1e-12


class TestCgfProfile:
    def test_gap_deterministic_profile_is_zero(self):
        # Bad experts have x = alpha surely (cgf -alpha < 0); including the
        # optimum's own zero law the max is exactly 0.
        laws = [zero_law(), FiniteDist((0.2,), (1.0,))]
        grid = [0.1, 0.5, 1.0]
        prof = cgf_profile(laws, grid)
        assert all(v == pytest.approx(0.0, abs=1e-15) for v in prof.values)

    def test_kappa_half_delta_law_closed_form(self):
        delta, q = 0.5, 0.5  # kappa=1: bias delta^(2/kappa - 1) = delta
        law = FiniteDist((delta, -delta), ((1 + q) / 2, (1 - q) / 2))
        eta = 0.7
        expected = math.log(0.75 * math.exp(-eta / 2) + 0.25 * math.exp(eta / 2)) / eta
        assert exact_cgf(law, eta) == pytest.approx(expected, abs=1e-12)

    def test_profile_validates_cap(self):
        prof = cgf_profile([coin(), zero_law()], default_eta_grid())
        prof.validate()
        for e, v in zip(prof.etas, prof.values):
            assert v <= e / 2.0 + 1e-12

    def test_missing_laws(self):
        with pytest.raises(UnsupportedOperation):
            cgf_profile(None, [0.1])


class TestCentralBound:
    def test_kappa_half_example(self):
        # ((1-k)/k) (B eta k)^(1/(1-k)) at k=1/2, B=1, eta=0.1: (0.05)^2
        assert central_bound(1.0, 0.5, 0.1) == pytest.approx(0.0025, abs=1e-15)

    def test_kappa_zero_is_linear(self):
        assert central_bound(2.0, 0.0, 0.3) == pytest.approx(0.6)

    def test_kappa_to_zero_limit(self):
        eta, B = 0.4, 1.3
        assert central_bound(B, 1e-3, eta) == pytest.approx(eta * B, rel=2e-2)

    def test_kappa_one(self):
        assert central_bound(1.0, 1.0, 0.5) == 0.0          # eta B <= 1
        assert central_bound(1.0, 1.0, 1.5) == pytest.approx(0.5)

    def test_boundary_branch(self):
        # B kappa eta > 1: supremum at the edge m = 1 gives eta B - 1.
        assert central_bound(4.0, 0.5, 1.0) == pytest.approx(3.0)

    def test_errors(self):
        with pytest.raises(ContractViolation):
            central_bound(0.0, 0.5, 0.1)
        with pytest.raises(ContractViolation):
            central_bound(1.0, 1.5, 0.1)


class TestAdmissibleC:
    def test_eta_zero(self):
        assert admissible_c(0.0, 0.0) == 0.5
        assert admissible_c(0.0, 1.0) == 0.5

    def test_lemma_value_at_half(self):
        assert admissible_c(0.5, 1.0) == pytest.approx(1.0 / (1.0 + math.sqrt(2.0)),
                                                       abs=1e-15)
        assert admissible_c(0.5, 1.0) == pytest.approx(0.414214, abs=1e-6)

    def test_diagonal_identity_to_1e12(self):
        for eta in np.geomspace(1e-6, 2.0, 100):
            direct = admissible_c(float(eta), 2.0 * float(eta))
            closed = 1.0 / (1.0 + math.sqrt(1.0 + 4.0 * eta * eta))
            assert abs(direct - closed) <= 1e-12

    def test_two_c_eta_at_most_one(self):
        for eta in np.geomspace(1e-4, 3.0, 60):
            for gamma in np.geomspace(float(eta), 6.0, 25):
                c = admissible_c(float(eta), float(gamma))
                assert 2.0 * c * float(eta) <= 1.0 + 1e-12

    def test_precondition(self):
        with pytest.raises(ContractViolation):
            admissible_c(1.0, 0.5)


class TestSqueezer:
    def test_degenerate_zero(self):
        rep = squeezer_check(zero_law(), 0.5, 1.0, 0.0)
        assert rep.passed and not rep.vacuous
        assert rep.slack == pytest.approx(0.0, abs=1e-15)

    def test_tight_coin(self):
        gamma = 1.0
        eps = exact_cgf(coin(), gamma)
        rep = squeezer_check(coin(), 0.5, gamma, eps)
        assert rep.passed and not rep.vacuous

    def test_violated_hypothesis_is_vacuous(self):
        # epsilon far below the true cgf: the hypothesis fails.
        rep = squeezer_check(coin(), 0.5, 1.0, -0.9)
        assert rep.vacuous and rep.passed

    @given(st.integers(0, 10**6))
    @settings(max_examples=150, deadline=None)
    def test_random_sweep_with_tight_epsilon(self, seed):
        rng = make_rng(seed)
        vals = rng.uniform(-1, 1, 5)
        probs = rng.dirichlet(np.ones(5))
        d = FiniteDist(tuple(vals), tuple(probs))
        eta = float(rng.uniform(0.0, 1.5))
        gamma = float(rng.uniform(eta, 2.0))
        rep = squeezer_check(d, eta, gamma, exact_cgf(d, gamma))
        assert not rep.vacuous
        assert rep.passed, (vals, probs, eta, gamma, rep.slack)


class TestEsi:
    def test_hand_example(self):
        # E e^X = 0.25*2 + 0.75*(2/3) = 1; E[X] = ln2/4 + 3 ln(2/3)/4 < 0
        values = (math.log(2.0), math.log(2.0 / 3.0))
        probs = (0.25, 0.75)
        rep = esi_check((np.array(values), np.array(probs)))
        assert rep.is_esi
        assert rep.mean == pytest.approx(-0.130812, abs=1e-6)
        assert rep.all_hold

    def test_zero_variable_equality(self):
        rep = esi_check((np.array([0.0]), np.array([1.0])))
        assert rep.is_esi and rep.log_mgf == pytest.approx(0.0)
        assert rep.all_hold

    def test_non_esi_detected(self):
        rep = esi_check((np.array([1.0]), np.array([1.0])))
        assert not rep.is_esi

    def test_mixture(self):
        outcome_p = np.array([0.5, 0.5])
        fam = np.array([[math.log(1.5), math.log(0.5)],
                        [math.log(0.25), math.log(1.75)]])
        res = esi_mixture_check(fam, outcome_p, np.array([0.3, 0.7]))
        assert res["members_esi"] and res["holds"]

    def test_chain_rule_enumeration(self):
        step = (np.array([math.log(2.0), math.log(2.0 / 3.0)]),
                np.array([0.25, 0.75]))
        res = esi_chain_check([step] * 5)
        assert res["conditionals_esi"] and res["sum_esi"] and res["holds"]
        with pytest.raises(ContractViolation):
            esi_chain_check([step] * 6)

    def test_tail_bound_grid(self):
        rng = make_rng(3)
        for _ in range(50):
            v = rng.uniform(-2, 2, 4)
            p = rng.dirichlet(np.ones(4))
            v = v - math.log(float(p @ np.exp(v)))
            rep = esi_check((v, p))
            assert rep.is_esi and rep.all_hold


class TestTheoremBound:
    def test_gamma_zero_sentinel(self):
        assert theorem_bound(5.0, 0.0, 0.0, 100) == math.inf

    def test_empty_horizon(self):
        gamma = 0.25
        c = 1.0 / (1.0 + math.sqrt(1.0 + 4.0 * gamma ** 2))
        assert theorem_bound(3.0, gamma, 0.7, 0) == pytest.approx(
            3.0 / (c * gamma) + 6.0)

    def test_gap_like_value(self):
        # K=5, gamma=0.1, eps=0: c = 5/(5+sqrt(26)), bound = 60 + 10 sqrt(26).
        got = theorem_bound(5.0, 0.1, 0.0, 1000)
        assert got == pytest.approx(60.0 + 10.0 * math.sqrt(26.0), abs=1e-9)

    def test_monotone_in_eps(self):
        vals = [theorem_bound(5.0, 0.3, e, 500) for e in np.linspace(0, 0.5, 9)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_negative_inputs(self):
        with pytest.raises(ContractViolation):
            theorem_bound(-1.0, 0.1, 0.0, 10)


class TestTunedGamma:
    def test_kappa_zero_example(self):
        assert tuned_gamma(1.0, 0.0, 10.0, 10**4) == pytest.approx(
            math.sqrt(0.001), abs=1e-12)
        assert tuned_gamma(1.0, 0.0, 10.0, 10**4) == pytest.approx(0.031623,
                                                                   abs=1e-6)

    def test_scaling_exponent(self):
        # gamma-hat scales as (K/T)^((1-kappa)/(2-kappa)).
        kappa = 0.5
        expo = (1 - kappa) / (2 - kappa)
        g1 = tuned_gamma(1.0, kappa, 8.0, 2**10)
        g2 = tuned_gamma(1.0, kappa, 8.0, 2**14)
        assert math.log(g1 / g2) == pytest.approx(expo * math.log(2**14 / 2**10),
                                                  rel=1e-9)

    def test_kappa_one_limit(self):
        # The kappa -> 1 limit of the closed form is 1/(2B), capped at 1/2.
        assert tuned_gamma(5.0, 1.0, 2.0, 512) == pytest.approx(0.1)
        assert tuned_gamma(0.5, 1.0, 2.0, 512) == pytest.approx(0.5)
        near = tuned_gamma(5.0, 1.0 - 1e-9, 2.0, 512)
        assert near == pytest.approx(0.1, rel=1e-4)

    def test_horizon_required(self):
        with pytest.raises(ContractViolation):
            tuned_gamma(1.0, 0.5, 1.0, 0)


class TestExpectedRegretBound:
    def test_kappa_one_example(self):
        # (1+4)(4/4)^1 T^0 + 4*4 = 21 for any T
        assert expected_regret_bound(1.0, 1.0, 4.0, 7) == pytest.approx(21.0)
        assert expected_regret_bound(1.0, 1.0, 4.0, 10**6) == pytest.approx(21.0)

    def test_kappa_zero_value(self):
        # (1+4)(4/4)^(1/2) sqrt(100) + 5*4 = 50 + 20 = 70
        assert expected_regret_bound(1.0, 0.0, 4.0, 100) == pytest.approx(70.0)

    def test_exponent_map(self):
        # T-exponents (1-k)/(2-k) for k in {0, 1/2, 1}: {1/2, 1/3, 0}
        for kappa, expo in [(0.0, 0.5), (0.5, 1.0 / 3.0), (1.0, 0.0)]:
            b1 = expected_regret_bound(1.0, kappa, 4.0, 2**10) - (5 - kappa) * 4.0
            b2 = expected_regret_bound(1.0, kappa, 4.0, 2**16) - (5 - kappa) * 4.0
            assert math.log(b2 / b1) == pytest.approx(expo * 6 * math.log(2),
                                                      abs=1e-9)

    def test_consistency_with_theorem_bound(self):
        # The gamma-tuned theorem bound and the closed-form display agree
        # within a factor 4 across the grid (tolerance fixed here).
        for B in (0.5, 1.0, 2.0, 5.0):
            for kappa in (0.0, 0.25, 0.5, 0.75, 1.0):
                for K in (2.0, 10.0):
                    for T in (2**9, 2**15):
                        g = tuned_gamma(B, kappa, K, T)
                        tb = theorem_bound(K, g, central_bound(B, kappa, 2 * g), T)
                        erb = expected_regret_bound(B, kappa, K, T)
                        assert tb <= 4.0 * erb, (B, kappa, K, T)
                        assert erb <= 4.0 * tb, (B, kappa, K, T)


class TestOptimizedTheoremBound:
    def test_beats_every_grid_point(self):
        bound, gamma = optimized_theorem_bound(5.0, 1.0, 0.5, 2**12)
        assert 2.0 ** -12 <= gamma <= 0.5
        for g in np.geomspace(2**-12, 0.5, 64):
            assert bound <= theorem_bound(
                5.0, float(g), central_bound(1.0, 0.5, 2 * float(g)), 2**12) + 1e-12


class TestBernsteinProfile:
    def test_exact_kappa_family_is_one(self):
        laws = [zero_law()]
        for delta in (0.5, 0.25, 0.125):
            q = delta  # kappa = 1
            laws.append(FiniteDist((delta, -delta), ((1 + q) / 2, (1 - q) / 2)))
        prof = bernstein_profile(laws, [1.0])
        assert prof.values[0] == pytest.approx(1.0, abs=1e-12)

    def test_exact_markov_value(self):
        law = FiniteDist((1.0, -1.0), (0.9, 0.1))
        prof = bernstein_profile([zero_law(), law], [1.0])
        assert prof.values[0] == pytest.approx(1.25, abs=1e-12)

    def test_finite_at_smaller_kappa(self):
        law = FiniteDist((1.0, -1.0), (0.9, 0.1))
        prof = bernstein_profile([law], [0.0, 0.5, 1.0])
        assert all(math.isfinite(v) for v in prof.values)
        # means <= 1 make the condition weaken as kappa decreases
        assert prof.values[0] <= prof.values[1] <= prof.values[2]

    def test_mc_mode_matches_exact_for_clean_data(self):
        rng = make_rng(11)
        x = np.where(rng.random(200_000) < 0.9, 1.0, -1.0)
        prof = bernstein_profile([x], [1.0])
        assert prof.values[0] == pytest.approx(1.25, rel=2e-2)
        assert prof.stderrs[0] > 0

    def test_data_inconsistency(self):
        x = -np.ones(4000) * 0.5  # mean decisively negative
        with pytest.raises(DataInconsistency):
            bernstein_profile([x], [1.0])


class TestDominationExactLaws:
    def test_kappa_one_family_dominated(self):
        # epsilon(eta) <= central_bound(1, 1, eta) for the kappa=1 family.
        laws = [zero_law()]
        for delta in (0.5, 1 / 3, 0.25):
            laws.append(FiniteDist((delta, -delta),
                                   ((1 + delta) / 2, (1 - delta) / 2)))
        prof = cgf_profile(laws, default_eta_grid())
        for eta, value in zip(prof.etas, prof.values):
            assert value <= central_bound(1.0, 1.0, eta) + 1e-9


class TestProfileSerialization:
    def test_json_round_trip(self):
        prof = cgf_profile([zero_law(), coin()], [0.0, 0.5, 1.0])
        data = prof.to_json_dict()
        assert set(data) == {"eta_grid", "values", "per_f"}
        back = type(prof).from_json_dict(data)
        assert back.etas == prof.etas
        assert back.values == prof.values
        assert back.per_f == prof.per_f

    def test_eta_zero_entry_is_worst_negative_mean(self):
        # With the optimum's zero law included, the eta=0 entry is 0.
        prof = cgf_profile([zero_law(), FiniteDist((0.4, 0.0), (0.5, 0.5))],
                           [0.0, 0.2])
        assert prof.values[0] == pytest.approx(0.0, abs=1e-15)
