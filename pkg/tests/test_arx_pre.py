import numpy as np
import pytest

from parsimid import (
    ConfigError,
    ExcitationError,
    PredictorMarkov,
    SignalRecord,
    fit_arx,
    markov_g,
    markov_h,
    predictor_to_innovations,
    predictor_to_innovations_g,
    select_order_aic,
    simulate,
    to_predictor_form,
)
from parsimid.benchmark import example1_system

from helpers import random_stable_model


def gen_arx(coeff_y, coeff_u, n_total, sigma_e, seed):
    """Simulate y[k] = sum a_i y[k-i] + sum b_i u[k-i] + e[k] directly."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n_total)
    e = sigma_e * rng.standard_normal(n_total)
    y = np.zeros(n_total)
    na, nb = len(coeff_y), len(coeff_u)
    for k in range(n_total):
        acc = e[k]
        for i, a in enumerate(coeff_y, start=1):
            if k - i >= 0:
                acc += a * y[k - i]
        for i, b in enumerate(coeff_u, start=1):
            if k - i >= 0:
                acc += b * u[k - i]
        y[k] = acc
    return SignalRecord(u=u, y=y)


class TestFitArx:
    def test_exact_on_noise_free_arx1(self):
        rec = gen_arx([0.5], [1.0], 400, 0.0, seed=0)
        pm = fit_arx(rec, 1)
        assert pm.h_bar[0] == pytest.approx(0.5, abs=1e-10)
        assert pm.g_bar[0] == pytest.approx(1.0, abs=1e-10)
        assert pm.residual_variance == pytest.approx(0.0, abs=1e-18)

    def test_consistent_on_noisy_arx1_with_extra_orders(self):
        rec = gen_arx([0.5], [1.0], 20000, 0.3, seed=1)
        pm = fit_arx(rec, 3)
        np.testing.assert_allclose(pm.h_bar, [0.5, 0.0, 0.0], atol=0.05)
        np.testing.assert_allclose(pm.g_bar, [1.0, 0.0, 0.0], atol=0.05)
        assert pm.residual_variance == pytest.approx(0.09, rel=0.1)

    def test_example1_first_coefficient_within_3_standard_errors(self):
        m = example1_system()
        rng = np.random.default_rng(2)
        n, order = 2000, 20
        u = rng.standard_normal(n)
        e = 2.0 * rng.standard_normal(n)
        rec = SignalRecord(u=u, y=simulate(m, u, e))
        pm = fit_arx(rec, order)
        # oracle: first predictor Markov parameter is C K
        target = (m.C @ m.K).item()
        # standard error from the regression itself
        total = len(rec)
        Phi = np.empty((total - order, 2 * order))
        for j in range(1, order + 1):
            Phi[:, j - 1] = rec.y[order - j : total - j]
            Phi[:, order + j - 1] = rec.u[order - j : total - j]
        cov = pm.residual_variance * np.linalg.inv(Phi.T @ Phi)
        se = np.sqrt(cov[0, 0])
        assert abs(pm.h_bar[0] - target) < 3 * se

    def test_white_noise_coefficients_vanish(self):
        rng = np.random.default_rng(3)
        rec = SignalRecord(u=rng.standard_normal(10000), y=rng.standard_normal(10000))
        pm = fit_arx(rec, 5)
        assert np.max(np.abs(pm.h_bar)) < 0.1
        assert np.max(np.abs(pm.g_bar)) < 0.1

    def test_error_rate_shrinks_with_sample_size(self):
        target = 0.5
        medians = []
        for n_total in (1000, 10000, 100000):
            errs = []
            for seed in range(20):
                pm = fit_arx(gen_arx([0.5], [1.0], n_total, 0.5, seed=seed), 5)
                errs.append(abs(pm.h_bar[0] - target))
            medians.append(np.median(errs))
        assert medians[0] > medians[1] > medians[2]

    def test_record_too_short(self):
        rec = gen_arx([0.5], [1.0], 50, 0.1, seed=4)
        with pytest.raises(ConfigError):
            fit_arx(rec, 10)

    def test_constant_input_not_exciting(self):
        rng = np.random.default_rng(5)
        rec = SignalRecord(u=np.ones(500), y=rng.standard_normal(500))
        with pytest.raises(ExcitationError):
            fit_arx(rec, 3)


class TestSelectOrderAic:
    def test_recovers_arx2_order(self):
        rec = gen_arx([0.4, 0.3], [1.0, -0.5], 3000, 0.02, seed=6)
        assert select_order_aic(rec, range(1, 11)) == 2

    def test_grid_of_one(self):
        rec = gen_arx([0.5], [1.0], 500, 0.1, seed=7)
        assert select_order_aic(rec, [4]) == 4

    def test_pure_noise_selects_smallest(self):
        rng = np.random.default_rng(8)
        rec = SignalRecord(u=rng.standard_normal(5000), y=rng.standard_normal(5000))
        assert select_order_aic(rec, range(2, 12)) == 2

    def test_scale_invariance(self):
        rec = gen_arx([0.4, 0.3], [1.0, -0.5], 2000, 0.5, seed=9)
        chosen = select_order_aic(rec, range(1, 15))
        for scale in (1e-3, 1e4):
            scaled = SignalRecord(u=rec.u, y=scale * rec.y)
            assert select_order_aic(scaled, range(1, 15)) == chosen

    def test_empty_grid(self):
        rec = gen_arx([0.5], [1.0], 500, 0.1, seed=10)
        with pytest.raises(ConfigError):
            select_order_aic(rec, [])

    def test_all_orders_unfittable(self):
        rec = gen_arx([0.5], [1.0], 50, 0.1, seed=11)
        with pytest.raises(ConfigError):
            select_order_aic(rec, [20, 30])


class TestMarkovRecursion:
    def test_first_term_passthrough(self):
        pm = PredictorMarkov(h_bar=[0.7, 0.1], g_bar=[0.0, 0.0], residual_variance=1.0)
        assert predictor_to_innovations(pm).h[0] == 0.7

    def test_scalar_oracle(self):
        # A=0.5, C=1, K=0.2 -> A_bar=0.3; predictor sequence [0.2, 0.06]
        # innovations sequence must be [CK, CAK] = [0.2, 0.1]
        pm = PredictorMarkov(h_bar=[0.2, 0.06], g_bar=[1.0, 0.3], residual_variance=1.0)
        np.testing.assert_allclose(predictor_to_innovations(pm).h, [0.2, 0.1], atol=1e-15)

    def test_zeros_stay_zero(self):
        pm = PredictorMarkov(h_bar=np.zeros(6), g_bar=np.zeros(6), residual_variance=0.0)
        np.testing.assert_array_equal(predictor_to_innovations(pm).h, np.zeros(6))

    def test_matches_direct_markov_for_random_models(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            m = random_stable_model(rng, n_x=int(rng.integers(1, 6)))
            pred = to_predictor_form(m)
            count = 15
            h_bar = [(pred.C @ np.linalg.matrix_power(pred.A_bar, j) @ pred.K).item()
                     for j in range(count)]
            pm = PredictorMarkov(h_bar=h_bar, g_bar=np.zeros(count), residual_variance=1.0)
            np.testing.assert_allclose(
                predictor_to_innovations(pm).h, markov_h(m, count), atol=1e-9
            )


class TestInputChannelRecursion:
    def test_first_term(self):
        pm = PredictorMarkov(h_bar=[0.2], g_bar=[1.0], residual_variance=1.0)
        assert predictor_to_innovations_g(pm)[0] == 1.0

    def test_scalar_oracle(self):
        # A=0.5, B=1, C=1, K=0.2: predictor g = [1, 0.3] -> innovations [CB, CAB] = [1, 0.5]
        pm = PredictorMarkov(h_bar=[0.2, 0.06], g_bar=[1.0, 0.3], residual_variance=1.0)
        np.testing.assert_allclose(predictor_to_innovations_g(pm), [1.0, 0.5], atol=1e-15)

    def test_zero_gain_passthrough(self):
        pm = PredictorMarkov(h_bar=np.zeros(4), g_bar=[1.0, 0.5, 0.25, 0.125],
                             residual_variance=1.0)
        np.testing.assert_array_equal(predictor_to_innovations_g(pm), pm.g_bar)

    def test_matches_direct_markov_for_random_models(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            m = random_stable_model(rng, n_x=int(rng.integers(1, 5)))
            pred = to_predictor_form(m)
            count = 12
            h_bar = [(pred.C @ np.linalg.matrix_power(pred.A_bar, j) @ pred.K).item()
                     for j in range(count)]
            g_bar = [(pred.C @ np.linalg.matrix_power(pred.A_bar, j) @ pred.B_bar).item()
                     for j in range(count)]
            pm = PredictorMarkov(h_bar=h_bar, g_bar=g_bar, residual_variance=1.0)
            np.testing.assert_allclose(
                predictor_to_innovations_g(pm), markov_g(m, count), atol=1e-9
            )
