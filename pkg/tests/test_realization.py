import numpy as np
import pytest
from scipy.linalg import subspace_angles

from parsimid import (
    ConfigError,
    InnovationsMarkov,
    RangeEstimate,
    RankError,
    RealizationConfig,
    SignalRecord,
    assemble_blocks,
    estimate_bk,
    extract_ac,
    fit_arx,
    fit_metric,
    identify,
    impulse_response,
    markov_g,
    markov_h,
    orth_projection_complement,
    psd_sqrt,
    simulate,
    weight_w2,
    weighted_svd_realize,
)
from parsimid.benchmark import EXAMPLE2_GAMMA, example1_system, example2_system
from parsimid.realization import _weighting_markov

from helpers import gamma_f, random_stable_model, true_gamma_lp


class TestPsdSqrt:
    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(4)), np.eye(4), atol=1e-12)

    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)

    def test_square_reproduces_random_psd(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((12, 20))
        M = X @ X.T
        root = psd_sqrt(M)
        np.testing.assert_allclose(root @ root, M, atol=1e-10 * np.linalg.norm(M))
        np.testing.assert_allclose(root, root.T, atol=1e-12)

    def test_small_negative_clamped(self):
        M = np.diag([1.0, -1e-14])
        root = psd_sqrt(M)
        assert root[1, 1] == 0.0

    def test_indefinite_raises(self):
        with pytest.raises(RankError):
            psd_sqrt(np.diag([1.0, -0.5]))


class TestWeightW2:
    def test_squares_to_projected_gram(self):
        rng = np.random.default_rng(1)
        rec = SignalRecord(u=rng.standard_normal(300), y=rng.standard_normal(300))
        blocks = assemble_blocks(rec, f=4, p=5)
        W2 = weight_w2(blocks)
        proj = orth_projection_complement(blocks.U_f)
        Zp = proj.apply(blocks.Z_p)
        target = Zp @ Zp.T
        np.testing.assert_allclose(W2 @ W2, target, atol=1e-8 * np.linalg.norm(target))


class TestWeightedSvd:
    @staticmethod
    def exact_estimate(m, f, p):
        return RangeEstimate(
            gamma_lp=true_gamma_lp(m, f, p), g_rows=(), method_tag="classical", f=f, p=p
        )

    def test_exact_rank_input_recovers_column_space(self):
        rng = np.random.default_rng(2)
        m = random_stable_model(rng, n_x=3)
        cfg = RealizationConfig(n_x=3, f=8, p=6, method="classical", w2_mode="identity")
        Gh, svals = weighted_svd_realize(self.exact_estimate(m, 8, 6), cfg)
        angles = subspace_angles(Gh, gamma_f(m.A, m.C, 8))
        assert np.max(angles) < 1e-8
        assert svals.size == 8

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(3)
        m = random_stable_model(rng, n_x=2)
        est = self.exact_estimate(m, 6, 5)
        cfg = RealizationConfig(n_x=2, f=6, p=5, method="classical", w2_mode="identity")
        G1, _ = weighted_svd_realize(est, cfg)
        est2 = RangeEstimate(gamma_lp=2.0 * est.gamma_lp, g_rows=(), method_tag="classical", f=6, p=5)
        G2, _ = weighted_svd_realize(est2, cfg)
        np.testing.assert_allclose(np.abs(G2), np.sqrt(2.0) * np.abs(G1), atol=1e-9)
        assert np.max(subspace_angles(G1, G2)) < 1e-10

    def test_w2_modes_agree_on_exact_rank_input(self):
        rng = np.random.default_rng(4)
        m = random_stable_model(rng, n_x=2)
        u = rng.standard_normal(800)
        rec = SignalRecord(u=u, y=simulate(m, u))
        blocks = assemble_blocks(rec, f=6, p=8)
        est = self.exact_estimate(m, 6, 8)
        cfg_w = RealizationConfig(n_x=2, f=6, p=8, method="classical", w2_mode="zp_projected")
        cfg_i = RealizationConfig(n_x=2, f=6, p=8, method="classical", w2_mode="identity")
        Gw, _ = weighted_svd_realize(est, cfg_w, weight_w2(blocks))
        Gi, _ = weighted_svd_realize(est, cfg_i)
        assert np.max(subspace_angles(Gw, Gi)) < 1e-8

    def test_rank_error_lists_spectrum(self):
        est = RangeEstimate(
            gamma_lp=np.outer(np.arange(1.0, 5.0), np.ones(6)), g_rows=(),
            method_tag="classical", f=4, p=3,
        )
        cfg = RealizationConfig(n_x=2, f=4, p=3, method="classical", w2_mode="identity")
        with pytest.raises(RankError, match="singular values"):
            weighted_svd_realize(est, cfg)

    def test_missing_weight_matrix(self):
        est = self.exact_estimate(example1_system(), 6, 5)
        cfg = RealizationConfig(n_x=2, f=6, p=5, method="classical", w2_mode="zp_projected")
        with pytest.raises(ConfigError):
            weighted_svd_realize(est, cfg, None)

    def test_noise_free_pipeline_singular_gap(self):
        m = example1_system()
        rng = np.random.default_rng(5)
        u = rng.standard_normal(2000)
        rec = SignalRecord(u=u, y=simulate(m, u))
        cfg = RealizationConfig(n_x=2, f=10, p=20, method="parsim")
        result = identify(rec, cfg)
        s = result.singular_values
        assert s[2] / s[1] < 1e-6


class TestExtractAc:
    def test_scalar_shift(self):
        Gamma = np.array([[1.0], [0.5], [0.25]])
        A, C = extract_ac(Gamma, 1)
        assert A[0, 0] == pytest.approx(0.5, abs=1e-12)
        assert C[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_similarity_invariant_eigenvalues(self):
        rng = np.random.default_rng(6)
        m = random_stable_model(rng, n_x=3)
        T = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        Gamma = gamma_f(m.A, m.C, 7) @ T
        A, C = extract_ac(Gamma, 3)
        np.testing.assert_allclose(
            np.sort_complex(np.linalg.eigvals(A)),
            np.sort_complex(np.linalg.eigvals(m.A)),
            atol=1e-9,
        )

    def test_example2_double_pole(self):
        m, _ = example2_system()
        A, _ = extract_ac(gamma_f(m.A, m.C, 7), 2)
        roots = np.roots([1.0, -2 * EXAMPLE2_GAMMA, EXAMPLE2_GAMMA**2])
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvals(A).real), np.sort(roots.real), atol=1e-8
        )
        assert np.max(np.abs(np.linalg.eigvals(A).imag)) < 1e-8

    def test_too_few_rows(self):
        with pytest.raises(ConfigError):
            extract_ac(np.ones((2, 2)), 2)

    def test_rank_deficient_top_block(self):
        Gamma = np.zeros((4, 2))
        Gamma[:, 0] = [1.0, 0.5, 0.25, 0.125]
        with pytest.raises(RankError):
            extract_ac(Gamma, 2)


class TestEstimateBK:
    @staticmethod
    def exact_bank_estimate(m, f, p):
        g = markov_g(m, f)
        rows = tuple(
            np.append(g[: i - 1][::-1], m.D[0, 0]) for i in range(1, f + 1)
        )
        return RangeEstimate(
            gamma_lp=np.zeros((f, 2 * p)), g_rows=rows, method_tag="parsim", f=f, p=p
        )

    def test_exact_markov_inputs_recover_gains(self):
        rng = np.random.default_rng(7)
        m = random_stable_model(rng, n_x=3)
        est = self.exact_bank_estimate(m, 8, 5)
        h = InnovationsMarkov(h=markov_h(m, 10))
        B, K = estimate_bk(m.A, m.C, est, h)
        np.testing.assert_allclose(B, m.B, atol=1e-9)
        np.testing.assert_allclose(K, m.K, atol=1e-9)

    def test_zero_estimates_give_zero_gains(self):
        rng = np.random.default_rng(8)
        m = random_stable_model(rng, n_x=2)
        est = RangeEstimate(
            gamma_lp=np.zeros((5, 6)),
            g_rows=tuple(np.zeros(i) for i in range(1, 6)),
            method_tag="parsim", f=5, p=3,
        )
        B, K = estimate_bk(m.A, m.C, est, InnovationsMarkov(h=np.zeros(6)))
        np.testing.assert_array_equal(B, np.zeros((2, 1)))
        np.testing.assert_array_equal(K, np.zeros((2, 1)))

    def test_fallback_to_input_sequence_when_no_rows(self):
        rng = np.random.default_rng(9)
        m = random_stable_model(rng, n_x=2)
        est = RangeEstimate(
            gamma_lp=np.zeros((5, 6)), g_rows=(), method_tag="classical", f=5, p=3
        )
        h = InnovationsMarkov(h=markov_h(m, 8), g=markov_g(m, 8))
        B, K = estimate_bk(m.A, m.C, est, h)
        np.testing.assert_allclose(B, m.B, atol=1e-9)

    def test_no_input_information(self):
        rng = np.random.default_rng(10)
        m = random_stable_model(rng, n_x=2)
        est = RangeEstimate(
            gamma_lp=np.zeros((5, 6)), g_rows=(), method_tag="classical", f=5, p=3
        )
        with pytest.raises(ConfigError):
            estimate_bk(m.A, m.C, est, InnovationsMarkov(h=markov_h(m, 8)))

    def test_example1_noise_free_realization_impulse(self):
        m = example1_system()
        rng = np.random.default_rng(11)
        u = rng.standard_normal(2000)
        rec = SignalRecord(u=u, y=simulate(m, u))
        result = identify(rec, RealizationConfig(n_x=2, f=10, p=20, method="parsim"))
        got = impulse_response(result.model, 10)
        np.testing.assert_allclose(got, impulse_response(m, 10), atol=1e-6)
        np.testing.assert_allclose(got[:4], [0.0, 0.21, 0.196, -0.0504], atol=1e-6)


class TestIdentify:
    def test_noise_free_fit_all_bank_methods(self):
        m = example1_system()
        rng = np.random.default_rng(12)
        u = rng.standard_normal(2000)
        rec = SignalRecord(u=u, y=simulate(m, u))
        g_true = impulse_response(m, 100)
        for method in ("parsim", "parsim_opt"):
            result = identify(rec, RealizationConfig(n_x=2, f=10, p=20, method=method))
            fit = fit_metric(g_true, impulse_response(result.model, 100))
            assert fit > 99.9

    def test_injected_weights_reproduce_default(self):
        m = example1_system()
        rng = np.random.default_rng(13)
        u = rng.standard_normal(1500)
        e = 2.0 * rng.standard_normal(1500)
        rec = SignalRecord(u=u, y=simulate(m, u, e))
        cfg = RealizationConfig(n_x=3, f=10, p=12, method="parsim_opt")
        default = identify(rec, cfg)
        injected = identify(
            rec, cfg, weighting_markov=_weighting_markov(rec, cfg.p, fit_arx(rec, cfg.p))
        )
        np.testing.assert_array_equal(injected.model.A, default.model.A)
        np.testing.assert_array_equal(injected.model.B, default.model.B)
        np.testing.assert_array_equal(injected.model.K, default.model.K)

    def test_ssarx_converts_to_innovations_form(self):
        rng = np.random.default_rng(14)
        m = random_stable_model(rng, n_x=2, k_scale=0.2)
        u = rng.standard_normal(5000)
        e = 0.1 * rng.standard_normal(5000)
        rec = SignalRecord(u=u, y=simulate(m, u, e))
        result = identify(rec, RealizationConfig(n_x=2, f=8, p=15, method="ssarx"))
        fit = fit_metric(impulse_response(m, 80), impulse_response(result.model, 80))
        assert fit > 90.0
        assert result.diagnostics["stable"]

    def test_classical_method_runs(self):
        rng = np.random.default_rng(15)
        m = random_stable_model(rng, n_x=2, k_scale=0.1)
        u = rng.standard_normal(4000)
        e = 0.1 * rng.standard_normal(4000)
        rec = SignalRecord(u=u, y=simulate(m, u, e))
        result = identify(rec, RealizationConfig(n_x=2, f=8, p=15, method="classical"))
        fit = fit_metric(impulse_response(m, 80), impulse_response(result.model, 80))
        assert fit > 80.0

    def test_stage_labels_on_errors(self):
        rec = SignalRecord(u=np.ones(30), y=np.ones(30))
        with pytest.raises(ConfigError, match="blocks:"):
            identify(rec, RealizationConfig(n_x=2, f=20, p=20, method="parsim"))

    def test_diagnostics_contents(self):
        m = example1_system()
        rng = np.random.default_rng(16)
        u = rng.standard_normal(1200)
        e = 2.0 * rng.standard_normal(1200)
        rec = SignalRecord(u=u, y=simulate(m, u, e))
        result = identify(rec, RealizationConfig(n_x=3, f=10, p=10, method="parsim"))
        diag = result.diagnostics
        for key in ("method", "stable", "spectral_radius", "arx_residual_variance",
                    "svd_tail_fraction", "shift_residual_rms", "markov_last_row"):
            assert key in diag
        assert isinstance(diag["stable"], bool)
        assert diag["markov_last_row"].size == 10

    def test_noise_free_exactness_random_models(self):
        # reachable/observable stable models, exciting input, no noise:
        # both bank methods recover the impulse response almost exactly
        rng = np.random.default_rng(17)
        checked = 0
        while checked < 5:
            n_x = int(rng.integers(1, 5))
            m = random_stable_model(rng, n_x=n_x, k_scale=0.2)
            u = rng.standard_normal(2000)
            rec = SignalRecord(u=u, y=simulate(m, u))
            g_true = impulse_response(m, 50)
            for method in ("parsim", "parsim_opt"):
                cfg = RealizationConfig(n_x=n_x, f=n_x + 2, p=20, method=method)
                result = identify(rec, cfg)
                g_hat = impulse_response(result.model, 50)
                rel = np.linalg.norm(g_hat - g_true) / np.linalg.norm(g_true)
                assert rel < 1e-5, f"{method} n_x={n_x}: {rel}"
            checked += 1

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            RealizationConfig(n_x=0, f=10, p=5)
        with pytest.raises(ConfigError):
            RealizationConfig(n_x=10, f=10, p=5)
        with pytest.raises(ConfigError):
            RealizationConfig(n_x=2, f=10, p=5, method="other")
        with pytest.raises(ConfigError):
            RealizationConfig(n_x=2, f=10, p=5, w2_mode="other")
