import math

import numpy as np
import pytest

from kronfit import (
    ParameterError,
    circulant_spectrum,
    embed_batch,
    empirical_distance,
    make_embedder,
    spectral_report,
    stable_rank,
    theoretical_distance,
    theoretical_stable_rank,
)

SQRT_PI = math.sqrt(math.pi)


def wrap_grid(n):
    return (np.arange(n) + 0.5) / n


class TestStableRank:
    def test_identity(self):
        assert stable_rank(np.eye(64)) == pytest.approx(64.0)

    def test_rank_one_outer_product(self, rng):
        u, v = rng.standard_normal(40), rng.standard_normal(30)
        assert stable_rank(np.outer(u, v)) == pytest.approx(1.0, abs=1e-12)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ParameterError):
            stable_rank(np.zeros((8, 8)))

    def test_gauss_matches_closed_form(self):
        e = make_embedder("gauss", width_sigma=0.01, num_features=1024)
        sr = stable_rank(embed_batch(e, wrap_grid(1024)))
        assert sr == pytest.approx(1.0 / (2 * SQRT_PI * 0.01), rel=0.05)


class TestSpectralReport:
    def test_report_invariants(self, rng):
        e = make_embedder("tri", width_sigma=0.1, num_features=128)
        m = embed_batch(e, wrap_grid(128))
        rep = spectral_report(m, scale=e.sampling_interval)
        assert 1.0 <= rep.stable_rank <= rep.numerical_rank + 1e-9
        assert rep.numerical_rank <= min(m.shape)
        assert np.all(np.diff(rep.singular_values) <= 0)
        np.testing.assert_allclose(rep.gram, rep.gram.T, atol=1e-12)

    def test_gram_entries_approximate_distance(self):
        e = make_embedder("gauss", width_sigma=0.1, num_features=512)
        xs = np.array([0.3, 0.45])
        rep = spectral_report(embed_batch(e, xs), scale=e.sampling_interval)
        assert rep.gram[0, 1] == pytest.approx(theoretical_distance(e, 0.15), rel=1e-6)


class TestCirculantSpectrum:
    def test_constant_row(self):
        spec = circulant_spectrum(np.ones(32))
        assert spec[0] == pytest.approx(32.0)
        np.testing.assert_allclose(spec[1:], 0.0, atol=1e-12)

    def test_impulse_row_flat_spectrum(self):
        row = np.zeros(64)
        row[0] = 1.0
        spec = circulant_spectrum(row)
        np.testing.assert_allclose(spec, 1.0, atol=1e-12)
        assert np.sum(spec**2) / spec[0] ** 2 == pytest.approx(64.0)

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            circulant_spectrum(np.array([]))

    def test_matches_svd_for_wrap_gauss(self):
        # d = N = 256, coordinates aligned with the sampling grid
        e = make_embedder("gauss", width_sigma=0.05, num_features=256)
        m = embed_batch(e, np.arange(256) / 256)
        spec = circulant_spectrum(m[0, :])
        sr_fft = float(np.sum(spec**2) / spec[0] ** 2)
        assert abs(sr_fft - stable_rank(m)) / stable_rank(m) < 0.01

    @pytest.mark.parametrize("kind,sigma", [("gauss", 0.05), ("tri", 0.05), ("rect", 0.05)])
    def test_matches_svd_within_two_percent(self, kind, sigma):
        e = make_embedder(kind, width_sigma=sigma, num_features=256)
        m = embed_batch(e, np.arange(256) / 256)
        spec = circulant_spectrum(m[0, :])
        sr_fft = float(np.sum(spec**2) / spec[0] ** 2)
        sr_svd = stable_rank(m)
        assert abs(sr_fft - sr_svd) / sr_svd <= 0.02


class TestEmpiricalDistance:
    def test_zero_delta_is_scaled_norm_and_maximal(self):
        e = make_embedder("gauss", width_sigma=0.1, num_features=256)
        from kronfit import embed_scalar

        peak = empirical_distance(e, 0.0)
        assert peak == pytest.approx(e.sampling_interval * np.sum(embed_scalar(e, 0.25) ** 2), rel=1e-9)
        for delta in (0.05, 0.1, 0.3):
            assert empirical_distance(e, delta) <= peak + 1e-12

    def test_rect_vanishes_beyond_width(self):
        e = make_embedder("rect", width_sigma=0.1, num_features=512)
        assert empirical_distance(e, 0.2) == 0.0
        assert empirical_distance(e, 0.3) == 0.0

    def test_gauss_matches_closed_form(self):
        e = make_embedder("gauss", width_sigma=0.1, num_features=1024)
        emp = empirical_distance(e, 0.2)
        assert emp == pytest.approx(SQRT_PI * 0.1 * math.exp(-0.04 / 0.04), rel=0.02)

    def test_dimension_override(self):
        e = make_embedder("gauss", width_sigma=0.1, num_features=64)
        fine = empirical_distance(e, 0.1, d=2048)
        assert fine == pytest.approx(theoretical_distance(e, 0.1), rel=1e-4)

    def test_clip_mode_single_center_position(self):
        e = make_embedder("gauss", width_sigma=0.1, num_features=512, boundary="clip")
        val = empirical_distance(e, 0.1)
        assert val == pytest.approx(theoretical_distance(e, 0.1), rel=0.02)

    def test_delta_out_of_range(self):
        e = make_embedder("gauss", width_sigma=0.1, num_features=64)
        with pytest.raises(ParameterError):
            empirical_distance(e, 1.5)


class TestClosedForms:
    def test_stable_rank_values(self):
        gauss = make_embedder("gauss", width_sigma=0.01, num_features=64)
        assert theoretical_stable_rank(gauss, 1024) == pytest.approx(28.209, abs=0.001)
        sine = make_embedder("sine", num_features=64)
        assert theoretical_stable_rank(sine, 512) == 2.0
        tri = make_embedder("tri", width_sigma=0.5, num_features=64)
        assert theoretical_stable_rank(tri, 1) == 1.0  # N caps the formula
        rect = make_embedder("rect", width_sigma=0.1, num_features=64)
        assert theoretical_stable_rank(rect, 1024) == pytest.approx(10.0)

    def test_rff_stable_rank_floor(self):
        # a nonzero matrix has stable rank >= 1, so tiny frequency spreads clamp to 1
        rff = make_embedder("rff", freq_sigma=0.1, num_features=64, seed=0)
        assert theoretical_stable_rank(rff, 1024) == 1.0
        wide = make_embedder("rff", freq_sigma=5.0, num_features=64, seed=0)
        assert theoretical_stable_rank(wide, 1024) == pytest.approx(math.sqrt(2 * math.pi) * 5.0)

    def test_unsupported_kind_rejected(self):
        for kind in ("linf", "logf"):
            e = make_embedder(kind, freq_sigma=4.0, num_features=16)
            with pytest.raises(ParameterError):
                theoretical_stable_rank(e, 64)
            with pytest.raises(ParameterError):
                theoretical_distance(e, 0.1)

    def test_distance_values(self):
        tri = make_embedder("tri", width_sigma=1.0, num_features=16)
        assert theoretical_distance(tri, 1.0) == 0.0  # support boundary
        gauss = make_embedder("gauss", width_sigma=0.1, num_features=16)
        assert theoretical_distance(gauss, 0.0) == pytest.approx(0.17725, abs=1e-5)
        rff = make_embedder("rff", freq_sigma=1.0, num_features=16, seed=0)
        assert theoretical_distance(rff, 0.0) == pytest.approx(2.5066, abs=1e-4)


class TestEmbedderFamilies:
    def test_gauss_saturation_monotone(self):
        # stable rank grows with the coordinate count until it hits the plateau
        e0 = make_embedder("gauss", width_sigma=0.05, num_features=16)
        prev = 0.0
        for n in (16, 32, 64, 128, 256, 512):
            e = e0.with_num_features(n)
            sr = stable_rank(embed_batch(e, wrap_grid(n)))
            assert sr >= prev - 1e-9
            assert sr <= theoretical_stable_rank(e, n) + 0.02
            prev = sr
        assert prev == pytest.approx(theoretical_stable_rank(e0, 512), rel=0.01)

    def test_sine_numerical_rank_at_most_two(self):
        e = make_embedder("sine", num_features=512)
        rep = spectral_report(embed_batch(e, wrap_grid(512)))
        assert rep.numerical_rank <= 2

    def test_square_and_sine_ranks_are_small_and_close(self):
        # the square wave's odd harmonics put its stable rank at pi^2/4 ~ 2.47
        # against the sine's exact 2; both stay flat as N grows
        for n in (128, 256, 512):
            xs = wrap_grid(n)
            sr_sine = stable_rank(embed_batch(make_embedder("sine", num_features=n), xs))
            sr_square = stable_rank(embed_batch(make_embedder("square", num_features=n), xs))
            assert sr_sine == pytest.approx(2.0, abs=1e-6)
            assert sr_square == pytest.approx(math.pi**2 / 4, rel=0.01)
            assert abs(sr_square - sr_sine) / sr_square < 0.25

    def test_gauss_rff_equivalence_condition(self):
        # pairing sigma_g * sigma_f = 1 / (2 sqrt(2) pi) equates both the
        # stable-rank plateaus and the distance decay rates exactly
        sigma_g = 0.1
        sigma_f = 1.0 / (2 * math.sqrt(2) * math.pi * sigma_g)
        n = 1024
        gauss = make_embedder("gauss", width_sigma=sigma_g, num_features=n)
        rff = make_embedder("rff", freq_sigma=sigma_f, num_features=n // 2, seed=0)

        th_g = theoretical_stable_rank(gauss, n)
        th_f = theoretical_stable_rank(rff, n)
        assert abs(th_g - th_f) / th_g < 1e-12

        sr_g = stable_rank(embed_batch(gauss, wrap_grid(n)))
        assert sr_g == pytest.approx(th_g, rel=0.005)

        deltas = np.linspace(0.0, 0.3, 61)
        d_g = np.array([empirical_distance(gauss, float(t)) for t in deltas])
        d_g /= d_g[0]
        d_f_theory = np.array([theoretical_distance(rff, float(t)) for t in deltas])
        d_f_theory /= d_f_theory[0]
        assert np.max(np.abs(d_g - d_f_theory)) < 0.05

    def test_gauss_rff_equivalence_sampled(self):
        # a single draw of 512 frequencies carries Monte-Carlo noise, so the
        # sampled embedder tracks its Gaussian twin only loosely
        sigma_g = 0.1
        sigma_f = 1.0 / (2 * math.sqrt(2) * math.pi * sigma_g)
        n = 1024
        gauss = make_embedder("gauss", width_sigma=sigma_g, num_features=n)
        rff = make_embedder("rff", freq_sigma=sigma_f, num_features=n // 2, seed=0)
        sr_g = stable_rank(embed_batch(gauss, wrap_grid(n)))
        sr_f = stable_rank(embed_batch(rff, wrap_grid(n)))
        assert abs(sr_f - sr_g) / sr_g < 0.20

        deltas = np.linspace(0.0, 0.3, 61)
        d_g = np.array([empirical_distance(gauss, float(t)) for t in deltas])
        d_f = np.array([empirical_distance(rff, float(t)) for t in deltas])
        assert np.max(np.abs(d_g / d_g[0] - d_f / d_f[0])) < 0.12
