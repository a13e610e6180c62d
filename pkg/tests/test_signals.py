"""Indicator recursions, spectra, and the EMA -> SMA -> band decompositions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trendlab import signals
from trendlab.errors import ParameterError, SpectrumError, TruncationError


class TestEmaStreaming:
    def test_constant_returns_fixed_point(self):
        # phi -> 1/sqrt(eta) when every return equals the volatility
        eta = 0.1
        state = signals.EmaState.initialize(eta, np.full((50, 1), 0.7))
        for _ in range(400):
            state = signals.ema_update(state, [0.7])
        assert state.phi[0] == pytest.approx(1.0 / math.sqrt(eta), rel=1e-6)
        assert np.sqrt(state.sigma2[0]) == pytest.approx(0.7, rel=1e-9)

    def test_eta_one_degenerate(self):
        state = signals.EmaState.initialize(1.0, np.array([[2.0]]))
        state = signals.ema_update(state, [3.0])
        # phi = r / sigma_prev exactly (previous sigma from the seed window)
        assert state.phi[0] == pytest.approx(3.0 / 2.0)
        state = signals.ema_update(state, [-1.0])
        assert state.phi[0] == pytest.approx(-1.0 / 3.0)

    def test_stationary_std_is_not_one(self):
        # the sqrt(eta) loading gives a stationary std of 1/sqrt(2-eta)
        # (~0.71), not the unit std sometimes claimed for this recursion
        eta = 1.0 / 120.0
        rng = np.random.default_rng(5)
        r = rng.standard_normal(200_000)
        phi = signals.ema_series(r, eta)
        warm = signals.warmup_length(eta)
        got = phi[warm:].std()
        assert 1.0 / math.sqrt(2.0 - eta) == pytest.approx(0.7086, abs=1e-4)
        assert 0.69 < got < 0.74
        assert abs(got - 1.0) > 0.2

    def test_streaming_matches_vectorized(self):
        rng = np.random.default_rng(8)
        r = rng.standard_normal((300, 4)) * 0.01
        eta = 0.05
        state = signals.EmaState.initialize(eta, r[: signals.seed_window(eta)])
        out = []
        for t in range(r.shape[0]):
            state = signals.ema_update(state, r[t])
            out.append(state.phi.copy())
        np.testing.assert_allclose(np.array(out), signals.ema_series(r, eta), rtol=1e-12)

    def test_zero_history_is_guarded(self):
        state = signals.EmaState.initialize(0.1, np.zeros((30, 1)))
        state = signals.ema_update(state, [0.0])
        assert np.isfinite(state.phi).all()
        state = signals.ema_update(state, [0.02])
        assert np.isfinite(state.phi).all()

    def test_non_finite_rejected(self):
        state = signals.EmaState.initialize(0.1, np.ones((30, 2)))
        with pytest.raises(ParameterError):
            signals.ema_update(state, [1.0, np.nan])

    def test_shape_mismatch(self):
        state = signals.EmaState.initialize(0.1, np.ones((30, 2)))
        with pytest.raises(ParameterError):
            signals.ema_update(state, [1.0])

    def test_warmup_flag(self):
        state = signals.EmaState.initialize(0.5, np.ones((30, 1)))
        assert state.in_warmup
        for _ in range(signals.warmup_length(0.5)):
            state = signals.ema_update(state, [0.1])
        assert not state.in_warmup


class TestMacd3:
    def test_zero_slope_weight(self):
        w1 = signals.solve_macd3_omega1((1 / 20, 1 / 120, 1 / 400), 1.0, 0.0)
        assert w1 == pytest.approx(-math.sqrt(20.0 / 120.0), rel=1e-12)

    def test_degenerate_weights_reduce_to_ema(self):
        rng = np.random.default_rng(3)
        r = rng.standard_normal(2000)
        got = signals.macd3_series(r, (1 / 20, 1 / 120, 1 / 400), (0.0, 1.0, 0.0))
        want = signals.ema_series(r, 1 / 120)
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_all_zero_weights(self):
        assert signals.macd3((1.0, 2.0, 3.0), (0.1, 0.2, 0.3), (0.0, 0.0, 0.0)) == 0.0

    def test_duplicate_etas_rejected(self):
        with pytest.raises(ParameterError):
            signals.macd3((1.0, 2.0, 3.0), (0.1, 0.1, 0.3), (1.0, 1.0, 0.0))

    def test_zero_slope_solves_constraint(self):
        etas = (1 / 20, 1 / 90, 1 / 400)
        w1 = signals.solve_macd3_omega1(etas, 1.0, 0.3)
        total = w1 * math.sqrt(etas[0]) + 1.0 * math.sqrt(etas[1]) + 0.3 * math.sqrt(etas[2])
        assert total == pytest.approx(0.0, abs=1e-15)


class TestSpectra:
    def test_mom(self):
        psi = signals.sensitivity_spectrum(signals.IndicatorSpec.mom(3), 6)
        np.testing.assert_array_equal(psi, [1, 1, 1, 0, 0, 0, 0])

    def test_sma(self):
        psi = signals.sensitivity_spectrum(signals.IndicatorSpec.sma(4), 5)
        np.testing.assert_allclose(psi, [1.0, 0.75, 0.5, 0.25, 0.0, 0.0])

    def test_ema_half(self):
        psi = signals.sensitivity_spectrum(signals.IndicatorSpec.ema(0.5), 3)
        s = math.sqrt(0.5)
        np.testing.assert_allclose(psi, [s, s / 2, s / 4, s / 8])

    def test_macd_zero_slope_values(self):
        spec = signals.IndicatorSpec.macd3((1 / 20, 1 / 120, 1 / 400), (0.0, 1.0, 0.0), zero_slope=True)
        psi = signals.sensitivity_spectrum(spec, 5)
        k = np.arange(6)
        want = -0.40824829 * math.sqrt(1 / 20) * (1 - 1 / 20) ** k + math.sqrt(1 / 120) * (
            1 - 1 / 120
        ) ** k
        np.testing.assert_allclose(psi, want, rtol=1e-6, atol=1e-8)
        assert psi[0] == pytest.approx(0.0, abs=1e-15)

    def test_nonlinear_kinds_unsupported(self):
        with pytest.raises(SpectrumError):
            signals.sensitivity_spectrum(signals.IndicatorSpec.cubic(0.01), 10)
        with pytest.raises(SpectrumError):
            signals.sensitivity_spectrum(signals.IndicatorSpec.bb_mixture(0.01, 100), 10)

    @pytest.mark.parametrize(
        "spec",
        [
            signals.IndicatorSpec.ema(0.3),
            signals.IndicatorSpec.mom(5),
            signals.IndicatorSpec.sma(7),
            signals.IndicatorSpec.ema_cross(0.4, 0.05),
            signals.IndicatorSpec.sma_cross(3, 9),
            signals.IndicatorSpec.macd3((1 / 10, 1 / 40, 1 / 160), (0.0, 1.0, 0.5), zero_slope=True),
        ],
        ids=lambda s: s.kind,
    )
    def test_impulse_response_equals_spectrum(self, spec):
        # a unit return at lag k must produce exactly psi[k]
        max_lag = 14
        psi = signals.sensitivity_spectrum(spec, max_lag)
        t_len = 40
        for k in range(max_lag + 1):
            r = np.zeros(t_len)
            r[t_len - 1 - k] = 1.0
            val = signals.indicator_series(spec, r, normalized=False)[-1]
            assert val == pytest.approx(psi[k], abs=1e-12)

    def test_linearity_in_frozen_vol_mode(self):
        rng = np.random.default_rng(11)
        r1, r2 = rng.standard_normal((2, 500))
        for spec in (signals.IndicatorSpec.ema(0.2), signals.IndicatorSpec.sma(9)):
            a, b = 1.7, -0.4
            lhs = signals.indicator_series(spec, a * r1 + b * r2, normalized=False)
            rhs = a * signals.indicator_series(spec, r1, normalized=False) + b * signals.indicator_series(
                spec, r2, normalized=False
            )
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestDecomposition:
    def test_weights_sum_and_shape(self):
        ns, w = signals.ema_to_sma_weights(1 / 112, 3000)
        assert w.sum() == pytest.approx(1.0, rel=1e-12)
        assert (w > 0).all() and ns[0] == 1 and ns[-1] == 3000

    def test_log_density_peak_near_two_over_eta(self):
        ns, w = signals.ema_to_sma_weights(1 / 112, 3000)
        peak = ns[np.argmax(ns * w)]
        assert 180 <= peak <= 260

    def test_eta_one_mass_on_first_window(self):
        ns, w = signals.ema_to_sma_weights(1.0, 5)
        assert w[0] == pytest.approx(1.0)
        assert np.abs(w[1:]).max() == 0.0

    def test_truncation_reported(self):
        with pytest.raises(TruncationError):
            signals.ema_to_sma_weights(1 / 112, 100)

    def test_reconstruction_error(self):
        rng = np.random.default_rng(2)
        r = rng.standard_normal(10_000)
        ema = signals.ema_of_returns(r, 1 / 112)
        rec = signals.reconstruct_ema_from_sma(r, 1 / 112, 3000)
        assert np.abs(ema[3000:] - rec[3000:]).max() <= 1e-6

    def test_sma_of_returns_definition(self):
        r = np.arange(1.0, 8.0)
        got = signals.sma_of_returns(r, 3)
        np.testing.assert_allclose(got[2:], [2.0, 3.0, 4.0, 5.0, 6.0])


class TestBollinger:
    def test_elementary_cases(self):
        assert signals.bb_elementary(0.5, 0.2) == 1.0
        assert signals.bb_elementary(-0.5, 0.7) == 0.0
        assert signals.bb_elementary(-0.9, 0.7) == -1.0
        assert signals.bb_elementary(0.0, 0.0) == 0.0

    def test_negative_band_rejected(self):
        with pytest.raises(ParameterError):
            signals.bb_elementary(0.1, -0.1)

    def test_band_integral_recovers_value(self):
        got = signals.bb_band_integral(0.37, delta_max=1.0, n_points=200_001)
        assert got == pytest.approx(0.37, abs=1.0 / (2 * 200_001) + 1e-12)

    def test_band_integral_vectorized(self):
        rng = np.random.default_rng(4)
        vals = signals.sma_of_returns(rng.standard_normal(3000), 50)[500:600]
        got = signals.bb_band_integral(vals, delta_max=1.0, n_points=400_001)
        np.testing.assert_allclose(got, vals, atol=1.0 / 400_001)

    def test_band_must_cover_value(self):
        with pytest.raises(ParameterError):
            signals.bb_band_integral(2.0, delta_max=1.0)

    def test_full_chain_ema_sma_bands(self):
        # EMA rebuilt via SMA mixture with each SMA replaced by its band integral
        rng = np.random.default_rng(9)
        r = rng.standard_normal(4000)
        eta, max_n = 1 / 30, 800
        ns, w = signals.ema_to_sma_weights(eta, max_n)
        t_slice = slice(1500, 1600)
        rec = np.zeros(100)
        for n, wn in zip(ns, w):
            sma = signals.sma_of_returns(r, n)[t_slice]
            rec += wn * signals.bb_band_integral(sma, delta_max=4.0, n_points=400_001)
        ema = signals.ema_of_returns(r, eta)[t_slice]
        assert np.abs(rec - ema).max() <= 1e-5


class TestCubic:
    def test_values(self):
        assert signals.nonlinear_cubic(0.0) == 0.0
        assert signals.nonlinear_cubic(1.0, 0.33) == pytest.approx(0.67)

    def test_argmax_location(self):
        # d/dphi (phi - c phi^3) = 0 at phi = 1/sqrt(3c); decreasing beyond
        c = 0.33
        grid = np.linspace(0.0, 3.0, 20_000)
        vals = signals.nonlinear_cubic(grid, c)
        top = grid[np.argmax(vals)]
        assert top == pytest.approx(1.0 / math.sqrt(3 * c), abs=1e-3)
        assert signals.nonlinear_cubic(top + 0.5, c) < signals.nonlinear_cubic(top, c)

    @settings(max_examples=40, deadline=None)
    @given(phi=st.floats(-3, 3), c=st.floats(0.0, 1.0))
    def test_matches_polynomial(self, phi, c):
        assert signals.nonlinear_cubic(phi, c) == pytest.approx(phi - c * phi**3, rel=1e-12, abs=1e-12)
