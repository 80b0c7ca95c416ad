import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate, special

from critnet import ConvergenceError, CriticalitySpread, LinkParams, ParameterError, Regime, classify
from critnet import analytics as an
from critnet.laplace import talbot, talbot_mp


def _image(eta, lam, p):
    """Independent high-precision transcription of the Laplace image (tau = 1)."""
    def f(s):
        k = (mp.sqrt(eta**2 + 4 * s) - eta) / 2
        return p * k**2 * mp.exp(-lam * k) / s**2
    return f


class TestLaplaceDomain:
    def test_density_at_zero_imbalance(self):
        assert an.stationary_boundary_density(0.0, 100) == pytest.approx(0.01, rel=1e-15)

    def test_density_overloaded(self):
        assert an.stationary_boundary_density(0.01, 1000) == pytest.approx(0.01 / (1 - math.exp(-10)), rel=1e-14)
        assert an.stationary_boundary_density(0.01, 1000) == pytest.approx(0.01000045, rel=1e-6)

    def test_density_free_flow(self):
        assert an.stationary_boundary_density(-0.01, 1000) == pytest.approx(-0.01 / (1 - math.exp(10)), rel=1e-13)
        assert an.stationary_boundary_density(-0.01, 1000) == pytest.approx(4.54e-7, rel=1e-3)

    def test_density_continuous_through_zero(self):
        assert an.stationary_boundary_density(1e-12, 100) == pytest.approx(0.01, rel=1e-8)

    @pytest.mark.parametrize("eta,eps,ref", [(0, 1, 1.0), (0, 4, 0.5), (3, 1, (math.sqrt(13) + 3) / 2)])
    def test_resolvent(self, eta, eps, ref):
        assert an.resolvent(eta, 1.0, eps) == pytest.approx(ref, rel=1e-14)

    def test_resolvent_value(self):
        assert an.resolvent(3, 1.0, 1) == pytest.approx(3.3028, abs=1e-4)

    def test_resolvent_negative_branch(self):
        eta, eps = -0.3, 0.02
        ref = (math.sqrt(eta**2 + 4 * eps) + eta) / (2 * eps)
        assert an.resolvent(eta, 1.0, eps) == pytest.approx(ref, rel=1e-12)

    def test_image_values(self):
        assert an.laplace_loss_density(0.0, 0.0, 1.0, 100, 1.0) == pytest.approx(0.01, rel=1e-15)
        assert an.laplace_loss_density(1.0, 0.0, 1.0, 100, 1.0) == pytest.approx(0.01 * math.exp(-1), rel=1e-14)

    def test_image_monotone_decay(self):
        v = an.laplace_loss_density(np.linspace(0, 200, 50), 0.1, 1.0, 100, 0.5)
        assert np.all(np.diff(v) < 0) and v[-1] < 1e-10 * v[0]

    def test_image_rejects_bad_arguments(self):
        with pytest.raises(ParameterError):
            an.laplace_loss_density(1.0, 0.0, 1.0, 100, 0.0)
        with pytest.raises(ParameterError):
            an.laplace_loss_density(-1.0, 0.0, 1.0, 100, 1.0)


class TestClosedForms:
    def test_erfc_pair_by_forward_quadrature(self):
        # Laplace transform of erfc(L / (2 sqrt t)) in t is exp(-L sqrt(s)) / s.
        with mp.workdps(30):
            for s, L in ((mp.mpf("0.003"), 40), (mp.mpf("0.5"), 2), (mp.mpf("1e-5"), 500)):
                lhs = mp.quad(lambda t: mp.exp(-s * t) * mp.erfc(L / (2 * mp.sqrt(t))), [0, 1e3, 1e5, mp.inf])
                assert float(lhs / (mp.exp(-L * mp.sqrt(s)) / s)) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("eta", [0.0, 1e-2, -1e-2, 3e-3])
    def test_density_closed_form_against_mp_inversion(self, eta):
        c, T = 1000, 1e4
        link = LinkParams(1.0, eta, 1.0, c)
        p = float(an.stationary_boundary_density(eta, c))
        with mp.workdps(30):
            for lam in (0.0, 50.0, 300.0):
                ref = float(mp.invertlaplace(_image(eta, lam, mp.mpf(p)), T, method="talbot"))
                assert an.loss_density_exact(lam, T, link) == pytest.approx(ref, rel=1e-12)

    def test_survival_matches_quadrature_of_density(self):
        for eta in (0.0, 2e-3, -2e-3):
            link = LinkParams(1.0, eta, 1.0, 1000)
            f = lambda x: float(an.loss_density_exact(x, 1e4, link))
            for lam in (0.0, 100.0):
                ref = integrate.quad(f, lam, np.inf, epsabs=0, epsrel=1e-12)[0]
                assert an.loss_survival_exact(lam, 1e4, link) == pytest.approx(ref, rel=1e-9)

    def test_zero_imbalance_is_erfc(self):
        link = LinkParams(1.0, 0.0, 1.0, 100)
        lam = np.linspace(0, 2000, 41)
        np.testing.assert_allclose(an.loss_density_exact(lam, 1e4, link), 0.01 * special.erfc(lam / 200), rtol=1e-13)


class TestTalbot:
    def test_exponential(self):
        assert talbot(lambda s: 1 / (s + 1), 2.0) == pytest.approx(math.exp(-2), rel=1e-9)

    def test_multiprecision_agrees(self):
        assert float(talbot_mp(lambda s: 1 / (s + 1), 2.0)) == pytest.approx(math.exp(-2), rel=1e-20)


class TestInversion:
    @pytest.mark.parametrize("c", [100, 10_000])
    @pytest.mark.parametrize("K", [1e3, 1e6])
    def test_zero_imbalance_oracle(self, c, K):
        link = LinkParams(1.0, 0.0, 1.0, c)
        phi0 = K**-0.5
        lam = np.linspace(0, 20, 101) / phi0
        ref = special.erfc(lam * phi0 / 2) / c
        np.testing.assert_allclose(an.invert_laplace_pdf(lam, K, link), ref, rtol=1e-6, atol=0)

    @pytest.mark.parametrize("T", [10.0, 1e3, 1e6, 1e9])
    def test_value_at_origin(self, T):
        assert an.invert_laplace_pdf(0.0, T, LinkParams(1.0, 0.0, 1.0, 100)) == pytest.approx(0.01, rel=1e-9)

    def test_nonincreasing(self):
        v = an.invert_laplace_pdf(np.linspace(0, 5000, 200), 1e5, LinkParams(1.0, 0.0, 1.0, 100))
        assert np.all(v >= 0) and np.all(np.diff(v) <= 0)

    @pytest.mark.parametrize("eta", [1e-3, -1e-3, 1e-2, -1e-2, -0.3])
    def test_nonzero_imbalance_against_closed_form(self, eta):
        link = LinkParams(1.0, eta, 1.0, 1000)
        lam = np.linspace(0, 600, 61)
        ref = an.loss_density_exact(lam, 1e4, link)
        got = an.invert_laplace_pdf(lam, 1e4, link)
        keep = ref > 1e-200
        np.testing.assert_allclose(got[keep], ref[keep], rtol=1e-6)

    def test_scaled_time(self):
        link = LinkParams(4.0, 2e-3, 0.25, 4000)
        lam = np.array([0.0, 30.0, 150.0])
        np.testing.assert_allclose(an.invert_laplace_pdf(lam, 2500.0, link),
                                   an.loss_density_exact(lam, 2500.0, link), rtol=1e-6)

    def test_macroscopic_overload_reports_nonconvergence(self):
        with pytest.raises(ConvergenceError):
            an.invert_laplace_pdf(np.linspace(0, 1e6, 5), 1e6, LinkParams(1.0, 0.5, 1.0, 1000))

    def test_short_window_rejected(self):
        with pytest.raises(ParameterError):
            an.invert_laplace_pdf(0.0, 5.0, LinkParams(1.0, 0.0, 1.0, 100))

    def test_mass_image(self):
        link = LinkParams(1.0, 1e-3, 1.0, 1000)
        assert an.invert_laplace_mass(1e4, link) == pytest.approx(an.loss_mass_exact(1e4, link), rel=1e-8)


class TestNoLossWeight:
    def test_outside_small_loss_regime_raises(self):
        with pytest.raises(ConvergenceError):
            an.no_loss_weight(1e4, LinkParams(1.0, 0.0, 1.0, 100))

    def test_zero_imbalance_value(self):
        A = an.no_loss_weight(1e4, LinkParams(1.0, 0.0, 1.0, 10_000))
        assert A == pytest.approx(1 - 2 / math.sqrt(math.pi) * 1e-4 / 1e-2, abs=1e-9)
        assert A == pytest.approx(0.9887, abs=1e-4)

    def test_free_flow(self):
        assert an.no_loss_weight(1e4, LinkParams(1.0, -0.5, 1.0, 100)) == pytest.approx(1.0, abs=1e-12)

    def test_matches_closed_form(self):
        for eta in (-1e-3, 0.0, 1e-3):
            link = LinkParams(1.0, eta, 1.0, 2000)
            assert an.no_loss_weight(1e4, link) == pytest.approx(1 - an.loss_mass_exact(1e4, link), abs=1e-9)

    def test_lossy_mass_proportional_to_width(self):
        T, c = 1e4, 10**6
        gammas = np.geomspace(1e-4, 1e-3, 5)
        q = [1 - an.no_loss_weight(T, LinkParams(1.0, g, 1.0, c)) for g in gammas]
        slope = np.polyfit(np.log(gammas), np.log(q), 1)[0]
        assert slope == pytest.approx(1.0, abs=0.05)


class TestLinkLaw:
    def test_rescaling_rule(self):
        link = LinkParams(2.0, 1e-3, 0.5, 2000)
        T = 1e4
        phi0_sq = 1.0 / T  # base time tau = ell * tau_i = 1
        phi = np.array([0.0, 1e-3, 5e-3])
        ref = (2.0 / phi0_sq) * an.loss_density_exact(2.0 * phi / phi0_sq, T, link)
        np.testing.assert_allclose(an.link_loss_pdf(phi, T, link), ref, rtol=1e-6)
        assert an.window_phi0(T, link) == pytest.approx(0.01)

    def test_normalization(self):
        link = LinkParams(2.0, 5e-4, 0.5, 2000)
        T = 1e4
        A = an.no_loss_weight(T, link)
        mass = integrate.quad(lambda x: float(an.link_loss_pdf(x, T, link)), 0, 1, points=[0.01, 0.05],
                              epsabs=1e-13, limit=200)[0]
        assert A + mass == pytest.approx(1.0, abs=1e-6)

    def test_phi_out_of_range(self):
        with pytest.raises(ParameterError):
            an.link_loss_pdf(1.5, 1e4, LinkParams(1.0, 0.0, 1.0, 1000))

    def test_macroscopic_average(self):
        s = CriticalitySpread(1e-4)
        link = LinkParams(1.0, 0.0, 1.0, 1000)
        d = an.eta_averaged_pdf(np.array([0.0, 5e-5, 1e-4, 2e-4]), 1e10, link, s, "macroscopic")
        np.testing.assert_allclose(d, [0.0, 5e3, 5e3, 0.0])
        assert an.eta_averaged_no_loss(1e10, link, s, Regime.MACROSCOPIC) == 0.5

    def test_mesoscopic_average(self):
        s = CriticalitySpread(1e-4)
        link = LinkParams(1.0, 0.0, 1.0, 10_000)
        phi = np.array([1e-4, 1e-3])
        np.testing.assert_allclose(an.eta_averaged_pdf(phi, 1e5, link, s, "mesoscopic"),
                                   an.link_loss_pdf(phi, 1e5, LinkParams(1.0, 1e-4, 1.0, 10_000)))

    def test_crossover_has_no_average(self):
        with pytest.raises(ParameterError):
            an.eta_averaged_pdf(0.1, 1e4, LinkParams(1.0, 0.0, 1.0, 100), CriticalitySpread(1e-3), "crossover")

    def test_tail_at_plateau_edge(self):
        phi0 = 3e-3
        T = 1 / phi0**2
        assert an.tail_pdf(phi0, T, 10, 1e-4, 0.25) == pytest.approx(10 * 1e-4 / phi0**2, rel=1e-9)

    def test_tail_slope(self):
        T, phi0 = 1 / 9e-6, 3e-3
        v = an.tail_pdf(np.array([phi0, 2 * phi0]), T, 10, 1e-4, 0.25)
        assert math.log2(v[0] / v[1]) == pytest.approx(2.5)

    def test_tail_outside_validity(self):
        with pytest.raises(ParameterError):
            an.tail_pdf(1e-4, 1 / 9e-6, 10, 1e-4, 0.25)


class TestClassify:
    @pytest.mark.parametrize("phi0,regime", [(3e-3, Regime.MESOSCOPIC), (1e-5, Regime.MACROSCOPIC),
                                             (0.1, Regime.MICROSCOPIC)])
    def test_examples(self, phi0, regime):
        assert classify(1 / phi0**2, 1.0, 1e-4, 10) is regime

    def test_boundary_is_crossover(self):
        assert classify(1e4, 1.0, 1e-4, 10) is Regime.CROSSOVER

    def test_between_bands_is_crossover(self):
        # sqrt(T) = 5e3 lies between 1/gamma = 1e4 / a and 1/gamma.
        assert classify(2.5e7, 1.0, 1e-4, 10) is Regime.CROSSOVER

    def test_invalid(self):
        with pytest.raises(ParameterError):
            classify(0.5, 1.0, 1e-4, 10)
        with pytest.raises(ParameterError):
            classify(10.0, 1.0, 0.0, 10)
