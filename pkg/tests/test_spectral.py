import numpy as np
import pytest

from wschebor.errors import ParameterError
from wschebor.increments import unit_scale_process
from wschebor.mollifiers import (
    kernel_by_id,
    kernel_ou_bessel,
    kernel_ou_exponential,
    kernel_psi1,
    kernel_psi2,
)
from wschebor.paths import simulate_brownian
from wschebor.spectral import (
    covariance_from_density,
    periodogram,
    sigma_sq,
    spectral_density,
    verify_ou_match,
)


class TestSpectralDensity:
    def test_ou_closed_form(self):
        d = spectral_density(kernel_ou_exponential(), 0.5)
        lam = np.array([0.0, 0.5, 1.0, 3.0])
        assert np.allclose(d.eval(lam), 1.0 / (np.pi * (1.0 + lam ** 2)), atol=1e-12)
        assert abs(d.sup_value - 1.0 / np.pi) < 1e-10
        assert d.continuous_at_zero

    def test_forward_difference_closed_form(self):
        d = spectral_density(kernel_psi1(), 0.5)
        lam = np.array([0.5, 1.0, np.pi])
        target = (np.sin(lam / 2.0) / (lam / 2.0)) ** 2 / (2.0 * np.pi)
        assert np.allclose(d.eval(lam), target, atol=1e-12)
        assert abs(d.eval(np.array([0.0]))[0] - 1.0 / (2.0 * np.pi)) < 1e-12

    def test_evenness_and_decay(self):
        for kid, h in (("psi1", 0.5), ("psi2", 0.7), ("ou-exp", 0.5)):
            d = spectral_density(kernel_by_id(kid), h)
            lam = np.array([0.3, 1.7, 9.0])
            assert np.allclose(d.eval(lam), d.eval(-lam), atol=1e-12)
            assert d.eval(np.array([1e3]))[0] < 1e-4
            assert d.eval(np.array([1e4]))[0] < 1e-6

    def test_discontinuous_at_zero_above_half(self):
        d = spectral_density(kernel_psi1(), 0.7)
        assert not d.continuous_at_zero
        assert d.sup_value == np.inf

    def test_admissible_kernel_above_half(self):
        d = spectral_density(kernel_psi2(), 0.9)
        assert d.continuous_at_zero
        assert np.isfinite(d.sup_value)


class TestCovariance:
    def test_slepian_triangle(self):
        d = spectral_density(kernel_psi1(), 0.5)
        for t, target in ((0.25, 0.75), (0.5, 0.5), (0.75, 0.25), (1.0, 0.0), (2.0, 0.0)):
            assert abs(covariance_from_density(d, t) - target) < 1e-7, t

    def test_ou_exponential_covariance(self):
        d = spectral_density(kernel_ou_exponential(), 0.5)
        for t in (0.5, 1.0, 2.0):
            assert abs(covariance_from_density(d, t) - np.exp(-t)) < 1e-9

    def test_variance_equals_integral(self):
        d = spectral_density(kernel_ou_exponential(), 0.5)
        assert abs(covariance_from_density(d, 0.0) - 1.0) < 1e-9

    def test_refuses_unbounded_density(self):
        d = spectral_density(kernel_psi1(), 0.7)
        with pytest.raises(ParameterError):
            covariance_from_density(d, 0.5)


class TestSigmaSq:
    def test_atom_sums_exact(self):
        assert sigma_sq(kernel_psi1(), 0.5) == 1.0
        assert sigma_sq(kernel_psi2(), 0.5) == 0.5
        assert sigma_sq(kernel_psi1(), 0.3) == 1.0

    def test_ou_exponential_unit_variance(self):
        assert abs(sigma_sq(kernel_ou_exponential(), 0.5) - 1.0) < 1e-4

    @pytest.mark.parametrize("kid,hs", [("psi1", (0.3, 0.5)), ("psi2", (0.3, 0.5, 0.7))])
    def test_consistency_with_density_integral(self, kid, hs):
        k = kernel_by_id(kid)
        for h in hs:
            d = spectral_density(k, h)
            assert abs(d.variance - sigma_sq(k, h)) < 1e-4, (kid, h)

    def test_rejects_kernel_without_derivative(self):
        with pytest.raises(ParameterError):
            sigma_sq(kernel_ou_bessel(), 0.5)


class TestOuMatch:
    def test_exponential_kernel(self):
        rep = verify_ou_match(kernel_ou_exponential(), [0.0, 1.0, 2.0],
                              replicas=200, horizon=50.0, seed=0)
        assert rep.within(4.0)
        lag0 = rep.checks[0]
        assert abs(lag0.estimate - 1.0) <= 4.0 * lag0.stderr

    def test_bessel_kernel(self):
        rep = verify_ou_match(kernel_ou_bessel(), [0.0, 1.0],
                              replicas=100, horizon=50.0, seed=3)
        assert rep.within(4.0)

    def test_empty_lags(self):
        rep = verify_ou_match(kernel_ou_exponential(), [], replicas=4)
        assert rep.checks == []

    def test_rejects_other_kernels(self):
        with pytest.raises(ParameterError):
            verify_ou_match(kernel_psi1(), [0.0], replicas=2)


class TestPeriodogram:
    def test_matches_density(self):
        w = simulate_brownian(2 ** 19 + 1, 2 ** 13 + 2.0, 5)
        y = unit_scale_process(w, kernel_psi1(), window=(0.0, 2 ** 13))
        freqs, dens = periodogram(y.values, y.dt, n_segments=128)
        d = spectral_density(kernel_psi1(), 0.5)
        mask = (freqs > 0.05) & (freqs < 20.0)
        theo = d.eval(freqs[mask])
        rel_l1 = np.sum(np.abs(dens[mask] - theo)) / np.sum(theo)
        assert rel_l1 <= 0.1
