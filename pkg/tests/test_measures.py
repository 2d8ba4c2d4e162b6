import numpy as np
import pytest
from scipy import stats

from wschebor.errors import CoverageError, ParameterError, ResolutionError
from wschebor.increments import normalized_increment
from wschebor.measures import (
    EmpiricalMeasure,
    dbl_distance,
    f_map,
    fixed_lag_second_order,
    ks_critical_value,
    ks_distance,
    ks_two_sample,
    occupation_measure,
    second_difference_sd,
    space_time_measure,
    wasserstein1,
)
from wschebor.mollifiers import kernel_psi1
from wschebor.paths import (
    GridPath,
    simulate_brownian,
    simulate_stable,
    standard_stable,
)

PHI = stats.norm.cdf


def _wschebor_measure(eps, seed, grid_n=2 ** 16):
    w = simulate_brownian(int(grid_n * (1 + eps)) + 1, 1.0 + eps, seed)
    x = normalized_increment(w, kernel_psi1(), eps).values
    return occupation_measure(x), x


class TestEmpiricalMeasure:
    def test_weights_and_mass(self):
        m = EmpiricalMeasure(np.array([2.0, 1.0]), np.array([0.25, 0.75]))
        assert np.array_equal(m.points, [1.0, 2.0])
        assert abs(m.total_mass - 1.0) < 1e-12

    def test_cdf_right_continuous(self):
        m = EmpiricalMeasure(np.array([0.0, 1.0]), np.array([0.5, 0.5]))
        assert m.cdf(-0.1) == 0.0
        assert m.cdf(0.0) == 0.5
        assert m.cdf(1.0) == 1.0
        assert m.cdf(5.0) == 1.0

    def test_merge_associative_commutative(self):
        rng = np.random.default_rng(0)
        parts = [EmpiricalMeasure.from_samples(rng.standard_normal(50)).scaled(1 / 3)
                 for _ in range(3)]
        a = parts[0].merge(parts[1]).merge(parts[2])
        b = parts[2].merge(parts[0].merge(parts[1]))
        assert np.array_equal(a.points, b.points)
        assert abs(a.total_mass - b.total_mass) < 1e-15

    def test_rejects_negative_weights(self):
        with pytest.raises(ParameterError):
            EmpiricalMeasure(np.array([0.0]), np.array([-1.0]))


class TestOccupation:
    def test_constant_path_is_point_mass(self):
        p = GridPath(0.0, 0.01, np.full(101, 3.0))
        mu = occupation_measure(p)
        assert np.all(mu.points == 3.0)
        assert abs(mu.total_mass - 1.0) < 1e-12
        assert ks_distance(mu, lambda x: (np.asarray(x) >= 3.0).astype(float)) < 1e-12

    def test_identity_path_uniform(self):
        n = 4097
        p = GridPath(0.0, 1.0 / (n - 1), np.linspace(0, 1, n))
        mu = occupation_measure(p)
        assert ks_distance(mu, lambda x: np.clip(x, 0, 1)) <= 1.0 / (n - 1)

    def test_gaussian_limit_small_scale(self):
        mu, _ = _wschebor_measure(2.0 ** -10, 2024, grid_n=2 ** 18)
        assert ks_distance(mu, PHI) <= 0.05

    def test_coverage_error(self):
        p = GridPath(0.0, 0.01, np.zeros(50))
        with pytest.raises(CoverageError):
            occupation_measure(p)

    def test_ks_trend_as_scale_shrinks(self):
        medians = []
        for eps in (2.0 ** -6, 2.0 ** -9, 2.0 ** -12):
            ks = [ks_distance(_wschebor_measure(eps, seed)[0], PHI)
                  for seed in range(20)]
            medians.append(np.median(ks))
        assert medians[0] > medians[1] > medians[2]


class TestKolmogorovSmirnov:
    def test_point_mass_against_gaussian(self):
        assert ks_distance(EmpiricalMeasure.point_mass(0.0), PHI) == 0.5

    def test_self_distance_zero(self):
        m = EmpiricalMeasure.from_samples(np.random.default_rng(1).standard_normal(100))
        assert ks_two_sample(m, m) == 0.0

    def test_critical_value_formula(self):
        assert abs(ks_critical_value(10 ** 4, 10 ** 4, alpha=0.01)
                   - 1.6276 * np.sqrt(2.0 / 10 ** 4)) < 1e-4

    def test_requires_probability(self):
        m = EmpiricalMeasure(np.array([0.0]), np.array([2.0]))
        with pytest.raises(ParameterError):
            ks_distance(m, PHI)


class TestSpaceTime:
    def test_first_marginal_is_lebesgue(self):
        _, x = _wschebor_measure(2.0 ** -8, 7)
        st = space_time_measure(x, 8, 32)
        assert np.max(np.abs(st.first_marginal() - 1.0 / 8.0)) < 1e-3
        assert abs(st.total_mass - 1.0) < 1e-9

    def test_row_profiles_gaussian(self):
        _, x = _wschebor_measure(2.0 ** -10, 11, grid_n=2 ** 18)
        st = space_time_measure(x, 8, 32)
        for k in range(8):
            assert st.row_ks(k, PHI) <= 0.1, k

    def test_stable_row_profiles(self):
        alpha, eps = 1.5, 2.0 ** -10
        grid_n = 2 ** 18
        p = simulate_stable(alpha, int(grid_n * (1 + eps)) + 1, 1.0 + eps, 5)
        x = normalized_increment(p, kernel_psi1(), eps).values
        st = space_time_measure(x, 8, 32)
        ref = np.sort(standard_stable(alpha, np.random.default_rng(99), 200_000))

        def ref_cdf(v):
            return np.searchsorted(ref, np.asarray(v), side="right") / ref.size

        for k in range(8):
            assert st.row_ks(k, ref_cdf) <= 0.1, k

    def test_occupation_equals_second_marginal(self):
        _, x = _wschebor_measure(2.0 ** -8, 3)
        mu = occupation_measure(x)
        st = space_time_measure(x, 8, 32)
        binned, _ = np.histogram(mu.points, bins=st.value_edges, weights=mu.weights)
        assert np.max(np.abs(binned - st.second_marginal().weights)) < 1e-12


class TestFMap:
    def _histogram(self, seed):
        _, x = _wschebor_measure(2.0 ** -8, seed)
        return space_time_measure(x, 8, 16)

    def test_roundtrip(self):
        st = self._histogram(0)
        mp = f_map(st)
        for k in range(st.mass.shape[0]):
            assert np.allclose(mp.increment(k).weights, st.mass[k])

    def test_terminal_slice_is_second_marginal(self):
        st = self._histogram(1)
        mp = f_map(st)
        assert np.allclose(mp.cumulative[-1].weights, st.second_marginal().weights)

    def test_slice_masses_track_time(self):
        st = self._histogram(2)
        mp = f_map(st)
        for k, t in enumerate(mp.times):
            assert abs(mp.cumulative[k].total_mass - t) < 1e-3

    def test_inverse_continuity_surrogate(self):
        # Testing products of a time indicator with a dictionary function f:
        # the gap over (t, f) equals the sup over t of the dictionary gap
        # between cumulative slices, by construction of the cumulative map.
        st_a, st_b = self._histogram(3), self._histogram(4)
        mp_a, mp_b = f_map(st_a), f_map(st_b)
        knots = np.linspace(-3, 3, 9)
        fns = [lambda x, c=c: 0.5 * np.clip(1.0 - np.abs(x - c), 0.0, None)
               for c in knots]
        eta = 0.0
        for sa, sb in zip(mp_a.cumulative, mp_b.cumulative):
            for f in fns:
                gap = abs(sa.integrate(f) - sb.integrate(f))
                eta = max(eta, gap)
        for k, t in enumerate(mp_a.times):
            for f in fns:
                lhs = abs(mp_a.cumulative[k].integrate(f)
                          - mp_b.cumulative[k].integrate(f))
                assert lhs <= eta + 1e-15


class TestBoundedLipschitz:
    def test_identical_measures(self):
        m = EmpiricalMeasure.from_samples(np.random.default_rng(2).standard_normal(200))
        b = dbl_distance(m, m)
        assert b.lower == 0.0
        assert b.upper == 0.0

    @pytest.mark.parametrize("h", [0.01, 0.1, 0.5])
    def test_separated_point_masses(self, h):
        b = dbl_distance(EmpiricalMeasure.point_mass(0.0),
                         EmpiricalMeasure.point_mass(h))
        assert b.lower >= h / 2.0 - 1e-12
        assert b.upper <= h + 1e-12

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        mu = EmpiricalMeasure.from_samples(rng.standard_normal(100))
        nu = EmpiricalMeasure.from_samples(rng.standard_normal(100) + 0.3)
        assert abs(dbl_distance(mu, nu).lower - dbl_distance(nu, mu).lower) < 1e-12

    def test_wasserstein_point_masses(self):
        assert abs(wasserstein1(EmpiricalMeasure.point_mass(0.0),
                                EmpiricalMeasure.point_mass(0.7)) - 0.7) < 1e-15


class TestFixedLagSecondOrder:
    def test_normalizer(self):
        assert abs(second_difference_sd(0.5) ** 2 - 2.0) < 1e-12
        # brute-force covariance of the unit-grid second difference
        from wschebor.paths import fbm_covariance
        for h in (0.3, 0.5, 0.8):
            ts = np.array([0.0, 1.0, 2.0])
            cov = fbm_covariance(ts[:, None], ts[None, :], h)
            coef = np.array([1.0, -2.0, 1.0])
            var = coef @ cov @ coef
            assert abs(var - second_difference_sd(h) ** 2) < 1e-12

    def test_gaussian_limit(self):
        n = 2 ** 16
        w = simulate_brownian(n + 1, 1.0, 99)
        m = fixed_lag_second_order(w, n, 0.5)
        assert abs(m.total_mass - 1.0) < 1e-12
        assert m.points.size == n - 1
        assert ks_distance(m, PHI) <= 0.05

    def test_resolution_guard(self):
        w = simulate_brownian(4, 1.0, 0)
        with pytest.raises(ResolutionError):
            fixed_lag_second_order(w, 3, 0.5)

    def test_alignment_guard(self):
        w = simulate_brownian(2 ** 10, 1.0, 0)  # dt = 1/1023, not 1/n
        with pytest.raises(CoverageError):
            fixed_lag_second_order(w, 512, 0.5)


class TestCsvExports:
    def test_empirical_measure(self, tmp_path):
        m = EmpiricalMeasure.from_samples(np.array([0.5, -1.0, 2.0]))
        m.to_csv(tmp_path / "m.csv")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "value,weight"
        assert len(lines) == 4

    def test_space_time_histogram(self, tmp_path):
        _, x = _wschebor_measure(2.0 ** -8, 0)
        st = space_time_measure(x, 4, 8)
        st.to_csv(tmp_path / "st.csv")
        lines = (tmp_path / "st.csv").read_text().splitlines()
        assert lines[0] == "t_bin,v_bin,mass"
        assert len(lines) == 1 + 4 * 8

    def test_rate_curve_and_density(self, tmp_path):
        from wschebor.ldp import moment_rate
        from wschebor.mollifiers import kernel_ou_exponential
        from wschebor.spectral import covariance_to_csv, spectral_density
        d = spectral_density(kernel_ou_exponential(), 0.5)
        curve = moment_rate(d, [0.5, 1.0])
        curve.to_csv(tmp_path / "rate.csv")
        assert (tmp_path / "rate.csv").read_text().startswith("x,rate")
        d.to_csv(tmp_path / "dens.csv", [0.0, 1.0, 2.0])
        assert (tmp_path / "dens.csv").read_text().startswith("lambda,density")
        covariance_to_csv(d, tmp_path / "cov.csv", [0.0, 1.0])
        assert (tmp_path / "cov.csv").read_text().startswith("t,covariance")
