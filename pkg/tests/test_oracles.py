import json
from pathlib import Path

import numpy as np
import pytest

from socopt.games import BoxSet, social_cost
from socopt.ne_seeking import centralized_ne
from socopt.oracles import (example1_cost_slope_bound, example1_ne,
                            example1_social,
                            finite_difference_smoothed_gradient,
                            grid_search_theta)
from socopt.smoothing import SphereSampler, stationarity_estimate
from socopt.regulator import certified_outer_step
from tests.test_smoothing import constant_game

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


class TestExample1ClosedForms:
    def test_ne_branches(self):
        np.testing.assert_allclose(example1_ne(0.5), [2 / 3, 2 / 3])
        np.testing.assert_allclose(example1_ne(0.8), [0.8, 0.8])
        np.testing.assert_allclose(example1_ne(2 / 3), [2 / 3, 2 / 3])

    def test_social_values(self):
        assert example1_social(1.0) == pytest.approx(-6.0)
        assert example1_social(0.0) == pytest.approx(-16.0 / 9.0)
        # both branch expressions meet at the kink
        assert example1_social(2 / 3) == pytest.approx(-32.0 / 9.0)
        assert -(8 / 3) * (2 / 3) - 16 / 9 == pytest.approx(-2 * (2 / 3) ** 2 - 4 * (2 / 3))

    def test_social_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            example1_social(1.5)

    def test_social_matches_direct_evaluation(self, example1):
        # this identity is what exposes the factor-of-two misprint in the
        # widely quoted first branch: the sum, not the per-player cost
        spec, _, _ = example1
        for theta in np.linspace(0, 1, 101):
            direct = social_cost(spec, example1_ne(theta), np.array([theta]))
            assert abs(direct - example1_social(theta)) <= 1e-12

    def test_ne_matches_centralized_on_grid(self, example1):
        spec, _, constants = example1
        for theta in np.linspace(0, 1, 101):
            x = centralized_ne(spec, np.array([theta]), tol=1e-12,
                               constants=constants)
            assert np.linalg.norm(x - example1_ne(theta)) <= 1e-8

    def test_slope_bound_is_tight_lipschitz_constant(self):
        lf = example1_cost_slope_bound()
        assert lf == pytest.approx(4.0)
        thetas = np.linspace(0, 1, 2001)
        per_player = np.array([example1_social(t) / 2 for t in thetas])
        slopes = np.abs(np.diff(per_player) / np.diff(thetas))
        assert slopes.max() <= lf + 1e-6
        assert slopes.max() >= lf - 1e-2  # attained near theta = 1


class TestGridSearch:
    def test_example1_boundary_optimum(self, example1):
        spec, _, constants = example1
        theta_star, f_star = grid_search_theta(spec, spec.theta_set, 1001,
                                               ne_tol=1e-12, constants=constants)
        assert theta_star[0] == pytest.approx(1.0)
        assert f_star == pytest.approx(-6.0, abs=1e-9)

    def test_boundary_for_any_reasonable_grid(self, example1):
        spec, _, constants = example1
        for points in (11, 21, 51):
            theta_star, _ = grid_search_theta(spec, spec.theta_set, points,
                                              ne_tol=1e-10, constants=constants)
            assert theta_star[0] == pytest.approx(1.0)

    def test_tie_breaks_lexicographically(self):
        spec = constant_game()
        theta_star, _ = grid_search_theta(spec, spec.theta_set, 5,
                                          ne_tol=1e-8, gamma=0.5)
        assert theta_star[0] == spec.theta_set.lower[0]

    def test_dimension_guard(self, example1):
        spec, _, _ = example1
        with pytest.raises(ValueError, match="<= 2"):
            grid_search_theta(spec, BoxSet(np.zeros(3), np.ones(3)), 5,
                              ne_tol=1e-8, gamma=0.5)

    def test_example1_fixture_regression(self, example1):
        spec, _, constants = example1
        payload = json.loads((FIXTURES / "example1_theta_star.json").read_text())
        theta_star, f_star = grid_search_theta(
            spec, spec.theta_set, payload["inputs"]["grid_points"],
            ne_tol=payload["inputs"]["ne_tol"], constants=constants)
        np.testing.assert_allclose(theta_star, payload["value"]["theta_star"],
                                   atol=1e-12)
        assert f_star == pytest.approx(payload["value"]["f_star"], abs=1e-9)


class TestFiniteDifferenceGradient:
    def test_quadratic_gradient(self):
        theta = np.array([0.4, -0.7])
        sampler = SphereSampler(2, seed=21)
        est = finite_difference_smoothed_gradient(
            lambda t: float(t @ t), theta, xi=1e-3, h=1e-4, samples=2000,
            sampler=sampler)
        tol = np.maximum(1e-3, 3 * est.std_err)
        assert np.all(np.abs(est.mean - 2 * theta) <= tol)

    def test_constant_function(self):
        sampler = SphereSampler(2, seed=22)
        est = finite_difference_smoothed_gradient(
            lambda t: 1.0, np.zeros(2), xi=1e-2, h=1e-3, samples=50,
            sampler=sampler)
        np.testing.assert_allclose(est.mean, np.zeros(2), atol=1e-12)

    def test_agrees_with_two_point_estimator(self, example1):
        # both estimate the smoothed gradient on the smooth branch
        spec, _, _ = example1
        theta = np.array([0.85])
        xi = 1e-3
        oracle = lambda th: example1_ne(float(th[0]))
        mc = stationarity_estimate(spec, theta, xi, 20000, oracle,
                                   SphereSampler(1, seed=23))
        fd = finite_difference_smoothed_gradient(
            lambda t: example1_social(float(t[0])), theta, xi=xi, h=1e-4,
            samples=20000, sampler=SphereSampler(1, seed=24))
        combined = np.sqrt(mc.std_err**2 + fd.std_err**2)
        moreau_free = mc.mean  # theta interior: the penalty term is zero
        assert np.all(np.abs(moreau_free - fd.mean) <= 3 * combined + 1e-9)


def test_certificate_reference_values():
    assert certified_outer_step(1e-4, 1, 10, 100.0, exact=False) == pytest.approx(1e-4 / 4004)
    exact = certified_outer_step(1e-4, 1, 10, 100.0, exact=True)
    assert exact == pytest.approx(2 * certified_outer_step(1e-4, 1, 10, 100.0, exact=False))
    assert certified_outer_step(0.02, 3, 4, 0.0, exact=False) == pytest.approx(0.02 / 4)
