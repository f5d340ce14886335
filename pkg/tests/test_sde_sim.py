import io
import math
import os

import numpy as np
import pytest

from lglab import (
    ModelParams,
    PositivityViolation,
    Region,
    comparison_bundle,
    ensemble,
    explicit_upper_prey,
    hitting_time,
    make_noise,
    simulate_path,
    stationary_histogram,
)
from lglab.sde_sim import LOG_EULER, MILSTEIN, write_path_csv

STOCH = ModelParams(a=0.4, b=0.1, k1=0.08, k2=0.2, m=0.0025,
                    sigma1=0.1, sigma2=0.1)


class TestNoise:
    def test_deterministic_and_independent(self):
        n1 = make_noise(7, 0.01, 1000)
        n2 = make_noise(7, 0.01, 1000)
        assert np.array_equal(n1.xi1, n2.xi1) and np.array_equal(n1.xi2, n2.xi2)
        # the two component streams must not be correlated copies
        assert abs(np.corrcoef(n1.xi1, n1.xi2)[0, 1]) < 0.1
        n3 = make_noise(8, 0.01, 1000)
        assert not np.array_equal(n1.xi1, n3.xi1)

    def test_standard_normal_moments(self):
        n = make_noise(3, 0.01, 200_000)
        for xi in (n.xi1, n.xi2):
            assert abs(xi.mean()) < 0.01
            assert abs(xi.std() - 1.0) < 0.01


class TestPath:
    def test_bit_determinism(self):
        noise = make_noise(42, 0.01, 2000)
        for scheme in (MILSTEIN, LOG_EULER):
            a = simulate_path(STOCH, (0.55, 0.6), scheme, noise)
            b = simulate_path(STOCH, (0.55, 0.6), scheme, noise)
            assert np.array_equal(a.states, b.states)

    def test_zero_noise_milstein_equals_euler(self):
        from dataclasses import replace

        from lglab.ode_sim import EULER, integrate
        p = replace(STOCH, sigma1=0.0, sigma2=0.0)
        noise = make_noise(1, 0.01, 500)
        sp = simulate_path(p, (0.55, 0.6), MILSTEIN, noise)
        tr = integrate(p, (0.55, 0.6), EULER, h=0.01, t_max=5.0)
        assert np.array_equal(sp.states, tr.states)

    def test_zero_axis_stays_zero(self):
        noise = make_noise(5, 0.01, 1000)
        sp = simulate_path(STOCH, (0.0, 0.6), LOG_EULER, noise)
        assert (sp.x == 0.0).all()
        sp = simulate_path(STOCH, (0.55, 0.0), LOG_EULER, noise)
        assert (sp.y == 0.0).all()

    def test_log_euler_positivity(self):
        p = ModelParams(a=0.4, b=0.1, k1=0.08, k2=0.2, m=0.0025,
                        sigma1=0.3, sigma2=0.2)
        for seed in range(20):
            noise = make_noise(seed, 0.01, 2000)
            sp = simulate_path(p, (0.55, 0.6), LOG_EULER, noise)
            assert (sp.states > 0).all()

    def test_milstein_positivity_violation(self):
        # predator starts far above its carrying capacity; with a big step
        # the drift alone overshoots straight through zero
        p = ModelParams(a=0.4, b=5.0, k1=0.08, k2=0.05, m=0.0025,
                        sigma1=0.1, sigma2=0.5)
        noise = make_noise(0, 0.05, 100)
        with pytest.raises(PositivityViolation) as exc:
            simulate_path(p, (0.5, 3.0), MILSTEIN, noise)
        assert exc.value.step_index >= 1


class TestUpperPrey:
    def test_initial_value(self):
        noise = make_noise(2, 0.01, 100)
        t, x = explicit_upper_prey(0.1, 0.55, noise)
        assert t[0] == 0.0 and x[0] == 0.55

    def test_sigma_zero_is_logistic(self):
        noise = make_noise(2, 1e-4, 50_000)
        t, x = explicit_upper_prey(0.0, 0.3, noise)
        exact = 0.3 * np.exp(t) / (1 + 0.3 * (np.exp(t) - 1))
        assert np.max(np.abs(x - exact)) < 1e-6

    def test_large_noise_extinction(self):
        n_ext = 0
        for seed in range(200):
            noise = make_noise(seed, 0.01, 50_000)
            _, x = explicit_upper_prey(1.5, 0.55, noise)
            if x[-1] < 1e-3:
                n_ext += 1
        assert n_ext >= 190


class TestComparison:
    def test_ordering(self):
        for seed in (0, 1, 2):
            noise = make_noise(seed, 0.01, 5000)
            b = comparison_bundle(STOCH, (0.55, 0.6), noise)
            assert (b.x_lower <= b.x + 1e-14).all()
            assert (b.x <= b.x_upper + 1e-14).all()
            assert (b.y_lower <= b.y + 1e-14).all()
            assert (b.y <= b.y_upper + 1e-14).all()

    def test_csv_shape(self):
        noise = make_noise(0, 0.01, 100)
        b = comparison_bundle(STOCH, (0.55, 0.6), noise)
        buf = io.StringIO()
        write_path_csv(b, buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "t,x,y,x_upper,y_upper,x_lower,y_lower"
        assert len(lines) == 102


class TestEnsemble:
    def test_single_path_matches_scalar(self):
        stats = ensemble(STOCH, (0.55, 0.6), LOG_EULER, n_paths=1, seed0=9,
                         t_max=5.0, checkpoints=[5.0], h=0.01)
        noise = make_noise(9, 0.01, 500)
        sp = simulate_path(STOCH, (0.55, 0.6), LOG_EULER, noise)
        assert stats.mean[0][0] == pytest.approx(sp.x[-1], rel=1e-12)
        assert stats.mean[0][1] == pytest.approx(sp.y[-1], rel=1e-12)

    def test_histogram_mass(self):
        stats = ensemble(STOCH, (0.55, 0.6), LOG_EULER, n_paths=16, seed0=0,
                         t_max=20.0, checkpoints=[20.0], h=0.01,
                         burn_in=2.0, bins=20, hist_thin=10)
        # steps 200,210,...,2000 are recorded: 181 samples per path
        recorded = int(np.asarray(stats.hist_counts).sum())
        assert recorded + int(stats.hist_overflow) == 16 * 181

    def test_thread_invariance(self):
        kw = dict(n_paths=12, seed0=3, t_max=5.0, checkpoints=[2.0, 5.0],
                  h=0.01, bins=10)
        os.environ["LG_LAB_THREADS"] = "1"
        a = ensemble(STOCH, (0.55, 0.6), LOG_EULER, **kw)
        os.environ["LG_LAB_THREADS"] = "4"
        b = ensemble(STOCH, (0.55, 0.6), LOG_EULER, **kw)
        os.environ.pop("LG_LAB_THREADS")
        # histogram counts and extinction tallies are integer merges, so
        # they match exactly; moments are merged block sums and may differ
        # by summation order round-off only
        assert np.array_equal(a.hist_counts, b.hist_counts)
        assert a.extinction_fraction_x == b.extinction_fraction_x
        assert np.allclose(a.mean, b.mean, rtol=1e-12, atol=0)
        assert np.allclose(a.variance, b.variance, rtol=1e-9, atol=1e-15)

    def test_extinction_fraction_large_noise(self):
        p = ModelParams(a=0.4, b=0.1, k1=0.08, k2=0.2, m=0.0025,
                        sigma1=2.0, sigma2=0.1)
        stats = ensemble(p, (0.55, 0.6), LOG_EULER, n_paths=50, seed0=0,
                         t_max=100.0, checkpoints=[100.0], h=0.01)
        assert stats.extinction_fraction_x > 0.5


class TestStationary:
    def test_seed_swap_symmetry(self):
        kw = dict(burn_in=5.0, t_max=40.0, bins=20, h=0.01)
        a = stationary_histogram(STOCH, LOG_EULER, seed=4, seed2=5, **kw)
        b = stationary_histogram(STOCH, LOG_EULER, seed=5, seed2=4, **kw)
        assert a.l1_cross_seed == pytest.approx(b.l1_cross_seed, rel=1e-12)

    def test_regime_label(self):
        rep = stationary_histogram(STOCH, LOG_EULER, seed=1, burn_in=2.0,
                                   t_max=20.0, bins=10, h=0.01)
        assert rep.regime == "Stationary"
        assert not rep.regime_warning


class TestHitting:
    def test_start_inside_target(self):
        target = Region(0.0, 2.0, 0.0, 2.0)
        rep = hitting_time(STOCH, LOG_EULER, (0.55, 0.6), target,
                           n_paths=5, seed0=0, t_cap=10.0, h=0.01)
        assert rep.mean == 0.0 and rep.fraction_censored == 0.0

    def test_unreachable_is_censored(self):
        target = Region(5.0, 6.0, 5.0, 6.0)
        rep = hitting_time(STOCH, LOG_EULER, (0.55, 0.6), target,
                           n_paths=5, seed0=0, t_cap=2.0, h=0.01)
        assert rep.fraction_censored == 1.0
        assert math.isnan(rep.mean) or rep.mean >= 2.0
