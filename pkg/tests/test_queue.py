import math

import numpy as np
import pytest
from scipy import stats

from critnet import LinkParams, ParameterError, WindowSpec
from critnet import analytics as an
from critnet.queue import (run_diffusion_window, run_event_window, sample_ensemble, simulate_phi,
                           stationary_level, truncated_exponential)
from critnet.rng import derive_stream


def _mean_se(x):
    return x.mean(), x.std(ddof=1) / math.sqrt(x.size)


class TestStationaryState:
    def test_truncated_exponential_edges(self):
        assert truncated_exponential(0.01, 100, 0.0) == 0.0
        assert truncated_exponential(0.01, 100, 1.0) == pytest.approx(100.0)

    def test_zero_rate_is_uniform(self):
        u = np.linspace(0, 1, 11)
        np.testing.assert_allclose(truncated_exponential(0.0, 50, u), 50 * u)

    def test_level_uniform_at_balance(self):
        x = stationary_level(0.0, 100, derive_stream(0).random(10**5))
        assert stats.kstest(x / 100, "uniform").pvalue > 0.01

    def test_level_concentrates_at_full_buffer(self):
        eta, c = 0.05, 1000
        x = stationary_level(eta, c, derive_stream(1).random(10**5))
        top = np.mean(x >= c - 1)
        ref = an.stationary_boundary_density(eta, c) * (1 - math.exp(-eta)) / eta
        assert abs(top - ref) < 4 * math.sqrt(ref * (1 - ref) / x.size)


class TestWindows:
    def test_free_flow_is_lossless(self):
        link = LinkParams(1.0, -0.5, 1.0, 100)
        assert np.all(simulate_phi(link, WindowSpec(1e4), 200, "diffusion", seed=0) == 0)

    def test_fast_service_event_queue_is_lossless(self):
        link = LinkParams(1.0, -0.9, 1.0, 100)
        assert np.all(simulate_phi(link, WindowSpec(1e4), 200, "event", seed=0) == 0)

    def test_balanced_mean_loss(self):
        link = LinkParams(1.0, 0.0, 1.0, 100)
        m = {b: _mean_se(simulate_phi(link, WindowSpec(1e4), 4000, b, seed=2)) for b in ("diffusion", "event")}
        for mean, se in m.values():
            assert abs(mean - 0.01) < 3 * se
        (m1, s1), (m2, s2) = m.values()
        assert abs(m1 - m2) < 2 * math.hypot(s1, s2)

    def test_overloaded_mean_loss(self):
        eta, c = 0.05, 1000
        link = LinkParams(1.0, eta, 1.0, c)
        p = an.stationary_boundary_density(eta, c)
        # Time share of the top layer for the continuum, the rate balance for packets.
        targets = {"diffusion": p * (1 - math.exp(-eta)) / eta, "event": eta}
        for b, ref in targets.items():
            mean, se = _mean_se(simulate_phi(link, WindowSpec(2e4), 200, b, seed=1))
            assert abs(mean - ref) < 3 * se
            assert mean == pytest.approx(0.05, rel=0.05)

    def test_sample_records(self):
        link = LinkParams(2.0, 0.0, 0.5, 100)
        s = run_diffusion_window(link, WindowSpec(1e3), derive_stream(0))
        assert s.lam == pytest.approx(s.phi * 2e3)
        assert s.window == 1e3
        assert s.lossless == (s.phi == 0)

    def test_poisson_arrivals_supported(self):
        link = LinkParams(1.0, 0.0, 1.0, 100)
        s = run_event_window(link, WindowSpec(1e3), derive_stream(0), arrivals="exponential")
        assert 0 <= s.phi <= 1

    @pytest.mark.parametrize("kw", [dict(dt=0.2), dict(dt=0.0)])
    def test_step_bounds(self, kw):
        with pytest.raises(ParameterError):
            run_diffusion_window(LinkParams(1.0, 0.0, 1.0, 100), WindowSpec(1e3), derive_stream(0), **kw)

    def test_short_window(self):
        with pytest.raises(ParameterError):
            run_event_window(LinkParams(1.0, 0.0, 1.0, 100), WindowSpec(5.0), derive_stream(0))

    def test_unknown_backend_and_arrivals(self):
        link = LinkParams(1.0, 0.0, 1.0, 100)
        with pytest.raises(ParameterError):
            simulate_phi(link, WindowSpec(1e3), 10, "fluid")
        with pytest.raises(ParameterError):
            run_event_window(link, WindowSpec(1e3), derive_stream(0), arrivals="pareto")


class TestEnsembles:
    link = LinkParams(1.0, 1e-3, 1.0, 1000)
    window = WindowSpec(1e4)

    @pytest.mark.parametrize("backend,fn", [("diffusion", run_diffusion_window), ("event", run_event_window)])
    def test_singleton_matches_direct_call(self, backend, fn):
        one = sample_ensemble(self.link, self.window, 1, backend, seed=9)
        assert one == [fn(self.link, self.window, derive_stream(9, 0))]

    @pytest.mark.parametrize("backend", ["diffusion", "event"])
    def test_bit_identical_reruns(self, backend):
        a = sample_ensemble(self.link, self.window, 1000, backend, seed=4)
        b = sample_ensemble(self.link, self.window, 1000, backend, seed=4)
        assert a == b

    def test_independent_of_workers_and_chunks(self):
        a = simulate_phi(self.link, self.window, 600, "event", seed=5, workers=1, chunk=600)
        b = simulate_phi(self.link, self.window, 600, "event", seed=5, workers=3, chunk=100)
        assert a.tobytes() == b.tobytes()

    def test_no_loss_weight_matches_analytic(self):
        link = LinkParams(1.0, 0.0, 1.0, 1000)
        phi = simulate_phi(link, self.window, 10_000, "diffusion", seed=6)
        assert np.mean(phi == 0) == pytest.approx(an.no_loss_weight(1e4, link), abs=0.01)
