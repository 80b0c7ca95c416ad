import math

import numpy as np
import pytest
from scipy import integrate, stats

from critnet import (BaseDesign, CriticalitySpread, LinkParams, LoadModel, ParameterError, WindowSpec,
                     realize_link, sample_eta, sample_load, sample_path)
from critnet.model import load_quantile, sample_disorder
from critnet.rng import derive_stream


class TestLoadModel:
    def test_quantile_lower_edge(self):
        assert load_quantile(LoadModel(0.25), 1.0) == 1.0

    def test_quantile_median(self):
        assert load_quantile(LoadModel(0.25), 0.5) == pytest.approx(1.7411011265922482, rel=1e-14)

    def test_pareto_mean(self):
        assert LoadModel(0.25).mean() == pytest.approx(5.0, rel=1e-15)

    def test_truncated_mean_matches_quadrature(self):
        m = LoadModel(0.25, 1.0, 100.0)
        norm = integrate.quad(lambda x: x**-2.25, 1, 100)[0]
        ref = integrate.quad(lambda x: x * x**-2.25, 1, 100)[0] / norm
        assert m.mean() == pytest.approx(ref, rel=1e-10)

    def test_samples_follow_cdf(self):
        x = sample_load(LoadModel(0.25), derive_stream(1), 10**6)
        ks = stats.kstest(x, lambda v: 1 - v**-1.25).statistic
        assert ks < 2e-3
        assert x.min() >= 1.0

    def test_truncated_sample_mean_within_ci(self):
        m = LoadModel(0.25, 1.0, 100.0)
        x = sample_load(m, derive_stream(2), 10**6)
        assert x.max() < 100.0
        assert abs(x.mean() - m.mean()) < 4 * x.std() / math.sqrt(x.size)

    def test_scalar_draw(self):
        assert isinstance(sample_load(LoadModel(0.25), derive_stream(0)), float)

    @pytest.mark.parametrize("kw", [dict(delta=-1.0), dict(delta=0.25, ell_min=0.0), dict(delta=0.25, ell_max=0.5)])
    def test_rejects_bad_parameters(self, kw):
        with pytest.raises(ParameterError):
            LoadModel(**kw)


class TestSpread:
    def test_zero_width(self):
        assert sample_eta(CriticalitySpread(0.0), derive_stream(0)) == 0.0
        assert np.all(sample_eta(CriticalitySpread(0.0), derive_stream(0), 100) == 0)

    def test_uniform_support_and_mean(self):
        x = sample_eta(CriticalitySpread(1e-4), derive_stream(3), 10**6)
        assert np.all(np.abs(x) <= 1e-4)
        assert abs(x.mean()) < 4 * 1e-4 / math.sqrt(3) / 1e3

    def test_positive_part_mean(self):
        s = CriticalitySpread(1e-4)
        assert s.positive_mean() == pytest.approx(2.5e-5, rel=1e-15)
        x = sample_eta(s, derive_stream(4), 10**6)
        pos = np.maximum(x, 0)
        assert abs(pos.mean() - 2.5e-5) < 4 * pos.std() / 1e3

    def test_gaussian_width(self):
        x = sample_eta(CriticalitySpread(1e-3, "gaussian"), derive_stream(5), 10**5)
        assert x.std() == pytest.approx(1e-3, rel=0.02)

    def test_rejects_unknown_shape(self):
        with pytest.raises(ParameterError):
            CriticalitySpread(1e-3, "cauchy")


class TestRealizeLink:
    def test_identity_scaling(self):
        link = realize_link(BaseDesign(1000, 1.0), 1.0, 0.0)
        assert (link.c, link.tau, link.D, link.V) == (1000, 1.0, 1.0, 0.0)

    def test_load_four(self):
        link = realize_link(BaseDesign(1000, 1.0), 4.0, 0.01)
        assert link.c == 4000
        assert link.tau == 0.25
        assert link.D == 4.0
        assert link.V == pytest.approx(0.04, rel=1e-15)

    def test_heavy_link(self):
        link = realize_link(BaseDesign(1000, 1.0), 1e3, -0.01)
        assert link.c == 10**6
        assert link.tau == pytest.approx(1e-3, rel=1e-15)
        assert link.r == pytest.approx(1010.0, rel=1e-12)

    def test_tiny_buffer_raises(self):
        with pytest.raises(ParameterError):
            realize_link(BaseDesign(2, 1.0), 0.5, 0.0)

    @pytest.mark.parametrize("kw", [dict(tau=0.0), dict(c=1), dict(ell=0.0), dict(eta=1.0)])
    def test_link_validation(self, kw):
        args = dict(ell=1.0, eta=0.0, tau=1.0, c=10)
        args.update(kw)
        with pytest.raises(ParameterError):
            LinkParams(**args)


class TestPaths:
    def test_single_link_path(self):
        p = sample_path(1, LoadModel(0.25), CriticalitySpread(1e-4), BaseDesign(1e4), derive_stream(0))
        assert p.a == 1

    def test_mean_total_load(self):
        m = LoadModel(0.25, 1.0, 100.0)
        d = sample_disorder(10**5, 10, m, CriticalitySpread(1e-4), BaseDesign(1e4), derive_stream(6))
        tot = d.ell.sum(axis=1)
        assert abs(tot.mean() - 10 * m.mean()) < 4 * tot.std() / math.sqrt(tot.size)

    def test_untruncated_mean_load_constant(self):
        assert 10 * LoadModel(0.25).mean() == pytest.approx(50.0)

    def test_disorder_scales_links(self):
        d = sample_disorder(100, 3, LoadModel(0.25), CriticalitySpread(1e-4), BaseDesign(1e4, 2.0), derive_stream(0))
        np.testing.assert_allclose(d.tau * d.ell, 2.0)
        np.testing.assert_allclose(d.c, np.rint(1e4 * d.ell))

    def test_zero_links_rejected(self):
        with pytest.raises(ParameterError):
            sample_path(0, LoadModel(0.25), CriticalitySpread(1e-4), BaseDesign(1e4), 0)

    def test_window_from_phi0(self):
        w = WindowSpec.from_phi0(3e-3)
        assert w.T == pytest.approx(1 / 9e-6)
        assert w.phi0 == pytest.approx(3e-3)
