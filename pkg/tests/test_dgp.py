"""Data-generating process: scaling identities, seeding, and distributional checks."""

import dataclasses
import math

import numpy as np
import pytest

from panelur import (DataError, DgpConfig, DiffPanel, InnovationSpec, LrvConfig,
                     estimate_lrv_set, innovation_scale, local_rho,
                     lognormal_heterogeneity_params, simulate)


class TestLocalRho:
    def test_paper_grid_values(self):
        assert local_rho(25, 25, -5.0) == pytest.approx(0.96, abs=1e-15)
        assert local_rho(100, 400, -10.0) == pytest.approx(0.9975, abs=1e-15)

    @pytest.mark.parametrize("n,t", [(1, 1), (25, 100), (7, 13)])
    def test_null_gives_unity(self, n, t):
        assert local_rho(n, t, 0.0) == 1.0


class TestLognormalHeterogeneity:
    def test_degenerate_at_one(self):
        assert lognormal_heterogeneity_params(1.0) == (0.0, 0.0)

    @pytest.mark.parametrize("ratio,mu,sigma2", [
        (0.8, -0.22314, 0.44629),
        (0.6, -0.51083, 1.02165),
    ])
    def test_closed_form(self, ratio, mu, sigma2):
        got_mu, got_sigma2 = lognormal_heterogeneity_params(ratio)
        assert got_mu == pytest.approx(mu, abs=1e-5)
        assert got_sigma2 == pytest.approx(sigma2, abs=1e-5)

    @pytest.mark.parametrize("ratio", [0.6, 0.8])
    def test_sampling_oracle(self, ratio):
        mu, sigma2 = lognormal_heterogeneity_params(ratio)
        draws = np.random.default_rng(5).lognormal(mu, math.sqrt(sigma2), size=1_000_000)
        assert np.mean(draws) == pytest.approx(1.0, abs=0.005)
        moment_ratio = np.mean(draws) / math.sqrt(np.mean(draws ** 2))
        assert moment_ratio == pytest.approx(ratio, abs=0.005)

    @pytest.mark.parametrize("ratio", [0.0, -0.3, 1.2])
    def test_domain(self, ratio):
        with pytest.raises(DataError):
            lognormal_heterogeneity_params(ratio)


class TestInnovationScale:
    def test_iid_unit(self):
        assert innovation_scale(InnovationSpec(kind="iid", target_lrv=1.0)) == 1.0

    def test_ma1_closed_form(self):
        spec = InnovationSpec(kind="ma1", parameter=0.4, target_lrv=1.0)
        sigma = innovation_scale(spec)
        assert sigma == pytest.approx(1.0 / 1.4, abs=1e-12)
        # the autocovariance sum gives back the long-run variance
        gamma0 = sigma ** 2 * (1.0 + 0.4 ** 2)
        gamma1 = sigma ** 2 * 0.4
        assert gamma0 == pytest.approx(0.591837, abs=1e-6)
        assert gamma0 + 2.0 * gamma1 == pytest.approx(1.0, abs=1e-12)

    def test_ar1_closed_form(self):
        spec = InnovationSpec(kind="ar1", parameter=0.4, target_lrv=2.0)
        sigma = innovation_scale(spec)
        assert sigma == pytest.approx(math.sqrt(2.0) * 0.6, abs=1e-12)
        # geometric autocovariance sum: sigma^2 / (1 - phi)^2
        assert sigma ** 2 / 0.6 ** 2 == pytest.approx(2.0, abs=1e-12)

    def test_spec_validation(self):
        with pytest.raises(DataError):
            InnovationSpec(kind="ar1", parameter=1.0)
        with pytest.raises(DataError):
            InnovationSpec(kind="iid", target_lrv=0.0)
        with pytest.raises(DataError):
            InnovationSpec(kind="arma")


def _config(**kw):
    base = dict(framework="PANIC", n=10, T=40, h=0.0, K=1, seed=123)
    base.update(kw)
    return DgpConfig(**base)


class TestSimulate:
    def test_seeded_determinism(self):
        a = simulate(_config(h=-4.0, lrv_ratio=0.7, seed=99))
        b = simulate(_config(h=-4.0, lrv_ratio=0.7, seed=99))
        assert np.array_equal(a.panel.values, b.panel.values)
        assert np.array_equal(a.true_loadings, b.true_loadings)

    def test_null_equivalence_of_frameworks(self):
        base = dict(n=15, T=60, h=0.0, K=2, lrv_ratio=0.8, seed=77)
        mp = simulate(DgpConfig(framework="MP", **base))
        panic = simulate(DgpConfig(framework="PANIC", **base))
        assert np.array_equal(mp.panel.values, panic.panel.values)

    def test_null_equivalence_with_heterogeneity_flag(self):
        base = dict(n=15, T=60, h=0.0, K=1, seed=3, heterogeneous_alternatives=True)
        mp = simulate(DgpConfig(framework="MP", **base))
        panic = simulate(DgpConfig(framework="PANIC", **base))
        assert np.array_equal(mp.panel.values, panic.panel.values)

    def test_no_factor_unit_variance(self):
        sim = simulate(_config(n=50, T=2000, K=0, seed=2024))
        dz = np.diff(sim.panel.values, axis=1)
        assert 0.97 <= dz.var() <= 1.03

    def test_dimensions_and_truth(self):
        sim = simulate(_config(n=12, T=30, K=3, h=-2.0, lrv_ratio=0.6))
        assert sim.panel.values.shape == (12, 30)
        assert sim.true_loadings.shape == (12, 3)
        assert sim.true_lrvs.shape == (12,)
        assert np.all(sim.true_lrvs > 0.0)
        assert np.allclose(sim.rho_used, local_rho(12, 30, -2.0))

    def test_heterogeneous_alternative_rhos(self):
        sim = simulate(_config(n=200, T=10, h=-5.0, heterogeneous_alternatives=True, seed=8))
        u = (sim.rho_used - 1.0) * math.sqrt(200) * 10 / -5.0
        assert u.min() >= 0.2 and u.max() <= 1.8
        assert np.unique(u).size > 100

    def test_config_validation(self):
        with pytest.raises(DataError):
            _config(h=0.5)
        with pytest.raises(DataError):
            _config(lrv_ratio=0.0)
        with pytest.raises(DataError):
            DgpConfig(framework="MP", n=5, T=20, panic_stationary_factors=True)

    def test_stationary_factors_do_not_wander(self):
        # Shrink the idiosyncratic scale so the panel is dominated by the
        # common component, then compare integrated vs over-differenced factors.
        cfg = _config(n=4, T=4000, K=1, panic_stationary_factors=True, seed=5,
                      idio_spec=InnovationSpec(kind="iid", target_lrv=1e-8))
        walk = simulate(dataclasses.replace(cfg, panic_stationary_factors=False))
        flat = simulate(cfg)
        assert flat.panel.values.var() < 0.05 * walk.panel.values.var()


class TestLrvTargeting:
    @pytest.mark.parametrize("kind,param", [("iid", 0.0), ("ar1", 0.4), ("ma1", 0.4)])
    @pytest.mark.parametrize("distribution", ["gaussian", "student_t5"])
    def test_bartlett_estimates_near_target(self, kind, param, distribution):
        import zlib

        target = 2.0
        cfg = _config(
            n=40, T=5000, K=0, seed=zlib.crc32(f"{kind}|{distribution}".encode()),
            idio_spec=InnovationSpec(kind=kind, parameter=param,
                                     distribution=distribution, target_lrv=target),
        )
        dz = DiffPanel(np.diff(simulate(cfg).panel.values, axis=1))
        est = estimate_lrv_set(dz, LrvConfig(kernel="bartlett", bandwidth="andrews",
                                             prewhiten=False))
        assert abs(np.median(est.omega2) - target) <= 0.1 * target


class TestLoadingConcentration:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_moments(self, k):
        n = 20000
        sim = simulate(_config(n=n, T=2, K=k, seed=k))
        lam = sim.true_loadings
        assert np.allclose(lam.mean(axis=0), k ** -0.5, atol=3.0 / math.sqrt(n) * 1.5)
        assert np.allclose(lam.var(axis=0), 1.0 / k, atol=0.05 / k + 3.0 / math.sqrt(n))
