import numpy as np
import pytest

import pricelab as pl
from pricelab.analysis import (DEFAULT_WEIGHT, DyadicRegion, GridField, NormSpec,
                               SymbolClassSpec, apply_vector_field, bracket,
                               commutator_residual, commutator_residual_flat,
                               cone_partition, duality_pairing, dyadic_scale,
                               gradient_magnitude, le_norm, sobolev_check,
                               symbol_class_check)
from pricelab.errors import DomainError


class TestWeightAndDyadic:
    def test_weight_properties(self):
        r = np.geomspace(1e-3, 1e7, 200)
        w = DEFAULT_WEIGHT(r)
        assert np.all(w >= 2.0)
        assert abs(w[-1] / r[-1] - 1.0) < 1e-10

    def test_partition_exactness(self):
        # every point with <r> in [2, 2^20] sits in exactly one annulus
        r = np.geomspace(1e-2, 2.0**20, 20000)
        w = bracket(r)
        keep = (w >= 2) & (w <= 2.0**20)
        R = dyadic_scale(r[keep])
        assert np.all((w[keep] >= R) & (w[keep] < 2 * R))
        # and DyadicRegion membership agrees
        for scale in (2.0, 16.0, 1024.0):
            reg = DyadicRegion(scale)
            inside = reg.contains(r)
            assert np.array_equal(inside, (w >= scale) & (w < 2 * scale))


class TestConePartition:
    def test_scales_T16(self):
        regs = cone_partition(16.0)
        assert [g.scale for g in regs if g.kind == "R"] == [1.0, 2.0, 4.0]
        assert [g.scale for g in regs if g.kind == "U"] == [1.0, 2.0]

    def test_minimal_T4(self):
        regs = cone_partition(4.0)
        assert len(regs) == 1 and regs[0].kind == "R" and regs[0].scale == 1.0
        assert regs[0].extended  # closes upward so the slab is covered

    def test_exhaustive_membership_scan(self):
        regs = cone_partition(16.0)
        t = np.linspace(16.0, 32.0, 200)
        r = np.linspace(0.0, 32.0, 200)
        TT, RR = np.meshgrid(t, r, indexing="ij")
        in_cone = RR <= TT
        per_R = sum(g.contains(TT, RR).astype(int) for g in regs if g.kind == "R")
        per_U = sum(g.contains(TT, RR).astype(int) for g in regs if g.kind == "U")
        # families are internally disjoint and jointly cover the slab
        assert per_R.max() <= 1 and per_U.max() <= 1
        assert np.all((per_R + per_U)[in_cone] >= 1)

    def test_invalid_scale(self):
        with pytest.raises(DomainError):
            cone_partition(0.5)


def _smooth_field(t, r):
    return GridField.from_function(
        lambda T, R: np.exp(-((R - 8.0) / 3.0) ** 2) * (1.0 + 0.2 * np.sin(T)), t, r)


class TestNorms:
    t = np.linspace(0.0, 10.0, 60)
    r = np.linspace(0.05, 60.0, 400)

    def test_zero_field(self):
        f = GridField.from_function(lambda T, R: 0.0 * T, self.t, self.r)
        assert le_norm(f, NormSpec("LE")).value == 0.0
        assert le_norm(f, NormSpec("LE_star")).value == 0.0

    def test_block_quadrature_oracle(self):
        # u = 1 on [t0,t1) x A_4 exactly: LE block value is the 1D quadrature
        # (integral of <r>^-1 r^2 dr over A_4) x (t1 - t0), computed
        # independently here with a fine Riemann sum
        t = np.linspace(0.0, 2.0, 81)
        r = np.linspace(0.05, 40.0, 6000)
        w = bracket(r)
        in_A4 = (w >= 4.0) & (w < 8.0)
        f = GridField(t=t, r=r, values=np.repeat(in_A4[None, :].astype(float), len(t), axis=0))
        res = le_norm(f, NormSpec("LE", (0.0, 2.0)))
        dr = r[1] - r[0]
        ref = np.sqrt(np.sum((1.0 / w[in_A4]) * r[in_A4] ** 2 * dr) * 2.0)
        assert res.per_block[4.0] == pytest.approx(ref, rel=2e-3)
        assert res.value == res.per_block[4.0]

    def test_duality_inequality(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a, b, c, d = rng.uniform(0.5, 3.0, 4)
            u = GridField.from_function(
                lambda T, R: np.sin(a * T) * np.exp(-(((R - 10 * b) / (3 + c)) ** 2)), self.t, self.r)
            f = GridField.from_function(
                lambda T, R: np.cos(d * T) * np.exp(-(((R - 15 * c) / (2 + a)) ** 2)), self.t, self.r)
            lhs = duality_pairing(u, f)
            rhs = le_norm(u, NormSpec("LE")).value * le_norm(f, NormSpec("LE_star")).value
            assert lhs <= rhs * (1 + 1e-12)

    def test_interval_monotonicity_and_additivity(self):
        f = _smooth_field(self.t, self.r)
        n1 = le_norm(f, NormSpec("LE", (0.0, 5.0)))
        n2 = le_norm(f, NormSpec("LE", (5.0, 10.001)))
        n3 = le_norm(f, NormSpec("LE", (0.0, 10.001)))
        assert n3.value >= n1.value and n3.value >= n2.value
        # half-open time intervals make per-block squared norms exactly additive
        for R, v3 in n3.per_block.items():
            v1 = n1.per_block.get(R, 0.0)
            v2 = n2.per_block.get(R, 0.0)
            assert v1**2 + v2**2 == pytest.approx(v3**2, abs=1e-12 * max(1.0, v3**2))
        # LE* is subadditive across the split
        s1 = le_norm(f, NormSpec("LE_star", (0.0, 5.0))).value
        s2 = le_norm(f, NormSpec("LE_star", (5.0, 10.001))).value
        s3 = le_norm(f, NormSpec("LE_star", (0.0, 10.001))).value
        assert s3 <= s1 + s2 + 1e-12

    def test_sup_below_weighted_sum(self):
        f = _smooth_field(self.t, self.r)
        le = le_norm(f, NormSpec("LE"))
        assert le.value <= sum(le.per_block.values()) + 1e-15

    def test_le1_and_weak(self):
        f = GridField.from_function(
            lambda T, R: np.exp(-((R - 8.0) / 3.0) ** 2) * np.cos(T), self.t, self.r, ell=1)
        full = le_norm(f, NormSpec("LE1"))
        chi = lambda r: np.exp(-(((np.asarray(r) - 8.0) / 2.0) ** 2))
        weak = le_norm(f, NormSpec("LE1_weak", weak_cutoff=chi))
        assert 0.0 < weak.value <= full.value + 1e-12

    def test_empty_interval_rejected(self):
        f = _smooth_field(self.t, self.r)
        with pytest.raises(DomainError):
            le_norm(f, NormSpec("LE", (20.0, 30.0)))

    def test_json_shape(self):
        f = _smooth_field(self.t, self.r)
        d = le_norm(f, NormSpec("LE")).to_json_dict()
        assert set(d) == {"variant", "interval", "value", "per_block_values"}


class TestVectorFields:
    t = np.linspace(1.0, 9.0, 161)
    r = np.linspace(1.0, 9.0, 161)

    def test_time_translation(self):
        f = GridField.from_function(lambda T, R: T + 0.0 * R, self.t, self.r)
        g = apply_vector_field(f, "T")
        assert np.abs(g.values[2:-2, 2:-2] - 1.0).max() < 1e-10

    def test_euler_identity_scaling(self):
        # u = t^2 / r is homogeneous of degree 1: S u = u
        f = GridField.from_function(lambda T, R: T**2 / R, self.t, self.r)
        g = apply_vector_field(f, "S")
        err = np.abs(g.values[2:-2, 2:-2] - f.values[2:-2, 2:-2])
        assert err.max() < 2e-2 * np.abs(f.values).max()

    def test_rotation_eigenvalue(self):
        f = GridField.from_function(lambda T, R: T + R, self.t, self.r, ell=2)
        g = apply_vector_field(f, "Omega2")
        assert np.array_equal(g.values, -6.0 * f.values)

    def test_leibniz_to_truncation_order(self):
        # discrete product-rule defect shrinks at the stencil order
        errs = []
        for n in (81, 161, 321):
            t = np.linspace(1.0, 9.0, n)
            r = np.linspace(1.0, 9.0, n)
            u = GridField.from_function(lambda T, R: np.sin(T) + R, t, r)
            v = GridField.from_function(lambda T, R: T * R, t, r)
            uv = u.like(u.values * v.values)
            lhs = apply_vector_field(uv, "T").values[2:-2, 2:-2]
            rhs = (apply_vector_field(u, "T").values * v.values
                   + u.values * apply_vector_field(v, "T").values)[2:-2, 2:-2]
            errs.append(np.abs(lhs - rhs).max())
        assert errs[0] / errs[1] >= 3.0
        assert errs[1] / errs[2] >= 3.0

    def test_unknown_field(self):
        f = GridField.from_function(lambda T, R: T, self.t, self.r)
        with pytest.raises(DomainError):
            apply_vector_field(f, "X")


class TestCommutators:
    def test_flat_convergence_order_on_analytic(self):
        sups = []
        u_fn = lambda T, R: np.exp(-((T - R - 5.0) ** 2)) * (1.0 + 0.3 * np.sin(0.7 * R))
        for h in (0.1, 0.05, 0.025):
            t = np.arange(6.0, 14.0 + h / 2, h)
            r = np.arange(1.0, 9.0 + h / 2, h)
            res, _, _ = commutator_residual_flat(u_fn, t, r, order=2)
            sups.append(np.abs(res).max())
        assert np.log2(sups[0] / sups[1]) >= 1.9
        assert np.log2(sups[1] / sups[2]) >= 1.9

    def test_pure_cone_gaussian_residual_tiny(self):
        # functions of t - r alone cancel the leading truncation term of the
        # discrete identity, leaving round-off
        h = 0.05
        t = np.arange(6.0, 14.0 + h / 2, h)
        r = np.arange(1.0, 9.0 + h / 2, h)
        res, _, _ = commutator_residual_flat(lambda T, R: np.exp(-((T - R - 5.0) ** 2)), t, r)
        assert np.abs(res).max() < 1e-9

    def test_polynomial_exact_with_high_order_stencils(self):
        t = np.arange(1.0, 3.0, 0.1)
        r = np.arange(1.0, 3.0, 0.1)
        res, _, _ = commutator_residual_flat(lambda T, R: T**3 * R**2, t, r, order=4)
        assert np.abs(res).max() < 1e-9

    def test_mode_operator_residual_shape(self):
        # with the Schwarzschild mode potential the residual obeys the
        # r^-3 (|Omega^2 u| + |u|) + r^-2 (|grad^2 u| + |grad u|) envelope
        p = pl.BlackHoleParams(1.0)
        ell = 2
        V = lambda R: pl.rw_potential(ell, p, R) - ell * (ell + 1) / R**2
        h = 0.05
        t = np.arange(10.0, 20.0 + h / 2, h)
        r = np.arange(8.0, 40.0 + h / 2, h)
        u_fn = lambda T, R: np.exp(-(((T - 15.0) / 2.0) ** 2) - (((R - 20.0) / 5.0) ** 2))
        res, tt, rr = commutator_residual(u_fn, t, r, potential=V, ell=ell, order=2)
        TT, RR = np.meshgrid(tt, rr, indexing="ij")
        U = u_fn(TT, RR)
        # crude first/second derivative magnitudes from the analytic form
        eps = 1e-5
        gr = np.abs((u_fn(TT, RR + eps) - u_fn(TT, RR - eps)) / (2 * eps)) + \
             np.abs((u_fn(TT + eps, RR) - u_fn(TT - eps, RR)) / (2 * eps))
        g2 = np.abs((u_fn(TT, RR + eps) - 2 * U + u_fn(TT, RR - eps)) / eps**2) + \
             np.abs((u_fn(TT + eps, RR) - 2 * U + u_fn(TT - eps, RR)) / eps**2)
        envelope = (RR**-3.0) * (ell * (ell + 1) * np.abs(U) + np.abs(U)) + (RR**-2.0) * (g2 + gr)
        mask = envelope > 1e-8 * envelope.max()
        ratio = np.abs(res)[mask] / envelope[mask]
        assert ratio.max() < 40.0  # one modest constant across all samples


class TestSymbolClasses:
    def test_bracket_inverse_square(self):
        t = np.linspace(1.0, 50.0, 60)
        r = np.geomspace(1.0, 1e3, 300)
        rep = symbol_class_check(lambda T, R: 1.0 / (4.0 + R**2), SymbolClassSpec(k=-2, depth=2), t, r)
        assert rep.passed
        assert all(v < 10.0 for v in rep.sup_scaled.values())

    def test_oscillation_fails_decay(self):
        t = np.linspace(1.0, 50.0, 60)
        r = np.geomspace(1.0, 1e3, 300)
        rep = symbol_class_check(lambda T, R: np.sin(R) + 0.0 * T,
                                 SymbolClassSpec(k=-1, depth=1, constants=(5.0, 50.0)), t, r)
        assert not rep.passed

    def test_time_decaying_perturbation_profile(self):
        delta = 0.5
        a_fn = lambda T, R: (1.0 + T) ** (-1.0 - delta) * np.exp(-(((R - 3.0) / 0.4) ** 2))
        t = np.geomspace(50.0, 5e3, 200)
        r = np.linspace(1.0, 6.0, 80)
        rep = symbol_class_check(a_fn, SymbolClassSpec(k=0, depth=1), t, r)
        assert rep.passed
        assert rep.time_integral < np.inf
        assert rep.time_decay_exponent == pytest.approx(-1.5, abs=0.05)


class TestSobolev:
    def _field(self, T, scale):
        return GridField.from_function(
            lambda A, B: np.exp(-(((A - 1.5 * T) / (0.2 * T)) ** 2)
                                - (((B - 1.4 * scale) / (0.3 * scale)) ** 2)),
            np.linspace(0.45 * T, 4.2 * T, 150),
            np.linspace(1e-3, min(8.0 * scale, 4.2 * T), 150), ell=1)

    def test_zero_field_vacuous_pass(self):
        reg = cone_partition(32.0)[2]
        w = self._field(32.0, reg.scale)
        z = w.like(0.0 * w.values)
        res = sobolev_check(z, reg)
        assert res.ratio == 0.0

    def test_ratio_stable_across_scales(self):
        ratios = []
        for T in (32.0, 64.0, 128.0):
            regs = [g for g in cone_partition(T) if g.kind == "R"]
            reg = regs[len(regs) // 2]
            res = sobolev_check(self._field(T, reg.scale), reg)
            assert 0.0 < res.ratio < 1.0  # embedding constant of order one
            ratios.append(res.ratio)
        assert max(ratios) / min(ratios) < 1.5

    def test_amplitude_homogeneity(self):
        reg = [g for g in cone_partition(64.0) if g.kind == "R"][1]
        w = self._field(64.0, reg.scale)
        r1 = sobolev_check(w, reg)
        r7 = sobolev_check(w.like(7.0 * w.values), reg)
        assert r7.ratio == pytest.approx(r1.ratio, rel=1e-12)


class TestGridField:
    def test_shape_validation(self):
        with pytest.raises(DomainError):
            GridField(t=np.arange(3.0), r=np.arange(4.0), values=np.zeros((4, 3)))

    def test_gradient_magnitude_includes_angular(self):
        t = np.linspace(0.0, 1.0, 11)
        r = np.linspace(1.0, 2.0, 11)
        f0 = GridField.from_function(lambda T, R: np.ones_like(T), t, r, ell=0)
        f2 = GridField.from_function(lambda T, R: np.ones_like(T), t, r, ell=2)
        g0 = gradient_magnitude(f0).values
        g2 = gradient_magnitude(f2).values
        assert np.abs(g0[3:-3, 3:-3]).max() < 1e-10
        assert np.allclose(g2[3:-3, 3:-3], np.sqrt(6.0) / r[None, 3:-3], atol=1e-10)
