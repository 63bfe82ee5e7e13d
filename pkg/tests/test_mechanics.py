import numpy as np
import pytest

from conftest import block_composite

from isokin.compose import CompositeDeformation
from isokin.config import load_config, build_composite, build_domain
from isokin.errors import IllConditioned, NotIsochoric, NotSymmetric
from isokin.mechanics import (
    DRAGONSKIN_30,
    ECOFLEX_00_30,
    BlockDomain,
    CylShellDomain,
    Material,
    SolidCylDomain,
    fit_quadratic_form,
    fit_weight_matrix,
    invariants,
    mr_density,
    symmetric_basis_matrices,
    total_energy,
)
from isokin.modal import make_basis
from isokin.primitives import Source


def simple_shear(gamma):
    F = np.eye(3)
    F[0, 2] = gamma
    return F


class TestInvariants:
    def test_identity(self):
        assert invariants(np.eye(3)) == (3.0, 3.0, 1.0)

    def test_simple_shear(self):
        F = simple_shear(0.5)
        B = F @ F.T
        i1, i2, i3 = invariants(B)
        assert i1 == pytest.approx(3.25)
        assert i2 == pytest.approx(3.25)
        assert i3 == pytest.approx(1.0)

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            invariants(simple_shear(0.5))

    def test_i3_is_det_squared(self, rng):
        for _ in range(50):
            F = np.eye(3) + 0.3 * rng.normal(size=(3, 3))
            _, _, i3 = invariants(F @ F.T)
            assert i3 == pytest.approx(np.linalg.det(F) ** 2, rel=1e-8)

    def test_isochoric_gradients_have_unit_i3(self, rng):
        comp = block_composite().with_params(rng.uniform(-0.03, 0.03, 9))
        pts = np.column_stack(
            [rng.uniform(-1.2, 1.2, 300), rng.uniform(-1.2, 1.2, 300), rng.uniform(0.2, 5.8, 300)]
        )
        F = comp.gradient(pts)
        B = np.einsum("nij,nkj->nik", F, F)
        _, _, i3 = invariants(B)
        np.testing.assert_allclose(i3, 1.0, atol=1e-8)


class TestMrDensity:
    def test_identity_zero(self):
        assert mr_density(np.eye(3), ECOFLEX_00_30) == 0.0

    def test_ecoflex_simple_shear(self):
        # I1 - 3 = I2 - 3 = gamma^2, so psi = (C10 + C01) gamma^2
        psi = mr_density(simple_shear(0.5), ECOFLEX_00_30)
        assert psi == pytest.approx((5.6 + 6.3) * 0.25)

    def test_neo_hookean_reduction(self, rng):
        F = simple_shear(0.3)
        nh = mr_density(F, Material(c10=7.0, c01=0.0))
        i1 = invariants(F @ F.T)[0]
        assert nh == pytest.approx(7.0 * (i1 - 3.0))

    def test_rejects_non_isochoric(self):
        with pytest.raises(NotIsochoric):
            mr_density(1.01 * np.eye(3), ECOFLEX_00_30)

    def test_nonnegative_on_isochoric(self, rng):
        comp = block_composite().with_params(rng.uniform(-0.03, 0.03, 9))
        pts = np.column_stack(
            [rng.uniform(-1.2, 1.2, 200), rng.uniform(-1.2, 1.2, 200), rng.uniform(0.2, 5.8, 200)]
        )
        psi = mr_density(comp.gradient(pts), ECOFLEX_00_30)
        assert np.min(psi) >= -1e-12


class TestTotalEnergy:
    def test_zero_weights_zero_energy(self):
        comp = block_composite()
        domain = BlockDomain(3.0, 3.0, 6.0)
        assert total_energy(comp, np.zeros(9), domain, ECOFLEX_00_30) == 0.0

    def test_chamber_zero_source(self):
        comp = CompositeDeformation((Source(make_basis("chamber", 10.0)),))
        domain = CylShellDomain(1.6, 1.8, 10.0)
        assert total_energy(comp, np.zeros(5), domain, ECOFLEX_00_30) == 0.0

    def test_small_twist_grid_refinement(self):
        comp = block_composite()
        p = np.zeros(9)
        p[1] = 0.01
        domain = BlockDomain(3.0, 3.0, 6.0)
        e = total_energy(comp, p, domain, ECOFLEX_00_30)
        e4 = total_energy(comp, p, domain.refined(4), ECOFLEX_00_30)
        assert abs(e - e4) / e4 < 0.005

    def test_linear_in_material_coefficients(self, rng):
        comp = block_composite()
        p = rng.uniform(-0.01, 0.01, 9)
        domain = BlockDomain(3.0, 3.0, 6.0, 10, 10, 10)
        e_10 = total_energy(comp, p, domain, Material(1.0, 0.0))
        e_01 = total_energy(comp, p, domain, Material(0.0, 1.0))
        for mat in (ECOFLEX_00_30, DRAGONSKIN_30):
            e = total_energy(comp, p, domain, mat)
            assert e == pytest.approx(mat.c10 * e_10 + mat.c01 * e_01, rel=1e-12)

    @pytest.mark.parametrize("name", ["block", "chamber", "rod2d"])
    def test_refinement_under_one_percent(self, name, rng):
        cfg = load_config(f"configs/{name}.ini")
        comp = build_composite(cfg)
        domain = build_domain(cfg)
        p = rng.uniform(-0.005, 0.005, comp.num_params)
        if name == "chamber":
            p = np.abs(p)
        e = total_energy(comp, p, domain, cfg.material)
        e2 = total_energy(comp, p, domain.refined(2), cfg.material)
        assert abs(e - e2) / abs(e2) < 0.01


class TestDomains:
    def test_block_volume(self):
        _, vols = BlockDomain(3.0, 3.0, 6.0).points_and_volumes()
        assert vols.sum() == pytest.approx(54.0)

    def test_shell_volume(self):
        _, vols = CylShellDomain(1.6, 1.8, 10.0).points_and_volumes()
        assert vols.sum() == pytest.approx(np.pi * (1.8 ** 2 - 1.6 ** 2) * 10.0, rel=1e-3)

    def test_cyl_volume(self):
        _, vols = SolidCylDomain(0.45, 15.0).points_and_volumes()
        assert vols.sum() == pytest.approx(np.pi * 0.45 ** 2 * 15.0, rel=1e-3)

    def test_midpoints_avoid_axis(self):
        pts, _ = SolidCylDomain(0.45, 15.0).points_and_volumes()
        assert np.min(np.hypot(pts[:, 0], pts[:, 1])) > 0.0


class TestWeightFit:
    def test_basis_matrices_m2(self):
        mats = symmetric_basis_matrices(2)
        assert len(mats) == 3
        np.testing.assert_array_equal(mats[0], [[1.0, 0.0], [0.0, 0.0]])
        np.testing.assert_array_equal(mats[1], [[0.0, 0.0], [0.0, 1.0]])
        np.testing.assert_array_equal(mats[2], [[0.0, 1.0], [1.0, 0.0]])

    def test_synthetic_quadratic_recovery(self, rng):
        m = 9
        A = rng.normal(size=(m, m))
        W0 = A @ A.T + m * np.eye(m)
        P = rng.uniform(-1e-3, 1e-3, size=(2 * m * (m + 1) // 2, m))
        c = np.einsum("ni,ij,nj->n", P, W0, P)
        W, residual, rank = fit_quadratic_form(P, c)
        assert rank == m * (m + 1) // 2
        np.testing.assert_allclose(W, W0, atol=1e-6)
        assert residual < 1e-12

    def test_equal_energies_give_scaled_identity(self, rng):
        m = 4
        dirs = rng.normal(size=(30, m))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radius = 1e-2
        P = radius * dirs
        c = np.full(30, 7.0 * radius ** 2)
        W, _, _ = fit_quadratic_form(P, c)
        np.testing.assert_allclose(W, 7.0 * np.eye(m), atol=1e-6)

    def test_rank_deficient_raises(self, rng):
        m = 3
        P = np.tile(rng.normal(size=(1, m)), (12, 1))  # one repeated sample
        with pytest.raises(IllConditioned):
            fit_quadratic_form(P, np.ones(12))

    def test_sample_count_validation(self):
        comp = block_composite()
        domain = BlockDomain(3.0, 3.0, 6.0, 4, 4, 4)
        with pytest.raises(ValueError):
            fit_weight_matrix(comp, domain, ECOFLEX_00_30, sample_count=10)

    def test_block_fit_symmetric_and_pd(self):
        cfg = load_config("configs/block.ini")
        comp = build_composite(cfg)
        domain = build_domain(cfg)
        fit = fit_weight_matrix(
            comp,
            domain,
            cfg.material,
            sample_count=cfg.weightfit.samples,
            magnitude=cfg.weightfit.magnitude,
            seed=cfg.weightfit.seed,
        )
        np.testing.assert_array_equal(fit.W, fit.W.T)
        assert fit.is_positive_definite()
        assert fit.rank == 45

    def test_fit_deterministic(self):
        comp = block_composite()
        domain = BlockDomain(3.0, 3.0, 6.0, 6, 6, 6)
        fits = [
            fit_weight_matrix(comp, domain, ECOFLEX_00_30, magnitude=1e-3, seed=3)
            for _ in range(2)
        ]
        np.testing.assert_array_equal(fits[0].W, fits[1].W)
