import numpy as np
import pytest

from conftest import block_composite, block_points, fd_gradient, rel_err

from isokin.compose import CompositeDeformation, validate_order
from isokin.errors import OrderViolation
from isokin.modal import make_basis
from isokin.primitives import Bend2D, Shear, Source, Twist


def _twist(w):
    return Twist(make_basis("block-twist", 6.0).with_weights(w))


class TestValidateOrder:
    def test_bend_last_ok(self):
        validate_order([_twist([0.1, 0.0]), Bend2D(make_basis("block-bend", 6.0))])

    def test_bend_first_rejected(self):
        with pytest.raises(OrderViolation) as err:
            validate_order([Bend2D(make_basis("block-bend", 6.0)), _twist([0.1, 0.0])])
        assert err.value.stage_index == 1

    def test_single_source_ok(self):
        validate_order([Source(make_basis("chamber", 10.0))])

    def test_two_bends_rejected(self):
        bend = Bend2D(make_basis("block-bend", 6.0))
        with pytest.raises(OrderViolation):
            CompositeDeformation((bend, bend))


class TestApply:
    def test_empty_is_identity(self, rng):
        comp = CompositeDeformation(())
        pts = block_points(rng, 10)
        np.testing.assert_array_equal(comp.apply(pts), pts)
        np.testing.assert_array_equal(
            comp.gradient(pts), np.broadcast_to(np.eye(3), (10, 3, 3))
        )

    def test_two_twists_compose_angles(self, rng):
        pts = block_points(rng, 40)
        c2 = CompositeDeformation((_twist([0.0, 0.03]), _twist([0.0, 0.05])))
        single = _twist([0.0, 0.08])
        np.testing.assert_allclose(c2.apply(pts), single.apply(pts), atol=1e-14)

    def test_block_zero_weights_identity(self, rng):
        comp = block_composite()
        pts = block_points(rng, 50)
        np.testing.assert_array_equal(comp.apply(pts), pts)

    def test_single_stage_matches_primitive(self, rng):
        tw = _twist([0.2, 0.05])
        comp = CompositeDeformation((tw,))
        pts = block_points(rng, 30)
        np.testing.assert_array_equal(comp.apply(pts), tw.apply(pts))
        np.testing.assert_array_equal(comp.gradient(pts), tw.gradient(pts))


class TestGradient:
    def test_det_closure(self, rng):
        comp = block_composite().with_params(rng.uniform(-0.03, 0.03, 9))
        pts = block_points(rng, 1000)
        det = np.linalg.det(comp.gradient(pts))
        assert np.max(np.abs(det - 1.0)) < 1e-8

    def test_chain_rule_matches_fd(self, rng):
        comp = block_composite().with_params(rng.uniform(-0.03, 0.03, 9))
        pts = block_points(rng, 150)
        err = rel_err(comp.gradient(pts), fd_gradient(comp.apply, pts))
        assert err < 1e-5

    def test_reordering_nonbend_stages_keeps_det(self, rng):
        tw = _twist([0.1, 0.04])
        sh = Shear(
            make_basis("block-shear", 6.0).with_weights([0.05]),
            make_basis("block-shear", 6.0).with_weights([-0.02]),
        )
        pts = block_points(rng, 200)
        for stages in ((tw, sh), (sh, tw)):
            det = np.linalg.det(CompositeDeformation(stages).gradient(pts))
            assert np.max(np.abs(det - 1.0)) < 1e-8


class TestParams:
    def test_round_trip_bit_identical(self, rng):
        comp = block_composite()
        p = rng.normal(size=9) * 0.01
        out = comp.with_params(p).params
        assert np.array_equal(out, p)

    def test_length_check(self):
        with pytest.raises(ValueError):
            block_composite().with_params(np.zeros(5))

    def test_bend_scale_follows_stretch(self):
        comp = block_composite()
        p = np.zeros(9)
        p[2] = 0.002  # st
        stretched = comp.with_params(p)
        bend = stretched.stages[-1]
        # m_e(h) = h - st h^3/6
        expected = 6.0 - 0.002 * 6.0 ** 3 / 6.0
        assert bend.length == pytest.approx(expected, rel=1e-12)
        # curvature modes carry the new scale, so the bend still vanishes at
        # the stretched top
        m = bend.curvature.with_weights([1.0, 0.5, 0.2, 0.1])
        assert abs(m(expected)) < 1e-12

    def test_bend_plane_follows_twist_constant(self):
        comp = block_composite()
        p = np.zeros(9)
        p[0] = 0.7  # ro
        assert comp.with_params(p).stages[-1].plane_rotation == pytest.approx(0.7)

    def test_unchanged_stages_are_reused(self):
        comp = block_composite()
        p = np.zeros(9)
        p[3] = 0.01  # shear only
        out = comp.with_params(p)
        assert out.stages[0] is comp.stages[0]
        assert out.stages[-1] is comp.stages[-1]
