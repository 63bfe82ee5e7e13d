import numpy as np
import pytest

from isokin.compose import CompositeDeformation
from isokin.liegroup import integrate_backbone
from isokin.modal import make_basis
from isokin.primitives import Bend2D, Elongation, Shear, Twist


def fd_gradient(fn, pts, step=1e-6):
    """Six-point centered finite differences of a point map (the gradient
    oracle; independent of the analytic formulas it checks)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.empty((len(pts), 3, 3))
    for j in range(3):
        dp = np.zeros(3)
        dp[j] = step
        out[:, :, j] = (fn(pts + dp) - fn(pts - dp)) / (2.0 * step)
    return out


def rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def block_composite(height=6.0):
    return CompositeDeformation(
        (
            Twist(make_basis("block-twist", height)),
            Elongation(make_basis("block-stretch-rate", height), height),
            Shear(make_basis("block-shear", height), make_basis("block-shear", height)),
            Bend2D(make_basis("block-bend", height)),
        ),
        reference_height=height,
        rotate_bend_plane=True,
    )


def block_points(rng, n, height=6.0, margin=0.1):
    return np.column_stack(
        [
            rng.uniform(-1.4, 1.4, n),
            rng.uniform(-1.4, 1.4, n),
            rng.uniform(margin, height - margin, n),
        ]
    )


def helix_curve(kappa0=0.2, tau0=0.15, length=15.0, steps=1000):
    return integrate_backbone(
        lambda s: np.array([kappa0, 0.0, tau0]), length, steps
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
