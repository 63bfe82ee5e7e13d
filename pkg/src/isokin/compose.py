"""Ordered composition of deformation primitives.

Stages are listed innermost first: apply evaluates f_n(...f_1(x)...).  At
most one bend stage is allowed and it must be last, since bending breaks the
parallelism of horizontal planes that the other primitives rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OrderViolation, SingularInput
from .modal import CONSTANT
from .primitives import Bend2D, Elongation, Twist, is_bend


def validate_order(stages) -> None:
    """Raise OrderViolation if any stage follows a bend stage.

    Accepts a stage sequence or a CompositeDeformation.
    """
    stages = tuple(getattr(stages, "stages", stages))
    for i, stage in enumerate(stages):
        if is_bend(stage) and i != len(stages) - 1:
            raise OrderViolation(i + 1)


@dataclass(frozen=True)
class CompositeDeformation:
    """Composition of primitives with a flattened parameter vector.

    The parameter vector concatenates the stage weights innermost first and
    round-trips bit-identically.  Two coupling rules keep the composition
    self-consistent as parameters change:

    - when ``reference_height`` is set and an elongation precedes a final
      2D bend, the bend's arclength scale tracks the stretched height
      m_e(h) (the bend acts on post-stretch arclength);
    - when ``rotate_bend_plane`` is set, the bend's plane rotation tracks
      the constant weight of the innermost twist.  A constant twist commutes
      outward through the axisymmetric stages, so it only earns the body a
      third rotational degree of freedom if the bending plane turns with it;
      without this the top plane can never tilt out of the y-z plane.
    """

    stages: tuple
    reference_height: float | None = None
    rotate_bend_plane: bool = False

    def __post_init__(self):
        stages = tuple(self.stages)
        validate_order(stages)
        object.__setattr__(self, "stages", stages)
        slices = []
        start = 0
        for st in stages:
            slices.append(slice(start, start + st.num_weights))
            start += st.num_weights
        object.__setattr__(self, "_slices", tuple(slices))
        object.__setattr__(self, "_num_params", start)

    @property
    def num_params(self) -> int:
        return self._num_params

    @property
    def params(self) -> np.ndarray:
        if not self.stages:
            return np.zeros(0)
        return np.concatenate([st.weights for st in self.stages])

    def param_slices(self):
        return list(self._slices)

    def with_params(self, params) -> "CompositeDeformation":
        params = np.asarray(params, dtype=float).reshape(-1)
        if len(params) != self.num_params:
            raise ValueError(
                f"expected {self.num_params} parameters, got {len(params)}"
            )
        slices = self.param_slices()
        new_stages = []
        for st, sl in zip(self.stages[:-1] if self.stages else (), slices):
            w = params[sl]
            new_stages.append(st if np.array_equal(st.weights, w) else st.with_weights(w))
        if self.stages:
            last = self.stages[-1]
            w = params[slices[-1]]
            if isinstance(last, Bend2D):
                new_stages.append(self._rebuild_bend(last, w, new_stages))
            else:
                new_stages.append(
                    last if np.array_equal(last.weights, w) else last.with_weights(w)
                )
        return CompositeDeformation(
            tuple(new_stages), self.reference_height, self.rotate_bend_plane
        )

    def _rebuild_bend(self, bend: Bend2D, weights, inner_stages):
        length = bend.length
        if self.reference_height is not None:
            length = self.reference_height
            for st in inner_stages:
                if isinstance(st, Elongation):
                    length = float(st.rate.integral(length))
        plane = bend.plane_rotation
        if self.rotate_bend_plane:
            plane = self._twist_constant(inner_stages)
        if np.array_equal(bend.weights, weights) and abs(
            length - bend.length
        ) <= 1e-12 * max(1.0, abs(length)):
            return bend.with_plane_rotation(plane)
        return Bend2D(
            bend.curvature.with_scale(length).with_weights(weights),
            plane,
            bend.samples,
        )

    @staticmethod
    def _twist_constant(stages) -> float:
        for st in stages:
            if isinstance(st, Twist):
                for mode, w in zip(st.angle.modes, st.angle.weights):
                    if mode.kind == CONSTANT:
                        return float(w)
        return 0.0

    def apply(self, x):
        out = x
        for i, stage in enumerate(self.stages):
            try:
                out = stage.apply(out)
            except SingularInput as exc:
                raise SingularInput(f"stage {i}: {exc}") from exc
        if not self.stages:
            out = np.asarray(x, dtype=float).copy()
        return out

    def gradient(self, x):
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        grad = np.broadcast_to(np.eye(3), (len(pts), 3, 3)).copy()
        cur = pts
        for i, stage in enumerate(self.stages):
            try:
                g = stage.gradient(cur)
                cur = stage.apply(cur)
            except SingularInput as exc:
                raise SingularInput(f"stage {i}: {exc}") from exc
            grad = np.einsum("nij,njk->nik", g, grad)
        return grad[0] if single else grad

    def is_valid(self, x):
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        ok = np.ones(len(pts), dtype=bool)
        active = np.arange(len(pts))
        cur = pts
        for stage in self.stages:
            good = stage.is_valid(cur)
            ok[active[~good]] = False
            active = active[good]
            if len(active) == 0:
                break
            cur = stage.apply(cur[good])
        return bool(ok[0]) if single else ok
