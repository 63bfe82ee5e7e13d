"""Scalar mode functions and boundary-condition-aware bases.

Every deformation primitive is parameterized by one or more scalar shape
functions m(x) = offset + sum_i p_i * phi_i(x); the weights p are the free
parameters the solvers update.  Evaluation, derivative and antiderivative
are all closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONSTANT = "constant"
LINEAR = "linear"
SINE = "sine"
COSINE = "cosine"
QUADRATIC_BC = "quadratic-bc"

_KINDS = (CONSTANT, LINEAR, SINE, COSINE, QUADRATIC_BC)
_SCALED_KINDS = (SINE, COSINE, QUADRATIC_BC)


@dataclass(frozen=True)
class BasisMode:
    """One basis function phi(x).

    kind selects the formula:
        constant        1
        linear          x
        sine            sin(k*pi*x/L)
        cosine          cos(k*pi*x/L)
        quadratic-bc    x*(x - L)     (vanishes at x=0 and x=L)

    ``scale`` is the length L (cm), required for sine/cosine/quadratic-bc.
    ``k`` is the harmonic index for sine/cosine.
    """

    kind: str
    scale: float = 0.0
    k: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown basis mode kind {self.kind!r}")
        if self.kind in _SCALED_KINDS and not self.scale > 0.0:
            raise ValueError(f"{self.kind} mode requires a positive scale")
        if self.k < 1:
            raise ValueError("harmonic index k must be >= 1")

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == CONSTANT:
            return np.ones_like(x)
        if self.kind == LINEAR:
            return x.copy()
        if self.kind == SINE:
            return np.sin(self.k * np.pi * x / self.scale)
        if self.kind == COSINE:
            return np.cos(self.k * np.pi * x / self.scale)
        return x * (x - self.scale)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == CONSTANT:
            return np.zeros_like(x)
        if self.kind == LINEAR:
            return np.ones_like(x)
        w = self.k * np.pi / self.scale
        if self.kind == SINE:
            return w * np.cos(w * x)
        if self.kind == COSINE:
            return -w * np.sin(w * x)
        return 2.0 * x - self.scale

    def antideriv(self, x):
        """Antiderivative with F(0) = 0."""
        x = np.asarray(x, dtype=float)
        if self.kind == CONSTANT:
            return x.copy()
        if self.kind == LINEAR:
            return 0.5 * x * x
        w = self.k * np.pi / self.scale
        if self.kind == SINE:
            return (1.0 - np.cos(w * x)) / w
        if self.kind == COSINE:
            return np.sin(w * x) / w
        return x * x * (x / 3.0 - self.scale / 2.0)

    def with_scale(self, scale: float) -> "BasisMode":
        if self.kind in _SCALED_KINDS:
            return BasisMode(self.kind, scale, self.k)
        return self


@dataclass(frozen=True)
class ModalFunction:
    """Weighted sum of basis modes plus a constant offset.

    The offset encodes forms like "rate = 1 + weighted modes" without a
    constant mode consuming a weight slot, so len(weights) equals the number
    of free parameters exactly.
    """

    modes: tuple
    weights: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        modes = tuple(self.modes)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if len(w) != len(modes):
            raise ValueError(
                f"{len(w)} weights for {len(modes)} modes"
            )
        w.flags.writeable = False
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "weights", w)

    @property
    def num_weights(self) -> int:
        return len(self.weights)

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, self.offset)
        for w, mode in zip(self.weights, self.modes):
            if w != 0.0:
                out += w * mode.eval(x)
        return out

    __call__ = eval

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, mode in zip(self.weights, self.modes):
            if w != 0.0:
                out += w * mode.deriv(x)
        return out

    def integral(self, x):
        """Exact antiderivative of eval with value 0 at x = 0."""
        x = np.asarray(x, dtype=float)
        out = self.offset * x
        for w, mode in zip(self.weights, self.modes):
            if w != 0.0:
                out += w * mode.antideriv(x)
        return out

    def with_weights(self, weights) -> "ModalFunction":
        return ModalFunction(self.modes, weights, self.offset)

    def with_scale(self, scale: float) -> "ModalFunction":
        """Replace the length scale of every scaled mode (keeps weights)."""
        return ModalFunction(
            tuple(m.with_scale(scale) for m in self.modes), self.weights, self.offset
        )

    def mode_scale(self):
        """Common scale of the scaled modes, or None if there are none."""
        scales = {m.scale for m in self.modes if m.kind in _SCALED_KINDS}
        if not scales:
            return None
        if len(scales) > 1:
            raise ValueError(f"mixed mode scales {sorted(scales)}")
        return scales.pop()


CHAMBER = "chamber"
ROD2D = "rod2d"
BLOCK_BEND = "block-bend"
BLOCK_STRETCH_RATE = "block-stretch-rate"
BLOCK_SHEAR = "block-shear"
BLOCK_TWIST = "block-twist"


def make_basis(case: str, length: float, count: int | None = None) -> ModalFunction:
    """Per-case basis with all weights zero.

    chamber            odd sines sin(k pi x/L), k = 1,3,...  (default 5 modes)
    rod2d              sines k = 1..count (default 6)
    block-bend         sines k = 1..count (default 4)
    block-stretch-rate offset 1 with the single mode x(x-h)
    block-shear        the single mode x (per sheared axis)
    block-twist        {1, x}; the constant mode rotates the whole body and
                       intentionally breaks the fix-the-bottom rule the other
                       bases satisfy

    Except for that constant twist mode, every basis satisfies its rigid
    top/bottom surface condition identically in the weights: bend and source
    bases vanish at both ends, shear vanishes at x=0, the stretch rate is 1
    at both ends.
    """
    if not length > 0.0:
        raise ValueError("length must be positive")
    if case == CHAMBER:
        n = 5 if count is None else count
        modes = tuple(BasisMode(SINE, length, 2 * i + 1) for i in range(n))
    elif case == ROD2D:
        n = 6 if count is None else count
        modes = tuple(BasisMode(SINE, length, i + 1) for i in range(n))
    elif case == BLOCK_BEND:
        n = 4 if count is None else count
        modes = tuple(BasisMode(SINE, length, i + 1) for i in range(n))
    elif case == BLOCK_STRETCH_RATE:
        return ModalFunction((BasisMode(QUADRATIC_BC, length),), [0.0], offset=1.0)
    elif case == BLOCK_SHEAR:
        modes = (BasisMode(LINEAR),)
    elif case == BLOCK_TWIST:
        modes = (BasisMode(CONSTANT), BasisMode(LINEAR))
    else:
        raise ValueError(f"unknown basis case {case!r}")
    return ModalFunction(modes, np.zeros(len(modes)))
