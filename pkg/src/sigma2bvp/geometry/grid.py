"""Chart grids: tensor-product node lattices for the model manifolds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError
from . import fd


@dataclass(frozen=True)
class Axis:
    count: int
    spacing: float
    periodic: bool = False


@dataclass(frozen=True)
class ChartGrid:
    """A discretized coordinate chart.

    Parameters
    ----------
    n : manifold dimension (>= 3 for the conformal layer).
    axes : one Axis per grid dimension.  A radial chart has a single axis
        holding the radial coordinate; its sphere factor is implicit.
    boundary_faces : (axis, side) pairs marking the manifold boundary,
        side 0 = low end, 1 = high end.  Faces live on non-periodic axes.
    symmetry : 'none' for full charts, 'radial' for 1D warped-sphere
        reductions whose low end is a regular center (not boundary).
    coords : per-axis node coordinate arrays.
    """

    n: int
    axes: tuple
    boundary_faces: tuple
    symmetry: str = "none"
    coords: tuple = field(default=())

    def __post_init__(self):
        if self.symmetry not in ("none", "radial"):
            raise InvalidArgumentError(f"unknown symmetry {self.symmetry!r}")
        for ax in self.axes:
            if ax.count < 4:
                raise InvalidArgumentError("need at least 4 nodes per axis")
            if not ax.periodic and ax.count < 6:
                raise InvalidArgumentError(
                    "non-periodic axes need at least 6 nodes for the "
                    "one-sided end stencils")
        for axis, side in self.boundary_faces:
            if self.axes[axis].periodic:
                raise InvalidArgumentError("boundary face on a periodic axis")
            if side not in (0, 1):
                raise InvalidArgumentError("face side must be 0 or 1")
        if self.symmetry == "radial":
            if len(self.axes) != 1 or self.axes[0].periodic:
                raise InvalidArgumentError("radial chart needs one non-periodic axis")
            if self.boundary_faces != ((0, 1),):
                raise InvalidArgumentError("radial boundary must be the outer end")
            if abs(self.coords[0][0]) > 1e-15:
                raise InvalidArgumentError("radial chart must start at the center 0")
        else:
            if len(self.axes) != self.n:
                raise InvalidArgumentError("full chart needs one axis per dimension")

    @property
    def shape(self):
        return tuple(ax.count for ax in self.axes)

    @property
    def nnodes(self):
        return int(np.prod(self.shape))

    def _left_mode(self, axis, parity):
        if self.symmetry == "radial" and axis == 0:
            return "reflect_even" if parity == "even" else "reflect_odd"
        return "onesided"

    def d1(self, f, axis, parity="even"):
        """First derivative along a grid axis (O(h^2) everywhere).

        ``parity`` selects the ghost reflection at a radial center and is
        ignored elsewhere.
        """
        ax = self.axes[axis]
        return fd.diff1(f, axis, ax.spacing, periodic=ax.periodic,
                        left=self._left_mode(axis, parity))

    def d2(self, f, axis, parity="even"):
        """Second derivative along a grid axis (O(h^2) everywhere)."""
        ax = self.axes[axis]
        return fd.diff2(f, axis, ax.spacing, periodic=ax.periodic,
                        left=self._left_mode(axis, parity))

    def dcross(self, f, axis_a, axis_b, parity="even"):
        """Mixed second derivative d^2 f / dx_a dx_b (axis_a != axis_b)."""
        return self.d1(self.d1(f, axis_b, parity=parity), axis_a, parity=parity)

    def d3(self, f, axis, parity="even"):
        """Third derivative along a grid axis (for defect corrections)."""
        ax = self.axes[axis]
        return fd.diff3(f, axis, ax.spacing, periodic=ax.periodic,
                        left=self._left_mode(axis, parity))

    def axis_weights(self, axis):
        """1D quadrature weights: trapezoid if bounded, rectangle if periodic."""
        ax = self.axes[axis]
        if ax.periodic:
            return np.full(ax.count, ax.spacing)
        w = np.full(ax.count, ax.spacing)
        w[0] = w[-1] = 0.5 * ax.spacing
        return w

    def product_weights(self):
        """Tensor-product quadrature weights over all grid nodes."""
        w = self.axis_weights(0)
        for axis in range(1, len(self.axes)):
            w = np.multiply.outer(w, self.axis_weights(axis))
        return w

    def boundary_mask(self):
        """Boolean field, True at nodes lying on any boundary face."""
        mask = np.zeros(self.shape, dtype=bool)
        for axis, side in self.boundary_faces:
            idx = [slice(None)] * len(self.axes)
            idx[axis] = -1 if side == 1 else 0
            mask[tuple(idx)] = True
        return mask

    def face_slice(self, axis, side):
        idx = [slice(None)] * len(self.axes)
        idx[axis] = -1 if side == 1 else 0
        return tuple(idx)
