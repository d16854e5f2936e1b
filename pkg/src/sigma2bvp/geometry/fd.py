"""Second-order finite-difference stencils on tensor-product grids.

All derivatives act along one of the leading (grid) axes of an array; any
trailing component axes ride along untouched.  Non-periodic ends use
second-order one-sided stencils.  A radial axis additionally supports ghost
reflection through the regular center at coordinate 0: even fields reflect
as ``f(-x) = f(x)``, odd fields as ``f(-x) = -f(x)``.
"""

from __future__ import annotations

import numpy as np

LEFT_MODES = ("onesided", "reflect_even", "reflect_odd")


def _move(f, axis):
    return np.moveaxis(np.asarray(f, dtype=float), axis, 0)


def _restore(f, axis):
    return np.moveaxis(f, 0, axis)


def diff1(f, axis, h, periodic=False, left="onesided"):
    """First derivative along ``axis`` with spacing ``h``."""
    g = _move(f, axis)
    if periodic:
        out = (np.roll(g, -1, axis=0) - np.roll(g, 1, axis=0)) / (2.0 * h)
        return _restore(out, axis)
    out = np.empty_like(g)
    out[1:-1] = (g[2:] - g[:-2]) / (2.0 * h)
    if left == "onesided":
        out[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h)
    elif left == "reflect_even":
        out[0] = 0.0
    elif left == "reflect_odd":
        out[0] = g[1] / h
    else:
        raise ValueError(f"unknown left mode {left!r}")
    out[-1] = (3.0 * g[-1] - 4.0 * g[-2] + g[-3]) / (2.0 * h)
    return _restore(out, axis)


def diff2(f, axis, h, periodic=False, left="onesided"):
    """Second derivative along ``axis`` with spacing ``h``."""
    g = _move(f, axis)
    h2 = h * h
    if periodic:
        out = (np.roll(g, -1, axis=0) - 2.0 * g + np.roll(g, 1, axis=0)) / h2
        return _restore(out, axis)
    out = np.empty_like(g)
    out[1:-1] = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / h2
    # third-order 5-point end stencils keep boundary nodes from dominating
    # sup-norm curvature errors; interior rows never see them
    if left == "onesided":
        out[0] = (35.0 * g[0] - 104.0 * g[1] + 114.0 * g[2] - 56.0 * g[3]
                  + 11.0 * g[4]) / (12.0 * h2)
    elif left == "reflect_even":
        out[0] = 2.0 * (g[1] - g[0]) / h2
    elif left == "reflect_odd":
        out[0] = -2.0 * g[0] / h2
    else:
        raise ValueError(f"unknown left mode {left!r}")
    out[-1] = (35.0 * g[-1] - 104.0 * g[-2] + 114.0 * g[-3] - 56.0 * g[-4]
               + 11.0 * g[-5]) / (12.0 * h2)
    return _restore(out, axis)


def diff3(f, axis, h, periodic=False, left="onesided"):
    """Third derivative along ``axis`` (second order in the interior).

    Used for the defect correction of near-axis curvature ratios; the
    one-sided end stencils are first order, which suffices because the
    correction carries an extra factor h^2.
    """
    g = _move(f, axis)
    h3 = h ** 3
    if periodic:
        out = (np.roll(g, -2, axis=0) - 2.0 * np.roll(g, -1, axis=0)
               + 2.0 * np.roll(g, 1, axis=0) - np.roll(g, 2, axis=0)) / (2.0 * h3)
        return _restore(out, axis)
    out = np.empty_like(g)
    out[2:-2] = (g[4:] - 2.0 * g[3:-1] + 2.0 * g[1:-3] - g[:-4]) / (2.0 * h3)
    if left == "reflect_odd":
        out[0] = (g[2] - 2.0 * g[1]) / h3
        out[1] = (g[3] - 2.0 * g[2] + 2.0 * g[0] + g[1]) / (2.0 * h3)
    elif left == "reflect_even":
        out[0] = 0.0
        out[1] = (g[3] - 2.0 * g[2] + 2.0 * g[0] - g[1]) / (2.0 * h3)
    else:
        for j in (0, 1):
            out[j] = (-g[j] + 3.0 * g[j + 1] - 3.0 * g[j + 2] + g[j + 3]) / h3
    for j in (-2, -1):
        out[j] = (g[j] - 3.0 * g[j - 1] + 3.0 * g[j - 2] - g[j - 3]) / h3
    return _restore(out, axis)


def even_center_extrapolation(values_123):
    """Quadratic-in-rho^2 extrapolation of an even radial profile to rho=0.

    ``values_123`` holds samples at the first three off-center nodes
    (rho = h, 2h, 3h); the interpolant through (rho^2, value) is evaluated
    at 0, giving weights (1.5, -0.6, 0.1).
    """
    y1, y2, y3 = values_123
    return 1.5 * y1 - 0.6 * y2 + 0.1 * y3
