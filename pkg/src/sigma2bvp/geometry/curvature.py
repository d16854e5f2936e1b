"""Christoffel symbols, Ricci and scalar curvature for model charts.

Two routes are provided: closed-form warped-product expressions for the
catalog metrics (``curvature_exact``) and generic second-order finite
differences of the stored metric components (``curvature_fd``).  The FD
route converges to the exact one at O(h^2) and doubles as the only route
for perturbed metrics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import InvalidMetricError, UnsupportedModelError
from .fd import even_center_extrapolation

RICCI_FRAME_NOTE = "radial packs store frame components (metric = identity)"


@dataclass
class RadialConnection:
    """Connection data of ``b^2 drho^2 + a^2 g_sphere`` in the radial frame.

    Only first warp derivatives enter covariant Hessians; the arrays are
    exact for catalog caps and one-sided finite differences otherwise.
    """

    a: np.ndarray
    b: np.ndarray
    da: np.ndarray
    db: np.ndarray


@dataclass
class CurvaturePack:
    christoffels: Union[np.ndarray, RadialConnection]
    ricci: np.ndarray
    scalar: np.ndarray
    source: str


def christoffels_exact_full(model):
    """Closed-form Christoffels of g = dr^2 + a(r)^2 dphi^2 + b(r)^2 dpsi^2."""
    rw = model.rwarp
    shape = model.grid.shape
    G = np.zeros(shape + (3, 3, 3))
    a = rw.a[:, None, None]
    b = rw.b[:, None, None]
    da = rw.da[:, None, None]
    db = rw.db[:, None, None]
    G[..., 0, 1, 1] = -a * da
    G[..., 0, 2, 2] = -b * db
    G[..., 1, 0, 1] = G[..., 1, 1, 0] = da / a
    G[..., 2, 0, 2] = G[..., 2, 2, 0] = db / b
    return G


def christoffels_fd(model):
    """Christoffels from centered differences of the metric components."""
    grid = model.grid
    g = model.metric.g
    ginv = model.metric.g_inv
    naxes = len(grid.axes)
    n = grid.n
    dg = np.stack([grid.d1(g, axis) for axis in range(naxes)])
    G = np.zeros(grid.shape + (n, n, n))
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                acc = np.zeros(grid.shape)
                for l in range(n):
                    acc += ginv[..., k, l] * (dg[i][..., l, j] + dg[j][..., l, i]
                                              - dg[l][..., i, j])
                G[..., k, i, j] = 0.5 * acc
                G[..., k, j, i] = G[..., k, i, j]
    return G


def _second_metric_derivative(grid, g, m, l):
    """d_m d_l of the metric with the non-periodic axis outermost, so the
    composed stencil stays second order at the chart ends."""
    if m == l:
        return grid.d2(g, m)
    outer, inner = (m, l) if not grid.axes[m].periodic else (l, m)
    if grid.axes[outer].periodic and not grid.axes[inner].periodic:
        outer, inner = inner, outer
    return grid.d1(grid.d1(g, inner), outer)


def ricci_fd_full(model):
    """Ricci tensor from first and second metric derivatives.

    Differentiating the Christoffel field numerically would lose an order
    at the one-sided ends, so the Christoffel derivative is expanded
    analytically in terms of dg and d2g instead.
    """
    grid = model.grid
    n = grid.n
    g = model.metric.g
    ginv = model.metric.g_inv
    dg = [grid.d1(g, m) for m in range(n)]
    S = np.zeros(grid.shape + (n, n, n))  # S[l,i,j] = dg_i[l,j]+dg_j[l,i]-dg_l[i,j]
    for l in range(n):
        for i in range(n):
            for j in range(n):
                S[..., l, i, j] = dg[i][..., l, j] + dg[j][..., l, i] - dg[l][..., i, j]
    G = 0.5 * np.einsum("...kl,...lij->...kij", ginv, S)
    trG = np.einsum("...kki->...i", G)
    d2g = {}
    for m in range(n):
        for l in range(m, n):
            d2g[(m, l)] = _second_metric_derivative(grid, g, m, l)

    def d2comp(m, l):
        return d2g[(m, l)] if m <= l else d2g[(l, m)]

    T1 = np.zeros(grid.shape + (n, n))
    dtr = []
    for m in range(n):
        dginv_m = -np.einsum("...ka,...ab,...bl->...kl", ginv, dg[m], ginv)
        dS_m = np.zeros(grid.shape + (n, n, n))
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    dS_m[..., l, i, j] = (d2comp(m, i)[..., l, j]
                                          + d2comp(m, j)[..., l, i]
                                          - d2comp(m, l)[..., i, j])
        dGamma_m = 0.5 * (np.einsum("...kl,...lij->...kij", dginv_m, S)
                          + np.einsum("...kl,...lij->...kij", ginv, dS_m))
        T1 += dGamma_m[..., m, :, :]
        dtr.append(np.einsum("...kki->...i", dGamma_m))
    ric = T1.copy()
    for i in range(n):
        for j in range(n):
            ric[..., i, j] -= dtr[j][..., i]
    ric += np.einsum("...l,...lij->...ij", trG, G)
    ric -= np.einsum("...kjl,...lki->...ij", G, G)
    # analytically symmetric; average away the FD asymmetry
    ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
    return ric, G


def _radial_frame_curvature(a, b, da, db, d2a, d2b, m, correction=None):
    """Frame Ricci diagonal of b^2 drho^2 + a^2 g_{S^m}; center entries are
    extrapolated afterwards.

    ``correction`` adds a term to the fiber numerator ``b^2 - da^2``: the
    centered-difference truncation of ``da`` produces an O(h^2) error that
    the division by a^2 amplifies to O(1) at the first off-center nodes,
    and the correction ``(h^2/3) da d3a`` cancels it, restoring uniform
    second order.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        core = (d2a - da * db / b) / (a * b * b)
        ric_r = -m * core
        fiber_num = b * b - da * da
        if correction is not None:
            fiber_num = fiber_num + correction
        ric_t = -core + (m - 1.0) * fiber_num / (a * a * b * b)
    return ric_r, ric_t


def _fill_center(arr):
    arr[0] = even_center_extrapolation(arr[1:4])
    return arr


def curvature_exact(model) -> CurvaturePack:
    """Closed-form curvature for catalog models.

    Raises ``UnsupportedModelError`` for perturbed or raw metrics.
    """
    if not model.catalog:
        raise UnsupportedModelError("closed-form curvature requires a catalog model")
    grid = model.grid
    n = grid.n
    if model.radial:
        rw = model.warp
        conn = RadialConnection(a=rw.a, b=rw.b, da=rw.da, db=rw.db)
        m = n - 1
        # unit round space form: frame Ricci (n-1) I, scalar n(n-1)
        ric = np.broadcast_to((n - 1.0) * np.eye(n), grid.shape + (n, n)).copy()
        scal = np.full(grid.shape, float(n * (n - 1)))
        return CurvaturePack(conn, ric, scal, "exact")
    rw = model.rwarp
    a, b = rw.a, rw.b
    da, db, d2a, d2b = rw.da, rw.db, rw.d2a, rw.d2b
    shape = grid.shape
    ric = np.zeros(shape + (3, 3))
    rr = -(d2a / a + d2b / b)
    ff = -a * (d2a + da * db / b)
    pp = -b * (d2b + db * da / a)
    ric[..., 0, 0] = rr[:, None, None]
    ric[..., 1, 1] = ff[:, None, None]
    ric[..., 2, 2] = pp[:, None, None]
    scal = (-2.0 * (d2a / a + d2b / b + da * db / (a * b)))[:, None, None]
    scal = np.broadcast_to(scal, shape).copy()
    return CurvaturePack(christoffels_exact_full(model), ric, scal, "exact")


def curvature_fd(model) -> CurvaturePack:
    """Finite-difference curvature of the stored metric.

    Radial charts differentiate the warp profiles (odd/even ghost
    reflection through the center, one-sided at the boundary) and fill the
    center node of curvature quantities by even extrapolation; full charts
    use the generic Christoffel/Ricci stencils.
    """
    grid = model.grid
    n = grid.n
    if model.radial:
        rw = model.warp
        a, b = rw.a, rw.b
        da = grid.d1(a, 0, parity="odd")
        d2a = grid.d2(a, 0, parity="odd")
        d3a = grid.d3(a, 0, parity="odd")
        db = grid.d1(b, 0, parity="even")
        d2b = grid.d2(b, 0, parity="even")
        h = grid.axes[0].spacing
        m = n - 1
        ric_r, ric_t = _radial_frame_curvature(
            a, b, da, db, d2a, d2b, m,
            correction=(h * h / 3.0) * da * d3a)
        ric_r = _fill_center(ric_r)
        ric_t = _fill_center(ric_t)
        ric = np.zeros(grid.shape + (n, n))
        ric[..., 0, 0] = ric_r
        for t in range(1, n):
            ric[..., t, t] = ric_t
        scal = ric_r + m * ric_t
        conn = RadialConnection(a=a, b=b, da=da, db=db)
        return CurvaturePack(conn, ric, scal, "fd")
    if np.any(model.metric.sqrt_det <= 0):
        bad = int(np.argmin(model.metric.sqrt_det))
        raise InvalidMetricError(f"non-SPD metric near flat node {bad}")
    ric, G = ricci_fd_full(model)
    scal = np.einsum("...ij,...ij->...", model.metric.g_inv, ric)
    return CurvaturePack(G, ric, scal, "fd")
