"""Boundary geometry: inward normals, second fundamental form, mean
curvature, distance-to-boundary fields, and Fermi-coordinate residual
reports.

Sign convention: normals point inward, the second fundamental form is
``L = -grad(normal)`` restricted to the boundary tangent space, and the
mean curvature is ``h = tr(L w.r.t. induced metric) / (n-1)``.  A geodesic
cap of radius rho1 in the unit sphere then has ``h = cot(rho1) >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import InvalidArgumentError, UnsupportedModelError


@dataclass
class FaceGeometry:
    axis: int
    side: int
    slicer: tuple
    normal: np.ndarray          # (face..., n) inward unit components
    L: np.ndarray               # (face..., n-1, n-1) second fundamental form
    h: np.ndarray               # (face...,) mean curvature
    h_div: np.ndarray           # same quantity via the full-gradient route
    L_ring: np.ndarray          # trace-free part of L
    g_induced: np.ndarray       # (face..., n-1, n-1)
    tangent_axes: tuple


@dataclass
class BoundaryGeometry:
    faces: list

    def face(self, axis, side):
        for f in self.faces:
            if f.axis == axis and f.side == side:
                return f
        raise InvalidArgumentError(f"no boundary face at (axis={axis}, side={side})")


def _radial_face(model):
    conn = model.pack.christoffels
    m = model.n - 1
    shear = conn.da[-1] / (conn.a[-1] * conn.b[-1])
    normal = np.zeros(model.n)
    normal[0] = -1.0
    L = shear * np.eye(m)
    g_ind = np.eye(m)
    h = np.asarray(shear)
    # second route: trace of the full frame gradient of the inward normal
    full_grad = np.zeros((model.n, model.n))
    for t in range(1, model.n):
        full_grad[t, t] = -shear
    proj = np.eye(model.n) - np.outer(normal, normal)
    h_div = -np.einsum("ij,ij->", proj, full_grad) / m
    return FaceGeometry(axis=0, side=1, slicer=model.grid.face_slice(0, 1),
                        normal=normal, L=L, h=h, h_div=np.asarray(h_div),
                        L_ring=L - h * g_ind, g_induced=g_ind,
                        tangent_axes=tuple(range(1, model.n)))


def _full_face(model, axis, side):
    grid = model.grid
    g = model.metric.g
    ginv = model.metric.g_inv
    G = model.pack.christoffels
    n = grid.n
    sl = grid.face_slice(axis, side)
    sign = 1.0 if side == 0 else -1.0
    gkk = g[..., axis, axis]
    if np.max(np.abs(np.delete(g[sl][..., axis, :], axis, axis=-1))) > 1e-12 * np.max(np.abs(g)):
        raise UnsupportedModelError("boundary normals assume no normal-tangential "
                                    "metric coupling at the face")
    # inward unit normal as a field on the whole chart (needed for the
    # normal-direction derivative in the divergence route)
    nfield = np.zeros(grid.shape + (n,))
    nfield[..., axis] = sign / np.sqrt(gkk)
    dn = np.stack([grid.d1(nfield, ax) for ax in range(len(grid.axes))])
    # covariant gradient: (grad n)_{i}{}^{l} = d_i n^l + Gamma^l_{i m} n^m
    covgrad = np.einsum("i...l->...il", dn) + np.einsum("...lim,...m->...il", G, nfield)
    covgrad_face = covgrad[sl]
    g_face = g[sl]
    ginv_face = ginv[sl]
    n_face = nfield[sl]
    tang = tuple(ax for ax in range(n) if ax != axis)
    m = n - 1
    L = np.zeros(g_face.shape[:-2] + (m, m))
    for ia, a in enumerate(tang):
        for ib, b in enumerate(tang):
            L[..., ia, ib] = -np.einsum("...l,...l->...",
                                        covgrad_face[..., a, :], g_face[..., b, :])
    g_ind = g_face[..., tang, :][..., :, tang]
    ginv_ind = np.linalg.inv(g_ind)
    h = np.einsum("...ab,...ab->...", ginv_ind, L) / m
    lower = np.einsum("...il,...jl->...ij", covgrad_face, g_face)
    proj = ginv_face - np.einsum("...i,...j->...ij", n_face, n_face)
    h_div = -np.einsum("...ij,...ij->...", proj, lower) / m
    L_ring = L - h[..., None, None] * g_ind
    return FaceGeometry(axis=axis, side=side, slicer=sl, normal=n_face,
                        L=L, h=h, h_div=h_div, L_ring=L_ring, g_induced=g_ind,
                        tangent_axes=tang)


def boundary_geometry(model) -> BoundaryGeometry:
    """Second fundamental form and mean curvature on every boundary face."""
    if not model.grid.boundary_faces:
        raise InvalidArgumentError("model has no boundary faces")
    if model.radial:
        return BoundaryGeometry([_radial_face(model)])
    return BoundaryGeometry([_full_face(model, axis, side)
                             for axis, side in model.grid.boundary_faces])


@dataclass
class DistanceField:
    d: np.ndarray
    grad: np.ndarray            # coordinate/frame components, masked region valid
    hess: np.ndarray
    mask: np.ndarray            # True where grad/hess are trustworthy (near dM)


def boundary_distance(model) -> DistanceField:
    """Distance to the boundary with discrete gradient and Hessian near dM.

    Defined for charts whose transverse coordinate is unit speed (all
    catalog models); the distance is the coordinate offset to the nearest
    boundary face.  Gradient and Hessian are masked out near the interior
    ridge where the nearest face switches (and near a radial center).
    """
    grid = model.grid
    n = grid.n
    if model.radial:
        conn = model.pack.christoffels
        if np.max(np.abs(conn.b - 1.0)) > 1e-12:
            raise UnsupportedModelError("distance field needs unit-speed radius")
        rho = grid.coords[0]
        h = grid.axes[0].spacing
        d = rho[-1] - rho
        # d extends evenly through the center but with a kink there
        d1 = grid.d1(d, 0, parity="even")
        d2 = grid.d2(d, 0, parity="even")
        grad = np.zeros(grid.shape + (n,))
        grad[..., 0] = d1
        hess = np.zeros(grid.shape + (n, n))
        hess[..., 0, 0] = d2
        with np.errstate(divide="ignore", invalid="ignore"):
            tang = np.where(conn.a > 0, conn.da / np.maximum(conn.a, 1e-300) * d1, 0.0)
        for t in range(1, n):
            hess[..., t, t] = tang
        mask = rho > 2.5 * h
        return DistanceField(d=d, grad=grad, hess=hess, mask=mask)
    gkk = model.metric.g[..., 0, 0]
    if np.max(np.abs(gkk - 1.0)) > 1e-12:
        raise UnsupportedModelError("distance field needs unit-speed transverse axis")
    r = grid.coords[0]
    h = grid.axes[0].spacing
    d1ax = np.minimum(r - r[0], r[-1] - r)
    d = np.broadcast_to(d1ax[:, None, None], grid.shape).copy()
    G = model.pack.christoffels
    dd = np.stack([grid.d1(d, ax) for ax in range(len(grid.axes))])
    grad = np.einsum("i...->...i", dd)
    hess = np.zeros(grid.shape + (n, n))
    for i in range(n):
        for j in range(i, n):
            part = grid.d2(d, i) if i == j else grid.dcross(d, i, j)
            part = part - np.einsum("...k,...k->...", G[..., :, i, j], grad)
            hess[..., i, j] = part
            hess[..., j, i] = part
    ridge = 0.5 * (r[0] + r[-1])
    mask1 = np.abs(r - ridge) > 2.5 * h
    mask = np.broadcast_to(mask1[:, None, None], grid.shape).copy()
    return DistanceField(d=d, grad=grad, hess=hess, mask=mask)


@dataclass
class FermiReport:
    residuals: dict
    spacing: float


def fermi_identity_report(model) -> FermiReport:
    """Max-norm residuals of the boundary-adapted coordinate identities.

    Checks, at boundary nodes and against the boundary geometry assembled
    from the model's primary connection, that the finite-difference
    connection satisfies ``Gamma^n_{ab} = L_ab``, ``Gamma^n_{in} = 0``,
    ``Gamma^i_{nn} = 0``, and that the covariant Hessian of the distance
    function has tangential block ``-L``.  All residuals shrink under grid
    refinement; nothing is raised, the numbers are reported as-is.
    """
    bgeo = boundary_geometry(model)
    grid = model.grid
    res = {"gamma_normal_tangential": 0.0, "gamma_mixed_normal": 0.0,
           "gamma_normal_normal": 0.0, "hess_distance": 0.0}
    if model.radial:
        fd_conn = model.pack_fd.christoffels
        face = bgeo.faces[0]
        shear_fd = fd_conn.da[-1] / (fd_conn.a[-1] * fd_conn.b[-1])
        res["gamma_normal_tangential"] = float(np.abs(shear_fd - face.h))
        res["gamma_mixed_normal"] = float(np.abs(fd_conn.db[-1] / fd_conn.b[-1]))
        rho = grid.coords[0]
        d = rho[-1] - rho
        d1d = grid.d1(d, 0, parity="even")
        hess_tt = (fd_conn.da[-1] / (fd_conn.a[-1] * fd_conn.b[-1] ** 2)) * d1d[-1]
        res["hess_distance"] = float(np.abs(hess_tt + face.L[0, 0]))
        return FermiReport(res, grid.axes[0].spacing)
    Gfd = model.pack_fd.christoffels
    n = grid.n
    r = grid.coords[0]
    d1ax = np.minimum(r - r[0], r[-1] - r)
    d = np.broadcast_to(d1ax[:, None, None], grid.shape).copy()
    dd = np.stack([grid.d1(d, ax) for ax in range(n)], axis=-1)
    for face in bgeo.faces:
        sl = face.slicer
        sign = 1.0 if face.side == 0 else -1.0
        tang = face.tangent_axes
        Gface = Gfd[sl]
        for ia, a in enumerate(tang):
            for ib, b in enumerate(tang):
                r1 = np.max(np.abs(sign * Gface[..., 0, a, b] - face.L[..., ia, ib]))
                res["gamma_normal_tangential"] = max(res["gamma_normal_tangential"], float(r1))
                hd = (grid.d2(d, a) if a == b else grid.dcross(d, a, b))[sl]
                hd = hd - np.einsum("...k,...k->...", Gfd[..., :, a, b][sl], dd[sl])
                r4 = np.max(np.abs(hd + face.L[..., ia, ib]))
                res["hess_distance"] = max(res["hess_distance"], float(r4))
        for i in range(n):
            r2 = np.max(np.abs(Gface[..., 0, i, 0]))
            res["gamma_mixed_normal"] = max(res["gamma_mixed_normal"], float(r2))
            r3 = np.max(np.abs(Gface[..., i, 0, 0]))
            res["gamma_normal_normal"] = max(res["gamma_normal_normal"], float(r3))
    return FermiReport(res, grid.axes[0].spacing)
