"""Conformal deformation machinery.

Implements the modified Schouten tensor, its transformation under a
conformal factor ``exp(-2u)``, interior and boundary residuals of the
curvature equation, exact linearization of the discrete residual, and
weighted volume functionals.

The deformation law used throughout, for ``g_u = exp(-2u) g``:

    W = A_t(g) + Hess(u) + (1-t)/(n-2) * Lap(u) * g
        + grad(u) (x) grad(u) - (2-t)/2 * |grad u|^2 * g

All index raising is by the background metric unless a call explicitly
selects the deformed convention, in which case the exact spectral relation
``lambda(g_u^{-1} W) = exp(2u) lambda(g^{-1} W)`` is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import symfunc
from .errors import ConeExitError, InvalidArgumentError

#: sigma_2^(1/2) of the unit round 3-sphere Schouten spectrum (1/2, 1/2, 1/2)
SPHERE_SIGMA2_SQRT = math.sqrt(0.75)

SIGMA2_FLOOR = 1e-12  # ellipticity guard for the square-root form


# --------------------------------------------------------------------------
# right-hand sides
# --------------------------------------------------------------------------

@dataclass
class ConstantF:
    """Constant prescribed curvature level f(x, z) = value."""

    value: float

    def fields(self, u, model, form):
        v = self.value ** 2 if form == "squared" else self.value
        rhs = np.full(model.grid.shape, float(v))
        return rhs, np.zeros(model.grid.shape), None

    shift_invariant = True


@dataclass
class FieldF:
    """Tabulated f(x) plus optional z-derivative table."""

    values: np.ndarray
    dvalues: Optional[np.ndarray] = None

    def fields(self, u, model, form):
        vals = np.asarray(self.values, dtype=float)
        dz = (np.zeros_like(vals) if self.dvalues is None
              else np.asarray(self.dvalues, dtype=float))
        if form == "squared":
            return vals * vals, 2.0 * vals * dz, None
        return vals, dz, None

    @property
    def shift_invariant(self):
        return self.dvalues is None or not np.any(self.dvalues)


@dataclass
class SphereTargetF:
    """Round-sphere target level: f = sqrt(sigma_2(S^3)) * exp(-2u)."""

    scale: float = SPHERE_SIGMA2_SQRT

    def fields(self, u, model, form):
        if form != "sqrt":
            raise InvalidArgumentError("sphere target is a square-root-form RHS")
        rhs = self.scale * np.exp(-2.0 * u)
        return rhs, -2.0 * rhs, None

    shift_invariant = False


@dataclass
class EigenPathF:
    """Continuity-path RHS ``(s + (1-s) f0(x)) exp(eps (u + level))``.

    Squared form only.  ``level`` lets the driver carry the additive mean
    of the conformal factor as a separate scalar unknown, keeping the
    stored field small when eps is tiny (the deformed tensor itself only
    sees derivatives, so the split is exact).
    """

    s: float
    eps: float
    f0: np.ndarray
    level: float = 0.0

    def fields(self, u, model, form):
        if form != "squared":
            raise InvalidArgumentError("eigenvalue path uses the squared form")
        rhs = (self.s + (1.0 - self.s) * self.f0) * np.exp(self.eps * (u + self.level))
        return rhs, self.eps * rhs, None

    shift_invariant = False


@dataclass
class YamabePathF:
    """Path RHS ``(1-t)(int exp(-4u))^(1/2) + psi(t) sqrt(sigma_2(S^3)) exp(-2u)``.

    The first term is nonlocal; ``fields`` returns its linearization as a
    dense row (quadrature weights times ``-2 (1-t) Q^{-1/2} exp(-4u)``).
    """

    tpath: float
    psi: float

    def fields(self, u, model, form):
        if form != "sqrt":
            raise InvalidArgumentError("the curvature path uses the square-root form")
        w = model.quad_weights
        e4 = np.exp(-4.0 * u)
        Q = float(np.sum(w * e4))
        local = self.psi * SPHERE_SIGMA2_SQRT * np.exp(-2.0 * u)
        rhs = (1.0 - self.tpath) * math.sqrt(Q) + local
        dz = -2.0 * local
        nl_row = -2.0 * (1.0 - self.tpath) / math.sqrt(Q) * w * e4 \
            if self.tpath < 1.0 else None
        return rhs, dz, nl_row

    shift_invariant = False


@dataclass
class ZeroC:
    def value(self, face_index, u_face):
        return np.zeros_like(u_face)

    def dz(self, face_index, u_face):
        return np.zeros_like(u_face)

    shift_invariant = True


@dataclass
class FieldC:
    """Tabulated boundary data c(x), one array per boundary face."""

    values: list

    def value(self, face_index, u_face):
        return np.broadcast_to(np.asarray(self.values[face_index], dtype=float),
                               u_face.shape).copy()

    def dz(self, face_index, u_face):
        return np.zeros_like(u_face)

    shift_invariant = True


@dataclass
class ExpC:
    """Boundary data of the form c(x) exp(-u)."""

    values: list

    def value(self, face_index, u_face):
        base = np.broadcast_to(np.asarray(self.values[face_index], dtype=float),
                               u_face.shape)
        return base * np.exp(-u_face)

    def dz(self, face_index, u_face):
        return -self.value(face_index, u_face)

    shift_invariant = False


@dataclass
class ProblemSpec:
    """Everything that defines one boundary value problem instance.

    ``base_tensor`` optionally replaces the model's modified Schouten
    tensor as the tensor being deformed (the curvature path shifts it).
    """

    t: float
    f: object
    c: object
    form: str = "sqrt"
    raising: str = "background"
    base_tensor: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.t > 1.0 + 1e-14:
            raise InvalidArgumentError("the conformal family requires t <= 1")
        if self.form not in ("sqrt", "squared"):
            raise InvalidArgumentError(f"unknown residual form {self.form!r}")
        if self.raising not in ("background", "deformed"):
            raise InvalidArgumentError(f"unknown raising convention {self.raising!r}")

    @property
    def shift_invariant(self):
        return bool(getattr(self.f, "shift_invariant", False)
                    and getattr(self.c, "shift_invariant", False))


# --------------------------------------------------------------------------
# state assembly
# --------------------------------------------------------------------------

@dataclass
class ConformalState:
    """The conformal factor with its discrete derivatives and deformed tensor.

    ``W`` holds covariant components on full charts and orthonormal-frame
    components on radial charts (where the frame metric is the identity, so
    mixed and covariant components coincide).
    """

    u: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    W: np.ndarray
    Wm: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    cone_margin: float
    t: float
    lap: np.ndarray
    gradsq: np.ndarray
    _spectra: Optional[np.ndarray] = field(default=None, repr=False)

    def spectra(self):
        """Per-node spectrum of the deformed tensor, sorted descending."""
        if self._spectra is None:
            self._spectra = symfunc.jacobi_eigenvalues(0.5 * (self.Wm + np.swapaxes(self.Wm, -1, -2)))
        return self._spectra

    @property
    def sup_grad(self):
        return float(np.sqrt(self.gradsq.max()))


def modified_schouten(pack, metric, t: float):
    """Modified Schouten tensor from a curvature pack (covariant/frame)."""
    n = metric.g.shape[-1]
    if n < 3:
        raise InvalidArgumentError("modified Schouten tensor needs n >= 3")
    return (pack.ricci - (t / (2.0 * (n - 1.0))) * pack.scalar[..., None, None]
            * metric.g) / (n - 2.0)


def _radial_derivatives(u, model):
    grid = model.grid
    conn = model.pack.christoffels
    du = grid.d1(u, 0, parity="even")
    d2u = grid.d2(u, 0, parity="even")
    b = conn.b
    b2 = b * b
    hr = (d2u - (conn.db / b) * du) / b2
    with np.errstate(divide="ignore", invalid="ignore"):
        ht = np.where(conn.a > 0, conn.da / (np.maximum(conn.a, 1e-300) * b2) * du, 0.0)
    ht[0] = hr[0]  # regular center: tangential Hessian equals the radial one
    return du, d2u, hr, ht


def deform(A_t, u, t: float, model) -> ConformalState:
    """Assemble the deformed tensor state for conformal factor ``u``."""
    grid = model.grid
    n = grid.n
    u = np.asarray(u, dtype=float)
    kappa = (1.0 - t) / (n - 2.0)
    if model.radial:
        conn = model.pack.christoffels
        du, d2u, hr, ht = _radial_derivatives(u, model)
        gradf = du / conn.b
        gradsq = gradf * gradf
        lap = hr + (n - 1.0) * ht
        grad = np.zeros(grid.shape + (n,))
        grad[..., 0] = gradf
        hess = np.zeros(grid.shape + (n, n))
        hess[..., 0, 0] = hr
        for k in range(1, n):
            hess[..., k, k] = ht
        W = A_t + hess.copy()
        W[..., 0, 0] += gradsq
        eye = np.eye(n)
        W = W + (kappa * lap - 0.5 * (2.0 - t) * gradsq)[..., None, None] * eye
        Wm = W
    else:
        G = model.pack.christoffels
        g = model.metric.g
        ginv = model.metric.g_inv
        d1 = [grid.d1(u, ax) for ax in range(n)]
        grad = np.stack(d1, axis=-1)
        hess = np.zeros(grid.shape + (n, n))
        for i in range(n):
            for j in range(i, n):
                part = grid.d2(u, i) if i == j else grid.dcross(u, i, j)
                part = part - np.einsum("...k,...k->...", G[..., :, i, j], grad)
                hess[..., i, j] = part
                hess[..., j, i] = part
        lap = np.einsum("...ij,...ij->...", ginv, hess)
        gradup = np.einsum("...ij,...j->...i", ginv, grad)
        gradsq = np.einsum("...i,...i->...", grad, gradup)
        W = (A_t + hess
             + np.einsum("...i,...j->...ij", grad, grad)
             + (kappa * lap - 0.5 * (2.0 - t) * gradsq)[..., None, None] * g)
        Wm = model.mixed(W)
    s1, s2 = symfunc.sigma1_sigma2(Wm)
    margin = float(np.minimum(s1, s2).min())
    return ConformalState(u=u, grad=grad, hess=hess, W=W, Wm=Wm,
                          sigma1=np.asarray(s1), sigma2=np.asarray(s2),
                          cone_margin=margin, t=t, lap=lap,
                          gradsq=np.asarray(gradsq))


def build_state(model, prob: ProblemSpec, u) -> ConformalState:
    """Deform the problem's base tensor (Schouten unless overridden)."""
    A = prob.base_tensor if prob.base_tensor is not None else model.schouten(prob.t)
    return deform(A, u, prob.t, model)


def _require_cone(state):
    if state.cone_margin <= 0.0:
        margins = np.minimum(state.sigma1, state.sigma2)
        bad = np.argwhere(margins <= 0.0)
        raise ConeExitError(
            f"state left Gamma_2+ at {len(bad)} node(s); worst margin "
            f"{state.cone_margin:.3e}",
            nodes=[tuple(b) for b in bad[:16]],
            margins=margins[tuple(bad[:16].T)] if len(bad) else None)


def sigma2_field(state, raising="background"):
    """Per-node sigma_2 under the requested index-raising convention."""
    if raising == "background":
        return state.sigma2
    return np.exp(4.0 * state.u) * state.sigma2


def interior_residual(state: ConformalState, prob: ProblemSpec, model):
    """Interior equation residual per node.

    Square-root form: ``sqrt(sigma_2) - rhs``; squared form:
    ``sigma_2 - rhs`` (the RHS term squares itself where appropriate).
    """
    _require_cone(state)
    sig2 = sigma2_field(state, prob.raising)
    rhs, _, _ = prob.f.fields(state.u, model, prob.form)
    if prob.form == "sqrt":
        return np.sqrt(sig2) - rhs
    return sig2 - rhs


def normal_derivative(state: ConformalState, model, face):
    """Inward normal derivative of u on a boundary face."""
    if model.radial:
        return np.asarray(-state.grad[-1, 0])
    return np.einsum("...i,...i->...", face.normal, state.grad[face.slicer])


def boundary_residual(state: ConformalState, prob: ProblemSpec, model):
    """Per-face boundary residual ``u_n + h - c(x, u)`` (list over faces)."""
    out = []
    for k, face in enumerate(model.boundary.faces):
        u_face = state.u[face.slicer]
        un = normal_derivative(state, model, face)
        out.append(np.asarray(un + face.h - prob.c.value(k, u_face)))
    return out


def conformal_mean_curvature(state: ConformalState, model):
    """Mean curvature of the deformed metric per boundary face:
    ``exp(u) (u_n + h)`` with the inward normal."""
    out = []
    for face in model.boundary.faces:
        un = normal_derivative(state, model, face)
        out.append(np.asarray(np.exp(state.u[face.slicer]) * (un + face.h)))
    return out


def weighted_volume(u, p: float, model) -> float:
    """``int exp(-p u) dmu_g`` by the chart's product quadrature."""
    u = np.broadcast_to(np.asarray(u, dtype=float), model.grid.shape)
    return float(np.sum(model.quad_weights * np.exp(-p * u)))


# --------------------------------------------------------------------------
# linearization
# --------------------------------------------------------------------------

@dataclass
class BCRow:
    face_index: int
    axis: int
    side: int
    slicer: tuple
    scale: np.ndarray       # u_n = scale * (one-sided d/dx_axis u)
    zero_order: np.ndarray  # -dc/dz on the face


@dataclass
class LinearizedOperator:
    """Exact derivative of the discrete residual at a state.

    ``apply`` reproduces the directional derivative of the interior
    residual field (all nodes, same stencils) and of the boundary rows;
    ``assemble`` emits the sparse Newton matrix with PDE rows at interior
    nodes and boundary-condition rows at boundary nodes.  The optional
    nonlocal term is kept rank-one: every PDE row gains
    ``<rank1_row, v>``.
    """

    model: object
    kind: str
    C0: np.ndarray
    bc: list
    rank1_row: Optional[np.ndarray] = None
    # radial coefficients
    c_d2: Optional[np.ndarray] = None
    c_d1: Optional[np.ndarray] = None
    # full-chart coefficients
    C2: Optional[np.ndarray] = None
    C1: Optional[np.ndarray] = None

    def apply_interior(self, v):
        """Action on a perturbation, as a field over every node."""
        grid = self.model.grid
        v = np.asarray(v, dtype=float)
        if self.kind == "radial":
            out = (self.c_d2 * grid.d2(v, 0, parity="even")
                   + self.c_d1 * grid.d1(v, 0, parity="even")
                   + self.C0 * v)
        else:
            n = grid.n
            dv = [grid.d1(v, ax) for ax in range(n)]
            out = self.C0 * v
            for i in range(n):
                out += self.C2[..., i, i] * grid.d2(v, i)
                out += self.C1[..., i] * dv[i]
                for j in range(i + 1, n):
                    out += 2.0 * self.C2[..., i, j] * grid.dcross(v, i, j)
        if self.rank1_row is not None:
            out = out + float(np.sum(self.rank1_row * v))
        return out

    def apply_boundary(self, v):
        grid = self.model.grid
        v = np.asarray(v, dtype=float)
        out = []
        for row in self.bc:
            dv = grid.d1(v, row.axis)
            out.append(row.scale * dv[row.slicer] + row.zero_order * v[row.slicer])
        return out

    def principal_min_eigenvalue(self):
        """Least eigenvalue of the principal coefficient over all nodes."""
        if self.kind == "radial":
            cr = self.c_d2
            return float(min(cr.min(), self.c_d1_principal.min()))
        eigs = symfunc.jacobi_eigenvalues(self.C2)
        return float(eigs[..., -1].min())

    # -- sparse assembly ----------------------------------------------------
    def assemble(self):
        if self.kind == "radial":
            return self._assemble_radial()
        return self._assemble_full()

    def _assemble_radial(self):
        grid = self.model.grid
        N = grid.shape[0]
        h = grid.axes[0].spacing
        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(r)
            cols.append(c)
            vals.append(v)

        # center row: even reflection folds the ghost into 2(v1 - v0)/h^2
        add(0, 0, -2.0 * self.c_d2[0] / h ** 2 + self.C0[0])
        add(0, 1, 2.0 * self.c_d2[0] / h ** 2)
        for j in range(1, N - 1):
            add(j, j, -2.0 * self.c_d2[j] / h ** 2 + self.C0[j])
            add(j, j - 1, self.c_d2[j] / h ** 2 - self.c_d1[j] / (2.0 * h))
            add(j, j + 1, self.c_d2[j] / h ** 2 + self.c_d1[j] / (2.0 * h))
        row = self.bc[0]
        sc = float(row.scale)
        add(N - 1, N - 1, sc * 3.0 / (2.0 * h) + float(row.zero_order))
        add(N - 1, N - 2, sc * (-4.0) / (2.0 * h))
        add(N - 1, N - 3, sc * 1.0 / (2.0 * h))
        J = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
        return J

    def _assemble_full(self):
        grid = self.model.grid
        shape = grid.shape
        n = grid.n
        size = grid.nnodes
        ids = np.arange(size).reshape(shape)
        interior = np.ones(shape, dtype=bool)
        interior[0] = False
        interior[-1] = False

        rows, cols, vals = [], [], []

        def neighbor(idarr, axis, off):
            return np.roll(idarr, -off, axis=axis)

        hs = [ax.spacing for ax in grid.axes]
        diag = self.C0.copy()
        for i in range(n):
            diag += -2.0 * self.C2[..., i, i] / hs[i] ** 2
        rid = ids[interior]
        rows.extend(rid)
        cols.extend(rid)
        vals.extend(diag[interior])
        for i in range(n):
            for off in (+1, -1):
                coef = (self.C2[..., i, i] / hs[i] ** 2
                        + off * self.C1[..., i] / (2.0 * hs[i]))
                nid = neighbor(ids, i, off)
                rows.extend(rid)
                cols.extend(nid[interior])
                vals.extend(coef[interior])
        for i in range(n):
            for j in range(i + 1, n):
                base = 2.0 * self.C2[..., i, j] / (4.0 * hs[i] * hs[j])
                for oi in (+1, -1):
                    for oj in (+1, -1):
                        nid = neighbor(neighbor(ids, i, oi), j, oj)
                        rows.extend(rid)
                        cols.extend(nid[interior])
                        vals.extend(oi * oj * base[interior])
        # boundary-condition rows (one-sided normal derivative, axis 0)
        h0 = hs[0]
        for row in self.bc:
            sl = row.slicer
            rid_face = ids[sl].ravel()
            sc = np.broadcast_to(row.scale, ids[sl].shape).ravel()
            z0 = np.broadcast_to(row.zero_order, ids[sl].shape).ravel()
            if row.side == 0:
                layers = [ids[0].ravel(), ids[1].ravel(), ids[2].ravel()]
                coefs = [-3.0, 4.0, -1.0]
            else:
                layers = [ids[-1].ravel(), ids[-2].ravel(), ids[-3].ravel()]
                coefs = [3.0, -4.0, 1.0]
            for lay, cf in zip(layers, coefs):
                rows.extend(rid_face)
                cols.extend(lay)
                vals.extend(sc * cf / (2.0 * h0))
            rows.extend(rid_face)
            cols.extend(rid_face)
            vals.extend(z0)
        J = sp.csr_matrix((np.asarray(vals, dtype=float),
                           (np.asarray(rows), np.asarray(cols))),
                          shape=(size, size))
        return J


def linearize(state: ConformalState, prob: ProblemSpec, model) -> LinearizedOperator:
    """Exact Gateaux derivative of the discrete residual at ``state``."""
    _require_cone(state)
    if prob.form == "sqrt" and float(state.sigma2.min()) < SIGMA2_FLOOR:
        raise ConeExitError(
            f"sigma_2 fell below the ellipticity floor "
            f"({float(state.sigma2.min()):.3e} < {SIGMA2_FLOOR})")
    grid = model.grid
    n = grid.n
    t = prob.t
    kappa = (1.0 - t) / (n - 2.0)
    F = symfunc.sigma2_gradient(state.Wm)
    trF = np.trace(F, axis1=-2, axis2=-1)

    if prob.form == "sqrt":
        pref = 0.5 / np.sqrt(state.sigma2)
    else:
        pref = np.ones(grid.shape)
    if prob.raising == "deformed":
        boost = np.exp((2.0 if prob.form == "sqrt" else 4.0) * state.u)
        pref = pref * boost

    rhs, rhs_dz, nl_row = prob.f.fields(state.u, model, prob.form)
    C0 = -rhs_dz
    if prob.raising == "deformed":
        if prob.form == "sqrt":
            C0 = C0 + 2.0 * np.exp(2.0 * state.u) * np.sqrt(state.sigma2)
        else:
            C0 = C0 + 4.0 * np.exp(4.0 * state.u) * state.sigma2

    bc_rows = []
    for k, face in enumerate(model.boundary.faces):
        u_face = state.u[face.slicer]
        z0 = -prob.c.dz(k, u_face)
        if model.radial:
            conn = model.pack.christoffels
            scale = np.asarray(-1.0 / conn.b[-1])
        else:
            gkk = model.metric.g[face.slicer][..., face.axis, face.axis]
            sign = 1.0 if face.side == 0 else -1.0
            scale = sign / np.sqrt(gkk)
        bc_rows.append(BCRow(face_index=k, axis=face.axis, side=face.side,
                             slicer=face.slicer, scale=scale, zero_order=z0))

    rank1 = None if nl_row is None else -np.asarray(nl_row)

    if model.radial:
        conn = model.pack.christoffels
        b = conn.b
        b2 = b * b
        m = n - 1
        Fr = F[..., 0, 0]
        Ft = F[..., 1, 1]
        cr = Fr + kappa * trF
        ct = m * (Ft + kappa * trF)
        cg = 0.5 * t * Fr - 0.5 * (2.0 - t) * m * Ft
        du = grid.d1(state.u, 0, parity="even")
        with np.errstate(divide="ignore", invalid="ignore"):
            shear = np.where(conn.a > 0,
                             conn.da / (np.maximum(conn.a, 1e-300) * b2), 0.0)
        c_d2 = pref * cr / b2
        c_d1 = pref * (-cr * (conn.db / b) / b2 + ct * shear + 2.0 * cg * du / b2)
        # regular center: tangential and radial second derivatives coincide
        c_d2 = c_d2.copy()
        c_d1 = c_d1.copy()
        c_d2[0] = pref[0] * (cr[0] + ct[0]) / b2[0]
        c_d1[0] = 0.0
        op = LinearizedOperator(model=model, kind="radial", C0=C0, bc=bc_rows,
                                rank1_row=rank1, c_d2=c_d2, c_d1=c_d1)
        op.c_d1_principal = pref * ct / np.maximum(b2, 1e-300)  # for diagnostics
        return op

    g = model.metric.g
    ginv = model.metric.g_inv
    G = model.pack.christoffels
    Ecoef = np.einsum("...ik,...kj->...ij", F, ginv)
    C2 = Ecoef + (kappa * trF)[..., None, None] * ginv
    gradup = np.einsum("...ij,...j->...i", ginv, state.grad)
    C1 = (2.0 * np.einsum("...ij,...j->...i", Ecoef, state.grad)
          - (2.0 - t) * trF[..., None] * gradup
          - np.einsum("...cd,...lcd->...l", C2, G))
    C2 = pref[..., None, None] * C2
    C1 = pref[..., None] * C1
    return LinearizedOperator(model=model, kind="full", C0=C0, bc=bc_rows,
                              rank1_row=rank1, C2=C2, C1=C1)


# --------------------------------------------------------------------------
# state serialization
# --------------------------------------------------------------------------

def save_state(model, state: ConformalState, path, metadata=None):
    """Serialize a model plus solution state through the container format."""
    from .geometry import container
    extra = {"u": state.u, "W": state.W, "spectra": state.spectra()}
    meta = {"t": state.t}
    if metadata:
        meta.update(metadata)
    container.save_model(model, path, extra_fields=extra, metadata=meta)
