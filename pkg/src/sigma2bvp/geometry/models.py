"""Catalog of model manifolds with boundary and their discretizations.

Four model kinds are supported:

* ``cap_spaceform``: geodesic cap of the unit round n-sphere, radial chart
  ``g = d rho^2 + sin^2(rho) g_{S^{n-1}}`` on ``[0, rho1]``; the outer end is
  the boundary, the center is regular.  Fields are stored in the radial
  orthonormal frame (metric = identity per node).
* ``band_s3``: the torus band ``g = dr^2 + cos^2 r dphi^2 + sin^2 r dpsi^2``
  on ``[r0, r1] x T^2`` inside the unit 3-sphere; both r-ends are boundary.
* ``warped_slab``: ``g = dr^2 + a(r)^2 dphi^2 + b(r)^2 dpsi^2`` with
  polynomial warp coefficient tables; flat when a = b = 1.
* ``perturbed``: a catalog base metric multiplied by ``exp(2 eps chi)`` with
  a smooth seeded profile chi, amplitude-limited so the modified Schouten
  spectrum stays in Gamma_2+ (checked after construction, not assumed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import InvalidArgumentError, InvalidMetricError
from .. import symfunc
from .grid import Axis, ChartGrid

CATALOG_KINDS = ("cap_spaceform", "band_s3", "warped_slab")


def sphere_area(m: int) -> float:
    """Surface measure of the unit m-sphere."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    n: int = 3
    rho1: float = math.pi / 2.0
    r0: float = math.pi / 6.0
    r1: float = math.pi / 3.0
    warp_a: tuple = (1.0,)
    warp_b: tuple = (1.0,)
    amplitude: float = 0.0
    seed: int = 0
    base: Optional["ModelSpec"] = None

    def validate(self):
        if self.kind == "cap_spaceform":
            if not 0.0 < self.rho1 <= math.pi / 2.0 + 1e-12:
                raise InvalidArgumentError("cap radius rho1 must lie in (0, pi/2]")
            if self.n not in (3, 4):
                raise InvalidArgumentError("radial charts support n in {3, 4}")
        elif self.kind in ("band_s3", "warped_slab"):
            if self.n != 3:
                raise InvalidArgumentError("full 3D charts require n = 3")
            if self.kind == "band_s3" and not 0.0 < self.r0 < self.r1 < math.pi / 2.0:
                raise InvalidArgumentError("band interval must satisfy 0 < r0 < r1 < pi/2")
            if self.kind == "warped_slab" and not self.r0 < self.r1:
                raise InvalidArgumentError("slab interval must satisfy r0 < r1")
        elif self.kind == "perturbed":
            if self.base is None or self.base.kind not in CATALOG_KINDS:
                raise InvalidArgumentError("perturbed model needs a catalog base spec")
            if not 0.0 <= self.amplitude < 0.5:
                raise InvalidArgumentError("perturbation amplitude out of range")
        else:
            raise InvalidArgumentError(f"unknown model kind {self.kind!r}")

    def header(self) -> dict:
        d = {"kind": self.kind, "n": self.n}
        if self.kind == "cap_spaceform":
            d["rho1"] = self.rho1
        elif self.kind in ("band_s3", "warped_slab"):
            d["r0"], d["r1"] = self.r0, self.r1
            if self.kind == "warped_slab":
                d["warp_a"] = list(self.warp_a)
                d["warp_b"] = list(self.warp_b)
        else:
            d["amplitude"] = self.amplitude
            d["seed"] = self.seed
            d["base"] = self.base.header()
        return d

    @staticmethod
    def from_header(h: dict) -> "ModelSpec":
        kind = h["kind"]
        if kind == "perturbed":
            return ModelSpec(kind, n=h.get("n", 3), amplitude=h["amplitude"],
                             seed=h["seed"], base=ModelSpec.from_header(h["base"]))
        return ModelSpec(
            kind,
            n=h.get("n", 3),
            rho1=h.get("rho1", math.pi / 2.0),
            r0=h.get("r0", math.pi / 6.0),
            r1=h.get("r1", math.pi / 3.0),
            warp_a=tuple(h.get("warp_a", (1.0,))),
            warp_b=tuple(h.get("warp_b", (1.0,))),
        )


@dataclass
class MetricField:
    """Per-node metric components and caches.

    For radial charts the components are expressed in the radial
    orthonormal frame, so ``g`` is the identity at every node and all warp
    information lives in the model's WarpData.
    """

    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: np.ndarray
    source: str = "catalog"


@dataclass
class WarpData:
    """Radial warp profiles: metric ``b(rho)^2 d rho^2 + a(rho)^2 g_sphere``.

    Exact derivative arrays are present for catalog caps and None for
    perturbed ones (the finite-difference path is used instead).
    """

    a: np.ndarray
    b: np.ndarray
    da: Optional[np.ndarray] = None
    d2a: Optional[np.ndarray] = None
    db: Optional[np.ndarray] = None
    d2b: Optional[np.ndarray] = None

    @property
    def exact(self):
        return self.da is not None


@dataclass
class RWarp:
    """1D warp profiles along r for full charts g = dr^2 + a^2 dphi^2 + b^2 dpsi^2."""

    a: np.ndarray
    da: np.ndarray
    d2a: np.ndarray
    b: np.ndarray
    db: np.ndarray
    d2b: np.ndarray


class Model:
    """A constructed chart: grid + metric + lazily derived geometry."""

    def __init__(self, spec, grid, metric, warp=None, rwarp=None, chi=None):
        self.spec = spec
        self.grid = grid
        self.metric = metric
        self.warp = warp
        self.rwarp = rwarp
        self.chi = chi
        self._pack = None
        self._pack_fd = None
        self._boundary = None

    # -- basic descriptors -------------------------------------------------
    @property
    def n(self):
        return self.grid.n

    @property
    def radial(self):
        return self.grid.symmetry == "radial"

    @property
    def catalog(self):
        return self.spec.kind in CATALOG_KINDS

    # -- derived geometry (cached) ------------------------------------------
    @property
    def pack(self):
        """Curvature: closed forms for catalog metrics, FD otherwise."""
        if self._pack is None:
            from . import curvature
            self._pack = (curvature.curvature_exact(self) if self.catalog
                          else curvature.curvature_fd(self))
        return self._pack

    @property
    def pack_fd(self):
        if self._pack_fd is None:
            from . import curvature
            self._pack_fd = curvature.curvature_fd(self)
        return self._pack_fd

    @property
    def boundary(self):
        if self._boundary is None:
            from . import boundary
            self._boundary = boundary.boundary_geometry(self)
        return self._boundary

    @property
    def measure(self):
        """Riemannian volume density per node (includes the implicit sphere
        factor on radial charts)."""
        if self.radial:
            m = self.n - 1
            return sphere_area(m) * self.warp.b * self.warp.a ** m
        return self.metric.sqrt_det

    @property
    def quad_weights(self):
        """Quadrature weights so that sum(w * field) integrates over M."""
        return self.grid.product_weights() * self.measure

    def schouten(self, t: float):
        """Modified Schouten tensor of the background metric, covariant
        components (frame components on radial charts)."""
        pack = self.pack
        n = self.n
        return (pack.ricci - (t / (2.0 * (n - 1.0))) * pack.scalar[..., None, None]
                * self.metric.g) / (n - 2.0)

    def mixed(self, T):
        """Raise the first index of a covariant 2-tensor field with g^{-1}."""
        return np.einsum("...ik,...kj->...ij", self.metric.g_inv, T)


def _chi_radial(rho, rho1, amplitude, seed):
    # cosine modes have zero slope at the center (regularity) and at the
    # boundary (keeps the perturbed mean curvature at its base value); the
    # 1/k^2 weights keep second derivatives on the order of the amplitude
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(2)
    chi = np.zeros_like(rho)
    for k, ck in enumerate(c, start=1):
        chi += (ck / k ** 2) * np.cos(k * math.pi * rho / rho1)
    peak = np.abs(chi).max()
    return amplitude * chi / peak if peak > 0 else chi


def _chi_full(r, phi, psi, r0, r1, amplitude, seed):
    # low-frequency angular modes plus a linear radial drift: smooth,
    # periodic where needed, and with Hessian comparable to the amplitude
    # (a steep radial envelope would overwhelm the curvature scale on a
    # narrow band)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(4)
    R, P, Q = np.meshgrid(r, phi, psi, indexing="ij")
    lin = (2.0 * R - r0 - r1) / (r1 - r0)
    chi = (c[0] * np.cos(P) + c[1] * np.sin(Q) + c[2] * np.cos(P - Q)
           + c[3] * lin)
    peak = np.abs(chi).max()
    return amplitude * chi / peak if peak > 0 else chi


def _identity_metric(shape, n):
    g = np.broadcast_to(np.eye(n), shape + (n, n)).copy()
    return MetricField(g=g, g_inv=g.copy(), sqrt_det=np.ones(shape), source="catalog")


def _diag_metric(d0, d1, d2, source):
    shape = d0.shape
    g = np.zeros(shape + (3, 3))
    g[..., 0, 0] = d0
    g[..., 1, 1] = d1
    g[..., 2, 2] = d2
    ginv = np.zeros_like(g)
    ginv[..., 0, 0] = 1.0 / d0
    ginv[..., 1, 1] = 1.0 / d1
    ginv[..., 2, 2] = 1.0 / d2
    return MetricField(g=g, g_inv=ginv, sqrt_det=np.sqrt(d0 * d1 * d2), source=source)


def _build_cap(spec, nodes):
    if nodes < 5:
        raise InvalidArgumentError("cap chart needs at least 5 radial nodes")
    rho = np.linspace(0.0, spec.rho1, nodes)
    h = rho[1] - rho[0]
    grid = ChartGrid(n=spec.n, axes=(Axis(nodes, h, False),),
                     boundary_faces=((0, 1),), symmetry="radial", coords=(rho,))
    warp = WarpData(a=np.sin(rho), b=np.ones_like(rho),
                    da=np.cos(rho), d2a=-np.sin(rho),
                    db=np.zeros_like(rho), d2b=np.zeros_like(rho))
    return Model(spec, grid, _identity_metric((nodes,), spec.n), warp=warp)


def _full_grid(spec, resolution):
    nr, nphi, npsi = resolution
    r = np.linspace(spec.r0, spec.r1, nr)
    phi = np.arange(nphi) * (2.0 * math.pi / nphi)
    psi = np.arange(npsi) * (2.0 * math.pi / npsi)
    axes = (Axis(nr, r[1] - r[0], False),
            Axis(nphi, 2.0 * math.pi / nphi, True),
            Axis(npsi, 2.0 * math.pi / npsi, True))
    grid = ChartGrid(n=3, axes=axes, boundary_faces=((0, 0), (0, 1)),
                     symmetry="none", coords=(r, phi, psi))
    return grid, r, phi, psi


def _build_band(spec, resolution):
    grid, r, phi, psi = _full_grid(spec, resolution)
    a, b = np.cos(r), np.sin(r)
    rw = RWarp(a=a, da=-np.sin(r), d2a=-np.cos(r), b=b, db=np.cos(r), d2b=-np.sin(r))
    shape = grid.shape
    a3 = np.broadcast_to(a[:, None, None], shape)
    b3 = np.broadcast_to(b[:, None, None], shape)
    metric = _diag_metric(np.ones(shape), a3 ** 2, b3 ** 2, "catalog")
    return Model(spec, grid, metric, rwarp=rw)


def _build_slab(spec, resolution):
    grid, r, phi, psi = _full_grid(spec, resolution)
    pa = np.polynomial.Polynomial(spec.warp_a)
    pb = np.polynomial.Polynomial(spec.warp_b)
    a, b = pa(r), pb(r)
    if np.any(a <= 0) or np.any(b <= 0):
        raise InvalidArgumentError("slab warp functions must stay positive")
    rw = RWarp(a=a, da=pa.deriv(1)(r), d2a=pa.deriv(2)(r),
               b=b, db=pb.deriv(1)(r), d2b=pb.deriv(2)(r))
    shape = grid.shape
    a3 = np.broadcast_to(a[:, None, None], shape)
    b3 = np.broadcast_to(b[:, None, None], shape)
    metric = _diag_metric(np.ones(shape), a3 ** 2, b3 ** 2, "catalog")
    return Model(spec, grid, metric, rwarp=rw)


def _check_spd(metric):
    try:
        np.linalg.cholesky(metric.g)
    except np.linalg.LinAlgError:
        eigs = symfunc.jacobi_eigenvalues(metric.g)
        bad = np.unravel_index(int(np.argmin(eigs[..., -1])), eigs[..., -1].shape)
        raise InvalidMetricError(
            f"metric not SPD at node {bad}: least eigenvalue {eigs[..., -1][bad]:.3e}")


def _build_perturbed(spec, resolution):
    base = build_model(spec.base, resolution)
    eps = spec.amplitude
    if base.radial:
        rho = base.grid.coords[0]
        chi = _chi_radial(rho, spec.base.rho1, eps, spec.seed)
        fac = np.exp(chi)
        warp = WarpData(a=fac * base.warp.a, b=fac * base.warp.b)
        model = Model(spec, base.grid, _identity_metric(base.grid.shape, spec.n),
                      warp=warp, chi=chi)
    else:
        r, phi, psi = base.grid.coords
        chi = _chi_full(r, phi, psi, spec.base.r0, spec.base.r1, eps, spec.seed)
        fac = np.exp(2.0 * chi)
        g = base.metric.g * fac[..., None, None]
        ginv = base.metric.g_inv / fac[..., None, None]
        metric = MetricField(g=g, g_inv=ginv,
                             sqrt_det=base.metric.sqrt_det * fac ** 1.5,
                             source="perturbed")
        model = Model(spec, base.grid, metric, chi=chi)
    _check_spd(model.metric)
    # post-construction hypothesis check: Schouten spectrum stays in the cone
    margin = float(np.min(symfunc.cone_margin(model.mixed(model.schouten(1.0)))))
    if margin <= 0.0:
        raise InvalidArgumentError(
            f"perturbation amplitude {eps} pushes the Schouten spectrum out of "
            f"Gamma_2+ (margin {margin:.3e}); reduce it")
    return model


def build_model(spec: ModelSpec, resolution) -> Model:
    """Construct a model chart at the given resolution.

    ``resolution`` is a node count for radial charts and an ``(nr, nphi,
    npsi)`` triple for full charts.
    """
    spec.validate()
    if spec.kind == "cap_spaceform":
        return _build_cap(spec, int(resolution))
    if spec.kind == "band_s3":
        return _build_band(spec, tuple(int(k) for k in resolution))
    if spec.kind == "warped_slab":
        return _build_slab(spec, tuple(int(k) for k in resolution))
    if spec.kind == "perturbed":
        res = int(resolution) if spec.base.kind == "cap_spaceform" \
            else tuple(int(k) for k in resolution)
        return _build_perturbed(spec, res)
    raise InvalidArgumentError(f"unknown model kind {spec.kind!r}")
