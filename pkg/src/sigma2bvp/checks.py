"""Seeded property suites behind the check-algebra / check-geometry
subcommands (and reused by the acceptance tests).

Every property returns a PropertyResult with a pass flag, the sample count
it examined, and a short detail string with the measured extremes, so the
CLI can print one line per property and a machine-readable report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import symfunc
from .geometry import ModelSpec, build_model, boundary_distance, fermi_identity_report


@dataclass
class PropertyResult:
    name: str
    passed: bool
    count: int
    detail: str

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name} (n={self.count}): {self.detail}"


def random_orthogonal(rng, n, count):
    a = rng.standard_normal((count, n, n))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.einsum("...ii->...i", r))[:, None, :]
    return q


def sample_symmetric(rng, n, count, scale=1.0):
    a = rng.standard_normal((count, n, n)) * scale
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def sample_spd(rng, n, count):
    a = rng.standard_normal((count, n, n))
    return np.einsum("...ki,...kj->...ij", a, a) + 0.2 * np.eye(n)


def sample_cone(rng, n, count, min_margin=1e-3):
    """Symmetric matrices with spectrum in Gamma_2+ (rejection sampled)."""
    out = np.empty((count, n, n))
    have = 0
    while have < count:
        lam = rng.standard_normal((2 * count, n)) + 0.8
        s1 = lam.sum(axis=-1)
        s2 = 0.5 * (s1 ** 2 - (lam ** 2).sum(axis=-1))
        good = lam[(s1 > min_margin) & (s2 > min_margin)]
        take = min(count - have, len(good))
        if take == 0:
            continue
        q = random_orthogonal(rng, n, take)
        d = good[:take]
        out[have:have + take] = np.einsum("...ik,...k,...jk->...ij", q, d, q)
        have += take
    return out


# --------------------------------------------------------------------------
# algebra suite
# --------------------------------------------------------------------------

def check_algebra(samples: int = 10000, seed: int = 1):
    rng = np.random.default_rng(seed)
    results = []
    dims = (3, 4, 5, 6)
    per_dim = max(samples // len(dims), 16)

    # 1: trace-formula sigma_2 versus the eigenvalue route
    worst = 0.0
    total = 0
    for n in dims:
        W = sample_symmetric(rng, n, per_dim, scale=2.0)
        g = sample_spd(rng, n, per_dim)
        # identity-metric half and generalized half
        half = per_dim // 2
        s2_tr = symfunc.sigma2_from_trace(W[:half])
        s2_ei = symfunc.elementary_symmetric(symfunc.spectrum(W[:half]), 2)
        scale = 1.0 + np.einsum("...ij,...ij->...", W[:half], W[:half])
        worst = max(worst, float((np.abs(s2_tr - s2_ei) / scale).max()))
        s2_tr = symfunc.sigma2_from_trace(W[half:], g[half:])
        s2_ei = symfunc.elementary_symmetric(symfunc.spectrum(W[half:], g[half:]), 2)
        scale = 1.0 + np.einsum("...ij,...ij->...", W[half:], W[half:])
        worst = max(worst, float((np.abs(s2_tr - s2_ei) / scale).max()))
        total += per_dim
    results.append(PropertyResult(
        "trace formula vs eigenvalue sigma_2", worst <= 1e-10, total,
        f"max scaled deviation {worst:.2e} (tol 1e-10)"))

    # 2: sigma_2 gradient against finite differences
    #    (a) componentwise at h=1e-5: sigma_2 is quadratic, so centered
    #        differences are exact up to roundoff
    #    (b) observed order on the sqrt composition, whose third derivative
    #        does not vanish
    count2 = max(per_dim // 4, 8)
    worst_comp = 0.0
    orders = []
    for n in dims:
        # margin floor keeps the sqrt branch well defined at the largest
        # finite-difference step below
        W = sample_cone(rng, n, count2, min_margin=0.75)
        F = symfunc.sigma2_gradient(W)
        h = 1e-5
        for idx in range(min(count2, 32)):
            M = W[idx]
            scale = 1.0 + np.abs(F[idx]).max()
            for i in range(n):
                for j in range(n):
                    E = np.zeros((n, n))
                    E[j, i] = 1.0  # dW^j_i direction pairs with F^i_j
                    _, sp = symfunc.sigma1_sigma2(M + h * E)
                    _, sm = symfunc.sigma1_sigma2(M - h * E)
                    fd = (sp - sm) / (2 * h)
                    worst_comp = max(worst_comp, abs(fd - F[idx, i, j]) / scale)
        V = sample_symmetric(rng, n, count2, scale=0.25)
        def dsqrt(h):
            _, s2p = symfunc.sigma1_sigma2(W + h * V)
            _, s2m = symfunc.sigma1_sigma2(W - h * V)
            return (np.sqrt(s2p) - np.sqrt(s2m)) / (2 * h)
        _, s2 = symfunc.sigma1_sigma2(W)
        exact = np.einsum("...ij,...ji->...", F, V) / (2.0 * np.sqrt(s2))
        errs = [np.abs(dsqrt(h) - exact).max() for h in (1e-2, 1e-3, 1e-4)]
        orders.append(math.log10(errs[0] / errs[1]))
        orders.append(math.log10(errs[1] / errs[2]))
    order_min = min(orders)
    ok2 = worst_comp <= 1e-6 and order_min >= 1.9
    results.append(PropertyResult(
        "sigma_2 gradient matches finite differences",
        ok2, count2 * len(dims),
        f"componentwise {worst_comp:.2e} (tol 1e-6), observed order "
        f">= {order_min:.2f} (need 1.9)"))

    # 3 + 4: positivity of F and the trace identity on cone samples
    per3 = max(samples // len(dims), 64)
    least = math.inf
    worst_tr = 0.0
    for n in dims:
        W = sample_cone(rng, n, per3)
        F = symfunc.sigma2_gradient(W)
        eigs = symfunc.jacobi_eigenvalues(0.5 * (F + np.swapaxes(F, -1, -2)))
        least = min(least, float(eigs[..., -1].min()))
        s1 = np.trace(W, axis1=-2, axis2=-1)
        dev = np.abs(np.trace(F, axis1=-2, axis2=-1) - (n - 1) * s1)
        worst_tr = max(worst_tr, float((dev / (1.0 + np.abs(s1))).max()))
    results.append(PropertyResult(
        "gradient positive definite on Gamma_2+", least > 0.0,
        per3 * len(dims), f"least eigenvalue {least:.3e} (need > 0)"))
    results.append(PropertyResult(
        "trace identity sum F^i_i = (n-1) sigma_1", worst_tr <= 1e-13,
        per3 * len(dims), f"max scaled deviation {worst_tr:.2e}"))

    # 5: midpoint concavity of sigma_2^(1/2)
    slack = math.inf
    for n in dims:
        Wa = sample_cone(rng, n, per3)
        Wb = sample_cone(rng, n, per3)
        _, s2a = symfunc.sigma1_sigma2(Wa)
        _, s2b = symfunc.sigma1_sigma2(Wb)
        _, s2m = symfunc.sigma1_sigma2(0.5 * (Wa + Wb))
        gap = np.sqrt(s2m) - 0.5 * (np.sqrt(s2a) + np.sqrt(s2b))
        slack = min(slack, float(gap.min()))
    results.append(PropertyResult(
        "midpoint concavity of sqrt(sigma_2)", slack >= -1e-10,
        per3 * len(dims), f"min slack {slack:.3e} (tol -1e-10)"))

    # 6: MacLaurin margin over random vectors
    worst_mac = math.inf
    for m in (2, 3, 4, 5, 6):
        lam = rng.standard_normal((samples, m)) * 2.0
        worst_mac = min(worst_mac, float(symfunc.maclaurin_margin(lam).min()))
    results.append(PropertyResult(
        "MacLaurin bound margin", worst_mac >= -1e-12, samples * 5,
        f"min margin {worst_mac:.3e} (tol -1e-12)"))

    # 7: block partition identities and the Euler identity
    worst_part = 0.0
    euler_exact = True
    for n in dims:
        W = sample_symmetric(rng, n, per3, scale=1.5)
        F = symfunc.sigma2_gradient(W)
        s1top = np.einsum("...aa->...", W[..., :-1, :-1])
        worst_part = max(worst_part, float(np.abs(F[..., -1, -1] - s1top).max()
                                           / (1.0 + np.abs(s1top).max())))
        if not np.array_equal(F[..., -1, :-1], -W[..., -1, :-1]):
            worst_part = max(worst_part, 1.0)
        _, s2 = symfunc.sigma1_sigma2(W)
        _, s2top = symfunc.sigma1_sigma2(W[..., :-1, :-1])
        cross = np.einsum("...a,...a->...", W[..., :-1, -1], W[..., -1, :-1])
        quot = F[..., -1, -1] * W[..., -1, -1] - (s2 - s2top + cross)
        worst_part = max(worst_part, float(np.abs(quot).max()
                                           / (1.0 + np.abs(s2).max())))
        Wi = rng.integers(-4, 5, size=(per3, n, n)).astype(float)
        Wi = Wi + np.swapaxes(Wi, -1, -2)
        Fi = symfunc.sigma2_gradient(Wi)
        _, s2i = symfunc.sigma1_sigma2(Wi)
        euler = np.einsum("...ij,...ji->...", Fi, Wi)
        euler_exact = euler_exact and bool(np.array_equal(euler, 2.0 * s2i))
    results.append(PropertyResult(
        "partition and Euler identities", worst_part <= 1e-13 and euler_exact,
        per3 * len(dims),
        f"max scaled deviation {worst_part:.2e}, Euler exact on integers: "
        f"{euler_exact}"))
    return results


# --------------------------------------------------------------------------
# geometry suite
# --------------------------------------------------------------------------

def _order(errs):
    return [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]


def check_geometry(large_band: bool = True):
    results = []

    # 1: cap curvature convergence
    errs = []
    for nodes in (65, 129, 257):
        m = build_model(ModelSpec("cap_spaceform", rho1=math.pi / 2), nodes)
        errs.append(float(np.abs(m.pack_fd.scalar - 6.0).max()))
    orders = _order(errs)
    results.append(PropertyResult(
        "cap curvature FD convergence", min(orders) >= 1.9 and errs[-1] <= 1e-4, 3,
        f"errors {errs[0]:.2e} -> {errs[1]:.2e} -> {errs[2]:.2e}, "
        f"orders {orders[0]:.2f}, {orders[1]:.2f}"))

    # 2: band curvature convergence (refinement of every axis)
    resolutions = ((17, 16, 16), (33, 32, 32), (65, 64, 64)) if large_band \
        else ((17, 8, 8), (33, 8, 8), (65, 8, 8))
    errs = []
    for res in resolutions:
        m = build_model(ModelSpec("band_s3"), res)
        errs.append(float(np.abs(m.pack_fd.scalar - 6.0).max()))
    orders = _order(errs)
    results.append(PropertyResult(
        "band curvature FD convergence", min(orders) >= 1.9, 3,
        f"errors {errs[0]:.2e} -> {errs[1]:.2e} -> {errs[2]:.2e}, "
        f"orders {orders[0]:.2f}, {orders[1]:.2f}"))

    # 3: boundary mean curvature closed forms
    worst = 0.0
    for rho1 in (math.pi / 4, math.pi / 3, math.pi / 2):
        m = build_model(ModelSpec("cap_spaceform", rho1=rho1), 129)
        worst = max(worst, abs(float(m.boundary.faces[0].h) - 1.0 / math.tan(rho1)))
    bm = build_model(ModelSpec("band_s3"), (17, 12, 12))
    r0, r1 = math.pi / 6, math.pi / 3
    h0 = (math.tan(r0) - 1.0 / math.tan(r0)) / 2.0
    h1 = (1.0 / math.tan(r1) - math.tan(r1)) / 2.0
    worst = max(worst, float(np.abs(bm.boundary.face(0, 0).h - h0).max()))
    worst = max(worst, float(np.abs(bm.boundary.face(0, 1).h - h1).max()))
    results.append(PropertyResult(
        "boundary mean curvature closed forms", worst <= 1e-8, 5,
        f"max deviation {worst:.2e} (tol 1e-8)"))

    # 4: Fermi identity residual convergence
    levels = {}
    for res in ((17, 12, 12), (33, 12, 12)):
        rep = fermi_identity_report(build_model(ModelSpec("band_s3"), res))
        levels[res] = rep.residuals
    o_g = math.log2(levels[(17, 12, 12)]["gamma_normal_tangential"]
                    / levels[(33, 12, 12)]["gamma_normal_tangential"])
    o_h = math.log2(levels[(17, 12, 12)]["hess_distance"]
                    / levels[(33, 12, 12)]["hess_distance"])
    cap_lo = fermi_identity_report(
        build_model(ModelSpec("cap_spaceform", rho1=math.pi / 3), 65))
    cap_hi = fermi_identity_report(
        build_model(ModelSpec("cap_spaceform", rho1=math.pi / 3), 129))
    o_c = math.log2(cap_lo.residuals["gamma_normal_tangential"]
                    / cap_hi.residuals["gamma_normal_tangential"])
    ok = min(o_g, o_h, o_c) >= 0.9
    results.append(PropertyResult(
        "Fermi identity residual convergence", ok, 3,
        f"orders band-Gamma {o_g:.2f}, band-Hess(d) {o_h:.2f}, cap {o_c:.2f} "
        f"(need 0.9)"))

    # 5: metric SPD on all models, including perturbed ones
    spd_ok = True
    least = math.inf
    for model in (
        build_model(ModelSpec("cap_spaceform", rho1=math.pi / 2), 65),
        build_model(ModelSpec("band_s3"), (17, 12, 12)),
        build_model(ModelSpec("warped_slab", r0=0.0, r1=1.0,
                              warp_a=(1.0, 0.1), warp_b=(1.0,)), (17, 12, 12)),
        build_model(ModelSpec("perturbed", amplitude=0.05, seed=7,
                              base=ModelSpec("band_s3")), (17, 12, 12)),
        build_model(ModelSpec("perturbed", amplitude=0.02, seed=3,
                              base=ModelSpec("cap_spaceform", rho1=math.pi / 2)), 65),
    ):
        eigs = symfunc.jacobi_eigenvalues(model.metric.g)
        least = min(least, float(eigs[..., -1].min()))
        spd_ok = spd_ok and least > 0.0
    results.append(PropertyResult(
        "metric SPD at every node", spd_ok, 5,
        f"least metric eigenvalue {least:.3e}"))

    # 6: round-cap hypothesis check (Schouten spectrum and boundary sign)
    hyp_ok = True
    detail = []
    for rho1 in (math.pi / 5, math.pi / 3, math.pi / 2):
        m = build_model(ModelSpec("cap_spaceform", rho1=rho1), 65)
        lam = symfunc.spectrum(m.schouten(1.0)[10])
        diag = symfunc.cone_membership(lam, 2)
        h = float(m.boundary.faces[0].h)
        hyp_ok = hyp_ok and diag.member and np.allclose(lam, 0.5) and h >= -1e-12
        detail.append(f"rho1={rho1:.2f}: lam={lam[0]:.3f}, h={h:.3f}")
    results.append(PropertyResult(
        "cap hypothesis check (spectrum (1/2,..), h >= 0)", hyp_ok, 3,
        "; ".join(detail)))

    # 7: two-route mean curvature consistency and traceless shear
    worst = 0.0
    worst_ring = 0.0
    for model in (build_model(ModelSpec("band_s3"), (17, 12, 12)),
                  build_model(ModelSpec("cap_spaceform", rho1=math.pi / 3), 65)):
        for face in model.boundary.faces:
            worst = max(worst, float(np.abs(face.h - face.h_div).max()))
            ginv_ind = np.linalg.inv(face.g_induced)
            ring = np.einsum("...ab,...ab->...", ginv_ind, face.L_ring)
            worst_ring = max(worst_ring, float(np.abs(ring).max()))
    results.append(PropertyResult(
        "mean curvature route consistency, traceless shear",
        worst <= 1e-8 and worst_ring <= 1e-10, 3,
        f"route gap {worst:.2e} (tol 1e-8), ring trace {worst_ring:.2e}"))

    # 8: distance field behavior near the boundary
    m = build_model(ModelSpec("cap_spaceform", rho1=math.pi / 2), 129)
    dist = boundary_distance(m)
    rho = m.grid.coords[0]
    gradnorm = np.abs(dist.grad[..., 0])
    near = dist.mask
    dev_unit = float(np.abs(gradnorm[near] - 1.0).max())
    dev_normal = float(abs(dist.grad[-1, 0] - m.boundary.faces[0].normal[0]))
    hess_eq = float(np.abs(dist.hess[-1]).max())  # totally geodesic equator
    bm = build_model(ModelSpec("band_s3"), (33, 8, 8))
    bdist = boundary_distance(bm)
    r = bm.grid.coords[0]
    i = np.searchsorted(r, math.pi / 5)
    dev_val = float(abs(bdist.d[i, 0, 0] - min(r[i] - r[0], r[-1] - r[i])))
    ok = (dev_unit <= 1e-10 and dev_normal <= 1e-12 and hess_eq <= 1e-10
          and dev_val <= 1e-14)
    results.append(PropertyResult(
        "distance field (unit gradient, boundary normal, offsets)", ok, 4,
        f"|grad|-1: {dev_unit:.1e}, grad vs normal: {dev_normal:.1e}, "
        f"equator Hessian: {hess_eq:.1e}, band offset: {dev_val:.1e}"))
    return results
