"""Elementary-symmetric-function kernel on the Gamma_k+ cone.

Dimension-generic algebra for sigma_k values, cone diagnostics, the first
derivative of sigma_2, and the inequality toolbox used by the conformal and
solver layers.  All functions accept either a single matrix/vector or a
stack with arbitrary leading batch axes, and are pure (no shared state), so
they are safe to call concurrently.

Conventions
-----------
* Spectra are returned sorted in descending order.
* Mixed matrices ``W^i_j = g^{ik} W_{kj}`` are plain ``(..., n, n)`` arrays;
  the algebra here never tracks units (inputs are nondimensionalized).
* ``sigma2_gradient`` returns mixed components ``F^i_j``; the pairing with a
  mixed ``W`` is ``sum_ij F^i_j W^j_i = 2 sigma_2(W)``.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError, InvalidMetricError, NumericFailureError

__all__ = [
    "ConeDiagnostic",
    "elementary_symmetric",
    "sigma_values",
    "sigma1_sigma2",
    "sigma2_from_trace",
    "spectrum",
    "jacobi_eigenvalues",
    "cone_membership",
    "cone_margin",
    "sigma2_gradient",
    "ptilde",
    "maclaurin_margin",
]


def _maybe_scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


def elementary_symmetric(lam, k: int):
    """k-th elementary symmetric function of the entries of ``lam``.

    Parameters
    ----------
    lam : array_like, shape (..., n)
        Eigenvalue vectors; the last axis indexes the n entries.
    k : int
        Order, ``1 <= k <= n``.

    Returns
    -------
    float or ndarray
        ``sum over k-subsets of products``.  The accumulation is a direct
        Horner-type recurrence, so integer inputs are exact as long as all
        intermediates stay inside the float64 integer range.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= n:
        raise InvalidArgumentError(f"order k={k} outside 1..{n}")
    e = np.zeros(lam.shape[:-1] + (k + 1,), dtype=float)
    e[..., 0] = 1.0
    for i in range(n):
        x = lam[..., i]
        top = min(i + 1, k)
        for j in range(top, 0, -1):
            e[..., j] += x * e[..., j - 1]
    return _maybe_scalar(e[..., k])


def sigma_values(lam, k: int):
    """All of sigma_1 .. sigma_k, stacked along the last axis."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"order k={k} outside 1..{n}")
    e = np.zeros(lam.shape[:-1] + (k + 1,), dtype=float)
    e[..., 0] = 1.0
    for i in range(n):
        x = lam[..., i]
        top = min(i + 1, k)
        for j in range(top, 0, -1):
            e[..., j] += x * e[..., j - 1]
    return e[..., 1:]


def sigma1_sigma2(W):
    """(sigma_1, sigma_2) of a mixed matrix, from traces only.

    ``sigma_1 = tr W`` and ``sigma_2 = ((tr W)^2 - tr(W @ W)) / 2``; exact
    symmetric-function values without any eigendecomposition, valid for any
    matrix similar to a symmetric one.
    """
    W = np.asarray(W, dtype=float)
    s1 = np.trace(W, axis1=-2, axis2=-1)
    tr2 = np.einsum("...ij,...ji->...", W, W)
    return _maybe_scalar(s1), _maybe_scalar(0.5 * (s1 * s1 - tr2))


def _cholesky_spd(g):
    g = np.asarray(g, dtype=float)
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise InvalidMetricError(f"metric is not SPD: {exc}") from exc


def sigma2_from_trace(W, g=None):
    """sigma_2 of ``g^{-1} W`` via the trace formula.

    Computes ``((tr_g W)^2 - |W|_g^2) / 2`` with ``tr_g W = g^{ij} W_{ij}``
    and ``|W|_g^2 = W_ij W_kl g^{ik} g^{jl}``.  Equals
    ``elementary_symmetric(spectrum(W, g), 2)`` up to roundoff.
    """
    W = np.asarray(W, dtype=float)
    if g is None:
        Wm = W
    else:
        _cholesky_spd(g)  # SPD guard
        Wm = np.linalg.solve(np.asarray(g, dtype=float), W)
    _, s2 = sigma1_sigma2(Wm)
    return s2


def jacobi_eigenvalues(A, max_sweeps: int = 60, tol: float = 1e-14):
    """Eigenvalues of symmetric matrices by cyclic Jacobi rotations.

    Batched over leading axes.  This is the single eigenvalue path used by
    the package (closed forms for n <= 3 live only in the test oracles);
    the cyclic sweep is robust for the near-degenerate spectra produced by
    almost-round model metrics.

    Raises
    ------
    NumericFailureError
        If the off-diagonal mass has not dropped below ``tol * scale``
        after ``max_sweeps`` full sweeps.  The message carries a dump of a
        worst offender to aid debugging.
    """
    A = np.array(A, dtype=float)
    if A.shape[-1] != A.shape[-2]:
        raise InvalidArgumentError("matrix stack must be square")
    n = A.shape[-1]
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    if n == 1:
        return np.sort(A[..., 0, 0][..., None], axis=-1)[..., ::-1]
    scale = np.maximum(np.abs(A).max(axis=(-2, -1)), 1.0)
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = np.maximum(off, np.abs(A[..., p, q]))
        if np.all(off <= tol * scale):
            diag = np.einsum("...ii->...i", A)
            return np.sort(diag, axis=-1)[..., ::-1]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[..., p, q]
                rotate = np.abs(apq) > tol * scale * 1e-2
                if not np.any(rotate):
                    continue
                app = A[..., p, p]
                aqq = A[..., q, q]
                with np.errstate(divide="ignore", invalid="ignore"):
                    tau = (aqq - app) / (2.0 * apq)
                t = np.where(
                    rotate,
                    np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau)),
                    0.0,
                )
                t = np.where(np.isfinite(t), t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                colp = A[..., :, p].copy()
                colq = A[..., :, q].copy()
                A[..., :, p] = c[..., None] * colp - s[..., None] * colq
                A[..., :, q] = s[..., None] * colp + c[..., None] * colq
                rowp = A[..., p, :].copy()
                rowq = A[..., q, :].copy()
                A[..., p, :] = c[..., None] * rowp - s[..., None] * rowq
                A[..., q, :] = s[..., None] * rowp + c[..., None] * rowq
                A[..., p, q] = 0.0
                A[..., q, p] = 0.0
    offmass = np.abs(A).sum(axis=(-2, -1)) - np.abs(np.einsum("...ii->...i", A)).sum(axis=-1)
    worst = np.unravel_index(np.argmax(np.atleast_1d(offmass)), np.atleast_1d(offmass).shape)
    dump = A.reshape((-1, n, n))[np.ravel_multi_index(worst, np.atleast_1d(offmass).shape)]
    raise NumericFailureError(
        f"Jacobi sweep did not converge in {max_sweeps} sweeps; "
        f"offending matrix:\n{dump}"
    )


def spectrum(W, g=None):
    """Generalized eigenvalues of ``(W, g)``, sorted descending.

    ``g`` must be SPD; ``g=None`` means the identity.  The values are those
    of ``g^{-1} W`` and are invariant under the congruence
    ``W -> S^T W S``, ``g -> S^T g S``.
    """
    W = np.asarray(W, dtype=float)
    if g is None:
        return jacobi_eigenvalues(W)
    L = _cholesky_spd(g)
    # B = L^{-1} W L^{-T} is symmetric with the same spectrum as g^{-1} W.
    Y = np.linalg.solve(L, W)
    B = np.linalg.solve(L, np.swapaxes(Y, -1, -2))
    return jacobi_eigenvalues(B)


class ConeDiagnostic:
    """Membership report for the open cone Gamma_k+.

    Attributes
    ----------
    k : int
        Cone order.
    sigmas : ndarray
        ``sigma_1 .. sigma_k`` of the tested spectrum.
    margin : float
        ``min_j sigma_j`` (signed); callers enforce their own strict
        interiority threshold on this number.
    member : bool
        True exactly when ``margin > 0`` (the open cone).
    """

    def __init__(self, k, sigmas):
        self.k = int(k)
        self.sigmas = np.asarray(sigmas, dtype=float)
        self.margin = float(np.min(self.sigmas))
        self.member = self.margin > 0.0

    def __repr__(self):
        return (
            f"ConeDiagnostic(k={self.k}, member={self.member}, "
            f"margin={self.margin:.6g}, sigmas={np.array2string(self.sigmas, precision=6)})"
        )


def cone_membership(lam, k: int) -> ConeDiagnostic:
    """Diagnose Gamma_k+ membership of an eigenvalue vector."""
    return ConeDiagnostic(k, sigma_values(lam, k))


def cone_margin(W):
    """min(sigma_1, sigma_2) of a mixed matrix stack (Gamma_2+ margin)."""
    s1, s2 = sigma1_sigma2(W)
    return np.minimum(s1, s2)


def sigma2_gradient(W):
    """First derivative of sigma_2 at a mixed matrix: ``F = sigma_1(W) I - W``.

    Satisfies the Euler identity ``sum_ij F^i_j W^j_i = 2 sigma_2(W)``
    exactly, and the symmetrized F is positive definite whenever the
    spectrum of W lies in Gamma_2+.
    """
    W = np.asarray(W, dtype=float)
    n = W.shape[-1]
    s1 = np.trace(W, axis1=-2, axis2=-1)
    return s1[..., None, None] * np.eye(n) - W


def ptilde(F, t: float, n: int):
    """Augmented derivative ``P = F + (1-t)/(n-2) * tr(F) * I``.

    This is the principal coefficient of the linearized conformal operator;
    for ``t <= 1`` and F positive definite, ``P - F`` is positive
    semi-definite.
    """
    if n < 3:
        raise InvalidArgumentError("ptilde requires dimension n >= 3")
    F = np.asarray(F, dtype=float)
    trF = np.trace(F, axis1=-2, axis2=-1)
    return F + ((1.0 - t) / (n - 2.0)) * trF[..., None, None] * np.eye(F.shape[-1])


def maclaurin_margin(lam):
    """Slack in the Newton/MacLaurin bound ``sigma_2 <= (m-1) sigma_1^2 / (2m)``.

    Returns ``(m-1) sigma_1^2 / (2m) - sigma_2`` for an m-entry vector
    (batched over leading axes); nonnegative for every real vector.
    """
    lam = np.asarray(lam, dtype=float)
    m = lam.shape[-1]
    s1 = lam.sum(axis=-1)
    s2 = 0.5 * (s1 * s1 - (lam * lam).sum(axis=-1))
    return _maybe_scalar((m - 1.0) / (2.0 * m) * s1 * s1 - s2)
