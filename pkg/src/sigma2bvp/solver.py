"""Cone-safeguarded Newton solver, continuation drivers, estimate monitor.

The Newton corrector solves the discretized curvature equation with
boundary-condition rows at boundary nodes, keeps every accepted iterate
inside Gamma_2+ by backtracking, fixes the additive-constant gauge with a
bordered mean-zero row whenever the discrete problem is shift invariant,
and treats the nonlocal volume term of the three-manifold path as a
rank-one border.  Two drivers sweep the continuation paths; a monitor
records the quantities that the a priori estimates bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import conformal, symfunc
from .conformal import ProblemSpec, build_state
from .errors import (
    ConeExitError,
    ContinuationError,
    InvalidArgumentError,
    InvalidModelError,
    LineSearchStallError,
    NonConvergenceError,
    NumericFailureError,
)

DIRECT_SOLVE_LIMIT = 6000  # unknowns; above this the bordered solve goes iterative


@dataclass
class NewtonConfig:
    tol: float = 1e-10
    max_iter: int = 30
    backtrack: float = 0.5
    theta: float = 0.1
    margin_floor: float = 1e-10

    def __post_init__(self):
        if self.tol < 1e-14:
            raise InvalidArgumentError("residual tolerance below 1e-14")
        if not 0.0 < self.backtrack < 1.0:
            raise InvalidArgumentError("backtracking factor must lie in (0,1)")
        if not 0.0 < self.theta < 1.0:
            raise InvalidArgumentError("cone-margin fraction must lie in (0,1)")
        if self.max_iter <= 0 or self.margin_floor <= 0.0:
            raise InvalidArgumentError("iteration cap and margin floor must be positive")


@dataclass
class MonitorReport:
    sup_grad: float
    sup_hess: float
    max_unn: float
    min_sigma1: float
    min_sigma2: float
    cone_margin: float
    vol_conf: float
    supervol: float
    cc_flag: bool

    def as_dict(self):
        return {
            "sup_grad": self.sup_grad,
            "sup_hess": self.sup_hess,
            "max_unn": self.max_unn,
            "min_sigma1": self.min_sigma1,
            "min_sigma2": self.min_sigma2,
            "cone_margin": self.cone_margin,
            "vol_conf": self.vol_conf,
            "supervol": self.supervol,
            "cc_flag": self.cc_flag,
        }


TRACE_COLUMNS = ("parameter", "iterations", "residual", "sup_grad", "sup_hess",
                 "max_unn", "min_sigma2", "cone_margin", "vol_conf", "supervol",
                 "cc_flag")


@dataclass
class TraceRecord:
    parameter: float
    iterations: int
    residual: float
    report: MonitorReport
    accepted: bool
    step: float

    def row(self):
        r = self.report
        return (self.parameter, self.iterations, self.residual, r.sup_grad,
                r.sup_hess, r.max_unn, r.min_sigma2, r.cone_margin, r.vol_conf,
                r.supervol, int(r.cc_flag))


class ContinuationTrace:
    """Ordered per-step records of a continuation sweep."""

    def __init__(self, label=""):
        self.label = label
        self.records = []

    def append(self, record: TraceRecord):
        self.records.append(record)

    @property
    def parameters(self):
        return [r.parameter for r in self.records]

    def accepted(self):
        return [r for r in self.records if r.accepted]

    def write(self, path):
        """One row per accepted step, tab separated, %.17g for all floats."""
        with open(path, "w") as fh:
            fh.write("# " + "\t".join(TRACE_COLUMNS) + "\n")
            for rec in self.accepted():
                cells = []
                for v in rec.row():
                    cells.append(f"{v:d}" if isinstance(v, (int, np.integer))
                                 else f"{v:.17g}")
                fh.write("\t".join(cells) + "\n")


@dataclass
class NewtonResult:
    u: np.ndarray
    iterations: int
    report: MonitorReport
    residual: float
    state: conformal.ConformalState
    margins: list
    steps: list
    linear_residuals: list


@dataclass
class EigenResult:
    lam: float
    log_lam: float
    v: np.ndarray
    eps_used: list
    converged: bool
    lam_table: list
    interior_residual: float
    boundary_residual: float
    limit_residual: float
    trace: ContinuationTrace
    u_final: np.ndarray


# --------------------------------------------------------------------------
# monitor
# --------------------------------------------------------------------------

def monitor(state, model, supervolume_t: Optional[float] = None) -> MonitorReport:
    """Snapshot of the quantities tracked by the a priori estimates."""
    n = model.n
    if model.radial:
        hdiag = np.einsum("...ii->...i", state.hess)
        sup_hess = float(np.abs(hdiag).max())
        max_unn = float(state.hess[-1, 0, 0])
    else:
        eigs = symfunc.spectrum(state.hess, model.metric.g)
        sup_hess = float(np.abs(eigs).max())
        max_unn = -math.inf
        for face in model.boundary.faces:
            hb = state.hess[face.slicer]
            unn = np.einsum("...i,...j,...ij->...", face.normal, face.normal, hb)
            max_unn = max(max_unn, float(unn.max()))
    t_eff = supervolume_t if supervolume_t is not None else state.t
    vol_conf = conformal.weighted_volume(state.u, n, model)
    supervol = (1.0 - t_eff) * math.sqrt(conformal.weighted_volume(state.u, 4.0, model))
    cc = False
    if n == 3:
        tol = 1e-8
        st1 = (state if state.t == 1.0
               else conformal.deform(model.schouten(1.0), state.u, 1.0, model))
        sig2_def = np.exp(4.0 * st1.u) * st1.sigma2
        cc = bool(st1.cone_margin > 0.0
                  and float(sig2_def.min()) >= 0.75 - tol)
        if cc:
            for hgu in conformal.conformal_mean_curvature(st1, model):
                if float(np.min(hgu)) < -tol:
                    cc = False
                    break
    return MonitorReport(
        sup_grad=state.sup_grad,
        sup_hess=sup_hess,
        max_unn=max_unn,
        min_sigma1=float(state.sigma1.min()),
        min_sigma2=float(state.sigma2.min()),
        cone_margin=state.cone_margin,
        vol_conf=vol_conf,
        supervol=supervol,
        cc_flag=cc,
    )


# --------------------------------------------------------------------------
# linear algebra
# --------------------------------------------------------------------------

def _pde_row_mask(model):
    return ~model.grid.boundary_mask()


def stacked_residual(state, prob, model):
    """Residual vector in node order: PDE rows interior, BC rows boundary."""
    ri = conformal.interior_residual(state, prob, model)
    rb = conformal.boundary_residual(state, prob, model)
    vec = np.asarray(ri, dtype=float).ravel().copy()
    ids = np.arange(model.grid.nnodes).reshape(model.grid.shape)
    for face, r in zip(model.boundary.faces, rb):
        vec[np.atleast_1d(ids[face.slicer]).ravel()] = np.asarray(r).ravel()
    return vec


def _bordered_solve(J, rhs, rank1=None, gauge=None, prefer_direct=True):
    """Solve ``(J + c1 r1^T) x + gc mu = rhs, gw^T x = 0`` style systems.

    ``rank1 = (c1, r1)`` adds the rank-one product through an auxiliary
    unknown (``y = <r1, x>``), keeping the assembled matrix sparse;
    ``gauge = (gc, gw)`` appends the mean-zero constraint with its
    compensating multiplier.  Returns ``(x, relative_residual)``.
    """
    m = J.shape[0]
    cols, rows = [], []
    dvals = []
    if rank1 is not None:
        c1, r1 = rank1
        cols.append(c1)
        rows.append(r1)
        dvals.append(-1.0)
    if gauge is not None:
        gc, gw = gauge
        cols.append(gc)
        rows.append(gw)
        dvals.append(0.0)
    p = len(cols)
    if p == 0:
        K = J.tocsc()
        b = rhs
    else:
        Bc = sp.csc_matrix(np.column_stack(cols))
        Br = sp.csc_matrix(np.vstack(rows))
        K = sp.bmat([[J, Bc], [Br, sp.csc_matrix(np.diag(dvals))]], format="csc")
        b = np.concatenate([rhs, np.zeros(p)])
    if prefer_direct or m <= DIRECT_SOLVE_LIMIT:
        x = spla.spsolve(K, b)
    else:
        x = _iterative_bordered(J, K, b, m)
    res = K @ x - b
    denom = max(float(np.linalg.norm(b)), 1e-300)
    return x[:m], x[m:], float(np.linalg.norm(res)) / denom


def _iterative_bordered(J, K, b, m):
    shift = 1e-10 * max(float(np.abs(J.diagonal()).max()), 1.0)
    try:
        ilu = spla.spilu((J + shift * sp.identity(m, format="csr")).tocsc(),
                         drop_tol=1e-5, fill_factor=12)
    except RuntimeError:
        return spla.spsolve(K, b)
    ntot = K.shape[0]

    def precond(x):
        y = x.copy()
        y[:m] = ilu.solve(x[:m])
        return y

    M = spla.LinearOperator((ntot, ntot), matvec=precond)
    x, info = spla.gmres(K, b, M=M, rtol=1e-10, atol=0.0, restart=60,
                         maxiter=400)
    if info != 0:
        x = spla.spsolve(K, b)
    return x


# --------------------------------------------------------------------------
# Newton corrector
# --------------------------------------------------------------------------

def cone_safeguard_step(model, prob, state, direction, cfg: NewtonConfig):
    """Largest backtracked step keeping the iterate inside Gamma_2+.

    Accepts step ``alpha`` when the post-step margin is at least
    ``theta * pre-step margin`` or at least the absolute floor.  Returns
    ``(alpha, post_state)``; raises LineSearchStallError below 1e-12.
    """
    margin0 = state.cone_margin
    alpha = 1.0
    while alpha >= 1e-12:
        cand = build_state(model, prob, state.u + alpha * direction)
        mnew = cand.cone_margin
        if np.isfinite(mnew) and (mnew >= cfg.theta * margin0
                                  or mnew >= cfg.margin_floor):
            return alpha, cand
        alpha *= cfg.backtrack
    raise LineSearchStallError(
        f"cone safeguard stalled (step < 1e-12, margin0={margin0:.3e})")


def _resolve(prob: ProblemSpec, model) -> ProblemSpec:
    if prob.base_tensor is None:
        return replace(prob, base_tensor=model.schouten(prob.t))
    return prob


def newton_solve(model, prob: ProblemSpec, u0, cfg: NewtonConfig,
                 gauge: Optional[bool] = None,
                 supervolume_t: Optional[float] = None) -> NewtonResult:
    """Damped Newton for the discretized problem.

    ``gauge=None`` auto-detects shift invariance (f and c independent of u)
    and then pins the quadrature mean of u with a bordered constraint row.
    Deterministic for fixed inputs.
    """
    prob = _resolve(prob, model)
    if gauge is None:
        gauge = prob.shift_invariant
    u = np.array(np.broadcast_to(np.asarray(u0, dtype=float), model.grid.shape))
    w = model.quad_weights
    vol = float(w.sum())
    if gauge:
        u = u - float(np.sum(w * u)) / vol
    state = build_state(model, prob, u)
    if state.cone_margin <= 0.0:
        margins = np.minimum(state.sigma1, state.sigma2)
        bad = np.argwhere(margins <= 0.0)
        raise ConeExitError(
            f"initial iterate outside Gamma_2+ (margin {state.cone_margin:.3e})",
            nodes=[tuple(x) for x in bad[:16]])
    pde_mask = _pde_row_mask(model).ravel()
    margins = [state.cone_margin]
    steps, linres_list = [], []
    for it in range(cfg.max_iter + 1):
        res = stacked_residual(state, prob, model)
        resnorm = float(np.abs(res).max())
        if resnorm <= cfg.tol:
            return NewtonResult(u=state.u, iterations=it,
                                report=monitor(state, model, supervolume_t),
                                residual=resnorm, state=state, margins=margins,
                                steps=steps, linear_residuals=linres_list)
        if it == cfg.max_iter:
            raise NonConvergenceError(
                f"Newton did not reach tol={cfg.tol:g} in {cfg.max_iter} "
                f"iterations (last residual {resnorm:.3e})", residual=resnorm)
        op = conformal.linearize(state, prob, model)
        J = op.assemble()
        rank1 = None
        if op.rank1_row is not None:
            c1 = pde_mask.astype(float)
            rank1 = (c1, np.asarray(op.rank1_row, dtype=float).ravel())
        gpair = None
        if gauge:
            gc = np.where(pde_mask, w.ravel(), 0.0)
            gpair = (gc, w.ravel() / vol)
        prefer_direct = model.radial or model.grid.nnodes <= DIRECT_SOLVE_LIMIT
        delta, _, linres = _bordered_solve(J, -res, rank1=rank1, gauge=gpair,
                                           prefer_direct=prefer_direct)
        linres_list.append(linres)
        alpha, state = cone_safeguard_step(
            model, prob, state, delta.reshape(model.grid.shape), cfg)
        steps.append(alpha)
        margins.append(state.cone_margin)
    raise AssertionError("unreachable")


# --------------------------------------------------------------------------
# continuation drivers
# --------------------------------------------------------------------------

def _check_eigen_hypotheses(model, t):
    A = model.schouten(t)
    margin = float(np.min(symfunc.cone_margin(model.mixed(A))))
    if margin <= 0.0:
        raise InvalidModelError(
            f"Schouten spectrum (t={t}) leaves Gamma_2+ (margin {margin:.3e})")
    for face in model.boundary.faces:
        if float(np.min(face.h)) < -1e-10:
            raise InvalidModelError("boundary mean curvature must be nonnegative")
    return A


def _eigen_problem(model, t, eps, s, f0, A, level=0.0):
    cvals = [(1.0 - s) * np.asarray(face.h) for face in model.boundary.faces]
    return ProblemSpec(t=t, f=conformal.EigenPathF(s=s, eps=eps, f0=f0, level=level),
                       c=conformal.FieldC(cvals), form="squared",
                       base_tensor=A)


def _newton_eigen_level(model, t, eps, s, f0, A, v0, mu0, cfg: NewtonConfig):
    """Newton corrector for the eigenvalue path in split form ``u = v + mu``.

    The mean of the conformal factor scales like 1/eps along the schedule;
    carrying it as the bordered scalar ``mu`` (with a mean-zero row for v)
    keeps the stored field O(1) and the finite-difference residual floor
    flat.  Exactly equivalent to solving for u directly, since the
    deformed tensor only sees derivatives of u.
    """
    w = model.quad_weights
    vol = float(w.sum())
    v = np.array(np.broadcast_to(np.asarray(v0, dtype=float), model.grid.shape))
    mu = float(mu0) + float(np.sum(w * v)) / vol
    v = v - float(np.sum(w * v)) / vol
    pde_mask = _pde_row_mask(model).ravel()
    margins = []
    state = None
    for it in range(cfg.max_iter + 1):
        prob = _eigen_problem(model, t, eps, s, f0, A, level=mu)
        if state is None:
            state = build_state(model, prob, v)
            if state.cone_margin <= 0.0:
                raise ConeExitError(
                    f"eigen iterate outside Gamma_2+ (margin {state.cone_margin:.3e})")
            margins.append(state.cone_margin)
        res = stacked_residual(state, prob, model)
        resnorm = float(np.abs(res).max())
        if resnorm <= cfg.tol:
            return v, mu, it, resnorm, state, margins
        if it == cfg.max_iter:
            raise NonConvergenceError(
                f"eigen Newton stalled at residual {resnorm:.3e}", residual=resnorm)
        op = conformal.linearize(state, prob, model)
        J = op.assemble()
        rhs_field, _, _ = prob.f.fields(state.u, model, prob.form)
        dcol = np.where(pde_mask, -eps * rhs_field.ravel(), 0.0)
        grow = w.ravel() / vol
        delta, extras, _ = _bordered_solve(J, -res, gauge=(dcol, grow),
                                           prefer_direct=model.radial or
                                           model.grid.nnodes <= DIRECT_SOLVE_LIMIT)
        dmu = float(extras[-1])
        dv = delta.reshape(model.grid.shape)
        # safeguard: the cone margin depends on v only
        alpha = 1.0
        accepted = None
        while alpha >= 1e-12:
            cand_mu = mu + alpha * dmu
            cand_prob = _eigen_problem(model, t, eps, s, f0, A, level=cand_mu)
            cand = build_state(model, cand_prob, v + alpha * dv)
            mnew = cand.cone_margin
            if np.isfinite(mnew) and (mnew >= cfg.theta * state.cone_margin
                                      or mnew >= cfg.margin_floor):
                accepted = (cand, cand_mu)
                break
            alpha *= cfg.backtrack
        if accepted is None:
            raise LineSearchStallError("eigen cone safeguard stalled")
        state, mu = accepted
        v = state.u
        margins.append(state.cone_margin)
    raise AssertionError("unreachable")


def _sweep(model, cfg, stepper, start, label, start_tol, supervolume_t=None):
    """Adaptive 0 -> 1 parameter sweep shared by both drivers.

    ``start()`` returns (state, prob) at parameter 0; ``stepper(s)`` solves
    at parameter s from the current solution and returns
    (iterations, residual, report).  Halves the step on any Newton
    failure, doubles it after two consecutive successes, and fails below
    step 1e-4 with the trace attached.
    """
    trace = ContinuationTrace(label)
    svt = supervolume_t if supervolume_t is not None else (lambda s: None)
    state0, prob0 = start()
    res0 = float(np.abs(stacked_residual(state0, prob0, model)).max())
    if res0 > start_tol:
        raise ContinuationError(
            f"start point residual {res0:.3e} exceeds {start_tol:g}", trace)
    trace.append(TraceRecord(0.0, 0, res0,
                             monitor(state0, model, svt(0.0)), True, 0.0))
    s, ds, streak = 0.0, 0.1, 0
    last_report = trace.records[0].report
    while s < 1.0 - 1e-12:
        s_try = min(1.0, s + ds)
        try:
            iters, resnorm, report = stepper(s_try)
        except (NonConvergenceError, LineSearchStallError, ConeExitError):
            trace.append(TraceRecord(s_try, 0, math.nan, last_report, False, ds))
            ds *= 0.5
            streak = 0
            if ds < 1e-4:
                raise ContinuationError(
                    f"continuation step underflow at parameter {s:.6g}", trace)
            continue
        s = s_try
        last_report = report
        trace.append(TraceRecord(s, iters, resnorm, report, True, ds))
        streak += 1
        if streak >= 2 and s < 1.0:
            ds = min(ds * 2.0, 0.5, 1.0 - s)
            streak = 0
    return trace


def _eigen_sweep(model, t, eps, cfg, f0, A, v0=None, mu0=0.0):
    carry = {"v": np.zeros(model.grid.shape) if v0 is None else np.asarray(v0),
             "mu": float(mu0)}

    def start():
        prob0 = _eigen_problem(model, t, eps, 0.0, f0, A, level=0.0)
        return build_state(model, prob0, np.zeros(model.grid.shape)), prob0

    def stepper(s):
        v, mu, iters, resnorm, state, _ = _newton_eigen_level(
            model, t, eps, s, f0, A, carry["v"], carry["mu"], cfg)
        carry["v"], carry["mu"] = v, mu
        return iters, resnorm, monitor(state, model, t)

    trace = _sweep(model, cfg, stepper, start, label=f"eigen eps={eps:g}",
                   start_tol=1e-12)
    return carry["v"], carry["mu"], trace


def eigen_continuation(model, t, eps, cfg: NewtonConfig):
    """Sweep ``sigma_2(W(u)) = (s + (1-s) f0) exp(eps u)`` with boundary
    rows ``u_n = -s h`` from s=0 (where u=0 is exact) to s=1.

    Returns the s=1 solution ``u`` and the sweep trace.  Internally the
    corrector carries the mean of u as a separate scalar; the returned
    field is the reassembled u.
    """
    if eps <= 0.0:
        raise InvalidArgumentError("eps must be positive")
    A = _check_eigen_hypotheses(model, t)
    f0 = np.asarray(symfunc.sigma1_sigma2(model.mixed(A))[1])
    v, mu, trace = _eigen_sweep(model, t, eps, cfg, f0, A)
    return v + mu, trace


def eigen_limit(model, t, eps_schedule=None, cfg: NewtonConfig = None,
                cauchy_tol: float = 1e-4) -> EigenResult:
    """Drive eps -> 0 and extract the curvature constant.

    For each eps the s=1 problem is solved (full sweep for the first eps,
    warm start afterwards, falling back to a sweep on failure).  With
    ``ubar`` the quadrature mean of the solution, the candidate constant is
    ``exp(eps * ubar)``; the schedule stops when consecutive candidates
    differ by at most ``cauchy_tol``.
    """
    cfg = cfg or NewtonConfig(tol=1e-9)
    if eps_schedule is None:
        eps_schedule = [2.0 ** (-k) for k in range(11)]
    A = _check_eigen_hypotheses(model, t)
    f0 = np.asarray(symfunc.sigma1_sigma2(model.mixed(A))[1])
    trace = ContinuationTrace("eigen eps schedule")
    lam_table = []
    lam_prev = None
    v_prev, mu_prev = None, 0.0
    converged = False
    used = []
    last = None
    for i, eps in enumerate(eps_schedule):
        if i == 0 or v_prev is None:
            v, mu, _ = _eigen_sweep(model, t, eps, cfg, f0, A)
            out = _newton_eigen_level(model, t, eps, 1.0, f0, A, v, mu, cfg)
        else:
            # the level rescales with eps: exp(eps_new * mu_new) tracks the
            # same constant as exp(eps_old * mu_old)
            mu_guess = mu_prev * (used[-1] / eps)
            try:
                out = _newton_eigen_level(model, t, eps, 1.0, f0, A,
                                          v_prev, mu_guess, cfg)
            except (NonConvergenceError, LineSearchStallError, ConeExitError):
                v, mu, _ = _eigen_sweep(model, t, eps, cfg, f0, A)
                out = _newton_eigen_level(model, t, eps, 1.0, f0, A, v, mu, cfg)
        v_sol, mu_sol, iters, resnorm, state, _ = out
        used.append(eps)
        last = out
        lam = math.exp(eps * mu_sol)
        lam_table.append((eps, lam))
        trace.append(TraceRecord(eps, iters, resnorm,
                                 monitor(state, model, t), True, 0.0))
        v_prev, mu_prev = v_sol, mu_sol
        if lam_prev is not None and abs(lam - lam_prev) <= cauchy_tol:
            converged = True
            break
        lam_prev = lam
    if not converged:
        table = ", ".join(f"eps={e:g}: {l:.8g}" for e, l in lam_table)
        raise NonConvergenceError(
            f"eps schedule exhausted without Cauchy agreement ({table})",
            trace=trace)
    lam = lam_table[-1][1]
    v_sol, mu_sol, _, resnorm, state, _ = last
    state_v = conformal.deform(A, v_sol, t, model)
    limit_residual = float(np.abs(state_v.sigma2 - lam).max())
    rb = conformal.boundary_residual(
        state, _eigen_problem(model, t, used[-1], 1.0, f0, A, level=mu_sol),
        model)
    bres = max(float(np.abs(r).max()) for r in rb)
    if lam <= 0.0:
        raise NumericFailureError("curvature constant must be positive")
    return EigenResult(lam=lam, log_lam=math.log(lam), v=v_sol, eps_used=used,
                       converged=converged, lam_table=lam_table,
                       interior_residual=resnorm,
                       boundary_residual=bres,
                       limit_residual=limit_residual, trace=trace,
                       u_final=v_sol + mu_sol)


def smoothstep_ramp(tp: float) -> float:
    """Ramp used by the curvature path: 0 at 0, 1 from 1/2 on, C^1 monotone."""
    x = min(max(2.0 * tp, 0.0), 1.0)
    return 3.0 * x * x - 2.0 * x ** 3


def yamabe3_path(model, cfg: NewtonConfig = None):
    """Sweep the three-manifold path from the solvable start to the round
    curvature target ``sqrt(sigma_2) = sqrt(3)/2 exp(-2u)``, ``u_n = 0``.

    Requires n=3, Schouten spectrum in Gamma_2+, and a boundary already
    normalized to vanishing mean curvature.  Emits a warning (not an error)
    whenever the conformal volume reaches half the round-sphere volume.
    """
    cfg = cfg or NewtonConfig(tol=1e-10)
    if model.n != 3:
        raise InvalidModelError("the curvature path is three-dimensional")
    A = model.schouten(1.0)
    margin = float(np.min(symfunc.cone_margin(model.mixed(A))))
    if margin <= 0.0:
        raise InvalidModelError(f"Schouten spectrum outside Gamma_2+ "
                                f"(margin {margin:.3e})")
    for face in model.boundary.faces:
        if float(np.max(np.abs(face.h))) > 1e-3:
            raise InvalidModelError(
                "path requires a boundary normalized to zero mean curvature")
    V = conformal.weighted_volume(0.0, 0.0, model)
    gcov = model.metric.g
    round_level = math.sqrt(V) / math.sqrt(3.0)

    # boundary rows read u_n = 0: on the normalized models h vanishes up to
    # discretization noise, which the c-data cancels exactly
    cdata = conformal.FieldC([np.asarray(f.h) for f in model.boundary.faces])

    def make_prob(tp):
        psi = smoothstep_ramp(tp)
        S = (1.0 - psi) * (round_level * gcov - A)
        return ProblemSpec(t=1.0, f=conformal.YamabePathF(tpath=tp, psi=psi),
                           c=cdata, form="sqrt",
                           base_tensor=A + S)

    carry = {"u": np.zeros(model.grid.shape)}

    def start():
        prob0 = make_prob(0.0)
        return build_state(model, prob0, carry["u"]), prob0

    def stepper(tp):
        result = newton_solve(model, make_prob(tp), carry["u"], cfg,
                              supervolume_t=tp)
        carry["u"] = result.u
        return result.iterations, result.residual, result.report

    trace = _sweep(model, cfg, stepper, start, label="yamabe3",
                   start_tol=1e-10, supervolume_t=lambda s: s)
    u = carry["u"]
    half_sphere = math.pi ** 2
    crossed = [r.parameter for r in trace.accepted()
               if r.report.vol_conf >= half_sphere * (1.0 - 1e-12)]
    if crossed:
        warnings.warn(
            f"conformal volume reached half the round-sphere volume at "
            f"parameter(s) {crossed[:3]}...; the existence hypothesis bound "
            f"is active", RuntimeWarning, stacklevel=2)
    return u, trace


# --------------------------------------------------------------------------
# trace / summary export
# --------------------------------------------------------------------------

def write_summary(path, entries: dict):
    """Key-value run summary, one `key = value` per line, %.17g floats."""
    with open(path, "w") as fh:
        for k, v in entries.items():
            if isinstance(v, float):
                fh.write(f"{k} = {v:.17g}\n")
            else:
                fh.write(f"{k} = {v}\n")
