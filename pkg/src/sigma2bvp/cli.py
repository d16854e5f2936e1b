"""Configuration-driven command line entry point.

Subcommands: ``check-algebra``, ``check-geometry``, ``solve``, ``eigen``,
``yamabe3``.  Options can come from a JSON config file (``--config``) with
command-line flags taking precedence; every run writes the effective
config next to its outputs so it can be replayed exactly.

Exit codes: 0 all checks pass / solve converged, 1 numerical failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import checks, conformal, solver
from .errors import Sigma2BVPError
from .geometry import ModelSpec, build_model, save_model

RADIAL_NODE_CAP = 4097
FULL_AXIS_CAP = 97

DEFAULTS = {
    "model": "cap",
    "rho1": math.pi / 2,
    "r0": math.pi / 6,
    "r1": math.pi / 3,
    "n": 3,
    "res": None,
    "perturb_amplitude": 0.0,
    "perturb_seed": 0,
    "warp_a": "1",
    "warp_b": "1",
    "t": 1.0,
    "f": None,
    "c": "zero",
    "form": "sqrt",
    "u0_amplitude": 0.0,
    "tol": 1e-9,
    "max_iter": 30,
    "backtrack": 0.5,
    "theta": 0.1,
    "margin_floor": 1e-10,
    "eps": None,
    "cauchy_tol": 1e-4,
    "samples": 10000,
    "seed": 1,
    "out": None,
    "save_model": None,
    "fast_geometry": False,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="sigma2bvp",
        description="Curvature boundary value problems on model manifolds")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--out", help="output directory (default runs/<command>)")
        sp.add_argument("--seed", type=int, help="root seed for sampling")

    def model_opts(sp):
        sp.add_argument("--model", choices=("cap", "band", "slab"))
        sp.add_argument("--rho1", type=float, help="cap radius in (0, pi/2]")
        sp.add_argument("--r0", type=float)
        sp.add_argument("--r1", type=float)
        sp.add_argument("--n", type=int, help="manifold dimension (radial charts)")
        sp.add_argument("--res", help="nodes: int (radial) or nr,nphi,npsi")
        sp.add_argument("--warp-a", dest="warp_a",
                        help="slab warp a(r) polynomial coefficients, comma separated")
        sp.add_argument("--warp-b", dest="warp_b")
        sp.add_argument("--perturb-amplitude", dest="perturb_amplitude", type=float)
        sp.add_argument("--perturb-seed", dest="perturb_seed", type=int)
        sp.add_argument("--save-model", dest="save_model",
                        help="write the constructed model to a container file")

    def newton_opts(sp):
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        sp.add_argument("--backtrack", type=float)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--margin-floor", dest="margin_floor", type=float)

    sp = sub.add_parser("check-algebra", help="run the symmetric-function property suite")
    common(sp)
    sp.add_argument("--samples", type=int)

    sp = sub.add_parser("check-geometry", help="run the chart/curvature property suite")
    common(sp)
    sp.add_argument("--fast-geometry", action="store_const", const=True,
                    help="smaller band refinement study")

    sp = sub.add_parser("solve", help="one Newton solve of the curvature equation")
    common(sp)
    model_opts(sp)
    newton_opts(sp)
    sp.add_argument("--t", type=float, help="tensor family parameter (t <= 1)")
    sp.add_argument("--f", help="prescribed curvature level (float) or 'round'")
    sp.add_argument("--c", help="boundary data: 'zero', 'hg', or a float")
    sp.add_argument("--form", choices=("sqrt", "squared"))
    sp.add_argument("--u0-amplitude", dest="u0_amplitude", type=float,
                    help="amplitude of the smooth perturbation used as start")

    sp = sub.add_parser("eigen", help="nonlinear eigenvalue continuation")
    common(sp)
    model_opts(sp)
    newton_opts(sp)
    sp.add_argument("--t", type=float)
    sp.add_argument("--eps", type=float,
                    help="single-eps run; omit to drive the eps -> 0 schedule")
    sp.add_argument("--cauchy-tol", dest="cauchy_tol", type=float)

    sp = sub.add_parser("yamabe3", help="three-manifold path to the round target")
    common(sp)
    model_opts(sp)
    newton_opts(sp)
    return p


def effective_config(args) -> dict:
    cfg = dict(DEFAULTS)
    fromfile = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            fromfile = json.load(fh)
        unknown = set(fromfile) - set(DEFAULTS) - {"command"}
        if unknown:
            raise SystemExit(2)
        cfg.update(fromfile)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    if cfg["out"] is None:
        cfg["out"] = os.path.join("runs", args.command)
    return cfg


def _parse_res(cfg, radial):
    res = cfg["res"]
    if res is None:
        return 257 if radial else (33, 32, 32)
    if isinstance(res, int):
        return res
    if isinstance(res, (list, tuple)):
        return tuple(int(x) for x in res)
    parts = [int(x) for x in str(res).split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def make_model(cfg):
    kind = {"cap": "cap_spaceform", "band": "band_s3", "slab": "warped_slab"}[cfg["model"]]
    radial = kind == "cap_spaceform"
    res = _parse_res(cfg, radial)
    if radial:
        if not isinstance(res, int):
            raise SystemExit(2)
        if res > RADIAL_NODE_CAP:
            print(f"error: radial resolution capped at {RADIAL_NODE_CAP}", file=sys.stderr)
            raise SystemExit(2)
        base = ModelSpec(kind, n=cfg["n"], rho1=cfg["rho1"])
    else:
        if isinstance(res, int) or len(res) != 3:
            raise SystemExit(2)
        if max(res) > FULL_AXIS_CAP:
            print(f"error: 3D resolution capped at {FULL_AXIS_CAP}^3", file=sys.stderr)
            raise SystemExit(2)
        wa = tuple(float(x) for x in str(cfg["warp_a"]).split(","))
        wb = tuple(float(x) for x in str(cfg["warp_b"]).split(","))
        base = ModelSpec(kind, r0=cfg["r0"], r1=cfg["r1"], warp_a=wa, warp_b=wb)
    if cfg["perturb_amplitude"] > 0.0:
        spec = ModelSpec("perturbed", n=base.n, amplitude=cfg["perturb_amplitude"],
                         seed=cfg["perturb_seed"], base=base)
    else:
        spec = base
    model = build_model(spec, res)
    if cfg.get("save_model"):
        save_model(model, cfg["save_model"])
    return model


def newton_config(cfg) -> solver.NewtonConfig:
    return solver.NewtonConfig(tol=cfg["tol"], max_iter=cfg["max_iter"],
                               backtrack=cfg["backtrack"], theta=cfg["theta"],
                               margin_floor=cfg["margin_floor"])


def _write_config(cfg, outdir):
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "config.json"), "w") as fh:
        json.dump(cfg, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _initial_guess(model, amplitude, cfg):
    if amplitude == 0.0:
        return np.zeros(model.grid.shape)
    if model.radial:
        rho = model.grid.coords[0]
        return amplitude * np.sin(rho)
    r, phi, psi = np.meshgrid(*model.grid.coords, indexing="ij")
    width = model.grid.coords[0][-1] - model.grid.coords[0][0]
    return amplitude * np.cos(phi) * np.sin(math.pi * (r - model.grid.coords[0][0]) / width)


def _boundary_term(cfg, model):
    c = str(cfg["c"])
    if c in ("zero", "0", "0.0"):
        return conformal.ZeroC()
    if c == "hg":
        return conformal.FieldC([np.asarray(f.h) for f in model.boundary.faces])
    return conformal.FieldC([np.full(np.shape(np.asarray(f.h)), float(c))
                             for f in model.boundary.faces])


def emit_plot_data(trace: solver.ContinuationTrace, outdir, prefix="series"):
    """Per-series tables (parameter against one monitored quantity each)."""
    rows = trace.accepted()
    if not rows:
        raise Sigma2BVPError("empty trace: nothing to emit")
    os.makedirs(outdir, exist_ok=True)
    series = {
        "residual": lambda r: r.residual,
        "sup_hess": lambda r: r.report.sup_hess,
        "max_unn": lambda r: r.report.max_unn,
        "vol_conf": lambda r: r.report.vol_conf,
    }
    paths = []
    for name, pick in series.items():
        path = os.path.join(outdir, f"{prefix}_{name}.tsv")
        with open(path, "w") as fh:
            fh.write(f"# parameter\t{name}\n")
            for r in rows:
                fh.write(f"{r.parameter:.17g}\t{pick(r):.17g}\n")
        paths.append(path)
    return paths


def _report_lines(results, outdir, name):
    lines = [r.line() for r in results]
    npass = sum(r.passed for r in results)
    lines.append(f"{npass}/{len(results)} properties passed")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    with open(os.path.join(outdir, name), "w") as fh:
        fh.write(text)
    return all(r.passed for r in results)


def cmd_check_algebra(cfg):
    _write_config(cfg, cfg["out"])
    results = checks.check_algebra(samples=cfg["samples"], seed=cfg["seed"])
    ok = _report_lines(results, cfg["out"], "algebra_report.txt")
    return 0 if ok else 1


def cmd_check_geometry(cfg):
    _write_config(cfg, cfg["out"])
    results = checks.check_geometry(large_band=not cfg["fast_geometry"])
    ok = _report_lines(results, cfg["out"], "geometry_report.txt")
    return 0 if ok else 1


def cmd_solve(cfg):
    _write_config(cfg, cfg["out"])
    model = make_model(cfg)
    if cfg["f"] is None:
        print("error: solve requires --f (a level or 'round')", file=sys.stderr)
        return 2
    if str(cfg["f"]) == "round":
        f0 = np.asarray(conformal.build_state(
            model, conformal.ProblemSpec(t=cfg["t"], f=conformal.ConstantF(1.0),
                                         c=conformal.ZeroC()),
            np.zeros(model.grid.shape)).sigma2)
        level = float(np.sqrt(f0.max()))
    else:
        level = float(cfg["f"])
    prob = conformal.ProblemSpec(t=cfg["t"], f=conformal.ConstantF(level),
                                 c=_boundary_term(cfg, model), form=cfg["form"])
    u0 = _initial_guess(model, cfg["u0_amplitude"], cfg)
    try:
        result = solver.newton_solve(model, prob, u0, newton_config(cfg))
    except Sigma2BVPError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        solver.write_summary(os.path.join(cfg["out"], "summary.txt"),
                             {"converged": False, "error": str(exc)})
        return 1
    entries = {"converged": True, "iterations": result.iterations,
               "residual": result.residual, "f_level": level}
    entries.update(result.report.as_dict())
    solver.write_summary(os.path.join(cfg["out"], "summary.txt"), entries)
    print(f"converged in {result.iterations} iterations, "
          f"residual {result.residual:.3e}")
    return 0


def cmd_eigen(cfg):
    _write_config(cfg, cfg["out"])
    model = make_model(cfg)
    ncfg = newton_config(cfg)
    try:
        if cfg["eps"] is not None:
            u, trace = solver.eigen_continuation(model, cfg["t"], cfg["eps"], ncfg)
            w = model.quad_weights
            ubar = float(np.sum(w * u)) / float(w.sum())
            lam = math.exp(cfg["eps"] * ubar)
            entries = {"mode": "single_eps", "eps": cfg["eps"], "lambda": lam,
                       "log_lambda": math.log(lam), "u_mean": ubar,
                       "u_max_dev": float(np.abs(u - ubar).max()),
                       "final_residual": trace.accepted()[-1].residual}
        else:
            res = solver.eigen_limit(model, cfg["t"], cfg=ncfg,
                                     cauchy_tol=cfg["cauchy_tol"])
            trace = res.trace
            entries = {"mode": "eps_schedule", "lambda": res.lam,
                       "log_lambda": res.log_lam, "converged": res.converged,
                       "eps_final": res.eps_used[-1],
                       "eps_count": len(res.eps_used),
                       "interior_residual": res.interior_residual,
                       "boundary_residual": res.boundary_residual,
                       "limit_residual": res.limit_residual,
                       "v_sup": float(np.abs(res.v).max())}
            with open(os.path.join(cfg["out"], "eigen_lambda.tsv"), "w") as fh:
                fh.write("# eps\tlambda\n")
                for e, l in res.lam_table:
                    fh.write(f"{e:.17g}\t{l:.17g}\n")
    except Sigma2BVPError as exc:
        print(f"eigen run failed: {exc}", file=sys.stderr)
        trace = getattr(exc, "trace", None)
        if trace is not None:
            trace.write(os.path.join(cfg["out"], "trace.tsv"))
        solver.write_summary(os.path.join(cfg["out"], "summary.txt"),
                             {"converged": False, "error": str(exc)})
        return 1
    trace.write(os.path.join(cfg["out"], "trace.tsv"))
    emit_plot_data(trace, cfg["out"])
    solver.write_summary(os.path.join(cfg["out"], "summary.txt"), entries)
    print("lambda = {:.10g}".format(entries["lambda"]))
    return 0


def cmd_yamabe3(cfg):
    _write_config(cfg, cfg["out"])
    model = make_model(cfg)
    try:
        u, trace = solver.yamabe3_path(model, newton_config(cfg))
    except Sigma2BVPError as exc:
        print(f"path failed: {exc}", file=sys.stderr)
        trace = getattr(exc, "trace", None)
        if trace is not None:
            trace.write(os.path.join(cfg["out"], "trace.tsv"))
        solver.write_summary(os.path.join(cfg["out"], "summary.txt"),
                             {"converged": False, "error": str(exc)})
        return 1
    acc = trace.accepted()
    half_sphere = math.pi ** 2
    entries = {"converged": True, "steps": len(acc),
               "final_residual": acc[-1].residual,
               "u_sup": float(np.abs(u).max()),
               "final_vol_conf": acc[-1].report.vol_conf,
               "half_round_volume": half_sphere,
               "volume_threshold_crossed": any(
                   r.report.vol_conf >= half_sphere * (1 - 1e-12) for r in acc)}
    trace.write(os.path.join(cfg["out"], "trace.tsv"))
    emit_plot_data(trace, cfg["out"])
    solver.write_summary(os.path.join(cfg["out"], "summary.txt"), entries)
    print(f"completed {len(acc)} accepted steps, final residual "
          f"{acc[-1].residual:.3e}")
    return 0


COMMANDS = {
    "check-algebra": cmd_check_algebra,
    "check-geometry": cmd_check_geometry,
    "solve": cmd_solve,
    "eigen": cmd_eigen,
    "yamabe3": cmd_yamabe3,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
    except SystemExit:
        return 2
    try:
        return COMMANDS[args.command](cfg)
    except Sigma2BVPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
