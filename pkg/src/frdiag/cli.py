"""Command-line front end.

Thin adapters over the library: every subcommand parses flags, calls the
corresponding library routine, writes CSV/JSON artifacts with 17
significant digits, and reports through exit codes (0 success, 1 usage,
2 domain error, 3 convergence/mass failure).  A metadata sidecar
``<out>.meta.json`` records the invocation, solver tolerances and the
build identifier next to every file artifact.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import subprocess
import sys

import numpy as np

from . import __version__, freeconv, measures, mcoracle, models, rdiag, semigroup
from .errors import (ConvergenceError, DegenerateMeasure, DomainError,
                     EmptySample, FrdiagError, MassDefect,
                     MonotonicityViolation, ScalarOperand, SingularDraw,
                     ThresholdExceeded, Unsupported)

_DOMAIN_ERRORS = (DomainError, ThresholdExceeded, DegenerateMeasure,
                  ScalarOperand, Unsupported, EmptySample)
_CONVERGENCE_ERRORS = (ConvergenceError, MassDefect, MonotonicityViolation,
                       SingularDraw)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract reserves 2 for
    # domain errors and uses 1 for usage
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(v):
    return f"{v:.17g}"


def _git_describe():
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=5,
                             cwd=os.path.dirname(os.path.abspath(__file__)))
        if out.returncode == 0:
            return out.stdout.strip()
    except Exception:
        pass
    return f"frdiag-{__version__}"


def _write_meta(out_path, command, args_echo, extra=None):
    args_echo = {k: v for k, v in args_echo.items()
                 if k != "fn" and isinstance(v, (str, int, float, bool, type(None)))}
    meta = {
        "command": command,
        "args": args_echo,
        "tolerances": {
            "subordination_step": 1e-12,
            "subordination_residual": 1e-9,
            "root_640bit": 1e-13,
            "semigroup_identity": 1e-10,
        },
        "build": _git_describe(),
    }
    if extra:
        meta.update(extra)
    with open(f"{out_path}.meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)


def _parse_symmetric(text):
    """Symmetric-law grammar for convolve-add: models plus bernoulli:a=..."""
    if text.startswith("bernoulli"):
        x0 = models.parse_x0(text)
        a = float(x0.law.atom_x[-1])
        return measures.symmetric_point(a)
    bundle = models.model_transforms(models.parse_model(text))
    if bundle.mu_symm is None:
        raise DomainError(f"model {text!r} has no materialized symmetric law")
    return bundle.mu_symm


def _cmd_brown_radial(args):
    spec = models.parse_model(args.model)
    grid = np.linspace(0.0, args.rmax, args.points + 1)
    if isinstance(spec, models.Xmk):
        F = np.array([models.radial_cdf_xmk(spec.m, spec.k, r) if r > 0 else 0.0
                      for r in grid])
    elif isinstance(spec, models.MarchenkoPastur1):
        F = rdiag.radial_cdf_from_S(models.marchenko_pastur_one(), grid).mass
    else:
        bundle = models.model_transforms(spec)
        if bundle.phi_imag is None:
            raise DomainError(f"no radial route available for {args.model!r}")
        F = rdiag.radial_cdf_via_theta(bundle.phi_imag, r_grid=grid).mass
    with open(args.output, "w") as fh:
        fh.write("r,F\n")
        for r, v in zip(grid, F):
            fh.write(f"{_fmt(r)},{_fmt(v)}\n")
    _write_meta(args.output, "brown-radial", vars(args) | {"rows": len(grid)})
    return 0


def _cmd_convolve_add(args):
    mu1 = _parse_symmetric(args.mu1)
    mu2 = _parse_symmetric(args.mu2)
    grid = np.linspace(args.xmin, args.xmax, args.points)
    _, rho = freeconv.convolve_density(mu1, mu2, grid, args.eta)
    with open(args.output, "w") as fh:
        fh.write("x,density\n")
        for x, v in zip(grid, rho):
            fh.write(f"{_fmt(x)},{_fmt(v)}\n")
    _write_meta(args.output, "convolve-add", vars(args))
    return 0


def _cmd_semigroup(args):
    spec = models.parse_model(args.model)
    x0 = models.parse_x0(args.x0)
    lam = complex(args.lambda_re, args.lambda_im)
    ts = np.linspace(args.tmin, args.tmax, args.tpoints)
    rows = []
    for t in ts:
        st = semigroup.solve_W1(x0, lam, spec, float(t), args.eps)
        rows.append((t, lam.real, lam.imag, args.eps, st.W1, st.W2, st.Gval,
                     st.S_value))
    with open(args.output, "w") as fh:
        fh.write("t,lambda_re,lambda_im,eps,W1,W2,G,S\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    _write_meta(args.output, "semigroup", vars(args) | {"rows": len(rows)})
    return 0


def _cmd_hj_check(args):
    spec = models.parse_model(args.model)
    x0 = models.parse_x0(args.x0)
    lam = complex(args.lambda_re, args.lambda_im)
    res = semigroup.hj_residual(x0, lam, spec, args.t, args.eps, h=args.h)
    print(f"residual_fd={_fmt(res.finite_difference)} "
          f"residual_exact={_fmt(res.exact_gradient)} h={_fmt(res.h)}")
    if args.tol is not None and res.finite_difference > args.tol:
        raise ConvergenceError(
            f"Hamilton-Jacobi residual {res.finite_difference} exceeds {args.tol}")
    return 0


def _cmd_radial_pde_check(args):
    spec = models.parse_model(args.model)
    rs = np.linspace(args.rmin, args.rmax, args.points)
    rows = []
    for r in rs:
        F = semigroup._radial_F(spec, args.t, float(r))
        resid = semigroup.radial_pde_residual(spec, args.t, float(r),
                                              scaled=args.scaled)
        rows.append((args.t, r, F, resid))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("t,r,F,residual\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        _write_meta(args.output, "radial-pde-check", vars(args))
    worst = max(row[3] for row in rows)
    print(f"max_residual={_fmt(worst)}")
    return 0


def _cmd_support_classify(args):
    x0 = models.parse_x0(args.x0)
    y_spec = models.parse_model(args.y)
    lam = complex(args.lambda_re, args.lambda_im)
    if isinstance(y_spec, models.Xmk):
        y_sq = y_spec
    else:
        y_sq = models.model_transforms(y_spec).mu_sq
        if y_sq is None:
            raise DomainError(f"no modulus-squared law for {args.y!r}")
    label = rdiag.classify_support_point(x0, y_sq, args.y_kernel, lam)
    print(label.value)
    return 0


def _cmd_lp_moment(args):
    print(_fmt(models.lp_moment_xmk(args.m, args.k, args.p)))
    return 0


def _cmd_log_int_report(args):
    spec = models.parse_model(args.model)
    bundle = models.model_transforms(spec)
    if bundle.pair is None:
        raise DomainError(f"model {args.model!r} carries no generating pair")
    rep = semigroup.log_integrability_report(bundle.pair, spec, T=args.T)
    names = ("mu_log_moment", "sigma_log_moment", "phi_tail", "r_near_zero",
             "f_tail")
    for name, val in zip(names, rep.values):
        print(f"{name}={'inf' if math.isinf(val) else _fmt(val)}")
    print(f"all_agree={rep.all_agree}")
    return 0


def _cmd_mc(args):
    cfg_model = models.Xmk(1, 0) if args.test == "circular" else \
        models.Xmk(1, 1) if args.test == "x11" else None
    cfg = mcoracle.MCConfig(N=args.N, trials=args.trials, seed=args.seed,
                            model=cfg_model)
    extra = {"config": {"N": args.N, "trials": args.trials, "seed": args.seed,
                        "test": args.test}}
    if args.test == "circular":
        law = mcoracle.sample_xmk_eigen(cfg)
        ks = mcoracle.ks_distance(law, lambda r: np.clip(np.asarray(r) ** 2, 0, 1))
    elif args.test == "x11":
        law = mcoracle.sample_xmk_eigen(cfg)
        r2 = lambda r: np.asarray(r) ** 2
        ks = mcoracle.ks_distance(law, lambda r: r2(r) / (1.0 + r2(r)),
                                  domain=(None, 10.0))
    elif args.test in ("commutator", "anticommutator"):
        result = mcoracle.commutator_oracle(cfg, anticommute=args.test == "anticommutator")
        law, ks = result.law, result.ks
    elif args.test == "product":
        law = mcoracle.free_add_oracle(models.ScalarX0(0.0), models.Xmk(2, 0), cfg)
        ref = models.xmk_modulus_symmetric(2, 0)
        ks = mcoracle.ks_distance(law, lambda x: measures.cdf(ref, x))
    else:
        raise DomainError(f"unknown mc test {args.test!r}")
    print(f"ks={_fmt(ks)} samples={law.values.size}")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("value\n")
            for v in law.values:
                fh.write(_fmt(v) + "\n")
        _write_meta(args.output, "mc", vars(args), extra | {"ks": ks})
    return 0


def _build_parser():
    p = _Parser(prog="frdiag",
                description="Brown measures, free convolution, and semigroup "
                            "dynamics for R-diagonal elements")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("brown-radial", help="radial CDF of a model's Brown measure")
    q.add_argument("--model", required=True)
    q.add_argument("--rmax", type=float, required=True)
    q.add_argument("--points", type=int, default=200,
                   help="grid intervals; the file has points+1 rows")
    q.add_argument("-o", "--output", required=True)
    q.set_defaults(fn=_cmd_brown_radial)

    q = sub.add_parser("convolve-add", help="free additive convolution density")
    q.add_argument("--mu1", required=True)
    q.add_argument("--mu2", required=True)
    q.add_argument("--xmin", type=float, required=True)
    q.add_argument("--xmax", type=float, required=True)
    q.add_argument("--points", type=int, default=801)
    q.add_argument("--eta", type=float, required=True)
    q.add_argument("-o", "--output", required=True)
    q.set_defaults(fn=_cmd_convolve_add)

    q = sub.add_parser("semigroup", help="imaginary-axis semigroup sweep in t")
    q.add_argument("--model", required=True)
    q.add_argument("--x0", required=True)
    q.add_argument("--lambda-re", type=float, default=0.0)
    q.add_argument("--lambda-im", type=float, default=0.0)
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--tmin", type=float, required=True)
    q.add_argument("--tmax", type=float, required=True)
    q.add_argument("--tpoints", type=int, default=21)
    q.add_argument("-o", "--output", required=True)
    q.set_defaults(fn=_cmd_semigroup)

    q = sub.add_parser("hj-check", help="Hamilton-Jacobi residual at one point")
    q.add_argument("--model", required=True)
    q.add_argument("--x0", required=True)
    q.add_argument("--lambda-re", type=float, default=0.0)
    q.add_argument("--lambda-im", type=float, default=0.0)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--h", type=float, default=None)
    q.add_argument("--tol", type=float, default=None)
    q.set_defaults(fn=_cmd_hj_check)

    q = sub.add_parser("radial-pde-check", help="radial-CDF transport residuals")
    q.add_argument("--model", required=True)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--rmin", type=float, required=True)
    q.add_argument("--rmax", type=float, required=True)
    q.add_argument("--points", type=int, default=25)
    q.add_argument("--scaled", action="store_true")
    q.add_argument("-o", "--output", default=None)
    q.set_defaults(fn=_cmd_radial_pde_check)

    q = sub.add_parser("support-classify", help="label a point of the plane")
    q.add_argument("--x0", required=True)
    q.add_argument("--y", required=True)
    q.add_argument("--y-kernel", type=float, default=0.0)
    q.add_argument("--lambda-re", type=float, required=True)
    q.add_argument("--lambda-im", type=float, default=0.0)
    q.set_defaults(fn=_cmd_support_classify)

    q = sub.add_parser("lp-moment", help="p-th modulus moment of x_{m,k}")
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--p", type=float, required=True)
    q.set_defaults(fn=_cmd_lp_moment)

    q = sub.add_parser("log-int-report", help="five-way log-integrability report")
    q.add_argument("--model", required=True)
    q.add_argument("--T", type=float, default=1.0)
    q.set_defaults(fn=_cmd_log_int_report)

    q = sub.add_parser("mc", help="random matrix Monte Carlo checks")
    q.add_argument("--test", required=True,
                   choices=["circular", "x11", "commutator", "anticommutator",
                            "product"])
    q.add_argument("--N", type=int, default=512)
    q.add_argument("--trials", type=int, default=40)
    q.add_argument("--seed", type=int, default=1)
    q.add_argument("-o", "--output", default=None)
    q.set_defaults(fn=_cmd_mc)
    return p


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _DOMAIN_ERRORS as exc:
        print(f"frdiag: {exc}", file=sys.stderr)
        return 2
    except _CONVERGENCE_ERRORS as exc:
        print(f"frdiag: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
