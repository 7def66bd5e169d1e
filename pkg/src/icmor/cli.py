"""Command-line interface.

Verbs mirror the offline/online split of the workflow:

* ``bench msd``  -- generate the mass-spring-damper benchmark and save it
* ``reduce``     -- offline phase: reduce a model, write reduced matrices
* ``simulate``   -- simulate a full model and write the output trace
* ``report``     -- full experiment from a JSON config: reduce, simulate,
                    evaluate bounds, emit tables and plot data

Exit codes: 0 on success, 2 if a measured error exceeded its bound, 1 on
any other error.
"""

import argparse
import json
import os
import sys

import numpy as np

from ._mmio import write_matrix
from .errors import IcmorError
from .experiment import ExperimentConfig, emit_report, run_experiment
from .model import build_msd, load_model, save_model, unit_vector_basis
from .reduction import OrderSelection, abt_reduce, bt_reduce, split_reduce
from .simulation import InputSignal, l2_norm, linf_norm, simulate, suggest_grid


def _load_any_model(spec, x0_indices=None):
    if spec.startswith("builtin:msd"):
        M = build_msd(150, m_inputs=10)
        basis = None
    else:
        M, basis = load_model(spec)
    if x0_indices:
        basis = unit_vector_basis(M.n, x0_indices)
    return M, basis


def _selection(args):
    if args.order is not None:
        return OrderSelection.fixed(args.order)
    return OrderSelection.tolerance(args.tol)


def cmd_bench(args):
    M = build_msd(args.n_masses, mass=args.mass, stiffness=args.stiffness,
                  damping=args.damping, m_inputs=args.m_inputs)
    basis = unit_vector_basis(M.n, args.x0_indices) if args.x0_indices else None
    save_model(M, args.out, basis=basis)
    print(f"wrote order-{M.n} benchmark model to {args.out}")
    return 0


def cmd_reduce(args):
    M, basis = _load_any_model(args.model, args.x0_indices)
    os.makedirs(args.out, exist_ok=True)
    sel_u = OrderSelection.fixed(args.order_u) if args.order_u is not None \
        else OrderSelection.tolerance(args.tol)
    if args.method == "augbt":
        if basis is None:
            print("augbt needs --x0-indices or a model directory with X0.mtx",
                  file=sys.stderr)
            return 1
        R = abt_reduce(M, basis, sel_u)
        write_matrix(os.path.join(args.out, "A_red.mtx"), R.Atil)
        write_matrix(os.path.join(args.out, "B_red.mtx"), R.Btil)
        write_matrix(os.path.join(args.out, "C_red.mtx"), R.Ctil)
        write_matrix(os.path.join(args.out, "X0_red.mtx"), R.X0til)
        orders = {"r_aug": R.r}
    else:
        if basis is None:
            print("split methods need --x0-indices or a model with X0.mtx",
                  file=sys.stderr)
            return 1
        sel_x0 = OrderSelection.fixed(args.order_x0) if args.order_x0 is not None \
            else OrderSelection.tolerance(args.tol)
        x0_method = "irka" if args.method == "bt-irka" else "bt"
        S = split_reduce(M, basis, sel_u, sel_x0, x0_method=x0_method,
                         irka_opts={"seed": args.seed})
        for tag, R in (("u", S.suy), ("x0", S.sxy)):
            write_matrix(os.path.join(args.out, f"A_{tag}.mtx"), R.Atil)
            write_matrix(os.path.join(args.out, f"B_{tag}.mtx"), R.Btil)
            write_matrix(os.path.join(args.out, f"C_{tag}.mtx"), R.Ctil)
        orders = {"r_u": S.suy.r, "r_x0": S.sxy.r}
    with open(os.path.join(args.out, "offline.json"), "w") as fh:
        json.dump({"method": args.method, "orders": orders}, fh, indent=2)
    print(f"{args.method}: orders {orders}; wrote {args.out}")
    return 0


def cmd_simulate(args):
    M, basis = _load_any_model(args.model, args.x0_indices)
    t_f, dt = suggest_grid(M)
    if args.tf is not None:
        t_f = args.tf
        dt = t_f / 4000.0
    if args.dt is not None:
        dt = args.dt
    u = InputSignal.decaying_pulses(M.m) if args.input == "decaying_pulses" \
        else InputSignal.decaying_sinusoid(M.m) if args.input == "decaying_sinusoid" \
        else InputSignal.zero(M.m)
    x0 = None
    if basis is not None and basis.n0 > 0:
        x0 = basis.X0 @ np.ones(basis.n0)
    tr = simulate(M, u, x0, t_f, dt)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    header = "t," + ",".join(f"y{j + 1}" for j in range(tr.y.shape[1]))
    np.savetxt(args.out, np.column_stack([tr.t, tr.y]), delimiter=",",
               header=header, comments="")
    print(f"simulated to t={t_f:.3g} (dt={dt:.3g}); "
          f"L2={l2_norm(tr):.6g} Linf={linf_norm(tr):.6g}; wrote {args.out}")
    return 0


def cmd_report(args):
    cfg = ExperimentConfig.from_json(args.config)
    if args.out:
        cfg.out = args.out
    if args.parallel:
        cfg.parallel = True
    rep = run_experiment(cfg)
    files = emit_report(rep, cfg.out)
    print(f"wrote {len(files)} files to {cfg.out}")
    for method, res in rep.report["methods"].items():
        rel = res.get("rel_l2")
        rel_s = f"{rel:.3e}" if rel is not None else "n/a"
        print(f"  {method}: orders={res['orders']} rel_l2={rel_s} "
              f"bound={res['bound']:.3e} ok={res['bound_ok']}")
    return 0 if rep.bound_ok else 2


def build_parser():
    ap = argparse.ArgumentParser(
        prog="icmor",
        description="Model reduction for LTI systems with nonzero initial conditions",
    )
    sub = ap.add_subparsers(dest="verb", required=True)

    b = sub.add_parser("bench", help="generate a benchmark model")
    bsub = b.add_subparsers(dest="bench_kind", required=True)
    msd = bsub.add_parser("msd", help="coupled mass-spring-damper chain")
    msd.add_argument("--n-masses", type=int, default=150)
    msd.add_argument("--m-inputs", type=int, default=10)
    msd.add_argument("--mass", type=float, default=1.0)
    msd.add_argument("--stiffness", type=float, default=2.0)
    msd.add_argument("--damping", type=float, default=0.1)
    msd.add_argument("--x0-indices", type=int, nargs="*", default=None)
    msd.add_argument("--out", required=True)
    msd.set_defaults(func=cmd_bench)

    r = sub.add_parser("reduce", help="offline phase: reduce a model")
    r.add_argument("--model", required=True,
                   help="model directory with A.mtx/B.mtx/C.mtx, or builtin:msd")
    r.add_argument("--method", choices=["augbt", "bt-bt", "bt-irka"], default="bt-bt")
    r.add_argument("--tol", type=float, default=1e-2)
    r.add_argument("--order-u", type=int, default=None)
    r.add_argument("--order-x0", type=int, default=None)
    r.add_argument("--x0-indices", type=int, nargs="*", default=None)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reduce)

    s = sub.add_parser("simulate", help="simulate a full model")
    s.add_argument("--model", required=True)
    s.add_argument("--x0-indices", type=int, nargs="*", default=None)
    s.add_argument("--input", choices=["decaying_pulses", "decaying_sinusoid", "zero"],
                   default="decaying_pulses")
    s.add_argument("--tf", type=float, default=None)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    rp = sub.add_parser("report", help="full experiment from a JSON config")
    rp.add_argument("--config", required=True)
    rp.add_argument("--out", default=None, help="override config output directory")
    rp.add_argument("--parallel", action="store_true",
                    help="run method pipelines concurrently")
    rp.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except IcmorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
