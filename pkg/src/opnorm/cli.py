"""Command-line front-end.

Subcommands: certify, oracle, project, translate, bench. Exit codes:
0 success (certify: certificate verified), 2 I/O or parse error,
3 precondition violation or unverified certificate, 4 no projection
within the reconstruction budget.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio, plotting
from .certify import (
    VERIFIED,
    CertifyParams,
    certify_sdp,
    infty_to_2_certificate,
    is_projection_matrix,
)
from .exceptions import NoFeasibleProjectionError, PreconditionError
from .linalg import is_symmetric, require_nonneg_diagonal, require_symmetric, symmetrize
from .oracle import brute_force_qp
from .projection import (
    DataMatrix,
    default_r_grid,
    make_planted_instance,
    robust_projection,
)
from .smoothing import accuracy_curve_translate

EXIT_OK = 0
EXIT_IO = 2
EXIT_PRECONDITION = 3
EXIT_INFEASIBLE = 4


def _add_certify_flags(p: argparse.ArgumentParser, default_delta: float = 0.1,
                       practical_default: bool = False) -> None:
    p.add_argument("--delta", type=float, default=default_delta,
                   help=f"slack parameter in (0, 1/2) (default {default_delta})")
    p.add_argument("--rho", type=float, default=None,
                   help="damping; defaults to n/delta")
    p.add_argument("--max-iters", type=int, default=None,
                   help="iteration budget; defaults to min(ceil(n ln n / delta^3), 5000)")
    p.add_argument("--eig-tol", type=float, default=1e-7,
                   help="eigensolver relative tolerance (default 1e-7)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    if practical_default:
        p.add_argument("--no-practical-stop", dest="practical_stop",
                       action="store_false",
                       help="disable the stalled-bound early stop")
        p.set_defaults(practical_stop=True)
    else:
        p.add_argument("--practical-stop", action="store_true",
                       help="also stop when the best bound stalls for 25 iterations")


def _params(args) -> CertifyParams:
    return CertifyParams(
        delta=args.delta, rho=args.rho, max_iters=args.max_iters,
        eig_tol=args.eig_tol, seed=args.seed,
        practical_stop=getattr(args, "practical_stop", False))


def _load_square_matrix(path) -> np.ndarray:
    m = fileio.read_matrix(path)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{path}: expected a square matrix, got shape {m.shape}")
    return m


def _as_exact_symmetric(m: np.ndarray) -> np.ndarray:
    # Tolerate last-ulp asymmetry from hand-written CSVs, nothing more.
    if not np.array_equal(m, m.T):
        if not is_symmetric(m, rtol=1e-12):
            raise PreconditionError("matrix is not symmetric")
        m = symmetrize(m)
    return m


def cmd_certify(args) -> int:
    m = _load_square_matrix(args.matrix)
    params = _params(args)
    start = time.perf_counter()
    if args.mode == "inf1":
        m = _as_exact_symmetric(m)
        require_nonneg_diagonal(m)
        cert, _ = certify_sdp(m, params)
        bound = cert.bound
    else:
        kappa, cert, _, _ = infty_to_2_certificate(m, params)
        bound = kappa
    wall_ms = (time.perf_counter() - start) * 1000.0
    payload = {
        "n": int(m.shape[0]),
        "bound": float(bound),
        "mode": args.mode,
        "y": [float(v) for v in cert.y],
        "iterations_used": int(cert.iterations_used),
        "early_stopped": bool(cert.early_stopped),
        "stop_reason": cert.stop_reason,
        "verified": cert.verified,
        "margin": None if cert.margin is None else float(cert.margin),
        "wall_time_ms": wall_ms,
    }
    if args.out:
        fileio.write_certificate_json(args.out, payload)
    print(f"bound {bound!r}")
    print(f"verified {cert.verified} margin {cert.margin!r}")
    print(f"iterations {cert.iterations_used} early_stopped {cert.early_stopped} "
          f"stop_reason {cert.stop_reason}")
    print(f"wall_ms {wall_ms:.3f}")
    return EXIT_OK if cert.verified == VERIFIED else EXIT_PRECONDITION


def cmd_oracle(args) -> int:
    m = _load_square_matrix(args.matrix)
    if args.mode == "inf1":
        m = _as_exact_symmetric(m)
        sol = brute_force_qp(m)
        value = sol.value
    else:
        qp = m if is_projection_matrix(m) else symmetrize(m.T @ m)
        sol = brute_force_qp(qp)
        value = math.sqrt(sol.value)
    print(f"value {value!r}")
    print("argmax " + ",".join(f"{int(x):+d}" for x in sol.argmax))
    return EXIT_OK


def cmd_project(args) -> int:
    if args.synth == "planted":
        inst = make_planted_instance(n=args.n, k=args.rank, s=args.sparsity_true,
                                     m=args.samples, noise_frac=args.noise,
                                     seed=args.seed)
        data = inst.data
    else:
        if not args.data:
            raise ValueError("either --data or --synth planted is required")
        data = DataMatrix(fileio.read_data_csv(args.data))
        inst = None
    params = _params(args)
    r_grid = ([int(tok) for tok in args.r_grid.split(",")]
              if args.r_grid else default_r_grid(args.rank))
    start = time.perf_counter()
    try:
        proj, kappa = robust_projection(
            data, args.rank, args.budget, r_grid=r_grid,
            certify_params=params, sparsity=args.sparsity, seed=args.seed)
    except NoFeasibleProjectionError as err:
        print(f"error: {err}")
        if err.best_candidate is not None:
            print(f"best infeasible candidate: kappa {err.best_kappa!r} "
                  f"reconstruction_error {err.best_error!r}")
        return EXIT_INFEASIBLE
    wall_ms = (time.perf_counter() - start) * 1000.0

    basis_path = f"{args.out}_basis.csv"
    fileio.write_data_csv(basis_path, proj.basis)
    report = {
        "n": int(proj.n),
        "rank": int(proj.rank),
        "kappa": float(kappa),
        "reconstruction_error": float(proj.reconstruction_error),
        "budget": float(args.budget),
        "r_grid": r_grid,
        "basis_file": basis_path,
        "wall_time_ms": wall_ms,
    }
    if inst is not None:
        planted = sorted(int(i) for sup in inst.supports for i in sup)
        recovered = sorted(int(i) for i in proj.support())
        report["planted_supports"] = planted
        report["recovered_support"] = recovered
        report["supports_recovered"] = set(recovered) == set(planted)
        print(f"supports_recovered {report['supports_recovered']}")
    import json
    with open(f"{args.out}.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"kappa {kappa!r} rank {proj.rank} "
          f"reconstruction_error {proj.reconstruction_error!r}")
    print(f"wrote {basis_path} and {args.out}.json")
    return EXIT_OK


def _epsilon_grid(spec: str | None, records) -> list[float]:
    if spec:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) == 2:
                start, stop = float(parts[0]), float(parts[1])
                step = (stop - start) / 100.0
            else:
                start, stop, step = (float(p) for p in parts)
            if step <= 0:
                raise ValueError("epsilon grid step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(count)]
        return [float(tok) for tok in spec.split(",")]
    rmax = max((rec.l2_radius for rec in records), default=1.0)
    top = rmax * 1.05 if rmax > 0 else 1.0
    return list(np.linspace(0.0, top, 106))


def cmd_translate(args) -> int:
    records = fileio.read_records(args.records)
    if not records:
        print(f"error: {args.records}: no records")
        return EXIT_IO
    if args.kappa is not None:
        kappa = args.kappa
    elif args.cert:
        payload = fileio.read_certificate_json(args.cert)
        if payload["verified"] != VERIFIED:
            print(f"error: certificate {args.cert} is not verified "
                  f"(status {payload['verified']!r}); refusing its bound")
            return EXIT_PRECONDITION
        kappa = (payload["bound"] if payload["mode"] == "inf2"
                 else math.sqrt(payload["bound"]))
    else:
        print("error: provide --kappa or --cert")
        return EXIT_PRECONDITION
    if kappa <= 0:
        print(f"error: kappa must be positive, got {kappa}")
        return EXIT_PRECONDITION
    grid = _epsilon_grid(args.epsilons, records)
    points = accuracy_curve_translate(records, kappa, grid)
    fileio.write_curve(args.out, points)
    wrote = [str(args.out)]
    if args.plot:
        png = str(Path(args.out).with_suffix(".png"))
        plotting.save_accuracy_curve(points, png, kappa=kappa)
        wrote.append(png)
    print(f"kappa {kappa!r} records {len(records)} points {len(points)}")
    print("wrote " + " and ".join(wrote))
    return EXIT_OK


def _parse_grid(spec: str) -> list[int]:
    parts = spec.split(":")
    if len(parts) == 1:
        return [int(parts[0])]
    start, stop = int(parts[0]), int(parts[1])
    step = int(parts[2]) if len(parts) > 2 else 1
    if step <= 0 or stop < start:
        raise ValueError(f"bad grid spec {spec!r}")
    return list(range(start, stop + 1, step))


def _bench_instance(family: str, n: int, rng) -> np.ndarray:
    if family == "psd":
        a = rng.standard_normal((n, n))
        m = a @ a.T
        m = (m + m.T) / 2.0
        return m / np.trace(m)
    r = rng.standard_normal((n, n))
    m = np.triu(r) + np.triu(r, 1).T
    np.fill_diagonal(m, np.abs(np.diag(m)))
    return m


def cmd_bench(args) -> int:
    sizes = _parse_grid(args.grid)
    if args.oracle and max(sizes) > 24:
        raise PreconditionError("--oracle needs every grid size <= 24")
    rows = []
    for n in sizes:
        for trial in range(args.trials):
            rng = np.random.default_rng([args.seed, n, trial])
            m = _bench_instance(args.family, n, rng)
            params = CertifyParams(
                delta=args.delta, rho=args.rho, max_iters=args.max_iters,
                eig_tol=args.eig_tol, seed=args.seed,
                practical_stop=args.practical_stop)
            start = time.perf_counter()
            cert, primal = certify_sdp(m, params)
            wall_ms = (time.perf_counter() - start) * 1000.0
            feasible_value = primal.value / max(1.0, float(primal.diag.max()))
            gap = max(cert.bound - feasible_value, 0.0) / abs(cert.bound) \
                if cert.bound else 0.0
            row = {
                "n": n, "trial": trial, "wall_ms": wall_ms,
                "bound": cert.bound, "iterations": cert.iterations_used,
                "stop_reason": cert.stop_reason or "budget_exhausted",
                "gap": gap,
            }
            if args.oracle:
                sol = brute_force_qp(m)
                row["oracle_value"] = sol.value
                row["ratio"] = cert.bound / sol.value if sol.value else math.inf
            rows.append(row)
        done = [r["wall_ms"] for r in rows if r["n"] == n]
        print(f"n {n}: mean_wall_ms {sum(done) / len(done):.1f} over "
              f"{len(done)} trials")
    header = ["n", "trial", "wall_ms", "bound", "iterations", "stop_reason", "gap"]
    if args.oracle:
        header += ["oracle_value", "ratio"]
    with open(args.out, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(row[k]) for k in header) + "\n")
    wrote = [str(args.out)]
    if args.plot:
        png = str(Path(args.out).with_suffix(".png"))
        plotting.save_bench_scaling(rows, png)
        wrote.append(png)
    print("wrote " + " and ".join(wrote))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opnorm",
        description="Certified operator-norm bounds, robust projections, and "
                    "l2 -> linf robustness translation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="certify an inf->1 / inf->2 norm bound")
    p.add_argument("matrix", help="matrix file (.mtx or .csv)")
    p.add_argument("--mode", choices=("inf1", "inf2"), default="inf1")
    p.add_argument("--out", default=None, help="write certificate JSON here")
    _add_certify_flags(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("oracle", help="exact brute-force value (n <= 24)")
    p.add_argument("matrix", help="matrix file (.mtx or .csv)")
    p.add_argument("--mode", choices=("inf1", "inf2"), default="inf1")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("project", help="search for a robust low-rank projection")
    p.add_argument("--data", default=None, help="data CSV (header 'm,n')")
    p.add_argument("--synth", choices=("planted",), default=None,
                   help="generate a synthetic instance instead of reading --data")
    p.add_argument("--n", type=int, default=50, help="features for --synth")
    p.add_argument("--samples", type=int, default=400, help="samples for --synth")
    p.add_argument("--noise", type=float, default=0.01,
                   help="Gram-relative noise for --synth (default 0.01)")
    p.add_argument("--sparsity-true", type=int, default=5,
                   help="planted component sparsity for --synth")
    p.add_argument("--rank", type=int, required=True, help="target rank k")
    p.add_argument("--budget", type=float, default=0.05,
                   help="reconstruction-error budget (default 0.05)")
    p.add_argument("--r-grid", default=None,
                   help="comma list of PCA ranks r <= k to try")
    p.add_argument("--sparsity", type=int, default=None,
                   help="sparse-PCA sparsity s (default ceil(2n/k))")
    p.add_argument("--out", default="projection",
                   help="output prefix (default 'projection')")
    _add_certify_flags(p, default_delta=0.25)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("translate",
                       help="translate an l2 record file into a certified "
                            "linf accuracy curve")
    p.add_argument("--records", required=True, help="records CSV (correct,radius)")
    p.add_argument("--kappa", type=float, default=None,
                   help="certified inf->2 bound")
    p.add_argument("--cert", default=None,
                   help="certificate JSON to take the bound from")
    p.add_argument("--epsilons", default=None,
                   help="epsilon grid: 'start:stop[:step]' or comma list "
                        "(default: 106 points up to the max radius)")
    p.add_argument("--out", default="curve.csv", help="curve CSV path")
    p.add_argument("--no-plot", dest="plot", action="store_false",
                   help="skip the PNG next to the CSV")
    p.set_defaults(plot=True, func=cmd_translate)

    p = sub.add_parser("bench", help="run the scaling benchmark harness")
    p.add_argument("--family", choices=("psd", "qp"), default="psd")
    p.add_argument("--grid", default="500:4500:250",
                   help="sizes start:end[:step] (default 500:4500:250)")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--oracle", action="store_true",
                   help="also run the brute-force oracle (all sizes <= 24)")
    p.add_argument("--out", default="bench.csv", help="results CSV path")
    p.add_argument("--no-plot", dest="plot", action="store_false",
                   help="skip the PNG next to the CSV")
    _add_certify_flags(p, practical_default=True)
    p.set_defaults(plot=True, func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NoFeasibleProjectionError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
