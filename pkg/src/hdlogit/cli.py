"""Command-line interface.

Subcommands: solve, boundary, fit, adjust, probe, simulate, amp-check.
Every run produces a machine-readable JSON result (stdout, or --out
FILE) plus a short human summary (stderr, or stdout when --out is
given).  Exit codes: 0 ok, 2 outside the existence region, 3
non-convergence, 4 perfect separation, 5 probe failure, 64 usage or
parse errors.  HDLOGIT_SEED is honored wherever --seed is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .amp import amp_run, simulation_init, trajectory_to_csv
from .boundary import g_mle_inverse
from .errors import (
    DataFormatError,
    FrontierNotReachedError,
    NonConvergenceError,
    OutsideExistenceRegionError,
    SeparatedDataError,
)
from .glm import Dataset, fit_mle, load_binary, load_csv
from .inference import adjust
from .probe_frontier import estimate_gamma
from .simulate import ExperimentConfig, run_experiment
from .state_evolution import solve_system

EXIT_OK = 0
EXIT_REGION = 2
EXIT_NONCONVERGENCE = 3
EXIT_SEPARATED = 4
EXIT_PROBE = 5
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    # usage problems exit 64, not argparse's default 2 (reserved for the region error)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed_from(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HDLOGIT_SEED")
    return int(env) if env else None


def _emit(result: dict, summary: str, args) -> None:
    payload = json.dumps(result, indent=2, sort_keys=True, default=float) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(payload)
        print(summary)
    else:
        sys.stdout.write(payload)
        print(summary, file=sys.stderr)


def _load_dataset(path: str) -> Dataset:
    if path.endswith((".bin", ".hdlr")):
        return load_binary(path)
    return load_csv(path)


def _triple_dict(t) -> dict:
    return {"alpha_star": t.alpha_star, "sigma_star": t.sigma_star,
            "lambda_star": t.lambda_star, "kappa": t.kappa, "gamma": t.gamma,
            "lrt_factor": t.lrt_factor, "residual_norm": t.residual_norm,
            "iterations": t.iterations}


# -- subcommands -------------------------------------------------------------


def _cmd_solve(args) -> int:
    triple = solve_system(args.kappa, args.gamma, quad_order=args.quad_order,
                          check_existence=not args.no_existence_check)
    _emit(_triple_dict(triple),
          f"alpha*={triple.alpha_star:.4g}  sigma*={triple.sigma_star:.4g}  "
          f"lambda*={triple.lambda_star:.4g}  lrt_factor={triple.lrt_factor:.4g}",
          args)
    return EXIT_OK


def _cmd_boundary(args) -> int:
    if args.gammas:
        gammas = [float(g) for g in args.gammas.split(",")]
    else:
        gammas = list(np.linspace(args.gamma_min, args.gamma_max, args.steps))
    rows = [g_mle_inverse(g) for g in gammas]
    lines = ["gamma,kappa_boundary,t_argmin"]
    lines += [f"{r.gamma:.17g},{r.kappa_boundary:.17g},{r.t_argmin:.17g}" for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} boundary points to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_fit(args) -> int:
    data = _load_dataset(args.data)
    fit = fit_mle(data, check_separation=args.check_separation)
    if fit.separated:
        print("data is perfectly separated; the MLE does not exist", file=sys.stderr)
        return EXIT_SEPARATED
    if not fit.converged:
        print(f"Newton did not converge (grad norm {fit.grad_norm:.4g})", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    result = {"beta_hat": fit.beta_hat.tolist(), "converged": fit.converged,
              "separated": fit.separated, "neg_log_likelihood": fit.neg_log_likelihood,
              "iterations": fit.iterations, "grad_norm": fit.grad_norm,
              "n": data.n, "p": data.p}
    _emit(result, f"fit converged in {fit.iterations} iterations, "
                  f"nll={fit.neg_log_likelihood:.4g}", args)
    return EXIT_OK


def _cmd_adjust(args) -> int:
    data = _load_dataset(args.data)
    fit = fit_mle(data, check_separation=True)
    if fit.separated:
        print("data is perfectly separated; the MLE does not exist", file=sys.stderr)
        return EXIT_SEPARATED
    if not fit.converged:
        print(f"Newton did not converge (grad norm {fit.grad_norm:.4g})", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    if args.gamma is not None:
        gamma = args.gamma
        provenance = "known-gamma"
        probe_info = None
    else:
        probe = estimate_gamma(data, B=args.B, grid_step=args.grid_step,
                               mode=args.probe_mode, seed=_seed_from(args),
                               workers=args.workers)
        gamma = probe.gamma_hat
        provenance = "probe-frontier"
        probe_info = {"kappa_hat": probe.kappa_hat, "gamma_hat": probe.gamma_hat,
                      "B": probe.B, "seed": probe.seed}
    triple = solve_system(data.p / data.n, gamma,
                          check_existence=not args.no_existence_check)
    test = None if args.test == "none" else (
        "all" if args.test == "all" else [int(s) for s in args.test.split(",")])
    inf = adjust(data, fit, triple, test=test, column_variance=args.v_mode,
                 provenance=provenance)
    report = inf.to_report()
    if probe_info:
        report["probe"] = probe_info
    _emit(report, f"gamma={gamma:.4g} ({provenance})  alpha*={triple.alpha_star:.4g}  "
                  f"sigma*={triple.sigma_star:.4g}  lrt_factor={triple.lrt_factor:.4g}",
          args)
    return EXIT_OK


def _cmd_probe(args) -> int:
    data = _load_dataset(args.data)
    res = estimate_gamma(data, B=args.B, grid_step=args.grid_step,
                         threshold=args.threshold, mode=args.probe_mode,
                         seed=_seed_from(args), workers=args.workers)
    if args.curve_out:
        lines = ["kappa,pi_hat"]
        lines += [f"{k:.17g},{p:.17g}" for k, p in zip(res.kappa_grid, res.pi_hat)]
        with open(args.curve_out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    _emit({"kappa_hat": res.kappa_hat, "gamma_hat": res.gamma_hat,
           "B": res.B, "seed": res.seed,
           "curve": {"kappa": res.kappa_grid.tolist(), "pi_hat": res.pi_hat.tolist()}},
          f"kappa_hat={res.kappa_hat:.4g}  gamma_hat={res.gamma_hat:.4g}", args)
    return EXIT_OK


def _load_config(path: str) -> dict:
    if path.endswith(".toml"):
        try:
            import tomllib
        except ImportError as exc:
            raise DataFormatError(
                "TOML configs need Python >= 3.11 (stdlib tomllib); use JSON") from exc
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"could not parse {path}: {exc}") from exc


def _cmd_simulate(args) -> int:
    raw = _load_config(args.config)
    checks = raw.pop("checks", [])
    if args.workers is not None:
        raw["workers"] = args.workers
    if args.outputs:
        raw["outputs"] = args.outputs
    cfg = ExperimentConfig(**raw)
    result = run_experiment(cfg)
    failures = []
    for chk in checks:
        value = result.summary.get(chk["metric"])
        ok = value is not None and abs(value - chk["target"]) <= chk["tol"]
        if not ok:
            failures.append(f"{chk['metric']}: got {value}, "
                            f"want {chk['target']} +/- {chk['tol']}")
    payload = {"summary": result.summary, "config_hash": cfg.config_hash(),
               "checks_failed": failures}
    _emit(payload, f"{cfg.replicates} replicates done; "
                   f"{len(failures)} of {len(checks)} checks failed", args)
    if args.check and failures:
        for f in failures:
            print(f"CHECK FAILED: {f}", file=sys.stderr)
        return 1
    return EXIT_OK


def _cmd_amp_check(args) -> int:
    from .simulate import gen_beta, gen_gaussian_design, gen_response
    seed = _seed_from(args) or 0
    triple = solve_system(args.p / args.n, args.gamma)
    rows = []
    for k in range(args.instances):
        rng = np.random.default_rng(np.random.SeedSequence((seed, k)))
        beta = gen_beta({"kind": "half_const", "value": 1.0}, args.p, args.gamma,
                        1.0 / args.n, rng)
        X = gen_gaussian_design(args.n, args.p, rng)
        y = gen_response(X, beta, rng)
        data = Dataset(X=X, y=y)
        fit = fit_mle(data, tol=1e-12, max_iter=200)
        traj = amp_run(data, triple, simulation_init(beta, triple, rng), args.T,
                       reference=fit.beta_hat)
        rows.append({"instance": k,
                     "dist_to_newton": float(traj.dist_to_ref[-1]),
                     "grad_norm": float(traj.grad_norms[-1]),
                     "iterations": traj.iterations,
                     "converged": traj.converged})
        if k == 0 and args.trajectory_out:
            trajectory_to_csv(traj, args.trajectory_out)
    worst = max(r["dist_to_newton"] for r in rows)
    _emit({"instances": rows, "max_dist_to_newton": worst,
           "triple": _triple_dict(triple)},
          f"{args.instances} instances; max ||beta_AMP - beta_Newton||_inf = {worst:.4g}",
          args)
    return EXIT_OK


# -- wiring ------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="hdlogit",
                description="High-dimensional logistic regression corrections")
    p.add_argument("--version", action="version", version=f"hdlogit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the JSON result to this file")
        sp.add_argument("--seed", type=int, default=None,
                        help="RNG seed (falls back to HDLOGIT_SEED)")
        sp.add_argument("--workers", type=int, default=None,
                        help="process count for parallel stages")

    sp = sub.add_parser("solve", help="solve the asymptotic system at (kappa, gamma)")
    sp.add_argument("--kappa", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--quad-order", type=int, default=48)
    sp.add_argument("--no-existence-check", action="store_true")
    common(sp)
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("boundary", help="trace the MLE existence boundary")
    sp.add_argument("--gammas", help="comma-separated gamma values")
    sp.add_argument("--gamma-min", type=float, default=0.0)
    sp.add_argument("--gamma-max", type=float, default=5.0)
    sp.add_argument("--steps", type=int, default=21)
    sp.add_argument("--out", help="write CSV here instead of stdout")
    sp.set_defaults(func=_cmd_boundary)

    sp = sub.add_parser("fit", help="fit the MLE on a dataset file")
    sp.add_argument("--data", required=True)
    sp.add_argument("--check-separation", action="store_true")
    common(sp)
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("adjust", help="fit plus corrected inference")
    sp.add_argument("--data", required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--gamma", type=float, help="known signal strength")
    g.add_argument("--probe", action="store_true", help="estimate gamma from the data")
    sp.add_argument("--test", default="none", help="'all', 'none', or comma-separated indices")
    sp.add_argument("--v-mode", choices=("sample", "paper"), default="sample")
    sp.add_argument("--B", type=int, default=50)
    sp.add_argument("--grid-step", type=float, default=1e-3)
    sp.add_argument("--probe-mode", choices=("ascend", "coarse", "bisect"), default="ascend")
    sp.add_argument("--no-existence-check", action="store_true")
    common(sp)
    sp.set_defaults(func=_cmd_adjust, workers_default=1)

    sp = sub.add_parser("probe", help="estimate signal strength by frontier probing")
    sp.add_argument("--data", required=True)
    sp.add_argument("--B", type=int, default=50)
    sp.add_argument("--grid-step", type=float, default=1e-3)
    sp.add_argument("--threshold", type=float, default=0.5)
    sp.add_argument("--probe-mode", choices=("ascend", "coarse", "bisect"), default="ascend")
    sp.add_argument("--curve-out", help="write the (kappa, pi_hat) curve CSV here")
    common(sp)
    sp.set_defaults(func=_cmd_probe)

    sp = sub.add_parser("simulate", help="run a Monte Carlo experiment from a config file")
    sp.add_argument("--config", required=True, help="JSON (or TOML on 3.11+) ExperimentConfig")
    sp.add_argument("--check", action="store_true",
                    help="exit nonzero if any configured check misses its tolerance")
    sp.add_argument("--outputs", help="override the output directory")
    common(sp)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("amp-check", help="message-passing vs Newton cross-validation")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--p", type=int, default=100)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--T", type=int, default=200)
    sp.add_argument("--instances", type=int, default=10)
    sp.add_argument("--trajectory-out", help="CSV trajectory of the first instance")
    common(sp)
    sp.set_defaults(func=_cmd_amp_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", None) is None:
        args.workers = os.cpu_count() or 1
    try:
        return args.func(args)
    except OutsideExistenceRegionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REGION
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except SeparatedDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEPARATED
    except FrontierNotReachedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROBE
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
