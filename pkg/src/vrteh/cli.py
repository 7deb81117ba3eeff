"""Command-line interface: ``vrteh estimate | solve | region | bayes | simulate``.

Every command prints one JSON envelope (``command``, ``toolkit_version``,
``seed``, ``inputs``, ``results``) to stdout, or to ``--output``.  Grids and
sample dumps go to CSV files named by flags.

Exit codes: 0 success, 2 usage, 3 domain error, 4 I/O or malformed file.
``VRTEH_SEED`` sets the default seed for ``bayes`` and ``simulate``.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter

import numpy as np

from . import __version__, bayes, bounds, estimation, fileio, kernels, simulation

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4
SEED_ENV = "VRTEH_SEED"


class UsageError(Exception):
    pass


def _default_seed(fallback: int) -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or not raw.strip():
        return fallback
    try:
        seed = int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None
    if seed < 0:
        raise UsageError(f"{SEED_ENV} must be non-negative")
    return seed


def _envelope(command, inputs, results, seed=None):
    return {
        "command": command,
        "toolkit_version": __version__,
        "seed": seed,
        "inputs": inputs,
        "results": results,
    }


# -- estimate ---------------------------------------------------------------

def cmd_estimate(args):
    summary = [args.sd1, args.n1, args.sd0, args.n0]
    if args.data is not None:
        if any(v is not None for v in summary):
            raise UsageError("--data cannot be combined with --sd1/--n1/--sd0/--n0")
        treat, ctrl = fileio.read_raw_data(args.data)
        t, c = estimation.summarize_arm(treat), estimation.summarize_arm(ctrl)
        inputs = {"data": args.data}
    else:
        if any(v is None for v in summary):
            raise UsageError("give either --data FILE or all of --sd1 --n1 --sd0 --n0")
        t = estimation.ArmSummary(args.n1, args.sd1)
        c = estimation.ArmSummary(args.n0, args.sd0)
        inputs = {}
    est = estimation.estimate(t, c, args.ci_level)
    inputs.update({"n1": t.n, "sd1": t.sd, "n0": c.n, "sd0": c.sd, "ci_level": args.ci_level})
    return _envelope("estimate", inputs, est.as_dict())


# -- solve ------------------------------------------------------------------

def cmd_solve(args):
    bounds.SolveInput(args.nu, args.sigma_tau, 0.0 if args.rho is None else args.rho)
    lo, hi = bounds.universal_bounds(args.nu)
    results = {
        "r": args.nu ** 2 - 1.0,
        "bounds": {
            "teh_ratio_low": lo,
            "teh_ratio_high": hi,
            "sigma_delta_low": lo * args.sigma_tau,
            "sigma_delta_high": hi * args.sigma_tau,
        },
    }
    if args.rho is not None:
        results.update(bounds.solve(args.nu, args.sigma_tau, args.rho).as_dict())
    return _envelope("solve", {"nu": args.nu, "sigma_tau": args.sigma_tau, "rho": args.rho}, results)


# -- region -----------------------------------------------------------------

def _grid(lo, hi, n):
    if n < 2:
        raise UsageError("--points must be at least 2")
    return np.linspace(lo, hi, n)


def cmd_region(args):
    kind = args.kind
    out = args.out or f"region-{kind}.csv"
    n = args.points
    inputs = {"kind": kind, "points": n, "out": out}
    results = {"kind": kind, "file": out}

    if kind == "classify":
        r = _grid(args.r_min, args.r_max, n)
        rho = _grid(-1.0, 1.0, n)
        codes = bounds._classify_arrays(r[:, None], rho[None, :])
        classes = [bounds._CODES[c] for c in codes.ravel()]
        rows = ((float(ri), float(pj), cl.value, cl.n_solutions)
                for (ri, pj), cl in zip(((a, b) for a in r for b in rho), classes))
        header = ("r", "rho", "region", "n_solutions")
        inputs.update({"r_min": args.r_min, "r_max": args.r_max})
        counts = Counter(cl.value for cl in classes)
        results["counts"] = {c.value: counts.get(c.value, 0) for c in bounds.RegionClass}

    elif kind == "nu-curve":
        g = _grid(0.0, args.teh_max, n)
        rhos = args.rho if args.rho else [-1.0, -0.5, 0.0, 0.5, 1.0]
        curves = [(p, bounds.curve_nu_vs_teh(p, g)) for p in rhos]
        rows = ((float(p), float(gi), float(nu)) for p, c in curves for gi, nu in c)
        header = ("rho", "teh_ratio", "nu")
        inputs.update({"rho": rhos, "teh_max": args.teh_max})

    elif kind == "rho-curve":
        nus = args.nu if args.nu else [0.87, 1.0, 1.1]
        rho = _grid(-1.0, 1.0, n)
        curves = [(v, bounds.curve_rho_vs_teh(v, rho)) for v in nus]

        def rho_rows():
            for v, curve in curves:
                for p, sol in curve:
                    vals = sol.values
                    yield (float(v), p, sol.region.value, len(vals),
                           vals[0] if vals else None, vals[-1] if vals else None)

        rows = rho_rows()
        header = ("nu", "rho", "region", "n_solutions", "teh_ratio_low", "teh_ratio_high")
        inputs.update({"nu": nus})

    else:  # band
        rho = _grid(-1.0, 1.0, n)
        g = _grid(0.0, args.teh_max, n)
        grid = bounds.band_region(args.nu_low, args.nu_high, rho, g)
        rows = ((float(rho[i]), float(g[j]), float(grid.nu[i, j]), bool(grid.member[i, j]))
                for i in range(rho.size) for j in range(g.size))
        header = ("rho", "teh_ratio", "nu", "member")
        inputs.update({"nu_low": args.nu_low, "nu_high": args.nu_high, "teh_max": args.teh_max})
        results["members"] = int(grid.member.sum())

    results["columns"] = list(header)
    results["rows"] = fileio.write_csv(out, header, rows)
    return _envelope("region", inputs, results)


# -- bayes ------------------------------------------------------------------

def _parse_prior(spec: str) -> bayes.RhoPrior:
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise UsageError(f"--prior must look like point:V, uniform:A,B or discrete:FILE, got {spec!r}")
    try:
        if kind == "point":
            return bayes.RhoPrior.point(float(rest))
        if kind == "uniform":
            a, b = (float(x) for x in rest.split(","))
            return bayes.RhoPrior.uniform(a, b)
    except ValueError as exc:
        raise UsageError(f"bad --prior {spec!r}: {exc}") from None
    if kind == "discrete":
        return bayes.RhoPrior.discrete(fileio.read_discrete_prior(rest))
    raise UsageError(f"unknown prior kind {kind!r}")


def cmd_bayes(args):
    seed = args.seed if args.seed is not None else _default_seed(0)
    prior = _parse_prior(args.prior)
    try:
        quantiles = [float(q) for q in args.quantiles.split(",")]
    except ValueError:
        raise UsageError(f"bad --quantiles {args.quantiles!r}") from None
    post = bayes.propagate(args.nu, args.sigma_tau, prior, args.samples, seed,
                           args.branch_policy, args.infeasible_policy)
    results = bayes.summarize(post, quantiles)
    if args.dump_samples:
        rows = zip(post.draw.tolist(), post.rho.tolist(), post.branch.tolist(),
                   post.sigma_delta.tolist(), post.weight.tolist())
        fileio.write_csv(args.dump_samples, fileio.SAMPLE_HEADER, rows)
        results["samples_file"] = args.dump_samples
    inputs = {
        "nu": args.nu,
        "sigma_tau": args.sigma_tau,
        "prior": prior.describe(),
        "samples": args.samples,
        "branch_policy": args.branch_policy,
        "infeasible_policy": args.infeasible_policy,
        "quantiles": quantiles,
    }
    return _envelope("bayes", inputs, results, seed)


# -- simulate ---------------------------------------------------------------

def cmd_simulate(args):
    seed = args.seed if args.seed is not None else _default_seed(1)
    cfg = simulation.ToyModelConfig(
        rho=args.rho, mu_tau=args.mu_tau, sigma_tau=args.sigma_tau, mu_delta=args.mu_delta,
        sigma_delta=args.sigma_delta, n_units=args.n, n_treated=args.n_treated, seed=seed,
        sd_delta_denominator_offset=args.sd_delta_ddof,
    )
    agg = simulation.run_simulation(cfg, args.replicates, args.parallelism,
                                    keep_replicates=bool(args.dump_replicates))
    results = agg.as_dict()
    if args.dump_replicates:
        rows = zip(range(agg.replicates), agg.vr.tolist(), agg.sd_delta.tolist())
        fileio.write_csv(args.dump_replicates, fileio.REPLICATE_HEADER, rows)
        results["replicates_file"] = args.dump_replicates
    inputs = {
        "n": cfg.n_units, "n_treated": cfg.n_treated, "replicates": args.replicates,
        "rho": cfg.rho, "mu_tau": cfg.mu_tau, "sigma_tau": cfg.sigma_tau,
        "mu_delta": cfg.mu_delta, "sigma_delta": cfg.sigma_delta,
        "sd_delta_ddof": cfg.sd_delta_denominator_offset,
    }
    # parallelism and backend never change results, so they are not echoed
    return _envelope("simulate", inputs, results, seed)


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vrteh", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"vrteh {__version__} ({kernels.BACKEND})")
    p.add_argument("-o", "--output", help="write the JSON envelope here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="ln VR, SE and confidence interval")
    e.add_argument("--sd1", type=float, help="treated-arm SD")
    e.add_argument("--n1", type=int, help="treated-arm size")
    e.add_argument("--sd0", type=float, help="control-arm SD")
    e.add_argument("--n0", type=int, help="control-arm size")
    e.add_argument("--data", help="CSV with header arm,value")
    e.add_argument("--ci-level", type=float, default=0.95)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("solve", help="sigma_delta compatible with nu (and rho)")
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--sigma-tau", type=float, default=1.0)
    s.add_argument("--rho", type=float)
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("region", help="plot-ready grids and curves as CSV")
    r.add_argument("kind", choices=["classify", "nu-curve", "rho-curve", "band"])
    r.add_argument("--points", type=int, default=201, help="grid points per axis (default 201)")
    r.add_argument("--out", help="CSV path (default region-<kind>.csv)")
    r.add_argument("--r-min", type=float, default=-1.0)
    r.add_argument("--r-max", type=float, default=1.0)
    r.add_argument("--teh-max", type=float, default=3.0, help="upper end of the sigma_delta/sigma_tau axis")
    r.add_argument("--rho", type=float, action="append", help="nu-curve: repeat for several curves")
    r.add_argument("--nu", type=float, action="append", help="rho-curve: repeat for several curves")
    r.add_argument("--nu-low", type=float, default=0.87)
    r.add_argument("--nu-high", type=float, default=1.1)
    r.set_defaults(func=cmd_region)

    b = sub.add_parser("bayes", help="posterior on sigma_delta from a prior on rho")
    b.add_argument("--nu", type=float, required=True)
    b.add_argument("--sigma-tau", type=float, default=1.0)
    b.add_argument("--prior", required=True, help="point:V | uniform:A,B | discrete:FILE (rho,weight)")
    b.add_argument("--samples", type=int, default=100_000)
    b.add_argument("--seed", type=int)
    b.add_argument("--branch-policy", choices=bayes.BRANCH_POLICIES, default="equal_weight")
    b.add_argument("--infeasible-policy", choices=bayes.INFEASIBLE_POLICIES, default="reject")
    b.add_argument("--quantiles", default="0.025,0.5,0.975")
    b.add_argument("--dump-samples", help="CSV path for the weighted samples")
    b.set_defaults(func=cmd_bayes)

    m = sub.add_parser("simulate", help="Monte Carlo of VR under known TEH")
    m.add_argument("--n", type=int, default=10_000, help="units per replicate")
    m.add_argument("--n-treated", type=int, help="treated units (default n // 2)")
    m.add_argument("--replicates", type=int, default=1000)
    m.add_argument("--rho", type=float, default=-0.5)
    m.add_argument("--sigma-tau", type=float, default=1.0)
    m.add_argument("--sigma-delta", type=float, default=1.0)
    m.add_argument("--mu-tau", type=float, default=0.0)
    m.add_argument("--mu-delta", type=float, default=0.0)
    m.add_argument("--sd-delta-ddof", type=int, choices=(0, 1), default=0)
    m.add_argument("--seed", type=int)
    m.add_argument("--parallelism", type=int, default=1)
    m.add_argument("--dump-replicates", help="CSV path with columns replicate,vr,sd_delta")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        envelope = args.func(args)
        text = fileio.dumps_envelope(envelope)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"vrteh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (fileio.DataFileError, OSError) as exc:
        print(f"vrteh: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"vrteh: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
