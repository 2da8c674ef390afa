"""Command-line front end.

Every command writes its tables plus ``manifest.json`` into ``--out``.  The
manifest echoes the resolved configuration, the tool version, the child seed
spawn keys and a checksum per output file.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import codes, confinement, dynamics, graphs, io, thermo
from .codes import GallagerParams, InvalidParameters
from .gf2 import NoSolution

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVARIANT = 3
EXIT_MISSING = 4
EXIT_BUDGET = 5
EXIT_GRID = 6
EXIT_BUNDLE = 7
EXIT_PARAMS = 8


class InvariantViolation(RuntimeError):
    pass


class GridError(ValueError):
    pass


# ---------------------------------------------------------------------------
# helpers


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("TQSG_THREADS")
    return max(1, int(env)) if env else 1


def _children(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def _rng(ss: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(ss))


def _grid(lo: float, hi: float, step: float | None = None, points: int | None = None) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise GridError(f"bad grid [{lo}, {hi}]")
    if step is not None:
        if step <= 0:
            raise GridError("grid step must be positive")
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 12) for i in range(count)]
    points = points or 10
    if points < 1:
        raise GridError("need at least one grid point")
    return np.linspace(lo, hi, points).tolist()


def _floats(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise GridError(str(exc)) from None
    if not vals:
        raise GridError("empty list")
    return vals


def _load_css(path) -> codes.CssCode:
    b = io.read_bundle(path)
    if b.kind == "classical":
        raise io.BundleError(f"{path} holds a classical code; this command needs a CSS bundle")
    return b.css()


class Run:
    """Output folder bookkeeping for one command invocation."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self.seeds: list[dict] = []
        self.extra: dict = {}

    def table(self, name: str, rows, columns) -> Path:
        p = io.write_table(list(rows), columns, self.out / name, self.args.format)
        self.files.append(p)
        return p

    def json(self, name: str, obj) -> Path:
        p = self.out / f"{name}.json"
        io.dump_json(obj, p)
        self.files.append(p)
        return p

    def spawn(self, count: int) -> list[np.random.SeedSequence]:
        kids = _children(self.args.seed, count)
        self.seeds = [{"spawn_key": list(k.spawn_key), "entropy": self.args.seed} for k in kids]
        return kids

    def finish(self):
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "tool": "tqsg",
            "version": io.TOOL_VERSION,
            "command": self.command,
            "config": config,
            "seed_splitter": "numpy SeedSequence.spawn",
            "child_seeds": self.seeds,
            "outputs": {p.name: io.sha256(p) for p in self.files},
        }
        manifest.update(self.extra)
        io.dump_json(manifest, self.out / "manifest.json")


# ---------------------------------------------------------------------------
# commands


def cmd_construct(args) -> int:
    run = Run(args, "construct")
    if args.gallager:
        n, wb, wc = args.gallager
        params = GallagerParams(n, wb, wc, args.seed)
        c = codes.sample_gallager(params)
        kdes = None
        try:
            kdes = codes.k_des(n, wb, wc)
        except InvalidParameters:
            pass
        summary = {"n": c.n, "m": c.m, "rank": c.rank, "k": c.k, "k_des": kdes, "seed": args.seed,
                   "wbit": wb, "wcheck": wc}
    elif args.repetition:
        c = codes.repetition_code(args.repetition, cyclic=args.cyclic)
        summary = {"n": c.n, "m": c.m, "rank": c.rank, "k": c.k}
    elif args.hamming:
        c = codes.hamming_code(args.hamming)
        summary = {"n": c.n, "m": c.m, "rank": c.rank, "k": c.k}
    else:
        raise InvalidParameters("choose one of --gallager, --repetition, --hamming")
    if args.prune:
        c = codes.remove_redundant_rows(c)
        summary.update(pruned_m=c.m)
    if args.hgp == "self":
        q = codes.hypergraph_product(c, c)
        rep = codes.validate_css(q)
        if not rep.ok:
            raise InvariantViolation(f"hx hz^T != 0 at {rep.offending[:5]}")
        path = io.write_css_bundle(q, run.out / "code.bundle", seed=c.seed, wbit=c.w_bit, wcheck=c.w_check,
                                   logicals=not args.no_logicals)
        summary.update(N=q.n, K=q.k, rank_x=rep.rank_x, rank_z=rep.rank_z, redundancy_free=rep.redundancy_free)
    else:
        path = io.write_classical_bundle(c, run.out / "code.bundle")
    run.files.append(path)
    run.json("summary", summary)
    run.finish()
    print(" ".join(f"{k}={io.fmt(v)}" for k, v in summary.items()))
    return EXIT_OK


def cmd_validate(args) -> int:
    run = Run(args, "validate")
    c = _load_css(args.code)
    rep = codes.validate_css(c)
    d = rep.as_dict()
    d["k_declared"] = io.read_bundle(args.code).header.get("k")
    run.json("validation", d)
    run.finish()
    print(f"commutes={rep.commutes} n={rep.n} k={rep.k} redundancy_free={rep.redundancy_free}")
    if not rep.ok or (d["k_declared"] is not None and d["k_declared"] != rep.k):
        raise InvariantViolation("CSS validation failed")
    return EXIT_OK


def cmd_confine(args) -> int:
    run = Run(args, "confine")
    c = _load_css(args.code)
    (ss,) = run.spawn(1)
    rep = confinement.confinement_scan(c, args.side, args.cap, args.mode, gamma=args.gamma,
                                       samples=args.samples, rng=_rng(ss), seed=args.seed,
                                       budget=args.budget)
    rows = rep.records()
    for r in rows:
        r["witness_indices"] = " ".join(map(str, r["witness_indices"]))
    run.table("confinement", rows, ["reduced_weight", "min_ratio", "min_ratio_exact", "witness_indices",
                                    "mode", "side", "seed"])
    run.extra["reduced_exact"] = rep.reduced_exact
    run.finish()
    for r in rows:
        print(f"w={r['reduced_weight']} gamma_hat={r['min_ratio_exact']}")
    if rep.violations:
        raise InvariantViolation(f"{len(rep.violations)} errors violate gamma={args.gamma}")
    return EXIT_OK


def cmd_percolate(args) -> int:
    run = Run(args, "percolate")
    if args.code:
        c = _load_css(args.code)
        g = graphs.build_graphs(c)[args.graph_kind]
    else:
        g = graphs.random_regular_graph(args.degree, args.vertices, args.seed)
    (ss,) = run.spawn(1)
    pp = graphs.PercolationParams(args.p, Fraction(args.alpha), args.trials, list(range(1, args.tmax + 1)),
                                  w=max(3, g.max_degree))
    tab = graphs.percolation_experiment(g, pp, _rng(ss), seed=args.seed)
    run.table("tail", tab.rows(), ["t", "empirical_tail", "theory_bound", "trials", "p", "alpha", "seed"])
    run.extra.update(q=tab.q, bound_applicable=tab.bound_applicable, exact_trials=tab.exact_trials)
    run.finish()
    print(f"q={io.fmt(tab.q)} bound_applicable={tab.bound_applicable} violations={tab.violations()}")
    if tab.violations():
        raise InvariantViolation(f"empirical tail above bound at t={tab.violations()}")
    return EXIT_OK


def cmd_thermo(args) -> int:
    run = Run(args, "thermo")
    T = _grid(args.tmin, args.tmax, args.tstep if args.tstep or args.points else 0.05, args.points)
    rows = []
    for t in T:
        beta = math.inf if t == 0 else 1.0 / t
        if args.curve == "f":
            v = thermo.f_of_T(t, args.r, args.gamma)
        elif args.curve == "sconf":
            v = thermo.sconf_lower_bound(beta, args.r, args.gamma, args.n) / args.n
        elif args.curve == "epsilon":
            v = thermo.mean_energy_density(beta, args.r)
        else:
            raise GridError(f"unknown curve {args.curve}")
        rows.append({"quantity": args.curve, "T": t, "value": float(v), "r": args.r, "gamma": args.gamma,
                     "n": args.n, "log_base": thermo.LOG_BASE})
    run.table("curve", rows, ["quantity", "T", "value", "r", "gamma", "n", "log_base"])
    run.finish()
    for r in rows:
        print(f"T={io.fmt(r['T'])} {args.curve}={io.fmt(r['value'])}")
    return EXIT_OK


def cmd_sample(args) -> int:
    run = Run(args, "sample")
    c = _load_css(args.code)
    if not c.redundancy_free:
        raise InvariantViolation("exact sampling needs a redundancy-free code")
    betas = _floats(args.beta)
    kids = run.spawn(len(betas))
    sampler = dynamics.ExactSampler(c)
    rows, tails = [], []
    bad = False
    for beta, ss in zip(betas, kids):
        e = sampler.energies(beta, args.samples, _rng(ss))
        p = thermo.ThermoParams(beta=beta, n=c.n, m=c.m, k=c.k)
        rep = thermo.energy_concentration_check(p, e)
        mean_th = c.n * float(thermo.mean_energy_density(beta, c.k / c.n))
        pv = float(thermo.violation_probability(beta))
        sigma = math.sqrt(c.m * pv * (1 - pv) / args.samples)
        z = (e.mean() - mean_th) / sigma if sigma > 0 else 0.0
        bad |= abs(z) > 3 or rep.significant_violations() > 0
        rows.append({"beta": beta, "samples": args.samples, "mean_energy": float(e.mean()),
                     "theory_mean": mean_th, "sigma": sigma, "z": z, "hoeffding_violations": rep.violations,
                     "hoeffding_significant": rep.significant_violations(),
                     "energy_density": float(e.mean()) / c.n,
                     "theory_density": float(thermo.mean_energy_density(beta, c.k / c.n))})
        tails += [dict(r, beta=beta) for r in rep.rows()]
    run.table("sample", rows, list(rows[0]))
    run.table("tails", tails, ["beta", "t", "empirical", "bound"])
    run.finish()
    for r in rows:
        print(f"beta={io.fmt(r['beta'])} mean={io.fmt(r['mean_energy'])} theory={io.fmt(r['theory_mean'])} "
              f"z={r['z']:.3f} hoeffding_violations={r['hoeffding_violations']} "
              f"significant={r['hoeffding_significant']}")
    if bad:
        raise InvariantViolation("sampled energies disagree with the closed form")
    return EXIT_OK


def _protocol_job(job):
    path, mode, grid, sweeps, measure, seed, ss = job
    c = _load_css(path)
    s = dynamics.Schedule(mode, grid, sweeps, measure, seed)
    tr = dynamics.run_protocol(c, s, rng=_rng(ss))
    return mode, seed, tr.records


def cmd_protocol(args) -> int:
    run = Run(args, "protocol")
    c = _load_css(args.code)
    if args.grid:
        grid = sorted(_floats(args.grid))
    else:
        grid = _grid(args.tmin, args.tmax, args.tstep, args.points)
    if any(t <= 0 for t in grid):
        raise GridError("temperatures must be positive")
    modes = ["heating", "annealing"] if args.mode == "both" else [args.mode]
    kids = run.spawn(len(modes) * args.seeds)
    jobs = []
    for i, mode in enumerate(modes):
        g = grid if mode == "heating" else grid[::-1]
        for j in range(args.seeds):
            jobs.append((args.code, mode, g, args.sweeps, args.measure, j, kids[i * args.seeds + j]))
    threads = _threads(args)
    if threads > 1:
        with ProcessPoolExecutor(threads) as pool:
            results = list(pool.map(_protocol_job, jobs))
    else:
        results = [_protocol_job(j) for j in jobs]
    results.sort(key=lambda r: (r[0], r[1]))
    rows = [dict(rec, seed=seed) for _, seed, recs in results for rec in recs]
    run.table("trace", rows, ["step", "T", "beta", "energy_density", "acceptance", "seed", "protocol"])
    r = c.k / c.n
    summary = {"n": c.n, "k": c.k, "r": r, "code_family_note": "hypergraph product used in place of balanced product"}
    branches = {}
    for mode in modes:
        traces = [dynamics.ExperimentTrace([], recs) for m, _, recs in results if m == mode]
        branches[mode] = dynamics.summarize_branch(traces)
    if "heating" in branches:
        summary["T_mem"] = dynamics.detect_T_mem(branches["heating"], r)
    if "annealing" in branches:
        summary["T_G"] = dynamics.detect_T_G(branches["annealing"], r)
    if len(branches) == 2:
        sep, longest = dynamics.hysteresis_separation(branches["heating"], branches["annealing"])
        summary["separation"] = sep
        summary["longest_separated_run"] = longest
    run.json("summary", summary)
    run.finish()
    print(" ".join(f"{k}={io.fmt(summary.get(k))}" for k in ("T_mem", "T_G", "longest_separated_run") if k in summary))
    return EXIT_OK


def _bottleneck_instance(args):
    if args.code:
        b = io.read_bundle(args.code)
        h = b.h if b.kind == "classical" else (b.hz if args.side == "X" else b.hx)
        rw = None
        if b.kind == "css":
            c = b.css()
            rw = confinement.ReducedWeight(c.hx if args.side == "X" else c.hz, "exact")
        return dynamics.BottleneckInstance(h, None, args.delta, rw), h
    h = dynamics.bundled_instance_matrix()
    return dynamics.BottleneckInstance(h, None, args.delta), h


def cmd_bottleneck(args) -> int:
    run = Run(args, "bottleneck")
    betas = _floats(args.beta)
    inst, _ = _bottleneck_instance(args)
    kids = run.spawn(len(betas))
    out = []
    for beta, ss in zip(betas, kids):
        if args.mode == "exact":
            res = inst.exact(beta)
        else:
            res = inst.mc(beta, args.steps, _rng(ss), seed=args.seed)
        rec = res.record()
        rec["log_w_outside"] = res.log_w_outside
        out.append(rec)
    run.json("bottleneck", out)
    run.finish()
    for r in out:
        print(f"beta={io.fmt(r['beta'])} ratio={io.fmt(r['ratio'])} mode={r['mode']}")
    return EXIT_OK


def cmd_barrier(args) -> int:
    run = Run(args, "barrier")
    c = _load_css(args.code)
    kids = run.spawn(2)
    if math.isinf(args.beta):
        x0 = codes.PauliErrorPair.zero(c)
    else:
        x0 = dynamics.ExactSampler(c).sample(args.beta, _rng(kids[0]))
    tab = dynamics.barrier_probe(c, x0, args.growth, args.trials, _rng(kids[1]), side=args.side)
    run.table("barrier_rows", tab.rows, ["trial", "size", "reduced", "dE"])
    run.table("barrier_bins", tab.bins, ["reduced", "min_dE"])
    run.json("barrier_summary", {"min_ratio_slope": tab.min_ratio_slope, "lsq_slope": tab.lsq_slope,
                                 "excluded_negative": tab.excluded_negative, "beta": args.beta,
                                 "x0_energy": x0.energy})
    run.finish()
    print(f"min_ratio_slope={io.fmt(tab.min_ratio_slope)} lsq_slope={io.fmt(tab.lsq_slope)} "
          f"excluded_negative={tab.excluded_negative}")
    return EXIT_OK


def cmd_memory(args) -> int:
    run = Run(args, "memory")
    c = _load_css(args.code)
    betas = _floats(args.beta)
    kids = run.spawn(len(betas) * args.trials)
    sampler = dynamics.ExactSampler(c)
    decoders = (dynamics.Decoder(c.hz), dynamics.Decoder(c.hx))
    rows = []
    for i, beta in enumerate(betas):
        reps = [dynamics.emergent_memory_trial(c, beta, args.sweeps, _rng(kids[i * args.trials + j]), sampler,
                                               decoders, args.delta, check_omega=args.omega)
                for j in range(args.trials)]
        rows.append({"beta": beta, "trials": args.trials, "sweeps": args.sweeps,
                     "retained": float(np.mean([r.retained for r in reps])),
                     "x_frame_retained": float(np.mean([r.frame_x_retained for r in reps])),
                     "z_frame_retained": float(np.mean([r.frame_z_retained for r in reps])),
                     "decoder_failures": int(sum(r.decoder_failed for r in reps)),
                     "inside": (float(np.mean([r.inside for r in reps])) if args.omega else None)})
    run.table("memory", rows, list(rows[0]))
    run.finish()
    for r in rows:
        print(f"beta={io.fmt(r['beta'])} retained={io.fmt(r['retained'])}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, suppress):
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        parser.add_argument("--seed", type=int, default=d(0))
        parser.add_argument("--threads", type=int, default=d(None))
        parser.add_argument("--out", default=d("tqsg-out"))
        parser.add_argument("--format", choices=["csv", "json"], default=d("csv"))

    # global flags are accepted before or after the subcommand; the
    # subcommand copies suppress their defaults so they do not clobber
    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, True)

    p = argparse.ArgumentParser(prog="tqsg", description="CSS code landscape experiments")
    global_flags(p, False)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("construct", parents=[common], help="sample a code and write a bundle")
    s.add_argument("--gallager", nargs=3, type=int, metavar=("N", "WBIT", "WCHECK"))
    s.add_argument("--repetition", type=int)
    s.add_argument("--cyclic", action="store_true")
    s.add_argument("--hamming", type=int)
    s.add_argument("--prune", action="store_true", help="drop dependent checks before the product")
    s.add_argument("--hgp", choices=["self", "none"], default="none")
    s.add_argument("--no-logicals", action="store_true")
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("validate", parents=[common], help="check commutation and ranks")
    s.add_argument("--code", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("confine", parents=[common], help="measure confinement ratios")
    s.add_argument("--code", required=True)
    s.add_argument("--side", choices=["X", "Z"], default="X")
    s.add_argument("--cap", type=int, default=2)
    s.add_argument("--mode", choices=["exact", "sampled"], default="exact")
    s.add_argument("--gamma", type=float)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--budget", type=int, default=confinement.ENUMERATION_BUDGET)
    s.set_defaults(func=cmd_confine)

    s = sub.add_parser("percolate", parents=[common], help="alpha-percolation tail table")
    s.add_argument("--code")
    s.add_argument("--graph-kind", default="qubit_graph_X")
    s.add_argument("--degree", type=int, default=3)
    s.add_argument("--vertices", type=int, default=200)
    s.add_argument("--p", type=float, default=0.02)
    s.add_argument("--alpha", default="1/2")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--tmax", type=int, default=12)
    s.set_defaults(func=cmd_percolate)

    s = sub.add_parser("thermo", parents=[common], help="closed-form curves")
    s.add_argument("--curve", choices=["f", "sconf", "epsilon"], default="f")
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--gamma", type=float, default=3.0)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--tmin", type=float, default=0.05)
    s.add_argument("--tmax", type=float, default=0.5)
    s.add_argument("--tstep", type=float, help="grid step (default 0.05 unless --points is given)")
    s.add_argument("--points", type=int)
    s.set_defaults(func=cmd_thermo)

    s = sub.add_parser("sample", parents=[common], help="exact Gibbs energies")
    s.add_argument("--code", required=True)
    s.add_argument("--beta", default="0.5,1,2")
    s.add_argument("--samples", type=int, default=1000)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("protocol", parents=[common], help="heating and annealing traces")
    s.add_argument("--code", required=True)
    s.add_argument("--mode", choices=["heating", "annealing", "both"], default="both")
    s.add_argument("--grid", help="comma-separated temperatures")
    s.add_argument("--tmin", type=float, default=0.3)
    s.add_argument("--tmax", type=float, default=3.0)
    s.add_argument("--tstep", type=float)
    s.add_argument("--points", type=int, default=10)
    s.add_argument("--sweeps", type=int, default=1000)
    s.add_argument("--measure", type=int, default=100)
    s.add_argument("--seeds", type=int, default=5)
    s.set_defaults(func=cmd_protocol)

    s = sub.add_parser("bottleneck", parents=[common], help="bottleneck ratio")
    s.add_argument("--code", help="bundle; defaults to the shipped 14-bit instance")
    s.add_argument("--side", choices=["X", "Z"], default="X")
    s.add_argument("--delta", type=int, default=8)
    s.add_argument("--beta", default="0.5,1,1.5,2,3")
    s.add_argument("--mode", choices=["exact", "mc"], default="exact")
    s.add_argument("--steps", type=int, default=2_000_000)
    s.set_defaults(func=cmd_bottleneck)

    s = sub.add_parser("barrier", parents=[common], help="energy barriers around a Gibbs sample")
    s.add_argument("--code", required=True)
    s.add_argument("--beta", type=float, default=3.0)
    s.add_argument("--side", choices=["X", "Z"], default="X")
    s.add_argument("--growth", type=int, default=20)
    s.add_argument("--trials", type=int, default=20)
    s.set_defaults(func=cmd_barrier)

    s = sub.add_parser("memory", parents=[common], help="logical frame retention")
    s.add_argument("--code", required=True)
    s.add_argument("--beta", default="0,1,2,4")
    s.add_argument("--sweeps", type=int, default=100)
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--delta", type=int)
    s.add_argument("--omega", action="store_true", help="also classify the final state against Omega")
    s.set_defaults(func=cmd_memory)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (confinement.BudgetExceeded, graphs.BudgetExceeded) as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except GridError as exc:
        print(f"error: invalid grid: {exc}", file=sys.stderr)
        return EXIT_GRID
    except io.BundleError as exc:
        print(f"error: bad bundle: {exc}", file=sys.stderr)
        return EXIT_BUNDLE
    except (InvalidParameters, thermo.UpsilonDomainError) as exc:
        print(f"error: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except (InvariantViolation, NoSolution, thermo.RedundancyError) as exc:
        print(f"error: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    print(f"done in {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
