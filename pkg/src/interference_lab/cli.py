"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or computation error.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .designs import DEFAULT_ENUMERATION_CAP, parse_design
from .errors import InterferenceLabError, NotARefinementError, UsageError
from .exposure import make_spec
from .impossibility import general_mixtures, mixture_error_sums, risk_lower_bound, sutva_mixtures, tv_profile
from .lim_test import fraction_moments, fraction_moments_oracle, simulate_g_hat, threshold
from .models import LimModel, load_model
from .network import cycle, dump_network, gen_k_regular, path, read_network
from .refinement import check_refinement
from .risk import CURVE_FIELDS, THREADS_ENV, baseline_tests, consistency_curve

ORACLE_MAX_DEGREE = 16


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def render(rows, fields, meta, fmt):
    """CSV with '#'-prefixed metadata lines, or JSON with the same content."""
    if fmt == "json":
        doc = {
            "meta": {k: _jsonable(v) for k, v in meta.items()},
            "rows": [{f: _jsonable(r[f]) for f in fields} for r in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {_fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in fields])
    return buf.getvalue()


def emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    with open(out, "w") as fh:
        fh.write(text)


def _threads(args):
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
    return args.threads


def _graph(args, required=False):
    if getattr(args, "graph", None):
        return read_network(args.graph)
    if getattr(args, "k", None) is not None and getattr(args, "n", None) is not None:
        if args.graph_seed is None:
            raise UsageError("--graph-seed is required to generate a graph")
        return gen_k_regular(args.n, args.k, args.graph_seed)
    if required:
        raise UsageError("supply --graph FILE or --n/--k/--graph-seed")
    return None


def _float_list(text, name, count=None):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{name} must be comma-separated numbers") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"{name} needs {count} values")
    return vals


# -- subcommands ------------------------------------------------------------


def cmd_gen_graph(args):
    if args.kind == "k-regular":
        if args.k is None or args.seed is None:
            raise UsageError("k-regular graphs need --k and --seed")
        net = gen_k_regular(args.n, args.k, args.seed)
    elif args.kind == "cycle":
        net = cycle(args.n)
    else:
        net = path(args.n)
    header = f"# kind: {args.kind} n: {args.n} k: {args.k} seed: {args.seed}\n"
    emit(header + dump_network(net), args.out)
    print(f"n={net.n} edges={net.num_edges} d_max={net.d_max}", file=sys.stderr)
    return 0


def _mixture_pair(args):
    net = read_network(args.graph) if args.graph else None
    n = args.n if args.n is not None else (net.n if net is not None else None)
    if n is None:
        raise UsageError("supply --n or --graph")
    if net is not None and net.n != n:
        raise UsageError(f"--n {n} disagrees with the graph ({net.n} units)")
    coarse = make_spec(args.null, n=n, network=net)
    fine = make_spec(args.alt, n=n, network=net)
    report = check_refinement(coarse, fine, cap=args.cap)
    if not report.is_refinement:
        w = report.witness
        raise NotARefinementError(
            f"{args.alt} is not a refinement of {args.null}: unit {w.unit} has equal {args.alt} "
            f"exposure at z={''.join(map(str, w.z))} and z'={''.join(map(str, w.z_prime))} "
            f"but different {args.null} exposure",
            w,
        )
    if coarse.name == "no-effect" and fine.name == "own-treatment":
        return sutva_mixtures(n), net
    return general_mixtures(coarse, fine, report), net


def cmd_tv_check(args):
    pair, _ = _mixture_pair(args)
    design = parse_design(args.design)
    Z, probs, tv = tv_profile(pair, design, cap=args.cap)
    bound = risk_lower_bound(pair, design, cap=args.cap)
    rows = [{"z": "".join(map(str, z)), "prob": p, "tv": t} for z, p, t in zip(Z, probs, tv)]
    meta = {
        "command": "tv-check",
        "null": args.null,
        "alt": args.alt,
        "n": pair.n,
        "design": str(design),
        "s_avg": pair.report.s_avg,
        "max_tv": float(tv.max()),
        "risk_bound": bound,
    }
    emit(render(rows, ["z", "prob", "tv"], meta, args.format), args.out)
    print(f"max_tv={float(tv.max())!r} risk_bound={bound!r}", file=sys.stderr)
    return 0


def cmd_risk_bound(args):
    pair, net = _mixture_pair(args)
    design = parse_design(args.design)
    procs = baseline_tests(design, net, seed=args.seed)
    ests = mixture_error_sums(procs, pair, args.reps, args.seed, threads=_threads(args))
    rows = [{"test": p.label, "estimate": e.value, "se": e.se, "reps": e.reps} for p, e in zip(procs, ests)]
    if pair.n <= args.cap:
        rows.insert(0, {"test": "tv-lower-bound", "estimate": risk_lower_bound(pair, design, args.cap),
                        "se": 0.0, "reps": 0})
    meta = {"command": "risk-bound", "null": args.null, "alt": args.alt, "n": pair.n,
            "design": str(design), "reps": args.reps, "seed": args.seed}
    emit(render(rows, ["test", "estimate", "se", "reps"], meta, args.format), args.out)
    return 0


def cmd_lim_run(args):
    net = _graph(args, required=True)
    if args.model:
        with open(args.model) as fh:
            model = load_model(fh.read(), network=net)
        if not isinstance(model, LimModel):
            raise UsageError("lim-run needs a linear-in-means model file")
    else:
        model = LimModel(net, _float_list(args.beta, "--beta", 3))
    tau = threshold(net, args.variant)
    g = simulate_g_hat(net, model, args.reps, args.seed, p=args.p, threads=_threads(args))
    reject = g >= tau
    rows = [{"rep": r, "g_hat": v, "tau": tau, "reject": bool(x)} for r, (v, x) in enumerate(zip(g, reject))]
    rate = float(reject.mean())
    meta = {"command": "lim-run", "n": net.n, "d_max": net.d_max, "p": args.p, "variant": args.variant,
            "reps": args.reps, "seed": args.seed, "mean_g_hat": float(g.mean()),
            "se_g_hat": float(g.std(ddof=1) / np.sqrt(len(g))) if len(g) > 1 else 0.0,
            "rejection_rate": rate}
    if args.truth == "null":
        meta["type1"] = rate
    elif args.truth == "alt":
        meta["type2"] = 1.0 - rate
    emit(render(rows, ["rep", "g_hat", "tau", "reject"], meta, args.format), args.out)
    return 0


def cmd_lim_consistency(args):
    ns = [int(v) for v in _float_list(args.n, "--n")]
    rows = consistency_curve(args.k, ns, args.delta, args.reps, args.seed, p=args.p,
                             variant=args.variant, threads=_threads(args))
    meta = {"command": "lim-consistency", "k": args.k, "p": args.p, "variant": args.variant,
            "reps": args.reps, "seed": args.seed}
    emit(render(rows, CURVE_FIELDS, meta, args.format), args.out)
    return 0


def cmd_moments(args):
    if args.degree < 1:
        raise UsageError("--degree must be at least 1")
    mo = fraction_moments(args.degree, args.p)
    oracle = fraction_moments_oracle(args.degree, args.p) if args.degree <= ORACLE_MAX_DEGREE else None
    rows = []
    for name in ("m1", "m2", "m3", "m4", "var"):
        rows.append({"moment": name, "closed_form": getattr(mo, name),
                     "oracle": getattr(oracle, name) if oracle else "n/a"})
    meta = {"command": "moments", "degree": args.degree, "p": args.p}
    emit(render(rows, ["moment", "closed_form", "oracle"], meta, args.format), None)
    return 0


# -- parser -----------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="interference-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default: all cores; {THREADS_ENV} overrides)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_opts(p, out_required=False):
        p.add_argument("--out", required=out_required, help="output path ('-' for stdout)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("gen-graph", help="write a generated edge list")
    p.add_argument("--kind", choices=["k-regular", "cycle", "path"], default="k-regular")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_graph)

    for name, func, helptext in (
        ("tv-check", cmd_tv_check, "exact TV between mixture marginals at every intervention"),
        ("risk-bound", cmd_risk_bound, "Monte Carlo mixture error sums of baseline tests"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--null", required=True, help="coarse exposure model")
        p.add_argument("--alt", required=True, help="fine exposure model")
        p.add_argument("--n", type=int)
        p.add_argument("--graph")
        p.add_argument("--design", default="bernoulli:0.5")
        p.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP)
        if name == "risk-bound":
            p.add_argument("--reps", type=int, default=10_000)
            p.add_argument("--seed", type=int, required=True)
        out_opts(p)
        p.set_defaults(func=func)

    p = sub.add_parser("lim-run", help="replicate the linear-in-means threshold test")
    p.add_argument("--graph")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--graph-seed", type=int)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--model")
    g.add_argument("--beta", help="b1,b2,b3 applied to every unit")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--variant", choices=["main", "general"], default="main")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--truth", choices=["null", "alt"])
    out_opts(p)
    p.set_defaults(func=cmd_lim_run)

    p = sub.add_parser("lim-consistency", help="error curve over n on k-regular graphs")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n", required=True, help="comma-separated unit counts")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--variant", choices=["main", "general"], default="main")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--seed", type=int, required=True)
    out_opts(p)
    p.set_defaults(func=cmd_lim_consistency)

    p = sub.add_parser("moments", help="neighbor-fraction moments and their enumeration oracle")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        sys.stdout = open(os.devnull, "w")
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InterferenceLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
