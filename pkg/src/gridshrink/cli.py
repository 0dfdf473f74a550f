"""Command line: gen, run, verify, bench, trace."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .engine import read_trace
from .errors import ConfigError, GridShrinkError, VerificationFailure
from .grid import dump_shape
from .instances import gen_log_spiral_pair, gen_random_blob, gen_random_tree, gen_spiral_pair, gen_target_pair


def _memory(value):
    """``--strict-memory`` alone means the default budget; ``=bits`` sets it."""
    if value is None:
        return None
    if value == "":
        return 64
    try:
        bits = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad memory budget {value!r}") from None
    if bits < 1:
        raise argparse.ArgumentTypeError("memory budget must be positive")
    return bits


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="seed (default: $GRIDSHRINK_SEED or 0)")
    p.add_argument("--out", default=None, help="output file or directory")


def _parser():
    ap = argparse.ArgumentParser(prog="gridshrink", description="Shape reduction on a simulated grid of anonymous nodes")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance as a shape document")
    g.add_argument("kind", choices=["tree", "blob", "spiral", "log-spiral", "target"])
    g.add_argument("--n", type=int, default=64)
    g.add_argument("--k-max", type=int, default=16)
    g.add_argument("--k", type=int, default=8, help="turning points of a spiral pair")
    g.add_argument("--graph-model", choices=["connectivity", "adjacency"], default=None)
    _common(g)

    r = sub.add_parser("run", help="run an algorithm and write traces and metrics")
    r.add_argument("--algo", choices=harness.ALGORITHMS, required=True)
    r.add_argument("--shape", default=None, help="shape document (otherwise --generator)")
    r.add_argument("--generator", choices=harness.GENERATORS, default="tree")
    r.add_argument("--n", type=int, default=64)
    r.add_argument("--k-max", type=int, default=16)
    r.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    r.add_argument("--strict-memory", nargs="?", const="", default="", type=str, metavar="BITS")
    r.add_argument("--no-strict-memory", action="store_true")
    r.add_argument("--graph-model", choices=["connectivity", "adjacency"], default=None)
    r.add_argument("--c0", type=float, default=1.0, help="preprocessing charge constant")
    _common(r)

    v = sub.add_parser("verify", help="audit the traces written by run")
    v.add_argument("directory")
    v.add_argument("--seed", type=int, default=None)

    b = sub.add_parser("bench", help="size sweep plus bound fit")
    b.add_argument("--algo", choices=harness.ALGORITHMS, default="bfs")
    b.add_argument("--generator", choices=harness.GENERATORS, default=None)
    b.add_argument("--sizes", default="64,128,256,512,1024")
    b.add_argument("--seeds", type=int, default=5)
    b.add_argument("--k-max", type=int, default=32)
    b.add_argument("--model", choices=harness.MODELS, default=None)
    b.add_argument("--strict-memory", nargs="?", const="", default="", type=str, metavar="BITS")
    b.add_argument("--graph-model", choices=["connectivity", "adjacency"], default=None)
    _common(b)

    t = sub.add_parser("trace", help="pretty-print or convert a trace")
    t.add_argument("file")
    t.add_argument("--format", choices=["text", "json", "tsv"], default="text")
    t.add_argument("--ops-only", action="store_true")
    _common(t)
    return ap


def _seed(args):
    return args.seed if args.seed is not None else harness.default_seed()


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_gen(args):
    seed = _seed(args)
    if args.kind == "tree":
        doc = dump_shape(gen_random_tree(args.n, args.k_max, seed))
    elif args.kind == "blob":
        doc = dump_shape(gen_random_blob(args.n, seed))
    elif args.kind == "target":
        pair = gen_target_pair(args.n, args.k_max, seed)
        doc = dump_shape(pair.initial, target_lengths={str(i): v for i, v in enumerate(pair.target_lengths)})
    else:
        pair = gen_spiral_pair(args.k) if args.kind == "spiral" else gen_log_spiral_pair(args.k)
        if pair.t_initial is None:
            raise ConfigError(f"k={args.k} has tables but no embedding")
        doc = {"initial": dump_shape(pair.t_initial), "final": dump_shape(pair.t_final), "tables": pair.sidecar()}
    if args.graph_model is not None and "nodes" in doc:
        doc["graph_model"] = args.graph_model
    _write(json.dumps(doc) + "\n", args.out)
    return 0


def _budget(args):
    if getattr(args, "no_strict_memory", False):
        return False, 64
    return True, _memory(args.strict_memory)


def cmd_run(args):
    seed = _seed(args)
    strict, budget = _budget(args)
    inst = {"file": args.shape} if args.shape else {"generator": args.generator, "n": args.n, "k_max": args.k_max}
    if args.algo == "adjacency" and not args.shape and args.generator == "tree":
        inst["generator"] = "blob"
    if args.algo == "target" and not args.shape:
        inst["generator"] = "target"
    cfg = harness.ExperimentConfig(args.algo, inst, list(range(seed, seed + args.seeds)), strict, budget,
                                   args.c0, args.out, args.graph_model)
    res = harness.run_experiment(cfg)
    print("\t".join(harness.MetricsRow.FIELDS))
    for row in res.rows:
        print("\t".join(str(v) for v in row.as_dict().values()))
    if args.out is not None:
        reports = harness.verify_directory(args.out)
        print(f"verified {len(reports)} run(s)", file=sys.stderr)
    return 0


def cmd_verify(args):
    reports = harness.verify_directory(args.directory, args.seed)
    for r in reports:
        print(json.dumps(r, sort_keys=True))
    return 0


_DEFAULT_GEN = {"bfs": "tree", "incompressible": "tree", "incompressible-known": "tree", "target": "target",
                "adjacency": "blob"}
_DEFAULT_MODEL = {"bfs": "k_logn", "incompressible": "k_logn", "incompressible-known": "logn", "target": "logn_sq",
                  "adjacency": "logn"}


def cmd_bench(args):
    seed = _seed(args)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    gen = args.generator or _DEFAULT_GEN[args.algo]
    model = args.model or _DEFAULT_MODEL[args.algo]
    rows, fit = harness.bench(args.algo, gen, sizes, range(seed, seed + args.seeds), model, args.k_max)
    lines = ["\t".join(harness.MetricsRow.FIELDS)]
    lines += ["\t".join(str(v) for v in r.as_dict().values()) for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.tsv").write_text(text)
        (out / "fit.json").write_text(json.dumps(fit, indent=2, sort_keys=True))
    else:
        sys.stdout.write(text)
    print(json.dumps(fit, sort_keys=True), file=sys.stderr)
    return 0


def cmd_trace(args):
    traces = read_trace(args.file)
    if args.ops_only:
        traces = [t for t in traces if t.ops]
    if args.format == "json":
        text = json.dumps([json.loads(t.to_json()) for t in traces], indent=2) + "\n"
    elif args.format == "tsv":
        lines = ["round\tops\tbeeps\tdigest\tmax_state_bits"]
        lines += [f"{t.round}\t{len(t.ops)}\t{t.beeps}\t{t.digest}\t{t.max_state_bits}" for t in traces]
        text = "\n".join(lines) + "\n"
    else:
        lines = []
        for t in traces:
            if t.ops:
                kinds = {}
                for op in t.ops:
                    kinds[(op["kind"], op["direction"])] = kinds.get((op["kind"], op["direction"]), 0) + 1
                desc = ", ".join(f"{c} {k} {d}" for (k, d), c in sorted(kinds.items()))
            else:
                desc = f"communication ({t.beeps} beeps)"
            lines.append(f"round {t.round:5d}  {t.digest}  {desc}")
        text = "\n".join(lines) + "\n"
    _write(text, args.out)
    return 0


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "verify": cmd_verify, "bench": cmd_bench, "trace": cmd_trace}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GridShrinkError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
