"""Experiment runner, bound fitting and trace audits."""
from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .algorithms import (
    bfs_shrinking,
    flags_from_marks,
    incompressible_tree,
    materialize_target,
    oracle_flags,
    shape_reduction_adjacency,
    target_tree,
)
from .engine import read_trace, shape_digest, write_trace
from .errors import ConfigError, GridShrinkError, InsufficientData, VerificationFailure
from .grid import (
    GraphModel,
    Shape,
    dump_shape,
    incompressible_form_oracle,
    is_connected,
    load_document,
    same_up_to_translation,
    turning_points,
)
from .instances import gen_random_blob, gen_random_tree, gen_target_pair

ALGORITHMS = ("bfs", "incompressible", "incompressible-known", "target", "adjacency")
GENERATORS = ("tree", "blob", "path", "block", "target")
MODELS = ("k_logn", "logn", "logn_sq", "k_logk")


def default_seed() -> int:
    return int(os.environ.get("GRIDSHRINK_SEED", "0"))


@dataclass
class ExperimentConfig:
    algorithm: str
    instance: dict  # {"file": path} or {"generator": name, ...params}
    seeds: list = field(default_factory=lambda: [default_seed()])
    strict_memory: bool = True
    budget: int = 64
    c0: float = 1.0
    out: str | None = None
    graph_model: str | None = None
    snapshots: bool = True

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not isinstance(self.instance, dict) or not ({"file", "generator"} & set(self.instance)):
            raise ConfigError("instance needs a 'file' or a 'generator'")
        gen = self.instance.get("generator")
        if gen is not None and gen not in GENERATORS:
            raise ConfigError(f"unknown generator {gen!r}")
        if self.graph_model is not None and self.graph_model not in ("connectivity", "adjacency"):
            raise ConfigError(f"unknown graph model {self.graph_model!r}")
        if not self.seeds:
            raise ConfigError("no seeds")
        if self.budget < 1:
            raise ConfigError("memory budget must be positive")
        return self

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        try:
            return cls(**json.loads(text)).validate()
        except (TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class MetricsRow:
    algorithm: str
    n: int
    k: int
    C: int
    R: int
    seed: int
    preprocessing_rounds: int
    main_rounds: int
    op_rounds: int
    peak_state_bits: int
    collisions: int
    wall_time: float

    FIELDS = ("algorithm", "n", "k", "C", "R", "seed", "preprocessing_rounds", "main_rounds", "op_rounds",
              "peak_state_bits", "collisions", "wall_time")

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.FIELDS}


@dataclass
class Instance:
    shape: Shape
    known_marks: list | None = None
    target_lengths: list | None = None


def _load_file(path, graph_model=None) -> Instance:
    try:
        text = Path(path).read_text()
        doc = load_document(text)
    except (OSError, GridShrinkError) as exc:
        raise ConfigError(f"cannot load shape file {path}: {exc}") from exc
    shape = doc.shape
    if graph_model is not None:
        shape.model = GraphModel(graph_model)
    tl = None
    if doc.target_lengths is not None:
        tl = [doc.target_lengths[str(i)] for i in range(len(doc.target_lengths))]
    return Instance(shape, doc.incompressible, tl)


def build_instance(spec: dict, seed: int, graph_model=None) -> Instance:
    if "file" in spec:
        return _load_file(spec["file"], graph_model)
    gen = spec["generator"]
    n = int(spec.get("n", 64))
    if gen == "tree":
        inst = Instance(gen_random_tree(n, int(spec.get("k_max", 32)), seed))
    elif gen == "blob":
        inst = Instance(gen_random_blob(n, seed))
    elif gen == "path":
        inst = Instance(Shape.path([(i, 0) for i in range(n)], anchor=0))
    elif gen == "block":
        w, h = int(spec.get("width", 4)), int(spec.get("height", 4))
        inst = Instance(Shape.from_cells([(x, y) for x in range(w) for y in range(h)], anchor=0))
        inst.shape.model = GraphModel.ADJACENCY
    else:
        pair = gen_target_pair(n, int(spec.get("k_max", 16)), seed)
        inst = Instance(pair.initial, target_lengths=pair.target_lengths)
    if graph_model is not None:
        inst.shape.model = GraphModel(graph_model)
    return inst


def execute(algorithm: str, inst: Instance, seed: int, strict=True, budget=64, c0=1.0, keep_traces=True,
            snapshots=False):
    kw = dict(c0=c0, budget=budget, strict=strict, keep_traces=keep_traces, snapshots=snapshots)
    shape = inst.shape
    if algorithm == "bfs":
        return bfs_shrinking(shape, seed=seed, **kw)
    if algorithm == "incompressible":
        return incompressible_tree(shape, **kw)
    if algorithm == "incompressible-known":
        flags = flags_from_marks(shape, inst.known_marks) if inst.known_marks is not None else oracle_flags(shape)
        return incompressible_tree(shape, known_flags=flags, **kw)
    if algorithm == "target":
        if inst.target_lengths is None:
            raise ConfigError("the target algorithm needs target lengths")
        return target_tree(shape, inst.target_lengths, **kw)
    if algorithm == "adjacency":
        return shape_reduction_adjacency(shape, **kw)
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def _k_of(shape: Shape) -> int:
    return len(turning_points(shape)) if shape.is_tree() else 0


@dataclass
class ExperimentResult:
    rows: list
    runs: list


def run_experiment(config: ExperimentConfig, keep_traces: bool = True) -> ExperimentResult:
    """Run the algorithm once per seed; write traces, snapshots and metrics if ``out`` is set.

    All instances are built before anything is written so a bad input leaves
    no partial output behind.
    """
    config.validate()
    instances = [build_instance(config.instance, s, config.graph_model) for s in config.seeds]
    rows, runs = [], []
    for seed, inst in zip(config.seeds, instances):
        t0 = time.perf_counter()
        run = execute(config.algorithm, inst, seed, config.strict_memory, config.budget, config.c0,
                      keep_traces=keep_traces, snapshots=config.snapshots and config.out is not None)
        wall = time.perf_counter() - t0
        s = inst.shape
        rows.append(MetricsRow(config.algorithm, s.n, _k_of(s), s.columns(), s.rows(), seed,
                               run.preprocessing_rounds, run.main_rounds, run.op_rounds, run.peak_state_bits,
                               run.collisions, round(wall, 4)))
        runs.append((inst, run))
    if config.out is not None:
        write_outputs(config, rows, runs)
    return ExperimentResult(rows, [r for _, r in runs])


def write_outputs(config, rows, runs):
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.tsv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=MetricsRow.FIELDS, delimiter="\t")
        w.writeheader()
        for r in rows:
            w.writerow(r.as_dict())
    summary = {"config": json.loads(config.to_json()), "runs": []}
    for row, (inst, run) in zip(rows, runs):
        tag = f"seed{row.seed}"
        extra = {}
        if inst.target_lengths is not None:
            extra["target_lengths"] = {str(i): v for i, v in enumerate(inst.target_lengths)}
        (out / f"initial-{tag}.json").write_text(json.dumps(_doc_with_ids(inst.shape, **extra)))
        (out / f"final-{tag}.json").write_text(json.dumps(_doc_with_ids(run.final)))
        write_trace(run.traces, out / f"trace-{tag}.jsonl")
        summary["runs"].append({"seed": row.seed, "tag": tag, "metrics": row.as_dict(), "stats": _jsonable(run.stats),
                                "final_digest": shape_digest(run.final)})
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))


def _doc_with_ids(shape: Shape, **extra) -> dict:
    # node ids ride along so verify can follow the per-round snapshots
    return dump_shape(shape, ids=sorted(shape.pos), **extra)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def shape_from_doc(doc: dict) -> Shape:
    """Inverse of the id-carrying dump used for run outputs."""
    base = load_document(doc).shape
    ids = doc.get("ids") or list(range(base.n))
    pos = {ids[i]: base.pos[i] for i in base.pos}
    adj = {ids[i]: {ids[j] for j in base.adj[i]} for i in base.pos}
    anchor = ids[base.anchor] if base.anchor is not None else None
    return Shape(pos, adj, anchor=anchor, model=base.model)


# ---------------------------------------------------------------------------
# Bound fitting


def _predictor(model: str, n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    if model == "k_logn":
        return k * np.log2(n)
    if model == "logn":
        return np.log2(n)
    if model == "logn_sq":
        return np.log2(n) ** 2
    if model == "k_logk":
        return k * np.log2(k)
    raise ValueError(f"unknown model {model!r}")


def _field(r, name):
    return r[name] if isinstance(r, dict) else getattr(r, name)


def fit_bound(rows, model: str, rounds: str = "main_rounds") -> dict:
    """Least-squares fit rounds = a * predictor + b.

    The residual is ||y - fit|| / ||y||.  A fit is flagged when the residual
    reaches 0.25 or the slope is not positive, i.e. the predictor does not
    explain growth.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    rows = list(rows)
    sizes = {_field(r, "n") for r in rows}
    if len(sizes) < 5:
        raise InsufficientData(f"need at least 5 size points, got {len(sizes)}")
    x = _predictor(model, [_field(r, "n") for r in rows], [_field(r, "k") for r in rows])
    y = np.array([_field(r, rounds) for r in rows], dtype=float)
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    norm = float(np.linalg.norm(y))
    residual = float(np.linalg.norm(y - A @ np.array([a, b])) / norm) if norm > 0 else 0.0
    if abs(a) < 1e-9 * max(1.0, abs(b)):
        a = 0.0
    return {"a": float(a), "b": float(b), "residual": residual, "flagged": bool(residual >= 0.25 or a <= 0),
            "model": model, "points": len(rows)}


# ---------------------------------------------------------------------------
# Verification


def _shape_from_snapshot(snap, model) -> Shape:
    pos = {int(u): (int(x), int(y)) for u, x, y in snap["pos"]}
    adj = {u: set() for u in pos}
    for a, b in snap["edges"]:
        adj[a].add(b)
        adj[b].add(a)
    return Shape(pos, adj, model=model)


def verify(traces, initial: Shape, final: Shape, problem: str, reference=None, budget: int = 64) -> dict:
    """Audit a finished run without trusting the simulator's own checks.

    Every op round must carry a snapshot.  Checks: distinct cells, node
    conservation (each shrink removes one node, each grow adds one), actors
    present before their round, edges between adjacent cells only,
    connectivity, digest agreement, the memory budget, and the problem's
    postcondition on the final shape.
    """
    prev = initial
    for t in traces:
        if t.max_state_bits > budget:
            raise VerificationFailure(f"{t.max_state_bits} state bits exceed {budget}", t.round)
        if not t.ops:
            continue
        if t.snapshot is None:
            raise VerificationFailure("operation round without snapshot", t.round)
        cur = _shape_from_snapshot(t.snapshot, prev.model)
        cells = list(cur.pos.values())
        if len(set(cells)) != len(cells):
            raise VerificationFailure("two nodes occupy one cell", t.round)
        grows = sum(op["kind"] == "grow" for op in t.ops)
        shrinks = sum(op["kind"] == "shrink" for op in t.ops)
        if cur.n != prev.n + grows - shrinks:
            raise VerificationFailure("node count not conserved", t.round)
        for op in t.ops:
            if op["node"] not in prev.pos or op["node"] not in cur.pos:
                raise VerificationFailure(f"actor {op['node']} missing around its round", t.round)
        if len({op["direction"] for op in t.ops}) > 1:
            raise VerificationFailure("operations of one round point in different directions", t.round)
        for a, b in cur.edges():
            p, q = cur.pos[a], cur.pos[b]
            if abs(p[0] - q[0]) + abs(p[1] - q[1]) != 1:
                raise VerificationFailure("edge between non-adjacent cells", t.round)
        if not is_connected(cur):
            raise VerificationFailure("shape disconnected", t.round)
        if shape_digest(cur) != t.digest:
            raise VerificationFailure("snapshot does not match the recorded digest", t.round)
        prev = cur
    if not same_up_to_translation(prev, final):
        raise VerificationFailure("final shape differs from the last snapshot", len(traces))
    last = traces[-1].round if traces else 0
    if problem in ("bfs", "adjacency", "single"):
        if final.n != 1:
            raise VerificationFailure(f"final shape has {final.n} nodes", last)
    elif problem in ("incompressible", "incompressible-known"):
        if not same_up_to_translation(final, incompressible_form_oracle(initial)):
            raise VerificationFailure("final shape is not the incompressible form", last)
    elif problem == "target":
        if reference is None:
            raise VerificationFailure("no target lengths to check against", last)
        if not same_up_to_translation(final, materialize_target(initial, reference)):
            raise VerificationFailure("final shape differs from the target", last)
    else:
        raise ConfigError(f"unknown problem {problem!r}")
    return {"problem": problem, "rounds": len(traces), "op_rounds": sum(1 for t in traces if t.ops),
            "final_nodes": final.n, "ok": True}


def verify_directory(out, seed=None) -> list[dict]:
    """Verify every run recorded under ``out`` (or only the given seed)."""
    out = Path(out)
    try:
        summary = json.loads((out / "summary.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"no run summary in {out}: {exc}") from exc
    cfg = summary["config"]
    reports = []
    for entry in summary["runs"]:
        if seed is not None and entry["seed"] != seed:
            continue
        tag = entry["tag"]
        init_doc = json.loads((out / f"initial-{tag}.json").read_text())
        initial = shape_from_doc(init_doc)
        final = shape_from_doc(json.loads((out / f"final-{tag}.json").read_text()))
        reference = None
        if "target_lengths" in init_doc:
            tl = init_doc["target_lengths"]
            reference = [tl[str(i)] for i in range(len(tl))]
        traces = read_trace(out / f"trace-{tag}.jsonl")
        rep = verify(traces, initial, final, cfg["algorithm"], reference, cfg.get("budget", 64))
        rep["seed"] = entry["seed"]
        reports.append(rep)
    return reports


def bench(algorithm: str, generator: str, sizes, seeds, model: str, k_max: int = 32, c0: float = 1.0):
    """Rows over a size sweep plus the fitted bound."""
    rows = []
    for n in sizes:
        cfg = ExperimentConfig(algorithm, {"generator": generator, "n": n, "k_max": k_max}, list(seeds), c0=c0)
        rows += run_experiment(cfg, keep_traces=False).rows
    return rows, fit_bound(rows, model)


def round_bound(model: str, n: int, k: int) -> float:
    return float(_predictor(model, [n], [k])[0])


__all__ = [
    "ExperimentConfig",
    "MetricsRow",
    "bench",
    "fit_bound",
    "run_experiment",
    "verify",
    "verify_directory",
]
