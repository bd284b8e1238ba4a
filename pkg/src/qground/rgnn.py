"""Relational GNN value function over (atom set, object set) encodings.

A state and a quantified goal become one relational input: the nodes are
the objects plus the goal variables (treated as extra objects); the atoms
are the state atoms, the goal atoms rewritten to goal-marker predicates
(inequality constraints included, emitted in both argument orders), a
`constant`/`variable` tag atom per node, and a `possible-binding` atom for
every (object, variable) pair so information can flow between the two.

The network itself: embeddings start at zero; for each of L weight-shared
layers, every atom sends one message per argument position through its
predicate's MLP, each node aggregates incoming messages with the smooth
maximum, and a shared update MLP combines the node's embedding with the
aggregate.  The value is an MLP readout of the summed final embeddings.
Every MLP is linear -> Mish -> linear with hidden width 2k.

Training is plain MSE regression of optimal costs (dead ends use the
dataset's finite large cost), per-sample backward passes accumulated to
the batch size, Adam updates, and lowest-validation-loss model selection.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor
from .seeding import derive_seed
from .strips import BUILTIN, FLUENT, GOAL_MARKER, STATIC, QuantifiedGoal, is_var, var_index
from .tensor import Adam, Tape, Tensor

log = logging.getLogger("qground.train")


class ModelError(ValueError):
    pass


def encoding_signature(domain) -> tuple:
    """(name, arity) of every predicate that can occur in an encoded input."""
    sig = []
    for p in domain.predicates:
        if p.kind in (FLUENT, STATIC, GOAL_MARKER):
            sig.append((p.name, p.arity))
        elif p.kind == BUILTIN and p.name != "neq":
            sig.append((p.name, p.arity))
    return tuple(sig)


@dataclass
class EncodedInput:
    n_objects: int
    n_vars: int
    atoms: list  # (predicate name, tuple of node indices)

    @property
    def n_nodes(self):
        return self.n_objects + self.n_vars

    def count(self, name):
        return sum(1 for a in self.atoms if a[0] == name)


def encode(domain, n_objects: int, state, goal: QuantifiedGoal) -> EncodedInput:
    names = domain.predicates
    node = lambda t: n_objects + var_index(t) if is_var(t) else t
    atoms = []
    for a in sorted(state):
        atoms.append((names[a[0]].name, a[1:]))
    for a in goal.atoms:
        marker = names[domain.goal_marker[a[0]]].name
        atoms.append((marker, tuple(node(t) for t in a[1:])))
    for x, y in goal.neq:
        nx, ny = node(x), node(y)
        atoms.append(("neq_g", (nx, ny)))
        atoms.append(("neq_g", (ny, nx)))
    for o in range(n_objects):
        atoms.append(("constant", (o,)))
    for v in range(goal_nvars := len(goal.variables)):
        atoms.append(("variable", (n_objects + v,)))
    for o in range(n_objects):
        for v in range(goal_nvars):
            atoms.append(("possible-binding", (o, n_objects + v)))
    return EncodedInput(n_objects, goal_nvars, atoms)


@dataclass
class CompiledInput:
    """Index arrays for one encoded input, reusable across epochs."""

    n_nodes: int
    groups: list  # (mlp name, arity, idx array (n_atoms, arity))
    msg_dst: np.ndarray  # destination node of each message row
    seg: tuple  # precomputed segment layout of msg_dst
    target: float | None = None


def compile_input(enc: EncodedInput, signature) -> CompiledInput:
    known = {name: arity for name, arity in signature}
    by_name = {}
    for name, terms in enc.atoms:
        if name not in known:
            raise ModelError(f"unknown predicate {name!r} for this model")
        if len(terms) != known[name]:
            raise ModelError(f"arity mismatch for {name!r} in encoded input")
        by_name.setdefault(name, []).append(terms)
    groups = []
    dst_blocks = []
    for name, arity in signature:
        if arity == 0 or name not in by_name:
            continue  # nullary atoms carry no argument slots, hence no messages
        idx = np.asarray(by_name[name], dtype=np.int64).reshape(-1, arity)
        groups.append((name, arity, idx))
        dst_blocks.append(idx.reshape(-1))
    msg_dst = (
        np.concatenate(dst_blocks) if dst_blocks else np.zeros(0, dtype=np.int64)
    )
    return CompiledInput(enc.n_nodes, groups, msg_dst, tensor.segment_structure(msg_dst))


# ---------------------------------------------------------------------------
# Parameters.


@dataclass
class ModelParams:
    k: int
    L: int
    alpha: float
    n_dead: float
    signature: tuple
    tensors: dict = field(repr=False)

    def clone(self):
        fresh = {name: Tensor(t.data.copy()) for name, t in self.tensors.items()}
        return replace(self, tensors=fresh)


def _mlp_shapes(signature, k):
    shapes = {}
    for name, arity in signature:
        if arity == 0:
            continue
        shapes[f"msg:{name}"] = (arity * k, 2 * k, arity * k)
    shapes["update"] = (2 * k, 2 * k, k)
    shapes["readout"] = (k, 2 * k, 1)
    return shapes


def init_params(signature, k=32, L=30, alpha=12.0, n_dead=1.0, seed=0, dtype=np.float64):
    """Fan-in-scaled uniform init (Kaiming style), fully determined by seed."""
    rng = np.random.default_rng(derive_seed(seed, "init"))
    tensors = {}
    for mlp, (din, hidden, dout) in _mlp_shapes(signature, k).items():
        for part, rows, cols in (("W1", hidden, din), ("b1", hidden, din),
                                 ("W2", dout, hidden), ("b2", dout, hidden)):
            bound = 1.0 / np.sqrt(cols)
            shape = (rows, cols) if part.startswith("W") else (rows,)
            tensors[f"{mlp}.{part}"] = Tensor(
                rng.uniform(-bound, bound, size=shape).astype(dtype, copy=False)
            )
    return ModelParams(k, L, float(alpha), float(n_dead), tuple(signature), tensors)


def _mlp_apply(params, name, x):
    t = params.tensors
    return tensor.mlp2(
        t[f"{name}.W1"], t[f"{name}.b1"], t[f"{name}.W2"], t[f"{name}.b2"], x
    )


def forward(params: ModelParams, inp) -> Tensor:
    """Scalar value of one encoded input (records on the active tape)."""
    comp = inp if isinstance(inp, CompiledInput) else compile_input(inp, params.signature)
    dtype = params.tensors["readout.W1"].data.dtype
    k = params.k
    F = Tensor(np.zeros((comp.n_nodes, k), dtype=dtype))
    for _ in range(params.L):
        parts = []
        for name, arity, idx in comp.groups:
            X = tensor.gather_concat(F, idx)
            Y = _mlp_apply(params, f"msg:{name}", X)
            parts.append(tensor.reshape(Y, (idx.size, k)))
        if parts:
            msgs = tensor.concat_rows(parts)
            agg = tensor.segment_smooth_max(
                msgs, comp.msg_dst, comp.n_nodes, params.alpha, seg=comp.seg
            )
        else:
            agg = Tensor(np.zeros_like(F.data))
        F = _mlp_apply(params, "update", tensor.concat_cols(F, agg))
    return _mlp_apply(params, "readout", tensor.sum_rows(F))


def predict(params: ModelParams, domain, n_objects, state, goal) -> float:
    return forward(params, encode(domain, n_objects, state, goal)).item()


def check_signature(params: ModelParams, domain):
    expected = encoding_signature(domain)
    if tuple(map(tuple, params.signature)) != expected:
        raise ModelError(
            "model signature does not match the domain "
            f"(model has {len(params.signature)} predicates, domain expects {len(expected)})"
        )


# ---------------------------------------------------------------------------
# Training.


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 50
    seed: int = 0
    val_fraction: float | None = None  # default: the dataset's recorded split


def _val_mse(params, compiled, indices):
    if len(indices) == 0:
        return float("nan")
    total = 0.0
    for i in indices:
        diff = forward(params, compiled[i]).item() - compiled[i].target
        total += diff * diff
    return total / len(indices)


def train(params: ModelParams, ds, config: TrainConfig):
    """Minimize mean squared cost error; returns (best params, epoch log).

    Deterministic for a fixed seed: the split, the per-epoch shuffles, and
    the gradient accumulation order all derive from it.
    """
    if not ds.samples:
        raise ModelError("dataset is empty")
    check_signature(params, ds.domain)
    if float(params.n_dead) != float(ds.meta["n_dead"]):
        raise ModelError(
            f"params n_dead={params.n_dead} but dataset labels use {ds.meta['n_dead']}"
        )
    compiled = []
    for s in ds.samples:
        c = compile_input(
            encode(ds.domain, len(s.objects), s.state, s.goal), params.signature
        )
        c.target = float(s.cost)
        compiled.append(c)

    n = len(compiled)
    if config.val_fraction is not None:
        val_count = int(round(n * config.val_fraction))
    else:
        val_count = min(ds.meta.get("val_size", 0), n - 1)
    split_rng = np.random.default_rng(derive_seed(config.seed, "split"))
    perm = split_rng.permutation(n)
    val_idx = perm[:val_count]
    train_idx = perm[val_count:]
    if len(train_idx) == 0:
        raise ModelError("no training samples left after the validation split")

    params = params.clone()
    opt = Adam(params.tensors, lr=config.lr)
    best = params.clone()
    best_val = float("inf")
    logbook = []
    for epoch in range(config.epochs):
        rng = np.random.default_rng(derive_seed(config.seed, "epoch", epoch))
        order = train_idx[rng.permutation(len(train_idx))]
        train_total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            opt.zero_grad()
            for i in batch:
                with Tape() as tape:
                    loss = tensor.mse(forward(params, compiled[i]), compiled[i].target)
                    tape.backward(loss)
                train_total += loss.item()
            inv = 1.0 / len(batch)
            for t in params.tensors.values():
                if t.grad is not None:
                    t.grad *= inv
            opt.step()
        train_mse = train_total / len(order)
        val_mse = _val_mse(params, compiled, val_idx)
        selector = val_mse if val_count else train_mse
        if selector < best_val:
            best_val = selector
            best = params.clone()
        logbook.append({"epoch": epoch, "train_mse": train_mse, "val_mse": val_mse})
        log.info("epoch %d train_mse=%.4f val_mse=%.4f", epoch, train_mse, val_mse)
    return best, logbook


# ---------------------------------------------------------------------------
# Serialization (versioned JSON, full round-trip precision).


def to_json(params: ModelParams) -> str:
    doc = {
        "version": 1,
        "k": params.k,
        "L": params.L,
        "alpha": params.alpha,
        "n_dead": params.n_dead,
        "predicates": [{"name": n, "arity": a} for n, a in params.signature],
        "params": {name: t.data.tolist() for name, t in params.tensors.items()},
    }
    return json.dumps(doc, sort_keys=True)


def from_json(text: str) -> ModelParams:
    doc = json.loads(text)
    if doc.get("version") != 1:
        raise ModelError(f"unsupported model file version {doc.get('version')!r}")
    signature = tuple((p["name"], p["arity"]) for p in doc["predicates"])
    tensors = {name: Tensor(np.array(data, dtype=np.float64))
               for name, data in doc["params"].items()}
    expected = set(_mlp_shapes(signature, doc["k"]))
    have = {name.rsplit(".", 1)[0] for name in tensors}
    if expected != have:
        raise ModelError("model file parameters do not match its predicate signature")
    return ModelParams(doc["k"], doc["L"], doc["alpha"], doc["n_dead"], signature, tensors)


def save_model(params: ModelParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_json(params))


def load_model(path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        return from_json(fh.read())
