"""Joint optimization of the six-term embedding objective.

Three implicit skip-gram terms (one per party, trained with negative
sampling over same-type walk co-occurrences) plus three explicit terms
(weighted first-order reconstruction of each relation's observed edges)
are ascended jointly by plain SGD, driven per edge.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .centrality import hits
from .errors import ConfigError, EmbeddingFileError, NonFiniteError
from .graph import N_PARTIES, RELATIONS, Edge, Metapath, Node, Schema, TripartiteGraph
from .sampling import NegativeSampler, window_partners
from .walks import TypedCorpus, filter_by_type, generate_corpus

log = logging.getLogger(__name__)

# Stream tags that partition the global seed's randomness by consumer.
_INIT_STREAM = 202
_TRAIN_STREAM = 303
_LOSS_STREAM = 404

# Cap on implicit context pairs evaluated per party when reporting the loss;
# the draw is re-derived from the seed each call, so it is fixed across epochs.
_LOSS_EVAL_MAX_PAIRS = 5_000


def sigmoid(x: float) -> float:
    """Overflow-safe logistic function."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _sigmoid_vec(x: np.ndarray) -> np.ndarray:
    # tanh form is overflow-safe for any finite input
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


@dataclass
class TrainConfig:
    """All hyperparameters of corpus generation and training.

    ``alpha`` weights the per-party implicit terms, ``beta`` the per-relation
    explicit terms. ``gamma`` globally scales the explicit gradient on top of
    the relation's beta weight. ``walk_scale=None`` resolves to the node count
    at train time so budgets stay within min/max for typical score magnitudes.
    """

    dim: int = 128
    alpha: tuple[float, float, float] = (1.0, 1.0, 1.0)
    beta: tuple[float, float, float] = (1.0, 1.0, 1.0)
    lr: float = 0.025
    gamma: float = 1.0
    negatives: int = 4
    window: int = 5
    walk_length: int = 32
    min_walks: int = 1
    max_walks: int = 32
    walk_scale: float | None = None
    power: float = 0.75
    epochs: int = 20
    tol: float = 1e-4
    seed: int = 1
    lr_decay: bool = False

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if any(a < 0 for a in self.alpha) or any(b < 0 for b in self.beta):
            raise ConfigError("alpha and beta weights must be non-negative")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be non-negative, got {self.gamma}")
        if not (1 <= self.min_walks <= self.max_walks):
            raise ConfigError(
                f"need 1 <= min_walks <= max_walks, got {self.min_walks}, {self.max_walks}"
            )
        if not (0 < self.tol < 1):
            raise ConfigError(f"tol must lie in (0, 1), got {self.tol}")
        if self.negatives < 0:
            raise ConfigError(f"negatives must be >= 0, got {self.negatives}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.walk_length < 1:
            raise ConfigError(f"walk_length must be >= 1, got {self.walk_length}")
        if self.walk_scale is not None and self.walk_scale <= 0:
            raise ConfigError(f"walk_scale must be positive, got {self.walk_scale}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.power <= 0:
            raise ConfigError(f"power must be positive, got {self.power}")


@dataclass
class EmbeddingStore:
    """Node-embedding and context-vector matrices for the three parties."""

    emb: list[np.ndarray]
    ctx: list[np.ndarray]
    labels: tuple[list[str], ...]

    @property
    def dim(self) -> int:
        return self.emb[0].shape[1]

    def copy(self) -> "EmbeddingStore":
        return EmbeddingStore([m.copy() for m in self.emb], [m.copy() for m in self.ctx], self.labels)

    def vector(self, node: Node) -> np.ndarray:
        return self.emb[node.party][node.index]

    def reindexed_to(self, g: TripartiteGraph) -> "EmbeddingStore":
        """Rows permuted to match the graph's label-to-index assignment."""
        own_index = [{lab: i for i, lab in enumerate(self.labels[p])} for p in range(N_PARTIES)]
        emb, ctx = [], []
        for p in range(N_PARTIES):
            rows = []
            for lab in g.labels[p]:
                if lab not in own_index[p]:
                    raise EmbeddingFileError(f"graph node {lab!r} has no embedding")
                rows.append(own_index[p][lab])
            sel = np.array(rows, dtype=np.int64)
            emb.append(self.emb[p][sel] if len(sel) else self.emb[p][:0])
            ctx.append(self.ctx[p][sel] if len(sel) else self.ctx[p][:0])
        return EmbeddingStore(emb, ctx, g.labels)


@dataclass
class LossReport:
    """The six objective components and their signed combination.

    ``implicit`` holds per-party sampled skip-gram negative log-likelihoods
    over a fixed seeded evaluation draw; ``explicit`` holds per-relation
    weighted reconstruction terms (KL up to a dropped constant). ``total``
    is the joint objective with the convention that training increases it.
    """

    implicit: tuple[float, float, float]
    explicit: tuple[float, float, float]
    total: float
    eval_pairs: tuple[int, int, int] = (0, 0, 0)

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.total))


def init_embeddings(g: TripartiteGraph, cfg: TrainConfig, rng: np.random.Generator) -> EmbeddingStore:
    """Uniform initialization of all six matrices in [-0.5/d, 0.5/d]."""
    cfg.validate()
    half = 0.5 / cfg.dim
    emb = [rng.uniform(-half, half, size=(g.counts[p], cfg.dim)) for p in range(N_PARTIES)]
    ctx = [rng.uniform(-half, half, size=(g.counts[p], cfg.dim)) for p in range(N_PARTIES)]
    return EmbeddingStore(emb, ctx, g.labels)


def _check_finite(*rows: np.ndarray) -> None:
    for row in rows:
        if not np.all(np.isfinite(row)):
            raise NonFiniteError(
                "parameter update produced a non-finite value; lower the learning rate "
                "or the explicit weights"
            )


def explicit_update(store: EmbeddingStore, e: Edge, cfg: TrainConfig, lr: float | None = None) -> None:
    """One SGD step on the edge's weighted reconstruction term.

    Ascends ``w * log sigmoid(u . v)`` for the two endpoint node embeddings;
    the step is scaled by the relation's beta weight times ``cfg.gamma``.
    """
    coef = cfg.gamma * cfg.beta[e.relation] * e.weight
    if coef == 0.0:
        return
    eta = cfg.lr if lr is None else lr
    u = store.emb[e.src.party][e.src.index]
    v = store.emb[e.dst.party][e.dst.index]
    g = eta * coef * (1.0 - sigmoid(float(u @ v)))
    du = g * v
    v += g * u
    u += du
    _check_finite(u, v)


def implicit_update(store: EmbeddingStore, center: Node, context: Node,
                    negatives: list[Node], alpha: float, cfg: TrainConfig,
                    lr: float | None = None) -> None:
    """One SGD step on a sampled skip-gram term for same-party nodes.

    Ascends ``log sigmoid(v . theta_ctx) + sum_neg log(1 - sigmoid(v . theta_z))``
    scaled by ``alpha``, updating the center's node embedding and every
    involved context vector.
    """
    party = center.party
    if context.party != party or any(z.party != party for z in negatives):
        raise ValueError("implicit update requires center, context and negatives of one party")
    if any(z.index == context.index for z in negatives):
        raise ValueError("context node must not appear among the negatives")
    _implicit_update_idx(store, party, center.index, context.index,
                         [z.index for z in negatives], alpha, cfg, lr)


def _implicit_update_idx(store: EmbeddingStore, party: int, center: int, context: int,
                         negatives: list[int], alpha: float, cfg: TrainConfig,
                         lr: float | None = None) -> None:
    if alpha == 0.0:
        return
    eta = cfg.lr if lr is None else lr
    v = store.emb[party][center]
    zs = np.array([context] + negatives, dtype=np.int64)
    indicator = np.zeros(len(zs))
    indicator[0] = 1.0
    ctx_mat = store.ctx[party]
    z_rows = ctx_mat[zs]
    s = _sigmoid_vec(z_rows @ v)
    coef = eta * alpha * (indicator - s)
    dv = coef @ z_rows
    np.add.at(ctx_mat, zs, coef[:, None] * v)
    v += dv
    _check_finite(v, ctx_mat[zs])


def _explicit_loss(store: EmbeddingStore, g: TripartiteGraph) -> tuple[float, float, float]:
    out = []
    for r, (a, b) in enumerate(RELATIONS):
        if len(g.edge_wt[r]) == 0:
            out.append(0.0)
            continue
        u = store.emb[a][g.edge_src[r]]
        v = store.emb[b][g.edge_dst[r]]
        dots = np.einsum("ij,ij->i", u, v)
        out.append(float(-(g.edge_wt[r] * _log_sigmoid(dots)).sum()))
    return tuple(out)


def _pair_counts(seq_lens: np.ndarray, window: int) -> np.ndarray:
    """Ordered window-pair count per sequence of the given lengths."""
    counts = np.zeros(len(seq_lens), dtype=np.int64)
    for i, n in enumerate(seq_lens):
        k = min(window, n - 1)
        # ordered pairs with gap 1..k: 2 * sum_{g=1..k} (n - g)
        counts[i] = 2 * (k * n - k * (k + 1) // 2) if n > 1 else 0
    return counts


def _pair_by_rank(seq: list[int], window: int, rank: int) -> tuple[int, int]:
    """The rank-th ordered window pair of one sequence, in (i, j) scan order."""
    n = len(seq)
    for i in range(n):
        lo, hi = max(0, i - window), min(n, i + window + 1)
        span = hi - lo - 1
        if rank < span:
            js = [j for j in range(lo, hi) if j != i]
            j = js[rank]
            return seq[i], seq[j]
        rank -= span
    raise IndexError("pair rank out of range")


def compute_loss(store: EmbeddingStore, g: TripartiteGraph, typed: TypedCorpus,
                 sampler: NegativeSampler, cfg: TrainConfig) -> LossReport:
    """Evaluate the six objective components on a fixed seeded draw.

    Explicit terms run over every stored edge. Implicit terms run over up to
    a capped number of window pairs per party, selected (with negatives) by
    an RNG derived from the seed alone, so repeated calls measure the same
    sample and epoch-to-epoch changes are attributable to the parameters.
    """
    explicit = _explicit_loss(store, g)
    implicit = []
    n_pairs = []
    for p in range(N_PARTIES):
        rng = np.random.default_rng([cfg.seed, _LOSS_STREAM, p])
        seqs = typed.sequences(p)
        lens = np.array([len(s) for s in seqs], dtype=np.int64)
        counts = _pair_counts(lens, cfg.window) if len(seqs) else np.zeros(0, dtype=np.int64)
        total = int(counts.sum())
        if total == 0:
            implicit.append(0.0)
            n_pairs.append(0)
            continue
        if total <= _LOSS_EVAL_MAX_PAIRS:
            pairs = [(c, x) for seq in seqs for (c, x) in _seq_pairs(seq, cfg.window)]
        else:
            cum = np.cumsum(counts)
            picks = rng.integers(total, size=_LOSS_EVAL_MAX_PAIRS)
            pairs = []
            for pick in picks:
                si = int(np.searchsorted(cum, pick, side="right"))
                offset = int(pick - (cum[si - 1] if si else 0))
                pairs.append(_pair_by_rank(seqs[si], cfg.window, offset))
        nll = 0.0
        for center, context in pairs:
            v = store.emb[p][center]
            node = Node(p, center)
            negs = sampler.sample(node, cfg.negatives, rng) if sampler.has_negatives(node) else []
            dots = store.ctx[p][[context] + negs] @ v
            nll -= float(_log_sigmoid(dots[0]))
            nll -= float(_log_sigmoid(-dots[1:]).sum())
        implicit.append(nll)
        n_pairs.append(len(pairs))
    total = -(sum(a * o for a, o in zip(cfg.alpha, implicit))
              + sum(b * o for b, o in zip(cfg.beta, explicit)))
    return LossReport(tuple(implicit), tuple(explicit), total, tuple(n_pairs))


def _seq_pairs(seq: list[int], window: int):
    n = len(seq)
    for i in range(n):
        for j in range(max(0, i - window), min(n, i + window + 1)):
            if j != i:
                yield seq[i], seq[j]


def _occurrences(typed: TypedCorpus) -> list[dict[int, list[tuple[int, int]]]]:
    occ: list[dict[int, list[tuple[int, int]]]] = [{}, {}, {}]
    for p in range(N_PARTIES):
        for si, seq in enumerate(typed.sequences(p)):
            for pos, idx in enumerate(seq):
                occ[p].setdefault(idx, []).append((si, pos))
    return occ


def train(g: TripartiteGraph, metapaths: list[Metapath], cfg: TrainConfig,
          on_epoch: Callable[[int, LossReport], None] | None = None) -> EmbeddingStore:
    """Full training loop: walks, then per-epoch edge-driven joint updates.

    Per epoch, every edge of every relation triggers one explicit update and,
    for each endpoint, implicit updates over the window of one drawn
    occurrence of that endpoint in its party's corpus. Stops early when the
    relative change of the monitored objective drops below ``cfg.tol``. If an
    update diverges, the last finite epoch checkpoint is returned.

    ``on_epoch`` is invoked with (epoch, LossReport) after the initial loss
    evaluation (epoch 0) and after every training epoch.
    """
    cfg.validate()
    if g.num_nodes == 0:
        raise ValueError("cannot train on an empty graph")
    if all(len(w) == 0 for w in g.edge_wt):
        raise ValueError("cannot train on a graph with no edges")

    scale = cfg.walk_scale if cfg.walk_scale is not None else float(g.num_nodes)
    scores = hits(g)
    corpus = generate_corpus(g, metapaths, scores, cfg.min_walks, cfg.max_walks,
                             scale, cfg.walk_length, cfg.seed)
    typed = filter_by_type(corpus)
    sampler = NegativeSampler.build(typed, g, cfg.power, cfg.window)
    occ = _occurrences(typed)

    store = init_embeddings(g, cfg, np.random.default_rng([cfg.seed, _INIT_STREAM]))
    rng = np.random.default_rng([cfg.seed, _TRAIN_STREAM])

    prev = compute_loss(store, g, typed, sampler, cfg)
    if on_epoch is not None:
        on_epoch(0, prev)

    total_steps = max(1, cfg.epochs * g.num_edges)
    step = 0
    checkpoint = store.copy()
    for epoch in range(1, cfg.epochs + 1):
        try:
            for r in range(len(RELATIONS)):
                a, b = RELATIONS[r]
                for i, j, w in zip(g.edge_src[r], g.edge_dst[r], g.edge_wt[r]):
                    if cfg.lr_decay:
                        lr = cfg.lr * max(0.01, 1.0 - step / total_steps)
                    else:
                        lr = cfg.lr
                    step += 1
                    edge = Edge(Node(a, int(i)), Node(b, int(j)), float(w))
                    explicit_update(store, edge, cfg, lr)
                    for party, index in ((a, int(i)), (b, int(j))):
                        if cfg.alpha[party] == 0.0:
                            continue
                        occs = occ[party].get(index)
                        if not occs:
                            continue
                        si, pos = occs[int(rng.integers(len(occs)))]
                        seq = typed.sequences(party)[si]
                        node = Node(party, index)
                        can_sample = sampler.has_negatives(node)
                        for partner in window_partners(seq, pos, cfg.window):
                            negs = sampler.sample(node, cfg.negatives, rng) if can_sample else []
                            _implicit_update_idx(store, party, index, partner, negs,
                                                 cfg.alpha[party], cfg, lr)
        except NonFiniteError as exc:
            log.error("training diverged in epoch %d (%s); returning last finite checkpoint", epoch, exc)
            return checkpoint
        loss = compute_loss(store, g, typed, sampler, cfg)
        if on_epoch is not None:
            on_epoch(epoch, loss)
        if not loss.finite:
            log.error("objective became non-finite in epoch %d; returning last finite checkpoint", epoch)
            return checkpoint
        rel_change = abs(loss.total - prev.total) / max(abs(prev.total), 1e-12)
        checkpoint = store.copy()
        prev = loss
        if rel_change < cfg.tol:
            log.info("converged after epoch %d (relative change %.3g)", epoch, rel_change)
            break
    return store


# -- persistence -----------------------------------------------------------------


def save_embeddings(store: EmbeddingStore, path, context_path=None) -> None:
    """Write embeddings as text: header ``<count> <dim>``, then label + values.

    Values are written with 9 significant digits. When ``context_path`` is
    given the context-vector matrices are written there in the same format.
    """
    _write_matrix_file(store.emb, store.labels, path)
    if context_path is not None:
        _write_matrix_file(store.ctx, store.labels, context_path)


def _write_matrix_file(mats: list[np.ndarray], labels: tuple[list[str], ...], path) -> None:
    total = sum(m.shape[0] for m in mats)
    dim = mats[0].shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{total} {dim}\n")
        for p in range(N_PARTIES):
            for i, lab in enumerate(labels[p]):
                fh.write(lab + " " + " ".join(f"{x:.9g}" for x in mats[p][i]) + "\n")


def load_embeddings(path, schema: Schema, context_path=None) -> EmbeddingStore:
    """Read an embedding file (and optionally its context-vector companion).

    Node party comes from the label's type character; per-party indices follow
    file order, so a save/load round trip preserves row order. Without a
    context file the context vectors are zero.
    """
    labels, emb = _read_matrix_file(path, schema)
    if context_path is not None:
        ctx_labels, ctx = _read_matrix_file(context_path, schema)
        if ctx_labels != labels:
            raise EmbeddingFileError("context file lists different nodes than the embedding file")
    else:
        ctx = [np.zeros_like(m) for m in emb]
    return EmbeddingStore(emb, ctx, labels)


def _read_matrix_file(path, schema: Schema):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFileError(f"bad header {header!r}, expected '<count> <dim>'", 1)
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingFileError(f"bad header {header!r}", 1) from None
        labels: tuple[list[str], ...] = ([], [], [])
        rows: tuple[list[list[float]], ...] = ([], [], [])
        n_read = 0
        for line_no, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != dim + 1:
                raise EmbeddingFileError(
                    f"expected a label and {dim} values, got {len(fields)} fields", line_no
                )
            party = schema.party_of_label(fields[0])
            try:
                values = [float(x) for x in fields[1:]]
            except ValueError:
                raise EmbeddingFileError("non-numeric embedding value", line_no) from None
            labels[party].append(fields[0])
            rows[party].append(values)
            n_read += 1
        if n_read != count:
            raise EmbeddingFileError(f"header declares {count} rows but file has {n_read}")
    mats = [np.array(rows[p], dtype=np.float64).reshape(len(rows[p]), dim) for p in range(N_PARTIES)]
    return labels, mats


def default_metapaths() -> list[Metapath]:
    """The default scheme pair: T1-T2-T3-T2-T1 and T3-T2-T1-T2-T3."""
    return [Metapath((0, 1, 2, 1, 0)), Metapath((2, 1, 0, 1, 2))]
