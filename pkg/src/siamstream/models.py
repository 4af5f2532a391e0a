"""Model families over the multi-queue memory.

Two families share the nn engine. The siamese family scores the similarity
of example pairs: a shared dense encoder embeds both inputs, and a single
sigmoid unit on the element-wise absolute difference of the embeddings
produces p(same class). Classification reduces the per-class similarity
statistics of the stored memory. The standard family is a plain softmax
classifier over all classes.

Both families train one epoch at a time and report the cost of the
training set measured before any update, so callers see the model's loss
at the moment the labels arrived.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import InsufficientDataError, NoPredictionError
from .memory import MultiQueue


@dataclass
class SiameseModel:
    encoder: nn.DenseNetwork
    head: nn.DenseNetwork

    def __post_init__(self):
        self._emb_cache = None

    @property
    def embedding_dim(self) -> int:
        return self.encoder.output_dim


@dataclass
class StandardModel:
    net: nn.DenseNetwork
    num_classes: int


def init_siamese(input_dim: int, hidden=(32, 32), learning_rate: float = 0.01,
                 slope: float = 0.01, seed=0) -> SiameseModel:
    """Build an encoder plus similarity head with seeded initialisation."""
    enc_seed, head_seed = nn.seed_sequence(seed).spawn(2)
    spec = nn.NetworkSpec(input_dim, tuple(hidden), nn.EMBEDDING, slope=slope,
                          learning_rate=learning_rate, seed=0)
    spec.validate()
    dims = [input_dim] + [int(h) for h in hidden]
    encoder = nn.build_network(dims, [nn.LRELU] * len(hidden), slope, learning_rate, enc_seed)
    head = nn.build_network([dims[-1], 1], [nn.SIGMOID], slope, learning_rate, head_seed)
    return SiameseModel(encoder, head)


def init_standard(input_dim: int, num_classes: int, hidden=(32, 32),
                  learning_rate: float = 0.01, slope: float = 0.01, seed=0) -> StandardModel:
    spec = nn.NetworkSpec(input_dim, tuple(hidden), nn.SOFTMAX, classes=num_classes,
                          slope=slope, learning_rate=learning_rate, seed=seed)
    net = nn.init_network(spec)
    return StandardModel(net, num_classes)


def pair_similarity(model: SiameseModel, x_i: np.ndarray, x_j: np.ndarray) -> float:
    """p(same class) for one pair; symmetric in its arguments."""
    e = nn.forward(model.encoder, np.stack([np.asarray(x_i, dtype=float),
                                            np.asarray(x_j, dtype=float)])).output
    d = np.abs(e[0] - e[1])[None, :]
    return float(nn.forward(model.head, d).output[0, 0])


def _memory_embeddings(model: SiameseModel, memory: MultiQueue) -> tuple[np.ndarray, np.ndarray]:
    """Embeddings of everything stored, cached until memory or encoder change."""
    x, labels = memory.stacked()
    cache = model._emb_cache
    if cache is not None and cache[0] is x and cache[1] == model.encoder.step_count:
        return cache[2], labels
    emb = nn.forward(model.encoder, x).output
    model._emb_cache = (x, model.encoder.step_count, emb)
    return emb, labels


def class_similarities(model: SiameseModel, memory: MultiQueue,
                       x: np.ndarray) -> dict[int, np.ndarray]:
    """Similarity of `x` to every stored example, grouped by class.

    Classes with empty queues are absent from the result.
    """
    if len(memory) == 0:
        raise NoPredictionError("all queues are empty")
    emb, labels = _memory_embeddings(model, memory)
    e_x = nn.forward(model.encoder, np.asarray(x, dtype=float)[None, :]).output
    sims = nn.forward(model.head, np.abs(e_x - emb)).output[:, 0]
    out = {}
    start = 0
    for c in memory.non_empty_classes():
        count = memory.class_count(c)
        out[c] = sims[start:start + count]
        start += count
    return out


def siamese_predict(model: SiameseModel, memory: MultiQueue,
                    x: np.ndarray) -> tuple[int, dict[int, float]]:
    """Class whose queue is most similar to `x` on average.

    Returns the predicted class and the per-class mean similarities; ties
    resolve to the smallest class index.
    """
    sims = class_similarities(model, memory, x)
    means = {c: float(s.mean()) for c, s in sims.items()}
    predicted = max(means, key=lambda c: (means[c], -c))
    return predicted, means


def siamese_criterion(model: SiameseModel, memory: MultiQueue, x: np.ndarray,
                      predicted: int) -> float:
    """Largest similarity between `x` and the predicted class's queue."""
    if memory.class_count(predicted) == 0:
        raise NoPredictionError(f"queue for class {predicted} is empty")
    sims = class_similarities(model, memory, x)
    return float(sims[predicted].max())


@dataclass
class PairBatch:
    """Balanced training pairs: label 1 rows are same-class, 0 cross-class."""

    left: np.ndarray
    right: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.labels.size


def build_pairs(memory: MultiQueue, seed) -> PairBatch:
    """Enumerate training pairs from the memory and balance the two sides.

    Positives are all unordered same-class pairs of stored examples.
    Negatives are drawn uniformly without replacement from all cross-class
    pairs to match the positive count; if negatives are the scarcer side,
    the positives are downsampled instead. Either side being empty leaves
    nothing to balance and raises.
    """
    x, labels = memory.stacked()
    n = labels.size
    if n < 2:
        raise InsufficientDataError("need at least two stored examples")
    i, j = np.triu_indices(n, k=1)
    same = labels[i] == labels[j]
    pos_i, pos_j = i[same], j[same]
    neg_i, neg_j = i[~same], j[~same]
    if pos_i.size == 0:
        raise InsufficientDataError("no same-class pair in memory")
    if neg_i.size == 0:
        raise InsufficientDataError("no cross-class pair in memory")
    rng = np.random.default_rng(seed)
    if neg_i.size > pos_i.size:
        keep = rng.choice(neg_i.size, size=pos_i.size, replace=False)
        neg_i, neg_j = neg_i[keep], neg_j[keep]
    elif pos_i.size > neg_i.size:
        keep = rng.choice(pos_i.size, size=neg_i.size, replace=False)
        pos_i, pos_j = pos_i[keep], pos_j[keep]
    left = x[np.concatenate([pos_i, neg_i])]
    right = x[np.concatenate([pos_j, neg_j])]
    y = np.concatenate([np.ones(pos_i.size), np.zeros(neg_i.size)])
    return PairBatch(left, right, y)


def pair_cost(model: SiameseModel, batch: PairBatch) -> float:
    """Binary cross-entropy of the head's scores over a pair batch."""
    e_l = nn.forward(model.encoder, batch.left).output
    e_r = nn.forward(model.encoder, batch.right).output
    p = nn.forward(model.head, np.abs(e_l - e_r)).output
    return nn.loss(nn.BINARY, p, batch.labels[:, None])


def pair_gradients(model: SiameseModel, left: np.ndarray, right: np.ndarray,
                   labels: np.ndarray) -> tuple[nn.Gradient, nn.Gradient]:
    """Joint gradient of the mean pair loss for encoder and head.

    Both inputs pass through the shared encoder, so its gradient is the sum
    of the two twins' contributions; the absolute difference routes the
    head's input gradient back with opposite signs.
    """
    fl = nn.forward(model.encoder, left)
    fr = nn.forward(model.encoder, right)
    diff = fl.output - fr.output
    fh = nn.forward(model.head, np.abs(diff))
    delta = nn.loss_delta(fh.output, labels[:, None], nn.BINARY)
    head_grads, d_abs = nn.backprop(model.head, fh, delta)
    sign = np.sign(diff)
    gl, _ = nn.backprop(model.encoder, fl, nn.output_delta(model.encoder, fl, d_abs * sign))
    gr, _ = nn.backprop(model.encoder, fr, nn.output_delta(model.encoder, fr, -d_abs * sign))
    enc_grads = [(a[0] + b[0], a[1] + b[1]) for a, b in zip(gl, gr)]
    return enc_grads, head_grads


def _pair_step(model: SiameseModel, left: np.ndarray, right: np.ndarray,
               labels: np.ndarray) -> None:
    enc_grads, head_grads = pair_gradients(model, left, right, labels)
    nn.adam_step(model.encoder, enc_grads)
    nn.adam_step(model.head, head_grads)


def siamese_train(model: SiameseModel, memory: MultiQueue, batch_size: int, seed) -> float:
    """One epoch of pair training on the current memory.

    Builds a balanced pair batch, measures its cost with the incoming
    parameters, then runs shuffled mini-batch updates of encoder and head
    jointly. Returns the pre-update cost.
    """
    rng = np.random.default_rng(seed)
    batch = build_pairs(memory, rng)
    cost = pair_cost(model, batch)
    order = rng.permutation(len(batch))
    for sl in nn.minibatch_slices(len(batch), batch_size):
        idx = order[sl]
        _pair_step(model, batch.left[idx], batch.right[idx], batch.labels[idx])
    return cost


def standard_predict(model: StandardModel, x: np.ndarray) -> tuple[int, np.ndarray, float]:
    """Softmax prediction: (class, probability vector, top probability)."""
    p = nn.forward(model.net, np.asarray(x, dtype=float)[None, :]).output[0]
    c = int(np.argmax(p)) + 1
    return c, p, float(p[c - 1])


def standard_train_on_memory(model: StandardModel, memory: MultiQueue,
                             batch_size: int, seed) -> float:
    """One epoch of softmax training over everything currently stored."""
    x, labels = memory.stacked()
    if labels.size == 0:
        raise InsufficientDataError("memory is empty")
    y = nn.one_hot(labels, model.num_classes)
    cost = nn.loss(nn.CATEGORICAL, nn.forward(model.net, x).output, y)
    nn.train_epoch(model.net, x, y, nn.CATEGORICAL, batch_size, seed)
    return cost


def standard_train_one(model: StandardModel, x: np.ndarray, y: int) -> float:
    """Single gradient step on one labelled example."""
    fp = nn.forward(model.net, np.asarray(x, dtype=float)[None, :])
    target = nn.one_hot(np.array([y]), model.num_classes)
    cost = nn.loss(nn.CATEGORICAL, fp.output, target)
    nn.adam_step(model.net, nn.backward(model.net, fp, target, nn.CATEGORICAL))
    return cost


def input_space_criterion(memory: MultiQueue, x: np.ndarray, predicted: int) -> float:
    """Highest cosine similarity between `x` and the predicted class's queue,
    rescaled from [-1, 1] to [0, 1]. Zero-norm vectors score 0 (rescaled 0.5).
    """
    stored = memory.class_matrix(predicted)
    if stored.size == 0:
        raise NoPredictionError(f"queue for class {predicted} is empty")
    x = np.asarray(x, dtype=float)
    x_norm = np.linalg.norm(x)
    norms = np.linalg.norm(stored, axis=1)
    cos = np.zeros(stored.shape[0])
    if x_norm > 0.0:
        ok = norms > 0.0
        cos[ok] = (stored[ok] @ x) / (norms[ok] * x_norm)
    return float((cos.max() + 1.0) / 2.0)
