"""Skip-gram word embeddings with negative sampling, trained from scratch.

Training follows the classic SGD recipe: for every center word an
effective window is drawn uniformly from [1, window], every in-window
(center, context) pair gets one gradient step against k sampled negative
words, and the learning rate decays linearly over the total number of
pairs. Vectors are finalized onto the unit hypersphere before any
querying; the default dimensionality is 30.

All randomness is driven by the config seed through named substreams
(init / window / subsample / negatives), which makes single-threaded
training bit-reproducible.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .seeds import make_rng

logger = logging.getLogger(__name__)

ZERO_NORM_EPS = 1e-12


@dataclass(frozen=True)
class Vocabulary:
    """Retained words in deterministic order (count desc, then lexicographic)."""

    words: tuple[str, ...]
    counts: dict[str, int]  # empty for models loaded from disk
    index: dict[str, int]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 30
    window: int = 5
    negatives: int = 5
    epochs: int = 20
    lr_initial: float = 0.025
    lr_final: float = 0.0001
    min_count: int = 1
    unigram_power: float = 0.75
    subsample: float = 0.0  # frequent-word subsampling threshold, 0 = off
    seed: int = 1

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.window < 1 or self.negatives < 1 or self.epochs < 1 or self.min_count < 1:
            raise ValueError("window, negatives, epochs and min_count must be >= 1")
        if not 0 < self.lr_final < self.lr_initial:
            raise ValueError("need 0 < lr_final < lr_initial")
        if self.subsample < 0:
            raise ValueError("subsample must be >= 0")


@dataclass
class EmbeddingModel:
    """Vocabulary plus a |V| x dim matrix of word vectors.

    ``output_vectors`` (the context-side matrix) exists only while
    training; ``finalize`` drops it and renormalizes every word vector to
    unit length.
    """

    vocab: Vocabulary
    input_vectors: np.ndarray
    output_vectors: np.ndarray | None = None
    finalized: bool = False
    epoch_losses: tuple[float, ...] = ()
    zero_replaced: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def vector(self, word: str) -> np.ndarray:
        return self.input_vectors[self.vocab.index[word]]


def build_vocabulary(corpus: Sequence[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Count words across the corpus and retain those seen >= min_count times."""
    if not corpus:
        raise ValueError("corpus is empty")
    counter: Counter[str] = Counter()
    for sentence in corpus:
        counter.update(sentence)
    retained = sorted(
        (w for w, c in counter.items() if c >= min_count),
        key=lambda w: (-counter[w], w),
    )
    if not retained:
        raise ValueError(f"no word occurs at least min_count={min_count} times")
    return Vocabulary(
        words=tuple(retained),
        counts={w: counter[w] for w in retained},
        index={w: i for i, w in enumerate(retained)},
    )


class UnigramSampler:
    """Draws word ordinals with probability proportional to count^power."""

    def __init__(self, vocab: Vocabulary, power: float = 0.75):
        if not vocab.counts:
            raise ValueError("vocabulary has no counts (loaded models are query-only)")
        counts = np.array([vocab.counts[w] for w in vocab.words], dtype=np.float64)
        weights = counts**power
        self._cum = np.cumsum(weights)
        self.probabilities = weights / self._cum[-1]

    def sample(self, rng: np.random.Generator) -> int:
        return int(self.sample_n(rng, 1)[0])

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        draws = rng.random(n) * self._cum[-1]
        return np.searchsorted(self._cum, draws, side="right")


def _pair_core(center: np.ndarray, outs: np.ndarray):
    """Loss and gradients for one positive pair against stacked outputs.

    ``outs`` row 0 is the context vector, rows 1.. are negatives. Returns
    (loss, grad wrt center, grad wrt each output row). The loss is
    -log sigmoid(u_ctx . v) - sum_j log sigmoid(-u_negj . v); with the
    context score sign-flipped it collapses to sum logaddexp(0, t), and
    sigmoid(t) = exp(t - logaddexp(0, t)) keeps everything overflow-free.
    """
    scores = outs @ center
    scores[0] = -scores[0]
    ell = np.logaddexp(0.0, scores)
    loss = ell.sum()
    coeff = np.exp(scores - ell)  # d loss / d score, up to the sign of row 0
    coeff[0] = -coeff[0]
    grad_center = coeff @ outs
    grad_outs = coeff[:, None] * center
    return loss, grad_center, grad_outs


def pair_loss_and_gradients(
    center_vec: np.ndarray,
    context_vec: np.ndarray,
    negative_vecs: Sequence[np.ndarray],
):
    """Negative-sampling loss and exact analytic gradients for one pair.

    Returns (loss, grad_center, grad_context, grad_negatives) where
    grad_negatives is a (k, d) array. Requires at least one negative and
    uniform dimensionality.
    """
    center = np.asarray(center_vec, dtype=np.float64)
    if center.ndim != 1:
        raise ValueError("center_vec must be a 1-d vector")
    negatives = [np.asarray(v, dtype=np.float64) for v in negative_vecs]
    if not negatives:
        raise ValueError("at least one negative vector is required")
    rows = [np.asarray(context_vec, dtype=np.float64)] + negatives
    for v in rows:
        if v.shape != center.shape:
            raise ValueError(
                f"dimension mismatch: center has shape {center.shape}, got {v.shape}"
            )
    outs = np.stack(rows)
    loss, grad_center, grad_outs = _pair_core(center, outs)
    return float(loss), grad_center, grad_outs[0], grad_outs[1:]


def _keep_probabilities(vocab: Vocabulary, threshold: float) -> np.ndarray:
    """Word2vec-style keep probability per word ordinal, clipped to 1."""
    counts = np.array([vocab.counts[w] for w in vocab.words], dtype=np.float64)
    freq = counts / counts.sum()
    keep = np.sqrt(threshold / freq) + threshold / freq
    return np.minimum(keep, 1.0)


def _epoch_layouts(
    encoded: list[np.ndarray],
    config: EmbeddingConfig,
    keep: np.ndarray | None,
    rng_suffix: str = "",
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield (epoch, effective sentence, per-center window sizes).

    Drives the window and subsampling RNG substreams in a fixed order, so
    two iterations with the same config replay the identical layout. The
    pair-counting pass and the training pass both consume this.
    """
    win_rng = make_rng(config.seed, "window" + rng_suffix)
    sub_rng = make_rng(config.seed, "subsample" + rng_suffix) if keep is not None else None
    for epoch in range(config.epochs):
        for sentence in encoded:
            ids = sentence
            if sub_rng is not None:
                ids = ids[sub_rng.random(len(ids)) < keep[ids]]
            n = len(ids)
            if n == 0:
                continue
            windows = win_rng.integers(1, config.window + 1, size=n)
            yield epoch, ids, windows


def _count_pairs(ids_len: int, windows: np.ndarray) -> int:
    pos = np.arange(ids_len)
    return int(np.sum(np.minimum(pos, windows) + np.minimum(ids_len - 1 - pos, windows)))


_NEGATIVE_BUFFER = 8192


def _train_partition(
    encoded: list[np.ndarray],
    config: EmbeddingConfig,
    keep: np.ndarray | None,
    sampler: UnigramSampler,
    input_vectors: np.ndarray,
    output_vectors: np.ndarray,
    epoch_loss: np.ndarray,
    epoch_pairs: np.ndarray,
    rng_suffix: str = "",
) -> None:
    """Run SGD over one sentence partition, updating the shared matrices."""
    vocab_size = input_vectors.shape[0]
    k = config.negatives
    neg_rng = make_rng(config.seed, "negatives" + rng_suffix)

    total_pairs = 0
    for _, ids, windows in _epoch_layouts(encoded, config, keep, rng_suffix):
        total_pairs += _count_pairs(len(ids), windows)
    if total_pairs == 0:
        return
    lr_initial = config.lr_initial
    lr_span = config.lr_initial - config.lr_final
    denom = max(total_pairs - 1, 1)

    # negatives come from a buffered stream; draws equal to the current
    # context word are skipped and redrawn (impossible to avoid for a
    # single-word vocabulary, where they are allowed through)
    neg_buf = sampler.sample_n(neg_rng, _NEGATIVE_BUFFER)
    neg_ptr = 0
    reject_equal = vocab_size > 1

    idx = np.empty(k + 1, dtype=np.intp)
    pair_index = 0
    for epoch, ids, windows in _epoch_layouts(encoded, config, keep, rng_suffix):
        n = len(ids)
        sentence = ids.tolist()
        for i in range(n):
            center = sentence[i]
            lo = i - windows[i] if i >= windows[i] else 0
            hi = i + windows[i]
            if hi >= n:
                hi = n - 1
            v = input_vectors[center]
            for j in range(lo, hi + 1):
                if j == i:
                    continue
                context = sentence[j]
                idx[0] = context
                taken = 1
                while taken <= k:
                    if neg_ptr == _NEGATIVE_BUFFER:
                        neg_buf = sampler.sample_n(neg_rng, _NEGATIVE_BUFFER)
                        neg_ptr = 0
                    cand = neg_buf[neg_ptr]
                    neg_ptr += 1
                    if reject_equal and cand == context:
                        continue
                    idx[taken] = cand
                    taken += 1
                lr = lr_initial - lr_span * (pair_index / denom)
                loss, grad_center, grad_outs = _pair_core(v, output_vectors[idx])
                # np.add.at accumulates duplicate negative indices correctly
                np.add.at(output_vectors, idx, -lr * grad_outs)
                input_vectors[center] = v = v - lr * grad_center
                pair_index += 1
                epoch_loss[epoch] += loss
                epoch_pairs[epoch] += 1


def train_skipgram(
    corpus: Sequence[Sequence[str]],
    config: EmbeddingConfig,
    workers: int = 1,
) -> EmbeddingModel:
    """Train a (non-finalized) skip-gram model over the pooled corpus.

    With ``workers=1`` the run is single-threaded and bit-reproducible
    for a fixed seed. With more workers, sentences are partitioned
    round-robin and threads update the shared matrices without locking;
    races are tolerated and results become non-deterministic.
    """
    vocab = build_vocabulary(corpus, config.min_count)
    encoded = []
    for sentence in corpus:
        ids = np.array(
            [vocab.index[w] for w in sentence if w in vocab.index], dtype=np.intp
        )
        if len(ids) > 0:
            encoded.append(ids)

    init_rng = make_rng(config.seed, "init")
    input_vectors = (init_rng.random((len(vocab), config.dim)) - 0.5) / config.dim
    output_vectors = np.zeros((len(vocab), config.dim))
    sampler = UnigramSampler(vocab, config.unigram_power)
    keep = _keep_probabilities(vocab, config.subsample) if config.subsample > 0 else None

    epoch_loss = np.zeros(config.epochs)
    epoch_pairs = np.zeros(config.epochs, dtype=np.int64)

    if workers <= 1:
        _train_partition(
            encoded, config, keep, sampler, input_vectors, output_vectors,
            epoch_loss, epoch_pairs,
        )
    else:
        import threading

        threads = []
        for w in range(workers):
            part = encoded[w::workers]
            if not part:
                continue
            threads.append(
                threading.Thread(
                    target=_train_partition,
                    args=(part, config, keep, sampler, input_vectors, output_vectors,
                          epoch_loss, epoch_pairs, f"/worker{w}"),
                )
            )
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    losses = tuple(
        float(epoch_loss[e] / epoch_pairs[e]) if epoch_pairs[e] else 0.0
        for e in range(config.epochs)
    )
    return EmbeddingModel(
        vocab=vocab,
        input_vectors=input_vectors,
        output_vectors=output_vectors,
        finalized=False,
        epoch_losses=losses,
    )


def finalize(model: EmbeddingModel) -> EmbeddingModel:
    """Project every word vector onto the unit hypersphere.

    A vector with (near-)zero norm is replaced by the first basis vector
    and the word is recorded in ``zero_replaced``; output vectors are
    dropped. The input model must not already be finalized.
    """
    if model.finalized:
        raise ValueError("model is already finalized")
    vectors = np.array(model.input_vectors, dtype=np.float64, copy=True)
    norms = np.linalg.norm(vectors, axis=1)
    zero_rows = np.flatnonzero(norms <= ZERO_NORM_EPS)
    zero_words = tuple(model.vocab.words[i] for i in zero_rows)
    for i in zero_rows:
        vectors[i] = 0.0
        vectors[i, 0] = 1.0
        norms[i] = 1.0
        logger.warning("zero-norm vector for %r replaced by basis vector e1",
                       model.vocab.words[i])
    vectors /= norms[:, None]
    return EmbeddingModel(
        vocab=model.vocab,
        input_vectors=vectors,
        output_vectors=None,
        finalized=True,
        epoch_losses=model.epoch_losses,
        zero_replaced=zero_words,
    )


def nearest_neighbors(
    model: EmbeddingModel, seed_word: str, k: int
) -> list[tuple[str, float]]:
    """Top-k words by cosine similarity to seed_word, excluding itself.

    On finalized (unit-norm) vectors the cosine is a plain dot product.
    Ties are broken by vocabulary order; asking for more neighbors than
    exist truncates to |V| - 1.
    """
    if not model.finalized:
        raise ValueError("nearest_neighbors requires a finalized model")
    if k < 1:
        raise ValueError("k must be >= 1")
    if seed_word not in model.vocab:
        raise KeyError(f"word {seed_word!r} is not in the vocabulary")
    seed_idx = model.vocab.index[seed_word]
    sims = model.input_vectors @ model.input_vectors[seed_idx]
    order = sorted(
        (i for i in range(len(model.vocab)) if i != seed_idx),
        key=lambda i: (-sims[i], i),
    )
    return [(model.vocab.words[i], float(sims[i])) for i in order[:k]]


def save_embedding(model: EmbeddingModel, path) -> None:
    """Write a finalized model in the text format: header, one word per line."""
    if not model.finalized:
        raise ValueError("only finalized models are persisted")
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(model.vocab)} {model.dim}\n")
        for i, word in enumerate(model.vocab.words):
            floats = " ".join(repr(float(x)) for x in model.input_vectors[i])
            f.write(f"{word} {floats}\n")


def load_embedding(path) -> EmbeddingModel:
    """Load a finalized model written by save_embedding.

    Validates the header counts and per-line arity. Counts are not stored
    in the format, so loaded models are query-only (they can back feature
    extraction and neighbor queries but not further training).
    """
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: header must be '<vocab_size> <dim>'")
        try:
            expected_v, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ValueError(f"{path}: header must be two integers") from None
        words: list[str] = []
        rows: list[np.ndarray] = []
        index: dict[str, int] = {}
        for line_no, line in enumerate(f, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ValueError(
                    f"{path}: line {line_no}: expected {dim + 1} fields, got {len(parts)}"
                )
            word = parts[0]
            if word in index:
                raise ValueError(f"{path}: line {line_no}: duplicate word {word!r}")
            index[word] = len(words)
            words.append(word)
            rows.append(np.array([float(x) for x in parts[1:]], dtype=np.float64))
    if len(words) != expected_v:
        raise ValueError(f"{path}: header claims {expected_v} words, found {len(words)}")
    vocab = Vocabulary(words=tuple(words), counts={}, index=index)
    return EmbeddingModel(
        vocab=vocab,
        input_vectors=np.vstack(rows) if rows else np.zeros((0, dim)),
        output_vectors=None,
        finalized=True,
    )

