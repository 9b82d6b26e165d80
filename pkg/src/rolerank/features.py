"""Context feature vectors: count-weighted bag-of-words pooling.

A triple's context sentences are tokenized, the word vectors of every
in-vocabulary token occurrence are summed (repeats count each time), and
the sum is L2-normalized back onto the unit hypersphere. Out-of-vocabulary
tokens are skipped; a context with no known token yields a flagged zero
vector so scoring stays total.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .corpus import tokenize
from .embedding import ZERO_NORM_EPS, EmbeddingModel


@dataclass(frozen=True)
class ContextFeatureVector:
    values: np.ndarray
    oov: bool  # every token was out of vocabulary

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)


def l2_normalize(v: np.ndarray) -> tuple[np.ndarray, bool]:
    """Return (v / ||v||, False), or (zero vector, True) for degenerate input.

    Inputs with norm <= 1e-12 are signalled rather than raised so callers
    can decide their own fallback.
    """
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm <= ZERO_NORM_EPS:
        return np.zeros_like(v), True
    return v / norm, False


def context_vector(sentences: Sequence[str], model: EmbeddingModel) -> ContextFeatureVector:
    """Pool a context's word vectors into a unit-length feature vector.

    Word order is ignored but multiplicity matters: each occurrence adds
    its vector to the sum again. ``oov`` is set when no token was in the
    vocabulary; the (vanishingly rare) exact cancellation of in-vocabulary
    vectors also degenerates to the zero vector, with ``oov`` left False.
    """
    if not model.finalized:
        raise ValueError("context_vector requires a finalized model")
    total = np.zeros(model.dim)
    any_known = False
    index = model.vocab.index
    for sentence in sentences:
        for token in tokenize(sentence):
            i = index.get(token)
            if i is not None:
                total += model.input_vectors[i]
                any_known = True
    values, _ = l2_normalize(total)
    return ContextFeatureVector(values=values, oov=not any_known)


def write_cfvs(records: Iterable[tuple[str, ContextFeatureVector]], out: IO[str]) -> None:
    """Debug dump: one JSON line of {id, oov, values} per record."""
    for triple_id, cfv in records:
        out.write(
            json.dumps(
                {"id": triple_id, "oov": cfv.oov, "values": [float(x) for x in cfv.values]}
            )
            + "\n"
        )
