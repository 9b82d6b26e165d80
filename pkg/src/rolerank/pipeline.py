"""Per-role training, scoring and ranking of contextual triples.

Labels binarize as highly relevant / relevant -> 1, irrelevant -> 0;
neutral triples carry ranking gain only and never enter training. Each
role gets its own forest over the CFVs of its labeled triples. Scoring
is total: a triple whose role has no classifier scores exactly 0.0 (the
role in a query must match exactly for non-zero relevance), and a triple
whose context has no known word falls back to the uninformative 0.5.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from typing import IO, Iterable, Sequence

import numpy as np

from .corpus import ContextualTriple, RelevanceLabel
from .embedding import EmbeddingModel
from .features import context_vector
from .forest import ForestConfig, RoleClassifier, predict_proba, train_forest
from .seeds import derive_seed

logger = logging.getLogger(__name__)

OOV_FALLBACK_SCORE = 0.5
UNKNOWN_ROLE_SCORE = 0.0

# skip reasons recorded in ModelBundle.skipped_roles
SKIP_NO_TRAINABLE = "no trainable labels"
SKIP_SINGLE_CLASS = "single-class"
SKIP_TOO_FEW = "fewer than 2 samples in a class"


@dataclass(frozen=True)
class ScoredTriple:
    triple: ContextualTriple
    score: float
    oov_fallback: bool = False
    note: str | None = None


@dataclass
class ModelBundle:
    embedding: EmbeddingModel
    classifiers: dict[str, RoleClassifier]
    skipped_roles: list[tuple[str, str]]


def binarize_label(label: RelevanceLabel) -> int | None:
    """Positive for (highly) relevant, negative for irrelevant, None for neutral."""
    if label in (RelevanceLabel.HIGHLY_RELEVANT, RelevanceLabel.RELEVANT):
        return 1
    if label is RelevanceLabel.IRRELEVANT:
        return 0
    return None


def train_role_models(
    labeled: Sequence[ContextualTriple],
    embedding: EmbeddingModel,
    forest_config: ForestConfig,
) -> ModelBundle:
    """Train one forest per role over CFV features of the labeled triples.

    Per role: binarize labels (neutral dropped), featurize, drop all-OOV
    contexts, and train on the survivors in canonical id order with a
    per-role seed derived from the forest seed. Roles that end up with
    fewer than two samples in either class are recorded as skipped
    instead of failing the run; zero trainable roles is an error.
    """
    if not embedding.finalized:
        raise ValueError("train_role_models requires a finalized embedding")
    by_role: dict[str, list[ContextualTriple]] = {}
    for triple in labeled:
        if triple.label is None:
            raise ValueError(f"triple {triple.id!r} has no label")
        by_role.setdefault(triple.role, []).append(triple)

    classifiers: dict[str, RoleClassifier] = {}
    skipped: list[tuple[str, str]] = []
    for role in sorted(by_role):
        rows = []
        labels = []
        usable = 0
        for triple in sorted(by_role[role], key=lambda t: t.id):
            target = binarize_label(triple.label)
            if target is None:
                continue
            usable += 1
            cfv = context_vector(triple.sentences, embedding)
            if cfv.is_zero:
                logger.info("dropping all-OOV training triple %s", triple.id)
                continue
            rows.append(cfv.values)
            labels.append(target)
        if not rows:
            skipped.append((role, SKIP_NO_TRAINABLE))
            continue
        y = np.array(labels, dtype=np.int64)
        pos = int(y.sum())
        neg = len(y) - pos
        if pos == 0 or neg == 0:
            skipped.append((role, SKIP_SINGLE_CLASS))
            continue
        if pos < 2 or neg < 2:
            skipped.append((role, SKIP_TOO_FEW))
            continue
        role_config = replace(forest_config, seed=derive_seed(forest_config.seed, role))
        classifiers[role] = train_forest(np.vstack(rows), y, role_config, role=role)
        if usable > len(y):
            logger.info("role %s: %d all-OOV triples excluded", role, usable - len(y))
    if not classifiers:
        raise ValueError("no role has enough labeled data to train a classifier")
    return ModelBundle(embedding=embedding, classifiers=classifiers, skipped_roles=skipped)


def score_triples(
    triples: Iterable[ContextualTriple], bundle: ModelBundle
) -> list[ScoredTriple]:
    """Score each triple with its role's classifier.

    Unknown roles score exactly 0.0 (exact role match is required for a
    non-zero score); degenerate contexts score the 0.5 fallback.
    """
    scored = []
    for triple in triples:
        classifier = bundle.classifiers.get(triple.role)
        if classifier is None:
            scored.append(
                ScoredTriple(
                    triple=triple,
                    score=UNKNOWN_ROLE_SCORE,
                    note=f"no classifier for role {triple.role!r}",
                )
            )
            continue
        cfv = context_vector(triple.sentences, bundle.embedding)
        if cfv.is_zero:
            scored.append(
                ScoredTriple(triple=triple, score=OOV_FALLBACK_SCORE, oov_fallback=True)
            )
            continue
        scored.append(
            ScoredTriple(triple=triple, score=predict_proba(classifier, cfv.values))
        )
    return scored


def rank(scored: Iterable[ScoredTriple]) -> list[ScoredTriple]:
    """Order by decreasing score; equal scores order by ascending triple id."""
    return sorted(scored, key=lambda s: (-s.score, s.triple.id))


def write_scored(scored: Iterable[ScoredTriple], out: IO[str]) -> None:
    for item in scored:
        out.write(
            json.dumps(
                {
                    "id": item.triple.id,
                    "role": item.triple.role,
                    "score": item.score,
                    "oov_fallback": item.oov_fallback,
                }
            )
            + "\n"
        )
