"""Train/test splitting and ranking metrics.

Precision/recall/F1 are computed for the positive class at a score
threshold (default 0.5). NDCG uses the standard exponential-gain form
(2^gain - 1) / log2(rank + 1) with graded gains that preserve the
required order highly relevant > relevant > neutral > irrelevant.
Undefined metrics (no predicted positives, no positive gain) are
reported as flagged conventional values rather than omitted.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

from .corpus import ContextualTriple, RelevanceLabel
from .pipeline import ModelBundle, ScoredTriple, binarize_label, rank, score_triples
from .seeds import make_rng

AGGREGATE_ROLE = "ALL"


@dataclass(frozen=True)
class GainMap:
    """Gain per relevance grade; must strictly decrease down the grades."""

    highly_relevant: float = 3.0
    relevant: float = 2.0
    neutral: float = 1.0
    irrelevant: float = 0.0

    def __post_init__(self):
        if not (self.highly_relevant > self.relevant > self.neutral > self.irrelevant):
            raise ValueError("gains must satisfy highly_relevant > relevant > neutral > irrelevant")
        if self.irrelevant < 0:
            raise ValueError("gains must be nonnegative")

    def for_label(self, label: RelevanceLabel) -> float:
        return {
            RelevanceLabel.HIGHLY_RELEVANT: self.highly_relevant,
            RelevanceLabel.RELEVANT: self.relevant,
            RelevanceLabel.NEUTRAL: self.neutral,
            RelevanceLabel.IRRELEVANT: self.irrelevant,
        }[label]


@dataclass(frozen=True)
class PRFResult:
    precision: float
    recall: float
    f1: float
    counts: tuple[int, int, int, int]  # (TP, FP, FN, TN)
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass(frozen=True)
class EvalReport:
    role: str
    precision: float
    recall: float
    f1: float
    ndcg: float
    threshold: float
    counts: tuple[int, int, int, int]
    precision_defined: bool = True
    recall_defined: bool = True
    ndcg_defined: bool = True


@dataclass(frozen=True)
class EvalRun:
    per_role: dict[str, EvalReport]
    aggregate: EvalReport


def split_train_test(
    labeled: Sequence[ContextualTriple], fraction: float, seed: int
) -> tuple[list[ContextualTriple], list[ContextualTriple]]:
    """Stratified split: ceil(fraction * n) of each (role, class) stratum trains.

    Strata are keyed by role and binarized label (neutral its own
    stratum), ordered canonically by triple id, and shuffled by a
    per-stratum RNG derived from the seed, so the same seed always yields
    the same partition regardless of input order.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    strata: dict[tuple[str, int | None], list[ContextualTriple]] = {}
    for triple in labeled:
        if triple.label is None:
            raise ValueError(f"triple {triple.id!r} has no label")
        strata.setdefault((triple.role, binarize_label(triple.label)), []).append(triple)

    train: list[ContextualTriple] = []
    test: list[ContextualTriple] = []
    for (role, target), members in sorted(strata.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        members = sorted(members, key=lambda t: t.id)
        rng = make_rng(seed, f"{role}|{target}")
        order = rng.permutation(len(members))
        take = math.ceil(fraction * len(members))
        for pos, idx in enumerate(order):
            (train if pos < take else test).append(members[idx])
    train.sort(key=lambda t: t.id)
    test.sort(key=lambda t: t.id)
    return train, test


def precision_recall_f1(
    scored: Sequence[ScoredTriple], threshold: float = 0.5
) -> PRFResult:
    """Positive-class P/R/F1 at the threshold (predict positive iff score >= t).

    Every scored triple must carry a binarizable gold label; neutral gold
    is excluded upstream. Undefined precision/recall (empty denominator)
    is reported as 0.0 with the matching flag cleared.
    """
    tp = fp = fn = tn = 0
    for item in scored:
        if item.triple.label is None:
            raise ValueError(f"triple {item.triple.id!r} has no gold label")
        gold = binarize_label(item.triple.label)
        if gold is None:
            raise ValueError(
                f"triple {item.triple.id!r} has a neutral gold label; exclude it upstream"
            )
        predicted = item.score >= threshold
        if predicted and gold == 1:
            tp += 1
        elif predicted and gold == 0:
            fp += 1
        elif not predicted and gold == 1:
            fn += 1
        else:
            tn += 1
    precision_defined = tp + fp > 0
    recall_defined = tp + fn > 0
    precision = tp / (tp + fp) if precision_defined else 0.0
    recall = tp / (tp + fn) if recall_defined else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return PRFResult(
        precision=precision,
        recall=recall,
        f1=f1,
        counts=(tp, fp, fn, tn),
        precision_defined=precision_defined,
        recall_defined=recall_defined,
    )


def dcg(gains: Sequence[float], cutoff: int | None = None) -> float:
    limit = len(gains) if cutoff is None else min(len(gains), cutoff)
    return sum(
        (2.0 ** gains[i] - 1.0) / math.log2(i + 2) for i in range(limit)
    )


def ndcg(
    ranking: Sequence[ContextualTriple],
    gains: GainMap = GainMap(),
    cutoff: int | None = None,
) -> float:
    """Normalized discounted cumulative gain of a ranked list of labeled triples.

    DCG sums (2^gain - 1) / log2(position + 1) over the (optionally cut
    off) ranking; the ideal DCG re-sorts the same gains in descending
    order. A ranking with no positive gain anywhere has IDCG 0 and
    returns 1.0 by convention.
    """
    if not ranking:
        raise ValueError("ranking is empty")
    gain_values = []
    for triple in ranking:
        if triple.label is None:
            raise ValueError(f"triple {triple.id!r} has no gold label")
        gain_values.append(gains.for_label(triple.label))
    ideal = sorted(gain_values, reverse=True)
    idcg = dcg(ideal, cutoff)
    if idcg == 0.0:
        return 1.0
    return dcg(gain_values, cutoff) / idcg


def _report(
    role: str,
    prf: PRFResult,
    ndcg_value: float,
    ndcg_defined: bool,
    threshold: float,
) -> EvalReport:
    return EvalReport(
        role=role,
        precision=prf.precision,
        recall=prf.recall,
        f1=prf.f1,
        ndcg=ndcg_value,
        threshold=threshold,
        counts=prf.counts,
        precision_defined=prf.precision_defined,
        recall_defined=prf.recall_defined,
        ndcg_defined=ndcg_defined,
    )


def evaluate(
    bundle: ModelBundle,
    test: Sequence[ContextualTriple],
    threshold: float = 0.5,
    gains: GainMap = GainMap(),
) -> EvalRun:
    """Score and rank the test triples per role, then compute the metrics.

    P/R/F1 cover the binarizable labels only; NDCG covers all four
    grades. Roles without a trained classifier still appear (their
    triples score 0.0). The aggregate micro-averages the confusion counts
    and macro-averages NDCG over roles.
    """
    by_role: dict[str, list[ContextualTriple]] = {}
    for triple in test:
        if triple.label is None:
            raise ValueError(f"test triple {triple.id!r} has no label")
        by_role.setdefault(triple.role, []).append(triple)

    per_role: dict[str, EvalReport] = {}
    totals = [0, 0, 0, 0]
    ndcg_values = []
    all_defined = True
    for role in sorted(by_role):
        ranked = rank(score_triples(by_role[role], bundle))
        binarizable = [s for s in ranked if binarize_label(s.triple.label) is not None]
        prf = precision_recall_f1(binarizable, threshold)
        ndcg_defined = any(gains.for_label(s.triple.label) > 0 for s in ranked)
        ndcg_value = ndcg([s.triple for s in ranked], gains)
        per_role[role] = _report(role, prf, ndcg_value, ndcg_defined, threshold)
        totals = [a + b for a, b in zip(totals, prf.counts)]
        ndcg_values.append(ndcg_value)
        all_defined = all_defined and ndcg_defined

    tp, fp, fn, tn = totals
    precision_defined = tp + fp > 0
    recall_defined = tp + fn > 0
    precision = tp / (tp + fp) if precision_defined else 0.0
    recall = tp / (tp + fn) if recall_defined else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    aggregate = EvalReport(
        role=AGGREGATE_ROLE,
        precision=precision,
        recall=recall,
        f1=f1,
        ndcg=sum(ndcg_values) / len(ndcg_values) if ndcg_values else 1.0,
        threshold=threshold,
        counts=(tp, fp, fn, tn),
        precision_defined=precision_defined,
        recall_defined=recall_defined,
        ndcg_defined=all_defined,
    )
    return EvalRun(per_role=per_role, aggregate=aggregate)


def _report_to_obj(report: EvalReport) -> dict:
    return {
        "role": report.role,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "ndcg": report.ndcg,
        "threshold": report.threshold,
        "counts": {
            "tp": report.counts[0],
            "fp": report.counts[1],
            "fn": report.counts[2],
            "tn": report.counts[3],
        },
        "precision_defined": report.precision_defined,
        "recall_defined": report.recall_defined,
        "ndcg_defined": report.ndcg_defined,
    }


def write_reports_json(runs: Mapping[float, EvalRun], out: IO[str]) -> None:
    """One JSON document: per-fraction blocks with per-role and aggregate reports."""
    doc = {
        "fractions": [
            {
                "fraction": fraction,
                "roles": {
                    role: _report_to_obj(report)
                    for role, report in sorted(run.per_role.items())
                },
                "aggregate": _report_to_obj(run.aggregate),
            }
            for fraction, run in sorted(runs.items())
        ]
    }
    json.dump(doc, out, indent=2, sort_keys=True)
    out.write("\n")


def write_reports_csv(runs: Mapping[float, EvalRun], out: IO[str]) -> None:
    """Flat rows (role, fraction, precision, recall, f1, ndcg), aggregate last."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["role", "fraction", "precision", "recall", "f1", "ndcg"])
    roles = sorted({role for run in runs.values() for role in run.per_role})
    for role in roles + [AGGREGATE_ROLE]:
        for fraction, run in sorted(runs.items()):
            report = run.aggregate if role == AGGREGATE_ROLE else run.per_role.get(role)
            if report is None:
                continue
            writer.writerow(
                [
                    role,
                    f"{fraction:g}",
                    f"{report.precision:.6f}",
                    f"{report.recall:.6f}",
                    f"{report.f1:.6f}",
                    f"{report.ndcg:.6f}",
                ]
            )
