"""Rater-agreement and outcome statistics for generation studies.

Implements Fleiss' kappa (Fleiss 1971) with the large-sample standard error
under the null for its 95% CI, unanimous-alignment counting, per-condition
success rates, and the Wilcoxon signed-rank test reported as (z, p, r).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import norm, rankdata

from .errors import (AllZeroDifferences, DegenerateMarginals, EmptyGroup,
                     ParseError)

CUSTOM = "custom"
GENERAL = "general"

# n <= this uses the exact (tie-aware) signed-rank distribution for p; the
# normal approximation takes over beyond it. z is always the tie-corrected
# normal statistic so effect sizes stay comparable.
EXACT_WILCOXON_LIMIT = 20


@dataclass(frozen=True)
class RatingRecord:
    """One rater's three binary judgements of one generated item."""

    item_id: str
    rater_id: str
    q1: bool
    q2: bool
    q3: bool
    condition: str | None = None


@dataclass(frozen=True)
class AgreementStats:
    kappa: float
    ci_low: float
    ci_high: float
    aligned_count: int
    total_count: int

    @property
    def aligned_fraction(self) -> float:
        return self.aligned_count / self.total_count


@dataclass(frozen=True)
class ConditionRates:
    """Success counts for one question, split by prompt condition."""

    custom_successes: int
    custom_total: int
    general_successes: int
    general_total: int

    @property
    def custom_fraction(self) -> float:
        return self.custom_successes / self.custom_total

    @property
    def general_fraction(self) -> float:
        return self.general_successes / self.general_total

    @property
    def overall_fraction(self) -> float:
        return ((self.custom_successes + self.general_successes)
                / (self.custom_total + self.general_total))


@dataclass(frozen=True)
class SuccessSummary:
    per_question: dict  # question name -> ConditionRates


@dataclass(frozen=True)
class WilcoxonResult:
    z: float
    p: float
    r: float
    n: int


def fleiss_kappa(ratings) -> AgreementStats:
    """Fleiss' kappa for an items x raters matrix of categorical labels.

    kappa = (P_bar - Pe_bar) / (1 - Pe_bar) with per-item agreement
    P_i = (sum_j n_ij^2 - n) / (n (n - 1)) and chance agreement from the
    squared category marginals. The 95% CI uses the large-sample standard
    error under the null (Fleiss, Nee & Landis 1979). An item is "aligned"
    when every rater chose the same category.
    """
    matrix = [list(row) for row in ratings]
    n_items = len(matrix)
    if n_items < 2:
        raise ValueError("need at least 2 items")
    n_raters = len(matrix[0])
    if n_raters < 2:
        raise ValueError("need at least 2 raters")
    if any(len(row) != n_raters for row in matrix):
        raise ValueError("every item needs the same number of raters")

    categories = sorted({str(x) for row in matrix for x in row})
    if len(categories) < 2:
        raise DegenerateMarginals(
            "all ratings fall in one category; kappa is undefined")
    index = {c: j for j, c in enumerate(categories)}
    counts = np.zeros((n_items, len(categories)))
    for i, row in enumerate(matrix):
        for x in row:
            counts[i, index[str(x)]] += 1

    n = n_raters
    p_i = ((counts ** 2).sum(axis=1) - n) / (n * (n - 1))
    p_bar = p_i.mean()
    marginals = counts.sum(axis=0) / (n_items * n)
    pe_bar = float((marginals ** 2).sum())
    if pe_bar >= 1.0:
        raise DegenerateMarginals("chance agreement is 1; kappa is undefined")
    kappa = (p_bar - pe_bar) / (1.0 - pe_bar)

    q = 1.0 - marginals
    pq = float((marginals * q).sum())
    se = (math.sqrt(2.0 / (n_items * n * (n - 1)))
          * math.sqrt(pq ** 2 - float((marginals * q * (q - marginals)).sum()))
          / pq)
    half = norm.ppf(0.975) * se
    aligned = int((counts.max(axis=1) == n).sum())
    return AgreementStats(kappa=float(kappa),
                          ci_low=max(-1.0, float(kappa - half)),
                          ci_high=min(1.0, float(kappa + half)),
                          aligned_count=aligned, total_count=n_items)


def _canonical_condition(condition: str | None) -> str:
    if condition in (CUSTOM, "object_specific"):
        return CUSTOM
    if condition == GENERAL:
        return GENERAL
    raise ValueError(f"item condition must be custom/general, got {condition!r}")


def success_rates(items) -> SuccessSummary:
    """Per-question success fractions split by prompt condition.

    `items` holds reconciled per-item results: (condition, {question: bool}).
    Both condition groups must be nonempty.
    """
    questions: list[str] = []
    groups: dict[str, dict[str, list[bool]]] = {CUSTOM: {}, GENERAL: {}}
    for condition, answers in items:
        cond = _canonical_condition(condition)
        for question, ok in answers.items():
            if question not in questions:
                questions.append(question)
            groups[cond].setdefault(question, []).append(bool(ok))
    for cond in (CUSTOM, GENERAL):
        if not groups[cond]:
            raise EmptyGroup(f"no items in the {cond} condition")

    per_question = {}
    for question in questions:
        c = groups[CUSTOM].get(question, [])
        g = groups[GENERAL].get(question, [])
        if not c or not g:
            raise EmptyGroup(f"question {question} missing a condition group")
        per_question[question] = ConditionRates(
            custom_successes=sum(c), custom_total=len(c),
            general_successes=sum(g), general_total=len(g))
    return SuccessSummary(per_question=per_question)


def _exact_signed_rank_p(ranks: np.ndarray, w_plus: float) -> float:
    """Exact two-sided p over all 2^n sign assignments of the given ranks.

    Computed by convolution over doubled ranks (integers even with midrank
    ties), so it stays cheap up to EXACT_WILCOXON_LIMIT pairs.
    """
    doubled = np.rint(2 * ranks).astype(int)
    total = int(doubled.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for d in doubled:
        shifted = np.zeros_like(counts)
        shifted[d:] = counts[:len(counts) - d]
        counts = counts + shifted
    counts /= counts.sum()
    w2 = int(round(2 * w_plus))
    lower = counts[:w2 + 1].sum()
    upper = counts[w2:].sum()
    return float(min(1.0, 2.0 * min(lower, upper)))


def wilcoxon_signed_rank(paired_a, paired_b) -> WilcoxonResult:
    """Paired signed-rank test with midranks for ties; zeros are dropped.

    z uses the normal approximation with the tie-corrected variance (no
    continuity correction). p is exact for small n (<= EXACT_WILCOXON_LIMIT),
    otherwise two-sided normal. r = z / sqrt(n) over informative pairs.
    """
    a = np.asarray(paired_a, dtype=np.float64)
    b = np.asarray(paired_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be equal-length 1-D sequences")
    d = a - b
    d = d[d != 0]
    if len(d) == 0:
        raise AllZeroDifferences("every paired difference is zero")
    n = len(d)
    if n < 5:
        raise ValueError("need >= 5 nonzero differences")

    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var -= ((tie_counts ** 3 - tie_counts).sum()) / 48.0
    if var <= 0:
        raise AllZeroDifferences("no variance in signed ranks")
    z = (w_plus - mu) / math.sqrt(var)

    if n <= EXACT_WILCOXON_LIMIT:
        p = _exact_signed_rank_p(ranks, w_plus)
    else:
        p = float(2.0 * norm.sf(abs(z)))
    return WilcoxonResult(z=float(z), p=p, r=float(z / math.sqrt(n)), n=n)


def load_ratings(path) -> list[RatingRecord]:
    """Read a ratings CSV: item_id,rater_id,q1,q2,q3,condition (0/1 bools)."""
    records = []
    with open(Path(path), "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"item_id", "rater_id", "q1", "q2", "q3"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ParseError(f"ratings file must have columns {sorted(required)}")
        for row in reader:
            try:
                records.append(RatingRecord(
                    item_id=row["item_id"], rater_id=row["rater_id"],
                    q1=bool(int(row["q1"])), q2=bool(int(row["q2"])),
                    q3=bool(int(row["q3"])),
                    condition=(row.get("condition") or None)))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad ratings row {row}: {exc}") from exc
    return records


def majority_reconcile(records: list[RatingRecord]):
    """Collapse multi-rater records to per-item booleans by majority vote.

    Returns (condition, {q1,q2,q3: bool}) tuples sorted by item id, ready for
    `success_rates`.
    """
    by_item: dict[str, list[RatingRecord]] = {}
    for rec in records:
        by_item.setdefault(rec.item_id, []).append(rec)
    items = []
    for item_id in sorted(by_item):
        group = by_item[item_id]
        conditions = {r.condition for r in group if r.condition}
        if len(conditions) > 1:
            raise ParseError(f"item {item_id} has conflicting conditions")
        condition = conditions.pop() if conditions else None
        answers = {}
        for q in ("q1", "q2", "q3"):
            votes = [getattr(r, q) for r in group]
            answers[q] = sum(votes) * 2 > len(votes)
        items.append((condition, answers))
    return items
