"""Scoring for indistinguishability surveys and n-gram overlap.

Surveys arrive as CSV rows of per-judgment records: who judged which poem,
the poem's true source, the participant's guess, and 1-5 ratings on
readability, evocativeness, and aesthetics. The harness reports per-source
failure ratios, a Pearson chi-square independence test (no continuity
correction; judgments treated as independent), and rating summaries.

BLEU is the standard geometric mean of modified n-gram precisions with a
brevity penalty; a zero precision is smoothed to 1/(2 * candidate n-gram
count) so the log never blows up.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

SOURCES = ("human", "machine")
MEASURES = ("readability", "evocativeness", "aesthetics")


class EvalError(Exception):
    pass


@dataclass
class SurveyRecord:
    participant: str
    poem: str
    true_source: str
    guess: str
    readability: int
    evocativeness: int
    aesthetics: int

    def __post_init__(self):
        if self.true_source not in SOURCES or self.guess not in SOURCES:
            raise EvalError(
                f"source fields must be one of {SOURCES}: "
                f"{self.true_source!r}, {self.guess!r}"
            )
        for measure in MEASURES:
            value = getattr(self, measure)
            if not 1 <= value <= 5:
                raise EvalError(f"{measure} must be in 1..5, got {value}")

    @property
    def failed(self) -> bool:
        return self.guess != self.true_source


def read_survey_csv(path: str | Path) -> list[SurveyRecord]:
    """Rows with header participant,poem,true_source,guess,readability,
    evocativeness,aesthetics."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            records.append(
                SurveyRecord(
                    participant=row["participant"],
                    poem=row["poem"],
                    true_source=row["true_source"].strip().lower(),
                    guess=row["guess"].strip().lower(),
                    readability=int(row["readability"]),
                    evocativeness=int(row["evocativeness"]),
                    aesthetics=int(row["aesthetics"]),
                )
            )
    if not records:
        raise EvalError(f"no survey records in {path}")
    return records


def failure_ratios(records: list[SurveyRecord]) -> tuple[float, float]:
    """Fraction of misidentified judgments per true source (human, machine)."""
    ratios = []
    for source in SOURCES:
        group = [r for r in records if r.true_source == source]
        if not group:
            raise EvalError(f"no records with true_source={source!r}")
        ratios.append(sum(r.failed for r in group) / len(group))
    return tuple(ratios)


def contingency_table(records: list[SurveyRecord]) -> list[list[int]]:
    """2x2 counts: rows human/machine, columns identified/misidentified."""
    table = [[0, 0], [0, 0]]
    for r in records:
        table[SOURCES.index(r.true_source)][1 if r.failed else 0] += 1
    return table


# ---------------------------------------------------------------------------
# Chi-square via the regularized incomplete gamma function


def _gamma_p_series(a: float, x: float) -> float:
    """Lower regularized gamma P(a, x) by series; good for x < a + 1."""
    term = 1.0 / a
    total = term
    n = a
    for _ in range(500):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _gamma_q_fraction(a: float, x: float) -> float:
    """Upper regularized gamma Q(a, x) by continued fraction; x >= a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_q(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a), the upper regularized gamma."""
    if a <= 0 or x < 0:
        raise ValueError(f"need a > 0 and x >= 0, got a={a}, x={x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_fraction(a, x)


def chi_square_survival(statistic: float, dof: int = 1) -> float:
    """P(chi-square with `dof` degrees of freedom >= statistic)."""
    return min(1.0, max(0.0, regularized_gamma_q(dof / 2.0, statistic / 2.0)))


def chi_square_test(table: list[list[int]]) -> tuple[float, int, float]:
    """Pearson independence test on a 2x2 table, no continuity correction.

    Returns (statistic, dof=1, p). Rows or columns that sum to zero leave
    expected counts undefined and are an error.
    """
    if len(table) != 2 or any(len(row) != 2 for row in table):
        raise EvalError("expected a 2x2 table")
    if any(c < 0 for row in table for c in row):
        raise EvalError("counts must be non-negative")
    row_sums = [sum(row) for row in table]
    col_sums = [table[0][j] + table[1][j] for j in range(2)]
    total = sum(row_sums)
    if any(s == 0 for s in row_sums) or any(s == 0 for s in col_sums):
        raise EvalError("a zero marginal leaves expected counts undefined")
    statistic = 0.0
    for i in range(2):
        for j in range(2):
            expected = row_sums[i] * col_sums[j] / total
            statistic += (table[i][j] - expected) ** 2 / expected
    return statistic, 1, chi_square_survival(statistic, 1)


def rating_summary(records: list[SurveyRecord]) -> dict:
    """Per-source mean and sample standard deviation for each measure."""
    summary: dict = {}
    for source in SOURCES:
        group = [r for r in records if r.true_source == source]
        if not group:
            raise EvalError(f"no records with true_source={source!r}")
        summary[source] = {}
        for measure in MEASURES:
            values = [getattr(r, measure) for r in group]
            mean = sum(values) / len(values)
            if len(values) > 1:
                var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
            else:
                var = 0.0
            summary[source][measure] = (mean, math.sqrt(var))
    return summary


# ---------------------------------------------------------------------------
# BLEU


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def modified_precision(candidate: list[str], references: list[list[str]], n: int):
    """Clipped n-gram precision: candidate counts capped by the best
    reference count. Returns (matched, total)."""
    counts = _ngrams(candidate, n)
    total = sum(counts.values())
    if total == 0:
        return 0, 0
    matched = 0
    for gram, count in counts.items():
        best_ref = max(_ngrams(ref, n)[gram] for ref in references)
        matched += min(count, best_ref)
    return matched, total


def brevity_penalty(candidate_len: int, reference_lens: list[int]) -> float:
    closest = min(reference_lens, key=lambda r: (abs(r - candidate_len), r))
    if candidate_len >= closest:
        return 1.0
    return math.exp(1.0 - closest / candidate_len)


def bleu(candidate: str, references: list[str], max_n: int = 4) -> float:
    """Geometric mean of modified 1..max_n-gram precisions times the brevity
    penalty. Orders longer than the candidate are dropped (weights
    renormalize); a zero precision smooths to 1/(2 * total n-grams)."""
    cand_tokens = candidate.split()
    ref_tokens = [r.split() for r in references]
    if not cand_tokens:
        raise EvalError("candidate has no tokens")
    if not ref_tokens or any(not r for r in ref_tokens):
        raise EvalError("need at least one non-empty reference")
    log_sum = 0.0
    orders = 0
    for n in range(1, max_n + 1):
        matched, total = modified_precision(cand_tokens, ref_tokens, n)
        if total == 0:
            continue
        precision = matched / total if matched else 1.0 / (2.0 * total)
        log_sum += math.log(precision)
        orders += 1
    geo = math.exp(log_sum / orders)
    return brevity_penalty(len(cand_tokens), [len(r) for r in ref_tokens]) * geo
