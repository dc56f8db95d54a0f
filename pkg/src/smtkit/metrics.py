"""Corpus-level MT/ASR evaluation: BLEU, NIST, TER and WER.

All metrics take equally long hypothesis and reference corpora with one
reference per segment. Segments may be given as token lists or as plain
strings (split on whitespace). Scoring is case-sensitive; callers decide
what normalization to apply beforehand.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

BLEU_ORDER = 4
NIST_ORDER = 5
TER_MAX_SHIFT_DIST = 10
TER_MAX_BLOCK = 10


def _tokens(segment) -> list[str]:
    if isinstance(segment, str):
        return segment.split()
    return list(segment)


def _pair_up(hypotheses, references):
    hyps = [_tokens(h) for h in hypotheses]
    refs = [_tokens(r) for r in references]
    if len(hyps) != len(refs):
        raise ValueError(
            f"corpus size mismatch: {len(hyps)} hypotheses vs {len(refs)} references"
        )
    return hyps, refs


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


@dataclass
class BleuResult:
    score: float
    precisions: list[float]
    brevity_penalty: float
    hyp_len: int
    ref_len: int


def bleu_stats(hypotheses, references, max_order: int = BLEU_ORDER) -> BleuResult:
    hyps, refs = _pair_up(hypotheses, references)
    matched = [0] * max_order
    total = [0] * max_order
    hyp_len = sum(len(h) for h in hyps)
    ref_len = sum(len(r) for r in refs)
    for hyp, ref in zip(hyps, refs):
        for n in range(1, max_order + 1):
            hyp_ngrams = _ngrams(hyp, n)
            ref_ngrams = _ngrams(ref, n)
            total[n - 1] += sum(hyp_ngrams.values())
            for gram, count in hyp_ngrams.items():
                matched[n - 1] += min(count, ref_ngrams.get(gram, 0))
    precisions = [m / t if t else 0.0 for m, t in zip(matched, total)]
    # orders with no n-grams at all (every segment shorter than n) have an
    # undefined precision and drop out of the geometric mean
    used = [p for p, t in zip(precisions, total) if t]
    if hyp_len == 0 or not used or any(p == 0.0 for p in used):
        return BleuResult(0.0, precisions, 0.0, hyp_len, ref_len)
    bp = math.exp(min(0.0, 1.0 - ref_len / hyp_len))
    mean = math.exp(sum(math.log(p) for p in used) / len(used))
    return BleuResult(100.0 * bp * mean, precisions, bp, hyp_len, ref_len)


def bleu(hypotheses, references, max_order: int = BLEU_ORDER) -> float:
    """Corpus BLEU in [0, 100]: geometric mean of clipped n-gram precisions
    times the brevity penalty. No smoothing: a zero precision at any order
    zeroes the score."""
    return bleu_stats(hypotheses, references, max_order).score


# NIST brevity factor hits 0.5 when the hypothesis is 2/3 of the reference.
_NIST_BETA = math.log(0.5) / math.log(2.0 / 3.0) ** 2


def nist(hypotheses, references, max_order: int = NIST_ORDER) -> float:
    """NIST score: information-weighted n-gram precision, arithmetically
    combined over orders 1..5, with the NIST brevity factor."""
    hyps, refs = _pair_up(hypotheses, references)
    # information weights from the reference corpus as a whole
    ref_counts = [Counter() for _ in range(max_order + 1)]
    for ref in refs:
        for n in range(1, max_order + 1):
            ref_counts[n].update(_ngrams(ref, n))
    total_ref_words = sum(ref_counts[1].values())

    def info(gram: tuple) -> float:
        n = len(gram)
        denom = ref_counts[n][gram]
        numer = total_ref_words if n == 1 else ref_counts[n - 1][gram[:-1]]
        if denom == 0 or numer == 0:
            return 0.0
        return math.log2(numer / denom)

    gained = [0.0] * (max_order + 1)
    attempted = [0] * (max_order + 1)
    hyp_len = sum(len(h) for h in hyps)
    ref_len = sum(len(r) for r in refs)
    for hyp, ref in zip(hyps, refs):
        for n in range(1, max_order + 1):
            hyp_ngrams = _ngrams(hyp, n)
            ref_ngrams = _ngrams(ref, n)
            attempted[n] += sum(hyp_ngrams.values())
            for gram, count in hyp_ngrams.items():
                gained[n] += min(count, ref_ngrams.get(gram, 0)) * info(gram)
    score = sum(
        gained[n] / attempted[n] for n in range(1, max_order + 1) if attempted[n]
    )
    if hyp_len == 0 or ref_len == 0:
        return 0.0
    ratio = min(hyp_len / ref_len, 1.0)
    brevity = math.exp(_NIST_BETA * math.log(ratio) ** 2) if ratio > 0 else 0.0
    return score * brevity


def levenshtein(a: list[str], b: list[str]) -> int:
    """Word-level edit distance (insert/delete/substitute, unit costs)."""
    if not a:
        return len(b)
    prev = list(range(len(b) + 1))
    for i, tok in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j in range(1, len(b) + 1):
            cost = 0 if tok == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def _ref_blocks(ref: list[str], max_block: int) -> set[tuple]:
    blocks = set()
    for i in range(len(ref)):
        for n in range(1, min(max_block, len(ref) - i) + 1):
            blocks.add(tuple(ref[i : i + n]))
    return blocks


def _ter_segment(hyp: list[str], ref: list[str]) -> tuple[int, int]:
    """(edits, shifts) for one segment: greedy block shifting, then plain
    edit distance. A shift moves a contiguous hypothesis block (length and
    displacement capped at 10) that matches some reference substring
    exactly; the best edit-distance reduction is applied each round until
    no shift helps."""
    blocks = _ref_blocks(ref, TER_MAX_BLOCK)
    current = list(hyp)
    shifts = 0
    dist = levenshtein(current, ref)
    while dist > 0:
        best = None
        for start in range(len(current)):
            for length in range(1, min(TER_MAX_BLOCK, len(current) - start) + 1):
                block = tuple(current[start : start + length])
                if block not in blocks:
                    continue
                rest = current[:start] + current[start + length :]
                for pos in range(len(rest) + 1):
                    if pos == start:
                        continue
                    if abs(pos - start) > TER_MAX_SHIFT_DIST:
                        continue
                    candidate = rest[:pos] + list(block) + rest[pos:]
                    d = levenshtein(candidate, ref)
                    if d < dist and (best is None or d < best[0]):
                        best = (d, candidate)
        if best is None:
            break
        dist, current = best
        shifts += 1
    return dist, shifts


def ter(hypotheses, references) -> float:
    """Translation edit rate (percent): word edits plus block shifts over
    the reference length. Never exceeds WER, since a shift is applied only
    when it reduces the edit count by at least as much as it costs."""
    hyps, refs = _pair_up(hypotheses, references)
    total_cost = 0
    ref_len = sum(len(r) for r in refs)
    if ref_len == 0:
        raise ValueError("empty reference corpus")
    for hyp, ref in zip(hyps, refs):
        edits, shifts = _ter_segment(hyp, ref)
        total_cost += edits + shifts
    return 100.0 * total_cost / ref_len


def wer(hypotheses, references) -> float:
    """Word error rate (percent): corpus-summed edit distance over the
    total reference word count."""
    hyps, refs = _pair_up(hypotheses, references)
    ref_len = sum(len(r) for r in refs)
    if ref_len == 0:
        raise ValueError("empty reference corpus")
    edits = sum(levenshtein(h, r) for h, r in zip(hyps, refs))
    return 100.0 * edits / ref_len


@dataclass
class MetricReport:
    bleu: float
    nist: float
    ter: float
    wer: float
    precisions: list[float] = field(default_factory=list)
    brevity_penalty: float = 0.0
    hyp_len: int = 0
    ref_len: int = 0
    edits: int = 0

    def lines(self) -> list[str]:
        return [
            f"BLEU = {self.bleu:.2f} (BP={self.brevity_penalty:.4f}, "
            + "/".join(f"{100 * p:.1f}" for p in self.precisions)
            + f", hyp_len={self.hyp_len}, ref_len={self.ref_len})",
            f"NIST = {self.nist:.4f}",
            f"TER  = {self.ter:.2f}",
            f"WER  = {self.wer:.2f} (edits={self.edits})",
        ]


def evaluate_all(hypotheses, references) -> MetricReport:
    hyps, refs = _pair_up(hypotheses, references)
    stats = bleu_stats(hyps, refs)
    edits = sum(levenshtein(h, r) for h, r in zip(hyps, refs))
    return MetricReport(
        bleu=stats.score,
        nist=nist(hyps, refs),
        ter=ter(hyps, refs),
        wer=wer(hyps, refs),
        precisions=stats.precisions,
        brevity_penalty=stats.brevity_penalty,
        hyp_len=stats.hyp_len,
        ref_len=stats.ref_len,
        edits=edits,
    )
