"""IBM-style lexical translation models and alignment symmetrization.

Model 1 and the diagonal-reparameterized Model 2 are trained by EM over a
parallel corpus; each model explains the source words of a pair given the
target words plus a NULL word. Viterbi alignment produces one link (or
NULL) per source position; two directional alignments are merged with the
intersection/union/grow-diag family of heuristics.

The E-step parallelizes over sentence pairs in principle; counts are
plain sums, so any merge order gives identical tables.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

NULL = "<null>"

# NULL stays available even for words never seen in training
NULL_FLOOR = 1e-12

HEURISTICS = (
    "intersection",
    "union",
    "grow-diag",
    "grow-diag-final",
    "grow-diag-final-and",
)
_ALIASES = {"gd": "grow-diag", "gdf": "grow-diag-final", "gdfa": "grow-diag-final-and"}


class TTable:
    """Lexical table t(f|e): probability of source word f given target
    word e (NULL included). Rows sum to one."""

    def __init__(self):
        self.rows: dict[str, dict[str, float]] = {}
        self.log_likelihoods: list[float] = []

    def prob(self, e: str, f: str) -> float:
        p = self.rows.get(e, {}).get(f, 0.0)
        if e == NULL:
            return max(p, NULL_FLOOR)
        return p

    def row(self, e: str) -> dict[str, float]:
        return self.rows.get(e, {})

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for e in sorted(self.rows):
                for f in sorted(self.rows[e]):
                    fh.write(f"{e}\t{f}\t{self.rows[e][f]!r}\n")

    @classmethod
    def from_file(cls, path) -> "TTable":
        table = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                e, f, p = line.split("\t")
                table.rows.setdefault(e, {})[f] = float(p)
        return table


@dataclass
class Model2Params:
    """Diagonal-reparameterized Model 2: link weights favour positions
    near the diagonal with strength ``tension``; ``null_prob`` is the
    fixed probability of aligning to NULL."""

    ttable: TTable
    tension: float
    null_prob: float

    def __post_init__(self):
        if self.tension < 0:
            raise ValueError("tension must be >= 0")
        if not 0 <= self.null_prob < 1:
            raise ValueError("null_prob must be in [0, 1)")


def position_weights(
    j: int, src_len: int, tgt_len: int, tension: float, null_prob: float
) -> list[float]:
    """Weights over target positions 0..tgt_len-1 for source position j;
    together with ``null_prob`` they sum to one."""
    scores = [
        math.exp(-tension * abs((i + 1) / tgt_len - (j + 1) / src_len))
        for i in range(tgt_len)
    ]
    z = sum(scores)
    return [(1.0 - null_prob) * s / z for s in scores]


def _candidate_weights(params, src_len: int, tgt_len: int) -> list[list[float]]:
    """Per source position, weights over target positions + NULL (last)."""
    if isinstance(params, Model2Params):
        out = []
        for j in range(src_len):
            w = position_weights(j, src_len, tgt_len, params.tension, params.null_prob)
            out.append(w + [params.null_prob])
        return out
    uniform = 1.0 / (tgt_len + 1)
    return [[uniform] * (tgt_len + 1) for _ in range(src_len)]


def _ttable_of(params) -> TTable:
    return params.ttable if isinstance(params, Model2Params) else params


def _em(corpus, iterations: int, params) -> None:
    """EM over the corpus, updating the table inside ``params`` in place
    and recording the corpus log-likelihood of each iteration (computed
    with the table the iteration started from, hence non-decreasing)."""
    table = _ttable_of(params)
    f_vocab = set()
    for pair in corpus:
        f_vocab.update(pair.source)
    if not f_vocab:
        raise ValueError("no training data")
    uniform = 1.0 / len(f_vocab)
    for pair in corpus:
        for e in pair.target + [NULL]:
            row = table.rows.setdefault(e, {})
            for f in pair.source:
                row.setdefault(f, uniform)

    for _ in range(iterations):
        counts: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
        ll = 0.0
        for pair in corpus:
            src, tgt = pair.source, pair.target
            if not src or not tgt:
                continue
            weights = _candidate_weights(params, len(src), len(tgt))
            cands = tgt + [NULL]
            for j, f in enumerate(src):
                scores = [w * table.prob(e, f) for w, e in zip(weights[j], cands)]
                z = sum(scores)
                ll += math.log(z)
                for e, s in zip(cands, scores):
                    counts[e][f] += s / z
        for e, row in counts.items():
            z = sum(row.values())
            table.rows[e] = {f: c / z for f, c in row.items()}
        table.log_likelihoods.append(ll)


def train_model1(corpus, iterations: int = 5) -> TTable:
    """EM-train Model 1 (uniform link positions, NULL included)."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    table = TTable()
    _em(corpus, iterations, table)
    return table


def train_model2_diag(
    corpus, iterations: int = 5, tension: float = 4.0, null_prob: float = 0.08
) -> Model2Params:
    """EM-train the diagonal Model 2 with fixed tension and NULL
    probability. With tension 0 the position weights are uniform."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    params = Model2Params(TTable(), tension, null_prob)
    _em(corpus, iterations, params)
    return params


def viterbi_align(params, src: list[str], tgt: list[str]) -> list[int | None]:
    """Best link (target index or None for NULL) per source position.

    Ties go to the smaller target index; NULL loses ties against word
    links.
    """
    table = _ttable_of(params)
    weights = _candidate_weights(params, len(src), len(tgt))
    links: list[int | None] = []
    for j, f in enumerate(src):
        best_i: int | None = None
        best_score = -1.0
        for i, e in enumerate(tgt):
            score = weights[j][i] * table.prob(e, f)
            if score > best_score:
                best_score, best_i = score, i
        null_score = weights[j][len(tgt)] * table.prob(NULL, f)
        if null_score > best_score:
            best_i = None
        links.append(best_i)
    return links


def directional_links(
    alignment: list[int | None], reverse: bool = False
) -> set[tuple[int, int]]:
    """Convert per-position links to (source, target) pairs. ``reverse``
    marks alignments produced with the pair swapped (per target position).
    """
    if reverse:
        return {(i, j) for j, i in enumerate(alignment) if i is not None}
    return {(j, i) for j, i in enumerate(alignment) if i is not None}


@dataclass
class AlignmentMatrix:
    """Link set over a source-length x target-length grid."""

    n_source: int
    n_target: int
    links: set = field(default_factory=set)

    def __post_init__(self):
        for i, j in self.links:
            if not (0 <= i < self.n_source and 0 <= j < self.n_target):
                raise ValueError(f"link ({i},{j}) outside {self.n_source}x{self.n_target}")

    def __contains__(self, link) -> bool:
        return link in self.links

    def pharaoh(self) -> str:
        return " ".join(f"{i}-{j}" for i, j in sorted(self.links))


def parse_pharaoh(line: str) -> set[tuple[int, int]]:
    links = set()
    for chunk in line.split():
        i, _, j = chunk.partition("-")
        links.add((int(i), int(j)))
    return links


_NEIGHBORS = [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)]


def symmetrize(
    fwd: set, rev: set, n_source: int, n_target: int, heuristic: str = "grow-diag-final-and"
) -> AlignmentMatrix:
    """Merge two directional link sets over the same sentence pair.

    grow-diag seeds with the intersection and repeatedly adds union points
    adjacent (including diagonally) to current points while either endpoint
    word is still unaligned; points are scanned sorted by (target, source)
    and additions take effect immediately, so the result depends on this
    documented order. The final step admits leftover union points in the
    same scan order, first those with both endpoints unaligned, then (for
    grow-diag-final) those with at least one; running the strict phase
    first keeps grow-diag-final-and a subset of grow-diag-final.
    """
    heuristic = _ALIASES.get(heuristic, heuristic)
    if heuristic not in HEURISTICS:
        raise ValueError(f"unknown heuristic {heuristic!r}")
    for links in (fwd, rev):
        for i, j in links:
            if not (0 <= i < n_source and 0 <= j < n_target):
                raise ValueError(
                    f"link ({i},{j}) outside {n_source}x{n_target} grid"
                )
    union = fwd | rev
    if heuristic == "union":
        return AlignmentMatrix(n_source, n_target, set(union))
    current = fwd & rev
    if heuristic == "intersection":
        return AlignmentMatrix(n_source, n_target, current)

    src_cov = {i for i, _ in current}
    tgt_cov = {j for _, j in current}

    def scan_order(points):
        return sorted(points, key=lambda link: (link[1], link[0]))

    changed = True
    while changed:
        changed = False
        for i, j in scan_order(current):
            for di, dj in _NEIGHBORS:
                cand = (i + di, j + dj)
                if cand in current or cand not in union:
                    continue
                if cand[0] not in src_cov or cand[1] not in tgt_cov:
                    current.add(cand)
                    src_cov.add(cand[0])
                    tgt_cov.add(cand[1])
                    changed = True

    if heuristic in ("grow-diag-final", "grow-diag-final-and"):
        phases = [True] if heuristic == "grow-diag-final-and" else [True, False]
        for both_free in phases:
            for i, j in scan_order(union - current):
                if both_free:
                    ok = i not in src_cov and j not in tgt_cov
                else:
                    ok = i not in src_cov or j not in tgt_cov
                if ok:
                    current.add((i, j))
                    src_cov.add(i)
                    tgt_cov.add(j)
    return AlignmentMatrix(n_source, n_target, current)
