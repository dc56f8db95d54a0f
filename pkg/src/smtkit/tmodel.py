"""Phrase table extraction/scoring and lexicalized reordering models.

Phrase pairs are the alignment-consistent boxes of a sentence pair: at
least one link inside, no link crossing the box boundary on either side,
both spans bounded by ``max_phrase_len``; unaligned boundary words extend
pairs in every consistent way. Scoring produces relative-frequency
translation probabilities in both directions plus lexical weights from
the word-level tables. Reordering models count monotone/swap/discontinuous
orientations per phrase pair, bidirectionally, with additive smoothing.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .align import NULL, AlignmentMatrix, TTable

MAX_PHRASE_LEN = 7
REORDER_SMOOTHING = 0.5

MSD = ("monotone", "swap", "discontinuous")
MSLR = ("monotone", "swap", "discontinuous-left", "discontinuous-right")
SCHEMES = {"msd": MSD, "hier-mslr": MSLR}

PHRASE_PENALTY = math.e


@dataclass(frozen=True)
class PhrasePair:
    """One phrase-pair occurrence: tokens, spans (inclusive) and the
    internal links re-indexed to the box."""

    src: tuple
    tgt: tuple
    src_span: tuple
    tgt_span: tuple
    links: frozenset


def extract_phrases(pair, alignment: AlignmentMatrix, max_phrase_len: int = MAX_PHRASE_LEN):
    """All alignment-consistent phrase pairs of one sentence pair, sorted
    by span coordinates."""
    if max_phrase_len < 1:
        raise ValueError("max_phrase_len must be >= 1")
    n, m = len(pair.source), len(pair.target)
    if alignment.n_source != n or alignment.n_target != m:
        raise ValueError(
            f"alignment is {alignment.n_source}x{alignment.n_target}, "
            f"sentence pair is {n}x{m}"
        )
    links = alignment.links
    aligned_tgt = {j for _, j in links}
    out = []
    for i1 in range(n):
        for i2 in range(i1, min(i1 + max_phrase_len, n)):
            inside = [(i, j) for i, j in links if i1 <= i <= i2]
            if not inside:
                continue
            j1 = min(j for _, j in inside)
            j2 = max(j for _, j in inside)
            if any(j1 <= j <= j2 and not i1 <= i <= i2 for i, j in links):
                continue
            js = j1
            while js >= 0 and (js == j1 or js not in aligned_tgt):
                je = j2
                while je < m and (je == j2 or je not in aligned_tgt):
                    if je - js + 1 <= max_phrase_len:
                        out.append(
                            PhrasePair(
                                src=tuple(pair.source[i1 : i2 + 1]),
                                tgt=tuple(pair.target[js : je + 1]),
                                src_span=(i1, i2),
                                tgt_span=(js, je),
                                links=frozenset(
                                    (i - i1, j - js) for i, j in inside
                                ),
                            )
                        )
                    je += 1
                js -= 1
    out.sort(key=lambda p: (p.src_span, p.tgt_span))
    return out


def _lexical_weight(src, tgt, links, table: TTable, transpose: bool) -> float:
    """Average-over-linked-words product: for each word on the explained
    side, average t over its linked words (NULL when unlinked), multiplied
    across the phrase."""
    if transpose:
        explained = tgt
        other = src
        link_map = defaultdict(list)
        for i, j in links:
            link_map[j].append(i)
    else:
        explained = src
        other = tgt
        link_map = defaultdict(list)
        for i, j in links:
            link_map[i].append(j)
    weight = 1.0
    for pos, word in enumerate(explained):
        partners = link_map.get(pos)
        if partners:
            avg = sum(table.prob(other[q], word) for q in partners) / len(partners)
        else:
            avg = table.prob(NULL, word)
        weight *= avg
    return weight


@dataclass
class PhraseTableEntry:
    src: tuple
    tgt: tuple
    phi_fwd: float  # p(src | tgt)
    lex_fwd: float
    phi_rev: float  # p(tgt | src)
    lex_rev: float
    penalty: float = PHRASE_PENALTY


class PhraseTable:
    def __init__(self):
        self.entries: dict[tuple, PhraseTableEntry] = {}
        self._by_src: dict[tuple, list[PhraseTableEntry]] = defaultdict(list)

    def add(self, entry: PhraseTableEntry):
        self.entries[(entry.src, entry.tgt)] = entry
        self._by_src[entry.src].append(entry)

    def options(self, src: tuple) -> list[PhraseTableEntry]:
        return self._by_src.get(tuple(src), [])

    def source_phrases(self):
        return self._by_src.keys()

    def __len__(self):
        return len(self.entries)

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for (src, tgt), e in sorted(self.entries.items()):
                fh.write(
                    f"{' '.join(src)} ||| {' '.join(tgt)} ||| "
                    f"{e.phi_fwd:.6g} {e.lex_fwd:.6g} {e.phi_rev:.6g} "
                    f"{e.lex_rev:.6g} {e.penalty:.6g}\n"
                )

    @classmethod
    def from_file(cls, path) -> "PhraseTable":
        table = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                src_s, tgt_s, scores = line.split(" ||| ")
                nums = [float(x) for x in scores.split()]
                table.add(
                    PhraseTableEntry(
                        tuple(src_s.split()), tuple(tgt_s.split()), *nums
                    )
                )
        return table


def extract_corpus(corpus, alignments, max_phrase_len: int = MAX_PHRASE_LEN):
    """Phrase-pair occurrences over a corpus with per-pair alignments."""
    if len(alignments) != len(corpus.pairs):
        raise ValueError("one alignment per sentence pair required")
    for pair, alignment in zip(corpus.pairs, alignments):
        yield from extract_phrases(pair, alignment, max_phrase_len)


def score_phrase_table(occurrences, ttable_fwd: TTable, ttable_rev: TTable) -> PhraseTable:
    """Relative-frequency phrase probabilities in both directions, with
    lexical weights taken as the best value over the occurrences' internal
    alignments."""
    pair_counts = defaultdict(int)
    src_counts = defaultdict(int)
    tgt_counts = defaultdict(int)
    lex_fwd: dict[tuple, float] = {}
    lex_rev: dict[tuple, float] = {}
    for occ in occurrences:
        key = (occ.src, occ.tgt)
        pair_counts[key] += 1
        src_counts[occ.src] += 1
        tgt_counts[occ.tgt] += 1
        lf = _lexical_weight(occ.src, occ.tgt, occ.links, ttable_fwd, transpose=False)
        lr = _lexical_weight(occ.src, occ.tgt, occ.links, ttable_rev, transpose=True)
        lex_fwd[key] = max(lex_fwd.get(key, 0.0), lf)
        lex_rev[key] = max(lex_rev.get(key, 0.0), lr)
    table = PhraseTable()
    for (src, tgt), c in sorted(pair_counts.items()):
        table.add(
            PhraseTableEntry(
                src=src,
                tgt=tgt,
                phi_fwd=c / tgt_counts[tgt],
                lex_fwd=lex_fwd[(src, tgt)],
                phi_rev=c / src_counts[src],
                lex_rev=lex_rev[(src, tgt)],
            )
        )
    return table


def _link_at(links, n: int, m: int, i: int, j: int) -> bool:
    # virtual links off both sentence corners anchor boundary phrases
    if (i, j) == (-1, -1) or (i, j) == (n, m):
        return True
    return (i, j) in links


def _consistent_block(links, i1: int, i2: int, j1: int, j2: int) -> bool:
    inside = [(i, j) for i, j in links if i1 <= i <= i2 and j1 <= j <= j2]
    if not inside:
        return False
    return not any(
        (i1 <= i <= i2) != (j1 <= j <= j2) for i, j in links
    )


def _block_exists(links, n, m, tgt_edge, tgt_side, src_edge, src_side):
    """Is there a consistent block whose target span touches ``tgt_edge``
    on ``tgt_side`` ('end'/'start') and source span touches ``src_edge``?"""
    for a in range(n):
        for b in range(m):
            if tgt_side == "end":
                j1, j2 = b, tgt_edge
            else:
                j1, j2 = tgt_edge, b
            if src_side == "end":
                i1, i2 = a, src_edge
            else:
                i1, i2 = src_edge, a
            if i1 > i2 or j1 > j2:
                continue
            if _consistent_block(links, i1, i2, j1, j2):
                return True
    return False


def classify_orientation(
    occ: PhrasePair,
    alignment: AlignmentMatrix,
    direction: str = "fwd",
    scheme: str = "msd",
) -> str:
    """Orientation of one phrase occurrence relative to its neighbour.

    ``fwd`` looks at the previous target word, ``bwd`` at the next one.
    msd checks single corner links; hier-mslr accepts any consistent
    neighbouring block (any size) at the corner and splits discontinuous
    into left/right by where the neighbouring target word's links lie.
    Virtual links at (-1,-1) and (n,m) make boundary phrases well-defined.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if direction not in ("fwd", "bwd"):
        raise ValueError(f"unknown direction {direction!r}")
    links = alignment.links
    n, m = alignment.n_source, alignment.n_target
    i1, i2 = occ.src_span
    j1, j2 = occ.tgt_span
    if direction == "fwd":
        q = j1 - 1
        mono_corner = (i1 - 1, q)
        swap_corner = (i2 + 1, q)
    else:
        q = j2 + 1
        mono_corner = (i2 + 1, q)
        swap_corner = (i1 - 1, q)

    if scheme == "msd":
        if _link_at(links, n, m, *mono_corner):
            return "monotone"
        if _link_at(links, n, m, *swap_corner):
            return "swap"
        return "discontinuous"

    # hier-mslr
    if direction == "fwd" and q < 0:
        return "monotone" if i1 == 0 else "discontinuous-left"
    if direction == "bwd" and q >= m:
        return "monotone" if i2 == n - 1 else "discontinuous-right"
    if direction == "fwd":
        if i1 - 1 >= 0 and _block_exists(links, n, m, q, "end", i1 - 1, "end"):
            return "monotone"
        if i2 + 1 < n and _block_exists(links, n, m, q, "end", i2 + 1, "start"):
            return "swap"
    else:
        if i2 + 1 < n and _block_exists(links, n, m, q, "start", i2 + 1, "start"):
            return "monotone"
        if i1 - 1 >= 0 and _block_exists(links, n, m, q, "start", i1 - 1, "end"):
            return "swap"
    return _discontinuous_side(links, n, m, q, i1, i2, direction)


def _discontinuous_side(links, n, m, q, i1, i2, direction) -> str:
    """left/right split for hier-mslr: follow the nearest aligned target
    word on the neighbour side and compare its smallest linked source
    position against the phrase's source span."""
    step = -1 if direction == "fwd" else 1
    pos = q
    while 0 <= pos < m:
        partners = sorted(i for i, j in links if j == pos)
        if partners:
            return (
                "discontinuous-left" if partners[0] < i1 else "discontinuous-right"
            )
        pos += step
    return "discontinuous-left" if direction == "fwd" else "discontinuous-right"


class ReorderingTable:
    """Per phrase pair, smoothed orientation distributions for the
    forward (previous-phrase) and backward (next-phrase) directions."""

    def __init__(self, scheme: str = "msd"):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        self.scheme = scheme
        self.classes = SCHEMES[scheme]
        self.entries: dict[tuple, tuple[dict, dict]] = {}
        self.fallback: tuple[dict, dict] | None = None

    def probs(self, src: tuple, tgt: tuple) -> tuple[dict, dict]:
        entry = self.entries.get((tuple(src), tuple(tgt)))
        if entry is not None:
            return entry
        if self.fallback is not None:
            return self.fallback
        uniform = {c: 1.0 / len(self.classes) for c in self.classes}
        return uniform, dict(uniform)

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# scheme: {self.scheme}\n")
            for (src, tgt), (fwd, bwd) in sorted(self.entries.items()):
                nums = [fwd[c] for c in self.classes] + [bwd[c] for c in self.classes]
                fh.write(
                    f"{' '.join(src)} ||| {' '.join(tgt)} ||| "
                    + " ".join(f"{x:.6g}" for x in nums)
                    + "\n"
                )

    @classmethod
    def from_file(cls, path) -> "ReorderingTable":
        with open(path, encoding="utf-8") as fh:
            lines = [line.rstrip("\n") for line in fh]
        scheme = "msd"
        if lines and lines[0].startswith("# scheme:"):
            scheme = lines[0].split(":", 1)[1].strip()
            lines = lines[1:]
        table = cls(scheme)
        k = len(table.classes)
        for line in lines:
            if not line:
                continue
            src_s, tgt_s, nums_s = line.split(" ||| ")
            nums = [float(x) for x in nums_s.split()]
            fwd = dict(zip(table.classes, nums[:k]))
            bwd = dict(zip(table.classes, nums[k:]))
            table.entries[(tuple(src_s.split()), tuple(tgt_s.split()))] = (fwd, bwd)
        table._refit_fallback()
        return table

    def _refit_fallback(self):
        if not self.entries:
            return
        agg_f = {c: 0.0 for c in self.classes}
        agg_b = {c: 0.0 for c in self.classes}
        for fwd, bwd in self.entries.values():
            for c in self.classes:
                agg_f[c] += fwd[c]
                agg_b[c] += bwd[c]
        zf = sum(agg_f.values())
        zb = sum(agg_b.values())
        self.fallback = (
            {c: v / zf for c, v in agg_f.items()},
            {c: v / zb for c, v in agg_b.items()},
        )


def train_reordering(
    corpus,
    alignments,
    scheme: str = "msd",
    max_phrase_len: int = MAX_PHRASE_LEN,
    smoothing: float = REORDER_SMOOTHING,
) -> ReorderingTable:
    """Count orientations of every extracted phrase occurrence in both
    directions and normalize with additive smoothing, so every orientation
    keeps strictly positive probability."""
    table = ReorderingTable(scheme)
    classes = table.classes
    counts_f = defaultdict(lambda: defaultdict(float))
    counts_b = defaultdict(lambda: defaultdict(float))
    for pair, alignment in zip(corpus.pairs, alignments):
        for occ in extract_phrases(pair, alignment, max_phrase_len):
            key = (occ.src, occ.tgt)
            counts_f[key][classify_orientation(occ, alignment, "fwd", scheme)] += 1
            counts_b[key][classify_orientation(occ, alignment, "bwd", scheme)] += 1
    for key in counts_f:
        fwd, bwd = {}, {}
        for c in classes:
            total_f = sum(counts_f[key].values()) + smoothing * len(classes)
            total_b = sum(counts_b[key].values()) + smoothing * len(classes)
            fwd[c] = (counts_f[key][c] + smoothing) / total_f
            bwd[c] = (counts_b[key][c] + smoothing) / total_b
        table.entries[key] = (fwd, bwd)
    table._refit_fallback()
    return table
