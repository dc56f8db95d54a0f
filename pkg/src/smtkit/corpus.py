"""Corpus loading, tokenization, cleaning and word-level transforms.

Text is handled as lists of token strings; a parallel corpus keeps its
sentence pairs in file order. All functions here are pure: they never
mutate their inputs, so corpus-level operations can be parallelized over
sentences without changing the result.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

Sentence = list[str]

BOUNDARY_APOSTROPHES = {"'", "’"}


@dataclass
class SentencePair:
    source: Sentence
    target: Sentence


@dataclass
class ParallelCorpus:
    """Sentence-aligned bilingual text. Pair order is stable."""

    pairs: list[SentencePair]
    source_lang: str
    target_lang: str

    def __post_init__(self):
        if self.source_lang == self.target_lang:
            raise ValueError("source and target language must differ")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass
class FrequencyLexicon:
    """Word form -> occurrence count; only positive counts are stored."""

    counts: dict[str, int] = field(default_factory=dict)
    total_tokens: int = 0

    @classmethod
    def from_sentences(cls, sentences) -> "FrequencyLexicon":
        counts = Counter()
        for sent in sentences:
            counts.update(sent)
        return cls(dict(counts), sum(counts.values()))

    def count(self, word: str) -> int:
        return self.counts.get(word, 0)

    def merge(self, other: "FrequencyLexicon") -> "FrequencyLexicon":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return FrequencyLexicon(dict(merged), self.total_tokens + other.total_tokens)


def _is_word_char(ch: str) -> bool:
    # Letters (any script, diacritics included), digits and combining marks
    # stay inside tokens; everything else splits off.
    cat = unicodedata.category(ch)
    return cat[0] in ("L", "N", "M")


def tokenize(raw: str, lang: str = "en") -> Sentence:
    """Split one line of text into tokens.

    Rules (fixed so results are reproducible without external tools):
      * runs of letters/digits/combining marks form one token;
      * an apostrophe between two word characters stays inside the token
        ("don't" is one token);
      * every other punctuation or symbol character becomes its own token.

    Joining the output with single spaces and re-tokenizing returns the
    same tokens (idempotence).
    """
    tokens: list[str] = []
    current: list[str] = []
    chars = raw.strip()
    for idx, ch in enumerate(chars):
        if _is_word_char(ch):
            current.append(ch)
        elif (
            ch in BOUNDARY_APOSTROPHES
            and current
            and idx + 1 < len(chars)
            and _is_word_char(chars[idx + 1])
        ):
            current.append(ch)
        elif ch.isspace():
            if current:
                tokens.append("".join(current))
                current = []
        else:
            if current:
                tokens.append("".join(current))
                current = []
            tokens.append(ch)
    if current:
        tokens.append("".join(current))
    return tokens


def clean_corpus(
    corpus: ParallelCorpus, max_len: int = 80, max_ratio: float = 9.0
) -> ParallelCorpus:
    """Drop pairs with an empty side, an overlong side, or extreme length ratio.

    A pair is kept iff both sides are non-empty, both have at most
    ``max_len`` tokens and max(len)/min(len) <= ``max_ratio``. Order of the
    surviving pairs is preserved; re-cleaning is a fixed point.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if max_ratio < 1:
        raise ValueError("max_ratio must be >= 1")
    kept = []
    for pair in corpus.pairs:
        ls, lt = len(pair.source), len(pair.target)
        if ls == 0 or lt == 0:
            continue
        if ls > max_len or lt > max_len:
            continue
        if max(ls, lt) / min(ls, lt) > max_ratio:
            continue
        kept.append(pair)
    return ParallelCorpus(kept, corpus.source_lang, corpus.target_lang)


class CaseModel:
    """Most frequent surface casing per lowercased word.

    Evidence from non-sentence-initial positions decides; sentence-initial
    occurrences only count for words never seen elsewhere. Ties go to the
    lexicographically smallest surface form.
    """

    def __init__(self, best: dict[str, str] | None = None):
        self.best = best or {}

    def lookup(self, word: str) -> str:
        return self.best.get(word.lower(), word)

    def __len__(self) -> int:
        return len(self.best)

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for key in sorted(self.best):
                f.write(f"{key}\t{self.best[key]}\n")

    @classmethod
    def from_file(cls, path) -> "CaseModel":
        best = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                key, _, value = line.partition("\t")
                best[key] = value
        return cls(best)


def train_truecaser(sentences) -> CaseModel:
    mid: dict[str, Counter] = {}
    initial: dict[str, Counter] = {}
    for sent in sentences:
        for pos, tok in enumerate(sent):
            bucket = initial if pos == 0 else mid
            bucket.setdefault(tok.lower(), Counter())[tok] += 1
    best = {}
    for key, counter in mid.items():
        best[key] = _most_frequent(counter)
    for key, counter in initial.items():
        if key not in best:
            best[key] = _most_frequent(counter)
    return CaseModel(best)


def _most_frequent(counter: Counter) -> str:
    top = max(counter.values())
    return min(form for form, n in counter.items() if n == top)


def truecase(sentence: Sentence, model: CaseModel) -> Sentence:
    return [model.lookup(tok) for tok in sentence]


def lowercase(sentence: Sentence) -> Sentence:
    return [tok.lower() for tok in sentence]


def _is_punct_token(tok: str) -> bool:
    return all(unicodedata.category(ch)[0] in ("P", "S") for ch in tok)


def asr_normalize(sentence: Sentence) -> Sentence:
    """Reduce a sentence to the bare word stream a speech recognizer emits:
    punctuation-only tokens dropped, everything lowercased."""
    return [tok.lower() for tok in sentence if not _is_punct_token(tok)]


def build_vocab(sentences) -> FrequencyLexicon:
    return FrequencyLexicon.from_sentences(sentences)


def _best_split(
    word: str, lexicon: FrequencyLexicon, min_part_len: int, max_parts: int
) -> tuple[float, list[str]] | None:
    """Highest-geometric-mean split of ``word`` into 2..max_parts lexicon
    entries, each at least ``min_part_len`` characters. None when no legal
    split exists."""
    best: tuple[float, list[str]] | None = None

    def extend(start: int, parts: list[str]):
        nonlocal best
        remaining = len(word) - start
        if parts and remaining == 0:
            if len(parts) < 2:
                return
            gm = math.exp(
                sum(math.log(lexicon.count(p)) for p in parts) / len(parts)
            )
            if best is None or gm > best[0]:
                best = (gm, list(parts))
            return
        if len(parts) >= max_parts or remaining < min_part_len:
            return
        for end in range(start + min_part_len, len(word) + 1):
            part = word[start:end]
            if lexicon.count(part) > 0:
                parts.append(part)
                extend(end, parts)
                parts.pop()

    extend(0, [])
    return best


def split_compounds(
    sentence: Sentence,
    lexicon: FrequencyLexicon,
    min_part_len: int = 3,
    max_parts: int = 2,
) -> Sentence:
    """Replace a word by its best split into known parts when the geometric
    mean of the part frequencies strictly exceeds the word's own frequency
    (zero for unseen words). Words without a qualifying split pass through.
    """
    if min_part_len < 1:
        raise ValueError("min_part_len must be >= 1")
    out: list[str] = []
    for word in sentence:
        split = _best_split(word, lexicon, min_part_len, max_parts)
        if split is not None and split[0] > lexicon.count(word):
            out.extend(split[1])
        else:
            out.append(word)
    return out


class TransformLexicon:
    """Surface form -> replacement form; absent keys map to themselves."""

    def __init__(self, mapping: dict[str, str] | None = None):
        self.mapping = mapping or {}

    def lookup(self, word: str) -> str:
        return self.mapping.get(word, word)

    def __len__(self) -> int:
        return len(self.mapping)

    @classmethod
    def from_file(cls, path) -> "TransformLexicon":
        mapping = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                key, _, value = line.partition("\t")
                mapping[key] = value
        return cls(mapping)

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for key in sorted(self.mapping):
                f.write(f"{key}\t{self.mapping[key]}\n")


def apply_transform(sentence: Sentence, lexicon: TransformLexicon) -> Sentence:
    return [lexicon.lookup(tok) for tok in sentence]


def read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def read_sentences(path, lang: str = "en") -> list[Sentence]:
    """Read a one-sentence-per-line file and tokenize each line."""
    return [tokenize(line, lang) for line in read_lines(path)]


def write_sentences(sentences, path):
    with open(path, "w", encoding="utf-8") as f:
        for sent in sentences:
            f.write(" ".join(sent) + "\n")


def read_parallel(
    source_path, target_path, source_lang: str, target_lang: str
) -> ParallelCorpus:
    """Load two aligned one-sentence-per-line files; line counts must match."""
    src_lines = read_lines(source_path)
    tgt_lines = read_lines(target_path)
    if len(src_lines) != len(tgt_lines):
        raise ValueError(
            f"line count mismatch: {source_path} has {len(src_lines)}, "
            f"{target_path} has {len(tgt_lines)}"
        )
    pairs = [
        SentencePair(tokenize(s, source_lang), tokenize(t, target_lang))
        for s, t in zip(src_lines, tgt_lines)
    ]
    return ParallelCorpus(pairs, source_lang, target_lang)
