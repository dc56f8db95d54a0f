"""Back-off/interpolated n-gram language models.

Witten-Bell and interpolated Kneser-Ney estimation over exact counts,
linear interpolation of trained models with EM-fitted weights, and ARPA
text import/export. Sentences are padded with n-1 begin markers and one
end marker; the end marker is predicted, begin markers are not. Unknown
words map to a dedicated UNK symbol that receives a small uniform floor
share at the unigram level, so every sentence is scorable.

Trained models are immutable and safe for concurrent queries.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

# share of unigram mass spread uniformly over vocabulary + UNK
FLOOR_MASS = 1e-7


@dataclass
class NGramCounts:
    """Exact k-gram counts (k = 1..order) from one corpus pass.

    Grams ending in the begin marker are never counted (the begin marker
    is not predictable). Alongside raw counts we keep, per gram, the
    number of distinct single-word left extensions (continuation counts),
    which drive the lower orders of Kneser-Ney.
    """

    order: int
    counts: list[dict[tuple, int]] = field(default_factory=list)
    context_totals: list[dict[tuple, int]] = field(default_factory=list)
    followers: list[dict[tuple, int]] = field(default_factory=list)
    continuations: list[dict[tuple, int]] = field(default_factory=list)
    cont_context_totals: list[dict[tuple, int]] = field(default_factory=list)
    sentences: int = 0

    def count(self, gram: tuple) -> int:
        k = len(gram)
        if not 1 <= k <= self.order:
            return 0
        return self.counts[k].get(gram, 0)

    def continuation(self, gram: tuple) -> int:
        return self.continuations[len(gram)].get(gram, 0)


def count_ngrams(sentences, order: int) -> NGramCounts:
    if order < 1:
        raise ValueError("order must be >= 1")
    counts = [None] + [defaultdict(int) for _ in range(order)]
    nsent = 0
    for sent in sentences:
        nsent += 1
        padded = [BOS] * (order - 1) + list(sent) + [EOS]
        for k in range(1, order + 1):
            for i in range(len(padded) - k + 1):
                gram = tuple(padded[i : i + k])
                if gram[-1] == BOS:
                    continue
                counts[k][gram] += 1

    context_totals = [None] + [defaultdict(int) for _ in range(order)]
    followers = [None] + [defaultdict(int) for _ in range(order)]
    left_types = [None] + [defaultdict(set) for _ in range(order)]
    for k in range(1, order + 1):
        for gram, c in counts[k].items():
            context_totals[k][gram[:-1]] += c
        seen_follow = defaultdict(set)
        for gram in counts[k]:
            seen_follow[gram[:-1]].add(gram[-1])
        for ctx, words in seen_follow.items():
            followers[k][ctx] = len(words)
        if k >= 2:
            for gram in counts[k]:
                left_types[k][gram[1:]].add(gram[0])

    continuations = [None] + [defaultdict(int) for _ in range(order)]
    cont_context_totals = [None] + [defaultdict(int) for _ in range(order)]
    for k in range(2, order + 1):
        for suffix, lefts in left_types[k].items():
            continuations[k - 1][suffix] = len(lefts)
    for k in range(1, order):
        for gram, c in continuations[k].items():
            cont_context_totals[k][gram[:-1]] += c

    return NGramCounts(
        order=order,
        counts=[None] + [dict(counts[k]) for k in range(1, order + 1)],
        context_totals=[None] + [dict(context_totals[k]) for k in range(1, order + 1)],
        followers=[None] + [dict(followers[k]) for k in range(1, order + 1)],
        continuations=[None] + [dict(continuations[k]) for k in range(1, order + 1)],
        cont_context_totals=[None]
        + [dict(cont_context_totals[k]) for k in range(1, order + 1)],
        sentences=nsent,
    )


class LanguageModel:
    """Shared scoring interface: conditional probabilities, sentence log
    probability (natural log) and corpus perplexity."""

    order: int = 1

    def prob(self, word: str, context: tuple = ()) -> float:
        raise NotImplementedError

    def begin_state(self) -> tuple:
        return (BOS,) * (self.order - 1)

    def score_word(self, state: tuple, word: str) -> tuple[float, tuple]:
        p = self.prob(word, state)
        new_state = (state + (word,))[-(self.order - 1) :] if self.order > 1 else ()
        return math.log(p), new_state

    def logprob(self, sentence) -> float:
        state = self.begin_state()
        total = 0.0
        for tok in list(sentence) + [EOS]:
            lp, state = self.score_word(state, tok)
            total += lp
        return total

    def perplexity(self, corpus) -> float:
        total, events = 0.0, 0
        for sent in corpus:
            total += self.logprob(sent)
            events += len(sent) + 1
        if events == 0:
            raise ValueError("cannot compute perplexity of an empty corpus")
        return math.exp(-total / events)


class NGramLM(LanguageModel):
    """Smoothed n-gram model over a closed vocabulary + UNK.

    ``smoothing`` is "witten-bell" or "kneser-ney". Kneser-Ney uses one
    fixed discount per order, D_k = n1/(n1 + 2*n2) from the count-of-counts
    at that order; an order with n1 = 0 (discount would vanish and strand
    the lower orders) falls back to Witten-Bell, recorded in ``metadata``.
    """

    def __init__(self, counts: NGramCounts, smoothing: str):
        if smoothing not in ("witten-bell", "kneser-ney"):
            raise ValueError(f"unknown smoothing {smoothing!r}")
        if not counts.counts[1]:
            raise ValueError("no training data")
        self.order = counts.order
        self.smoothing = smoothing
        self.counts = counts
        vocab = set(g[0] for g in counts.counts[1])
        vocab.add(UNK)
        self.vocab = frozenset(vocab)
        self._vocab_size = len(vocab)
        self.discounts: dict[int, float] = {}
        self.metadata: dict = {"fallback_orders": []}
        if smoothing == "kneser-ney":
            for k in range(1, self.order + 1):
                if k == self.order:
                    source = counts.counts[k]
                else:
                    source = counts.continuations[k] or counts.counts[k]
                n1 = sum(1 for c in source.values() if c == 1)
                n2 = sum(1 for c in source.values() if c == 2)
                if n1 == 0:
                    self.metadata["fallback_orders"].append(k)
                    self.discounts[k] = None
                else:
                    self.discounts[k] = n1 / (n1 + 2 * n2)

    def prediction_vocab(self) -> list[str]:
        """Words the model can predict: training vocabulary + UNK. The
        begin marker is never predicted."""
        return sorted(self.vocab)

    def map_word(self, word: str) -> str:
        return word if word in self.vocab or word == EOS else UNK

    def prob(self, word: str, context: tuple = ()) -> float:
        word = self.map_word(word)
        ctx = tuple(self.map_word(w) if w != BOS else BOS for w in context)
        ctx = ctx[-(self.order - 1) :] if self.order > 1 else ()
        return self._prob_order(word, ctx, len(ctx) + 1)

    def _uniform(self) -> float:
        return 1.0 / self._vocab_size

    def _prob_order(self, word: str, ctx: tuple, k: int) -> float:
        if k == 1:
            base = self._unigram(word)
            return (1.0 - FLOOR_MASS) * base + FLOOR_MASS * self._uniform()
        if self.smoothing == "kneser-ney" and self.discounts.get(k) is not None:
            p = self._kn_order(word, ctx, k)
        else:
            p = self._wb_order(word, ctx, k)
        return p

    def _wb_order(self, word: str, ctx: tuple, k: int) -> float:
        den = self.counts.context_totals[k].get(ctx, 0)
        if den == 0:
            return self._prob_order(word, ctx[1:], k - 1)
        types = self.counts.followers[k].get(ctx, 0)
        lam = types / (types + den)
        num = self.counts.counts[k].get(ctx + (word,), 0)
        return (1.0 - lam) * num / den + lam * self._prob_order(word, ctx[1:], k - 1)

    def _kn_order(self, word: str, ctx: tuple, k: int) -> float:
        d = self.discounts[k]
        if k == self.order:
            den = self.counts.context_totals[k].get(ctx, 0)
            num = self.counts.counts[k].get(ctx + (word,), 0)
        else:
            den = self.counts.cont_context_totals[k].get(ctx, 0)
            num = self.counts.continuations[k].get(ctx + (word,), 0)
        if den == 0:
            return self._prob_order(word, ctx[1:], k - 1)
        types = self.counts.followers[k].get(ctx, 0)
        backoff = d * types / den
        return max(num - d, 0.0) / den + backoff * self._prob_order(
            word, ctx[1:], k - 1
        )

    def _unigram(self, word: str) -> float:
        counts = self.counts
        if self.smoothing == "kneser-ney" and self.order > 1:
            d = self.discounts.get(1)
            den = counts.cont_context_totals[1].get((), 0)
            num = counts.continuations[1].get((word,), 0)
            types = len(counts.continuations[1])
            if den == 0:
                return self._wb_unigram(word)
            if d is None:
                # degenerate count-of-counts at the unigram level
                lam = types / (types + den)
                return (1.0 - lam) * num / den + lam * self._uniform()
            return max(num - d, 0.0) / den + d * types / den * self._uniform()
        if self.smoothing == "kneser-ney":
            d = self.discounts.get(1)
            if d is not None:
                den = counts.context_totals[1].get((), 0)
                num = counts.counts[1].get((word,), 0)
                types = counts.followers[1].get((), 0)
                return max(num - d, 0.0) / den + d * types / den * self._uniform()
        return self._wb_unigram(word)

    def _wb_unigram(self, word: str) -> float:
        counts = self.counts
        den = counts.context_totals[1].get((), 0)
        num = counts.counts[1].get((word,), 0)
        types = counts.followers[1].get((), 0)
        lam = types / (types + den)
        return (1.0 - lam) * num / den + lam * self._uniform()

    def backoff_weight(self, ctx: tuple) -> float | None:
        """Factor applied to the lower-order probability for extensions of
        ``ctx`` that were never observed (the ARPA back-off weight)."""
        k = len(ctx) + 1
        if k > self.order:
            return None
        if self.smoothing == "kneser-ney" and self.discounts.get(k) is not None:
            d = self.discounts[k]
            if k == self.order:
                den = self.counts.context_totals[k].get(ctx, 0)
            else:
                den = self.counts.cont_context_totals[k].get(ctx, 0)
            if den == 0:
                return None
            types = self.counts.followers[k].get(ctx, 0)
            return d * types / den
        den = self.counts.context_totals[k].get(ctx, 0)
        if den == 0:
            return None
        types = self.counts.followers[k].get(ctx, 0)
        return types / (types + den)


def estimate_wb(counts: NGramCounts) -> NGramLM:
    return NGramLM(counts, "witten-bell")


def estimate_kn(counts: NGramCounts) -> NGramLM:
    return NGramLM(counts, "kneser-ney")


def train(sentences, order: int, smoothing: str = "kneser-ney") -> NGramLM:
    return NGramLM(count_ngrams(sentences, order), smoothing)


class InterpolatedLM(LanguageModel):
    """Pointwise mixture of trained models with fixed weights."""

    def __init__(self, components, weights):
        if len(components) != len(weights):
            raise ValueError("one weight per component required")
        total = sum(weights)
        if any(w < 0 for w in weights) or abs(total - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        self.components = list(components)
        self.weights = list(weights)
        self.order = max(c.order for c in components)

    def prob(self, word: str, context: tuple = ()) -> float:
        return sum(
            w * c.prob(word, context) for w, c in zip(self.weights, self.components)
        )


def interpolate(components, heldout, tol: float = 1e-6, max_iter: int = 2000):
    """Fit mixture weights by EM on held-out token probabilities.

    Iterates until the per-token log-likelihood improves by less than
    ``tol``. The held-out likelihood never decreases between iterations;
    since it is concave in the weights, the fitted mixture is at least as
    good as every single component on the held-out set.
    """
    if len(components) < 2:
        raise ValueError("need at least two components")
    events: list[list[float]] = []
    for sent in heldout:
        for comp_probs in _event_probs(components, sent):
            events.append(comp_probs)
    if not events:
        raise ValueError("held-out corpus is empty")
    m = len(components)
    lams = [1.0 / m] * m
    prev_ll = None
    for _ in range(max_iter):
        resp_sums = [0.0] * m
        ll = 0.0
        for probs in events:
            mix = sum(l * p for l, p in zip(lams, probs))
            ll += math.log(mix)
            for j in range(m):
                resp_sums[j] += lams[j] * probs[j] / mix
        lams = [s / len(events) for s in resp_sums]
        per_token = ll / len(events)
        if prev_ll is not None and per_token - prev_ll < tol:
            break
        prev_ll = per_token
    return InterpolatedLM(components, lams)


def _event_probs(components, sentence):
    states = [c.begin_state() for c in components]
    for tok in list(sentence) + [EOS]:
        probs = []
        for j, comp in enumerate(components):
            probs.append(comp.prob(tok, states[j]))
            if comp.order > 1:
                states[j] = (states[j] + (tok,))[-(comp.order - 1) :]
        yield probs


def export_arpa(model: NGramLM, path) -> None:
    """Write the model in ARPA text format (log10 probabilities).

    Every counted gram is listed with its fully interpolated probability;
    contexts carry their back-off weight. Begin-marker grams get the
    conventional -99 placeholder probability.
    """
    order = model.order
    grams_per_order: list[list[tuple]] = []
    for k in range(1, order + 1):
        grams = set(model.counts.counts[k])
        if k < order or k == 1:
            grams.add((BOS,) * k)
        if k == 1:
            grams.add((UNK,))
        grams_per_order.append(sorted(grams))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\\data\\\n")
        for k in range(1, order + 1):
            f.write(f"ngram {k}={len(grams_per_order[k - 1])}\n")
        for k in range(1, order + 1):
            f.write(f"\n\\{k}-grams:\n")
            for gram in grams_per_order[k - 1]:
                if gram[-1] == BOS:
                    logp = -99.0
                else:
                    logp = math.log10(model._prob_order(gram[-1], gram[:-1], k))
                line = f"{logp!r}\t{' '.join(gram)}"
                if k < order:
                    bow = model.backoff_weight(gram)
                    if bow is not None:
                        line += f"\t{math.log10(bow)!r}"
                f.write(line + "\n")
        f.write("\n\\end\\\n")


class ArpaLM(LanguageModel):
    """Query-only model over an ARPA table (standard back-off lookup)."""

    def __init__(self, tables: list[dict], order: int):
        self.tables = tables
        self.order = order
        self.vocab = frozenset(g[0] for g in tables[1] if g[0] != BOS)

    def map_word(self, word: str) -> str:
        return word if word in self.vocab else UNK

    def prob(self, word: str, context: tuple = ()) -> float:
        word = self.map_word(word)
        ctx = tuple(w if w == BOS else self.map_word(w) for w in context)
        ctx = ctx[-(self.order - 1) :] if self.order > 1 else ()
        return self._lookup(word, ctx)

    def _lookup(self, word: str, ctx: tuple) -> float:
        gram = ctx + (word,)
        k = len(gram)
        entry = self.tables[k].get(gram) if k <= self.order else None
        if entry is not None and entry[0] > -98.0:
            return 10.0 ** entry[0]
        if not ctx:
            unk = self.tables[1][(UNK,)]
            return 10.0 ** unk[0]
        ctx_entry = self.tables[len(ctx)].get(ctx)
        bow = 10.0 ** ctx_entry[1] if ctx_entry and ctx_entry[1] is not None else 1.0
        return bow * self._lookup(word, ctx[1:])


def import_arpa(path) -> ArpaLM:
    tables: list[dict] = [None]
    order = 0
    current = None
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line == "\\data\\":
                continue
            if line == "\\end\\":
                break
            if line.startswith("ngram "):
                order += 1
                tables.append({})
                continue
            if line.startswith("\\") and line.endswith("-grams:"):
                current = int(line[1:].split("-")[0])
                continue
            if current is None:
                continue
            parts = line.split("\t")
            logp = float(parts[0])
            gram = tuple(parts[1].split(" "))
            bow = float(parts[2]) if len(parts) > 2 else None
            tables[current][gram] = (logp, bow)
    if order == 0:
        raise ValueError(f"{path} is not an ARPA file")
    return ArpaLM(tables, order)
