"""Log-linear phrase-based stack decoder.

Hypotheses are organized in stacks by number of covered source words and
recombined on (coverage, LM context, last covered span); the last span
start is part of the state because swap orientations depend on it. Each
hypothesis carries the feature increments of its own extension, so any
score can be recomputed by replaying the back-pointer chain. Unknown
source words are copied through with a dedicated OOV feature, so every
sentence is translatable.

With pruning disabled the search is exhaustive over all segmentations
and reorderings permitted by the distortion limit.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, fields

from .lm import EOS

# feature names, in canonical serialization order
SCALAR_FEATURES = (
    "phi_fwd",
    "lex_fwd",
    "phi_rev",
    "lex_rev",
    "phrase_penalty",
    "word_penalty",
    "distortion",
    "lm",
    "oov",
)

REO_PREFIX = "reordering."


@dataclass
class FeatureWeights:
    phi_fwd: float = 0.2
    lex_fwd: float = 0.2
    phi_rev: float = 0.2
    lex_rev: float = 0.2
    phrase_penalty: float = 0.2
    word_penalty: float = 0.0
    distortion: float = 0.3
    lm: float = 0.5
    oov: float = -1.0
    reordering: dict = field(
        default_factory=lambda: {
            "monotone": 0.3,
            "swap": 0.3,
            "discontinuous": 0.3,
            "discontinuous-left": 0.3,
            "discontinuous-right": 0.3,
        }
    )

    def get(self, name: str) -> float:
        if name.startswith(REO_PREFIX):
            return self.reordering.get(name[len(REO_PREFIX) :], 0.0)
        return getattr(self, name)

    def set(self, name: str, value: float) -> None:
        if name.startswith(REO_PREFIX):
            self.reordering[name[len(REO_PREFIX) :]] = value
        else:
            setattr(self, name, value)

    def names(self) -> list[str]:
        return list(SCALAR_FEATURES) + [
            REO_PREFIX + k for k in sorted(self.reordering)
        ]

    def copy(self) -> "FeatureWeights":
        return FeatureWeights(
            **{f.name: getattr(self, f.name) for f in fields(self) if f.name != "reordering"},
            reordering=dict(self.reordering),
        )

    def score(self, features: dict) -> float:
        return sum(self.get(name) * value for name, value in features.items())

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for name in self.names():
                fh.write(f"{name}\t{self.get(name)!r}\n")

    @classmethod
    def from_file(cls, path) -> "FeatureWeights":
        weights = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                name, _, value = line.partition("\t")
                weights.set(name, float(value))
        return weights


@dataclass
class DecoderConfig:
    stack_size: int | None = 100
    beam: float = 1e-4  # relative probability threshold; <= 0 disables
    distortion_limit: int | None = 6
    nbest: int = 1
    max_phrase_len: int = 7

    def __post_init__(self):
        if self.stack_size is not None and self.stack_size < 1:
            raise ValueError("stack_size must be >= 1 or None")
        if self.distortion_limit is not None and self.distortion_limit < 0:
            raise ValueError("distortion_limit must be >= 0 or None")


@dataclass
class Option:
    """One way to translate a source span: a phrase table entry or an OOV
    copy-through."""

    start: int
    end: int  # exclusive
    tgt: tuple
    features: dict
    reordering_key: tuple | None  # (src, tgt) for the reordering table


class Hypothesis:
    __slots__ = (
        "coverage",
        "covered",
        "span",
        "lm_state",
        "score",
        "future",
        "prev",
        "option",
        "features",
        "recombined",
    )

    def __init__(self, coverage, covered, span, lm_state, score, future, prev, option, features):
        self.coverage = coverage
        self.covered = covered
        self.span = span
        self.lm_state = lm_state
        self.score = score
        self.future = future
        self.prev = prev
        self.option = option
        self.features = features
        self.recombined = []

    def key(self):
        return (self.coverage, self.lm_state, self.span)


def _phrase_options(tokens, table, config) -> list[Option]:
    options = []
    n = len(tokens)
    for start in range(n):
        for end in range(start + 1, min(start + config.max_phrase_len, n) + 1):
            src = tuple(tokens[start:end])
            for entry in table.options(src):
                options.append(
                    Option(
                        start,
                        end,
                        entry.tgt,
                        {
                            "phi_fwd": math.log(entry.phi_fwd),
                            "lex_fwd": math.log(entry.lex_fwd),
                            "phi_rev": math.log(entry.phi_rev),
                            "lex_rev": math.log(entry.lex_rev),
                            "phrase_penalty": 1.0,
                            "word_penalty": float(len(entry.tgt)),
                        },
                        (entry.src, entry.tgt),
                    )
                )
        src = (tokens[start],)
        if not table.options(src):
            options.append(
                Option(
                    start,
                    start + 1,
                    src,
                    {"oov": 1.0, "phrase_penalty": 1.0, "word_penalty": 1.0},
                    None,
                )
            )
    return options


def _phrase_lm_feature(lm, words) -> float:
    """LM score of a phrase in isolation: first word from the empty
    context, later words conditioned on the in-phrase prefix."""
    total = 0.0
    for i, w in enumerate(words):
        total += math.log(lm.prob(w, tuple(words[:i])))
    return total


def future_cost(tokens, table, lm, weights, config=None) -> dict:
    """Best achievable option score per span, combined over split points
    (reordering and distortion ignored, the standard estimate)."""
    config = config or DecoderConfig()
    n = len(tokens)
    options = _phrase_options(tokens, table, config)
    span_best: dict[tuple, float] = {}
    for opt in options:
        local = weights.score(opt.features) + weights.lm * _phrase_lm_feature(
            lm, opt.tgt
        )
        key = (opt.start, opt.end)
        if key not in span_best or local > span_best[key]:
            span_best[key] = local
    cost: dict[tuple, float] = {}
    for length in range(1, n + 1):
        for start in range(0, n - length + 1):
            end = start + length
            best = span_best.get((start, end), -math.inf)
            for mid in range(start + 1, end):
                combined = cost[(start, mid)] + cost[(mid, end)]
                if combined > best:
                    best = combined
            cost[(start, end)] = best
    return cost


def _orientation(prev_span, start, end, scheme_classes) -> str:
    prev_start, prev_end = prev_span
    if start == prev_end:
        return "monotone"
    if end == prev_start:
        return "swap"
    if "discontinuous" in scheme_classes:
        return "discontinuous"
    return "discontinuous-right" if start > prev_end else "discontinuous-left"


class Decoder:
    def __init__(self, table, lm, weights=None, reordering=None, config=None):
        self.table = table
        self.lm = lm
        self.weights = weights or FeatureWeights()
        self.reordering = reordering
        self.config = config or DecoderConfig()

    def _reo_classes(self):
        return self.reordering.classes if self.reordering else None

    def _reo_features(self, features, option, prev_option, prev_span, completing, n):
        """Reordering log-probabilities: the new phrase scores its forward
        orientation, the previous phrase its backward one; completion adds
        the final phrase's backward event against the sentence end."""
        if self.reordering is None:
            return
        classes = self.reordering.classes
        if option is not None:
            o = _orientation(prev_span, option.start, option.end, classes)
            key = "reordering." + o
            if option.reordering_key:
                fwd, _ = self.reordering.probs(*option.reordering_key)
            else:
                fwd, _ = self.reordering.probs((), ())
            features[key] = features.get(key, 0.0) + math.log(fwd[o])
            if prev_option is not None:
                o_b = _orientation(prev_span, option.start, option.end, classes)
                if prev_option.reordering_key:
                    _, bwd = self.reordering.probs(*prev_option.reordering_key)
                else:
                    _, bwd = self.reordering.probs((), ())
                key = "reordering." + o_b
                features[key] = features.get(key, 0.0) + math.log(bwd[o_b])
        if completing and option is not None:
            o_end = _orientation((option.start, option.end), n, n, classes)
            if option.reordering_key:
                _, bwd = self.reordering.probs(*option.reordering_key)
            else:
                _, bwd = self.reordering.probs((), ())
            key = "reordering." + o_end
            features[key] = features.get(key, 0.0) + math.log(bwd[o_end])

    def _stacks(self, tokens):
        n = len(tokens)
        config = self.config
        weights = self.weights
        costs = future_cost(tokens, self.table, self.lm, weights, config)
        options = _phrase_options(tokens, self.table, config)
        by_start: dict[int, list[Option]] = {}
        for opt in options:
            by_start.setdefault(opt.start, []).append(opt)

        initial = Hypothesis(
            coverage=0,
            covered=0,
            span=(0, 0),
            lm_state=self.lm.begin_state(),
            score=0.0,
            future=costs.get((0, n), 0.0) if n else 0.0,
            prev=None,
            option=None,
            features={},
        )
        stacks: list[dict] = [dict() for _ in range(n + 1)]
        stacks[0][initial.key()] = initial
        for covered in range(n):
            hyps = list(stacks[covered].values())
            hyps.sort(key=lambda h: h.score + h.future, reverse=True)
            if config.stack_size is not None:
                hyps = hyps[: config.stack_size]
            if config.beam > 0 and hyps:
                floor = hyps[0].score + hyps[0].future + math.log(config.beam)
                hyps = [h for h in hyps if h.score + h.future >= floor]
            for hyp in hyps:
                self._expand(hyp, by_start, stacks, costs, n)
        return stacks

    def _expand(self, hyp, by_start, stacks, costs, n):
        config = self.config
        weights = self.weights
        prev_end = hyp.span[1]
        for start, opts in by_start.items():
            jump = abs(start - prev_end)
            if config.distortion_limit is not None and jump > config.distortion_limit:
                continue
            for opt in opts:
                mask = ((1 << (opt.end - opt.start)) - 1) << opt.start
                if hyp.coverage & mask:
                    continue
                completing = hyp.covered + (opt.end - opt.start) == n
                features = dict(opt.features)
                features["distortion"] = features.get("distortion", 0.0) - jump
                lm_feat = 0.0
                state = hyp.lm_state
                for word in opt.tgt:
                    lp, state = self.lm.score_word(state, word)
                    lm_feat += lp
                if completing:
                    lp, state = self.lm.score_word(state, EOS)
                    lm_feat += lp
                features["lm"] = features.get("lm", 0.0) + lm_feat
                self._reo_features(
                    features, opt, hyp.option, hyp.span, completing, n
                )
                score = hyp.score + weights.score(features)
                coverage = hyp.coverage | mask
                future = _remaining_cost(coverage, n, costs)
                new = Hypothesis(
                    coverage=coverage,
                    covered=hyp.covered + (opt.end - opt.start),
                    span=(opt.start, opt.end),
                    lm_state=state,
                    score=score,
                    future=future,
                    prev=hyp,
                    option=opt,
                    features=features,
                )
                slot = stacks[new.covered]
                existing = slot.get(new.key())
                if existing is None:
                    slot[new.key()] = new
                elif new.score > existing.score:
                    new.recombined = existing.recombined + [existing]
                    existing.recombined = []
                    slot[new.key()] = new
                else:
                    existing.recombined.append(new)

    def decode(self, sentence) -> tuple[str, float]:
        """Best translation and model score; empty input gives ("", 0.0)."""
        tokens = list(sentence)
        if not tokens:
            return "", 0.0
        stacks = self._stacks(tokens)
        finals = stacks[len(tokens)]
        if not finals:
            raise RuntimeError("no complete hypothesis (distortion limit too tight)")
        best = max(finals.values(), key=lambda h: h.score)
        return " ".join(_target_tokens(best)), best.score

    def nbest(self, sentence, k: int) -> list["NBestItem"]:
        """Up to k distinct translations with non-increasing scores; the
        first item equals the decode output."""
        if k < 1:
            raise ValueError("k must be >= 1")
        tokens = list(sentence)
        if not tokens:
            return [NBestItem("", 0.0, {})]
        stacks = self._stacks(tokens)
        finals = list(stacks[len(tokens)].values())
        if not finals:
            raise RuntimeError("no complete hypothesis (distortion limit too tight)")
        return _lazy_nbest(finals, k)


@dataclass
class NBestItem:
    text: str
    score: float
    features: dict


def _target_tokens(hyp) -> list[str]:
    parts = []
    node = hyp
    while node.option is not None:
        parts.append(node.option.tgt)
        node = node.prev
    out = []
    for tgt in reversed(parts):
        out.extend(tgt)
    return out


def replay_features(hyp) -> dict:
    """Sum of the feature increments along the back-pointer chain."""
    total: dict = {}
    node = hyp
    while node is not None:
        for name, value in node.features.items():
            total[name] = total.get(name, 0.0) + value
        node = node.prev
    return total


def _remaining_cost(coverage: int, n: int, costs: dict) -> float:
    total = 0.0
    start = None
    for i in range(n + 1):
        free = i < n and not (coverage >> i) & 1
        if free and start is None:
            start = i
        elif not free and start is not None:
            total += costs[(start, i)]
            start = None
    return total


def _lazy_nbest(finals, k: int) -> list[NBestItem]:
    """Best-first enumeration of derivations over the recombination
    lattice, deduplicated by target string."""
    derivs: dict[int, list] = {}
    cand_heaps: dict[int, list] = {}
    arcs: dict[int, list] = {}
    nodes: dict[int, Hypothesis] = {}

    def node_arcs(h) -> list:
        out = []
        for variant in [h] + h.recombined:
            if variant.prev is None:
                out.append((None, variant.option, variant.features, variant.score))
            else:
                inc = variant.score - variant.prev.score
                out.append((variant.prev, variant.option, variant.features, inc))
        return out

    def ensure(node_id: int, h, count: int):
        if node_id not in derivs:
            nodes[node_id] = h
            arcs[node_id] = node_arcs(h)
            derivs[node_id] = []
            heap = []
            for arc_idx, arc in enumerate(arcs[node_id]):
                score = _arc_score(arc, 0)
                if score is not None:
                    heapq.heappush(heap, (-score, arc_idx, 0))
            cand_heaps[node_id] = heap
        heap = cand_heaps[node_id]
        while len(derivs[node_id]) < count and heap:
            neg, arc_idx, parent_i = heapq.heappop(heap)
            derivs[node_id].append((-neg, arc_idx, parent_i))
            arc = arcs[node_id][arc_idx]
            nxt = _arc_score(arc, parent_i + 1)
            if nxt is not None:
                heapq.heappush(heap, (-nxt, arc_idx, parent_i + 1))

    def _arc_score(arc, parent_i: int):
        prev, _opt, _feat, inc = arc
        if prev is None:
            return inc if parent_i == 0 else None
        pid = id(prev)
        ensure(pid, prev, parent_i + 1)
        if parent_i >= len(derivs[pid]):
            return None
        return derivs[pid][parent_i][0] + inc

    def build(node_id: int, i: int):
        score, arc_idx, parent_i = derivs[node_id][i]
        prev, opt, feat, _inc = arcs[node_id][arc_idx]
        if prev is None:
            tokens: list[str] = []
            features: dict = dict(feat)
        else:
            tokens, features = build(id(prev), parent_i)
            tokens = list(tokens)
            features = dict(features)
            for name, value in feat.items():
                features[name] = features.get(name, 0.0) + value
        if opt is not None:
            tokens.extend(opt.tgt)
        return tokens, features

    # goal pseudo-node merging all complete hypotheses
    goal_heap = []
    for h in finals:
        hid = id(h)
        ensure(hid, h, 1)
        if derivs[hid]:
            heapq.heappush(goal_heap, (-derivs[hid][0][0], hid, 0))
    results: list[NBestItem] = []
    seen: set[str] = set()
    budget = 50 * k + 200
    while goal_heap and len(results) < k and budget > 0:
        budget -= 1
        neg, hid, i = heapq.heappop(goal_heap)
        tokens, features = build(hid, i)
        text = " ".join(tokens)
        if text not in seen:
            seen.add(text)
            results.append(NBestItem(text, -neg, features))
        ensure(hid, nodes[hid], i + 2)
        if i + 1 < len(derivs[hid]):
            heapq.heappush(goal_heap, (-derivs[hid][i + 1][0], hid, i + 1))
    return results


def decode(sentence, table, lm, weights=None, reordering=None, config=None):
    return Decoder(table, lm, weights, reordering, config).decode(sentence)


def nbest(sentence, table, lm, weights=None, reordering=None, config=None, k: int = 1):
    return Decoder(table, lm, weights, reordering, config).nbest(sentence, k)
