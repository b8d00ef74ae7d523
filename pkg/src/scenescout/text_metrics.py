"""Language metrics for scored tasks: BLEU-n, ROUGE-L, METEOR-lite, CIDEr-D,
and exact match, over one shared normalization.

METEOR-lite is a reduced METEOR: unigram alignment by exact and stemmed match
only (no synonym dictionary), so results are hermetic and self-consistent but
not comparable with third-party METEOR numbers.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass

from .errors import CorpusTooSmall

logger = logging.getLogger(__name__)

CIDER_SIGMA = 6.0
CIDER_MAX_N = 4
CIDER_SCALE = 10.0
ROUGE_BETA = 1.2
METEOR_ALPHA = 9.0           # F_mean = 10PR / (R + 9P)
METEOR_PENALTY_WEIGHT = 0.5
METEOR_PENALTY_POWER = 3.0

_PUNCT_RE = re.compile(r"[^0-9a-z\s-]+")
_HYPHEN_HEAD_RE = re.compile(r"(?<![0-9a-z])-+")
_HYPHEN_TAIL_RE = re.compile(r"-+(?![0-9a-z])")

_STEM_SUFFIXES = ("ing", "es", "ed", "ly", "s")


@dataclass
class TokenizedText:
    original: str
    tokens: list[str]


def normalize(text: str) -> TokenizedText:
    """Lowercase, strip punctuation except intra-word hyphens, split on spaces."""
    s = text.lower()
    s = _PUNCT_RE.sub(" ", s)
    s = _HYPHEN_HEAD_RE.sub(" ", s)
    s = _HYPHEN_TAIL_RE.sub(" ", s)
    return TokenizedText(original=text, tokens=s.split())


def stem(word: str) -> str:
    """Tiny deterministic suffix stripper (s, es, ed, ing, ly)."""
    for suffix in _STEM_SUFFIXES:
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            return word[:-len(suffix)]
    return word


def _tokens(text: str) -> list[str]:
    return normalize(text).tokens


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


# ---------------------------------------------------------------------------
# BLEU


def bleu(candidate: str, references: list[str], max_n: int = 4) -> float:
    """Sentence BLEU: clipped n-gram precision, geometric mean, brevity penalty.

    No smoothing: a zero precision at any order gives 0. An empty candidate
    scores 0 by definition (logged, not raised).
    """
    if max_n not in (1, 2, 3, 4):
        raise ValueError("max_n must be in 1..4")
    if not references:
        raise ValueError("need at least one reference")
    cand = _tokens(candidate)
    refs = [_tokens(r) for r in references]
    if not cand:
        logger.warning("empty candidate scored 0 in BLEU")
        return 0.0

    log_sum = 0.0
    for n in range(1, max_n + 1):
        c_counts = _ngrams(cand, n)
        total = sum(c_counts.values())
        if total == 0:
            return 0.0
        clipped = 0
        for gram, count in c_counts.items():
            best = max(_ngrams(r, n).get(gram, 0) for r in refs)
            clipped += min(count, best)
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    geo = math.exp(log_sum / max_n)

    c_len = len(cand)
    r_len = min((len(r) for r in refs), key=lambda L: (abs(L - c_len), L))
    bp = 1.0 if c_len >= r_len else math.exp(1.0 - r_len / c_len)
    return bp * geo


# ---------------------------------------------------------------------------
# ROUGE-L


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, references: list[str]) -> float:
    """Longest-common-subsequence F-measure (beta = 1.2), max over references."""
    if not references:
        raise ValueError("need at least one reference")
    cand = _tokens(candidate)
    best = 0.0
    for reference in references:
        ref = _tokens(reference)
        lcs = _lcs_length(cand, ref)
        if lcs == 0:
            continue
        precision = lcs / len(cand)
        recall = lcs / len(ref)
        beta2 = ROUGE_BETA ** 2
        denominator = recall + beta2 * precision
        if denominator > 0:
            best = max(best, (1 + beta2) * precision * recall / denominator)
    return best


# ---------------------------------------------------------------------------
# METEOR-lite


def _align(cand: list[str], ref: list[str]) -> list[tuple[int, int]]:
    """One-to-one alignment: exact matches first, then stem matches, both
    greedy in token order."""
    pairs: list[tuple[int, int]] = []
    c_used = [False] * len(cand)
    r_used = [False] * len(ref)
    for exact in (True, False):
        c_keys = cand if exact else [stem(w) for w in cand]
        r_keys = ref if exact else [stem(w) for w in ref]
        for i, key in enumerate(c_keys):
            if c_used[i]:
                continue
            for j, rkey in enumerate(r_keys):
                if not r_used[j] and rkey == key:
                    pairs.append((i, j))
                    c_used[i] = True
                    r_used[j] = True
                    break
    pairs.sort()
    return pairs


def _chunks(pairs: list[tuple[int, int]]) -> int:
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor_lite(candidate: str, references: list[str]) -> float:
    """Alignment F-mean with a fragmentation penalty, max over references."""
    if not references:
        raise ValueError("need at least one reference")
    cand = _tokens(candidate)
    best = 0.0
    for reference in references:
        ref = _tokens(reference)
        if not cand or not ref:
            continue
        pairs = _align(cand, ref)
        matches = len(pairs)
        if matches == 0:
            continue
        precision = matches / len(cand)
        recall = matches / len(ref)
        f_mean = (METEOR_ALPHA + 1) * precision * recall / (recall + METEOR_ALPHA * precision)
        penalty = METEOR_PENALTY_WEIGHT * (_chunks(pairs) / matches) ** METEOR_PENALTY_POWER
        best = max(best, f_mean * (1.0 - penalty))
    return best


# ---------------------------------------------------------------------------
# CIDEr-D


def _stemmed_tokens(text: str) -> list[str]:
    return [stem(w) for w in _tokens(text)]


def _tfidf_vector(counts: Counter, idf: dict) -> tuple[dict, float]:
    vec = {g: c * idf.get(g, 0.0) for g, c in counts.items()}
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return vec, norm


def cider_d(candidates: list[str], references: list[list[str]]) -> tuple[list[float], float]:
    """Consensus metric: TF-IDF n-gram cosine (n = 1..4) with clipping and a
    Gaussian length penalty, scaled by 10; returns (per-item scores, mean).

    IDF comes from the reference corpus, so at least two items are required.

    Raises:
        CorpusTooSmall: fewer than two evaluation items.
    """
    if len(candidates) != len(references):
        raise ValueError("candidates and references must pair up")
    if len(candidates) < 2:
        raise CorpusTooSmall("consensus IDF needs >= 2 items")
    if any(not refs for refs in references):
        raise ValueError("every item needs at least one reference")

    n_items = len(candidates)
    ref_tokens = [[_stemmed_tokens(r) for r in refs] for refs in references]
    cand_tokens = [_stemmed_tokens(c) for c in candidates]

    idf: dict = {}
    for n in range(1, CIDER_MAX_N + 1):
        doc_freq: Counter = Counter()
        for refs in ref_tokens:
            grams = set()
            for r in refs:
                grams.update(_ngrams(r, n).keys())
            doc_freq.update(grams)
        for gram, df in doc_freq.items():
            idf[gram] = math.log(n_items / max(1, df))

    scores = []
    for cand, refs in zip(cand_tokens, ref_tokens):
        acc = 0.0
        for n in range(1, CIDER_MAX_N + 1):
            c_vec, c_norm = _tfidf_vector(_ngrams(cand, n), idf)
            ref_sum = 0.0
            for ref in refs:
                r_vec, r_norm = _tfidf_vector(_ngrams(ref, n), idf)
                if c_norm == 0.0 or r_norm == 0.0:
                    continue
                numerator = sum(min(c_vec[g], r_vec[g]) * r_vec[g]
                                for g in c_vec if g in r_vec)
                delta = len(cand) - len(ref)
                ref_sum += (numerator / (c_norm * r_norm)
                            * math.exp(-(delta ** 2) / (2 * CIDER_SIGMA ** 2)))
            acc += ref_sum / len(refs)
        scores.append(CIDER_SCALE * acc / CIDER_MAX_N)
    return scores, sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# Exact match


def exact_match(candidate: str, references: list[str]) -> int:
    """1 iff the normalized candidate equals some normalized reference."""
    if not references:
        raise ValueError("need at least one reference")
    cand = _tokens(candidate)
    return int(any(cand == _tokens(r) for r in references))


# ---------------------------------------------------------------------------
# Batch report


@dataclass
class MetricReport:
    """Mean metric values over an evaluation batch; cider is None when the
    batch is too small for a consensus corpus."""

    bleu1: float = 0.0
    bleu4: float = 0.0
    meteor: float = 0.0
    rouge_l: float = 0.0
    cider: float | None = None
    em: float = 0.0
    n_items: int = 0

    def to_json(self) -> dict:
        return {
            "bleu1": self.bleu1,
            "bleu4": self.bleu4,
            "meteor": self.meteor,
            "rouge_l": self.rouge_l,
            "cider": self.cider,
            "em": self.em,
            "n_items": self.n_items,
            "notes": "METEOR-lite (exact+stem alignment, no synonym stage); "
                     "sentence-level BLEU averaged over items; metric values "
                     "are self-consistent, not toolkit-comparable",
        }

    @classmethod
    def from_json(cls, data: dict) -> "MetricReport":
        return cls(bleu1=data["bleu1"], bleu4=data["bleu4"], meteor=data["meteor"],
                   rouge_l=data["rouge_l"], cider=data["cider"], em=data["em"],
                   n_items=data["n_items"])


def score_batch(candidates: list[str], references: list[list[str]]) -> MetricReport:
    """Score every (candidate, references) item and average the suite."""
    if len(candidates) != len(references):
        raise ValueError("candidates and references must pair up")
    n = len(candidates)
    if n == 0:
        return MetricReport(n_items=0)
    mean = lambda xs: sum(xs) / len(xs)
    report = MetricReport(
        bleu1=mean([bleu(c, r, max_n=1) for c, r in zip(candidates, references)]),
        bleu4=mean([bleu(c, r, max_n=4) for c, r in zip(candidates, references)]),
        meteor=mean([meteor_lite(c, r) for c, r in zip(candidates, references)]),
        rouge_l=mean([rouge_l(c, r) for c, r in zip(candidates, references)]),
        em=mean([exact_match(c, r) for c, r in zip(candidates, references)]),
        n_items=n,
    )
    if n >= 2:
        _, report.cider = cider_d(candidates, references)
    return report
