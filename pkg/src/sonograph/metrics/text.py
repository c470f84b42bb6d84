"""Text similarity metrics: ROUGE-L and exact-match METEOR.

METEOR here is the exact-unigram variant (no stemming or synonym resources):
the alignment maximizes match count and, among maximal alignments, minimizes
the number of chunks. Chunk minimization is solved exactly by branch and
bound over the occurrence pairings of repeated words.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class TextMetricConfig:
    """Knobs for METEOR and ROUGE-L; defaults are the classic parameterizations."""

    meteor_fmean_numerator: float = 10.0
    meteor_recall_weight: float = 9.0
    meteor_penalty_gamma: float = 0.5
    meteor_penalty_exponent: float = 3.0
    rouge_beta: float = 1.0


DEFAULT_TEXT_CONFIG = TextMetricConfig()


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric run."""
    return _TOKEN_RE.findall(text.lower())


def lcs_length(a: list[str], b: list[str]) -> int:
    """Length of the longest common subsequence of two token lists."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for tok in a:
        cur = [0]
        for j, other in enumerate(b):
            if tok == other:
                cur.append(prev[j] + 1)
            else:
                cur.append(max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f: float


def rouge_l(candidate: str, reference: str, cfg: TextMetricConfig = DEFAULT_TEXT_CONFIG) -> RougeScore:
    """LCS-based F measure; all zeros when either side has no tokens."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = lcs_length(cand, ref)
    p = lcs / len(cand)
    r = lcs / len(ref)
    if p + r == 0:
        return RougeScore(p, r, 0.0)
    b2 = cfg.rouge_beta**2
    return RougeScore(p, r, (1 + b2) * p * r / (r + b2 * p))


def _max_match_count(cand: list[str], ref: list[str]) -> int:
    counts: dict[str, int] = {}
    for tok in ref:
        counts[tok] = counts.get(tok, 0) + 1
    m = 0
    for tok in cand:
        if counts.get(tok, 0) > 0:
            counts[tok] -= 1
            m += 1
    return m


class _ChunkSearch:
    """Branch-and-bound search for the minimum-chunk maximal alignment.

    Exact while within the node budget (chunk minimization over maximal
    matchings is a minimum-common-string-partition flavor problem, so the
    worst case is exponential); once the budget is exhausted the best
    alignment found so far is returned. The budget is far beyond anything
    natural-language sentences reach.
    """

    def __init__(self, cand: list[str], ref: list[str], node_budget: int = 500_000):
        self.cand = cand
        self.ref_positions: dict[str, list[int]] = {}
        for j, tok in enumerate(ref):
            self.ref_positions.setdefault(tok, []).append(j)
        cand_counts: dict[str, int] = {}
        for tok in cand:
            cand_counts[tok] = cand_counts.get(tok, 0) + 1
        # per word: how many of its candidate occurrences must be matched
        self.need = {
            tok: min(n, len(self.ref_positions.get(tok, ())))
            for tok, n in cand_counts.items()
        }
        # occurrences of cand[i] at or after position i
        self.occ_after = [0] * len(cand)
        tail: dict[str, int] = {}
        for i in range(len(cand) - 1, -1, -1):
            tail[cand[i]] = tail.get(cand[i], 0) + 1
            self.occ_after[i] = tail[cand[i]]
        self.best = len(cand) + 1
        self.nodes = node_budget

    def run(self) -> int:
        self._walk(0, -2, set(), 0)
        return self.best

    def _walk(self, i: int, prev_ref: int, used: set[int], chunks: int) -> None:
        if chunks >= self.best or self.nodes <= 0:
            return
        self.nodes -= 1
        if i == len(self.cand):
            self.best = chunks
            return
        tok = self.cand[i]
        need = self.need[tok]
        if need > 0:
            options = [j for j in self.ref_positions[tok] if j not in used]
            # continuing the current run first finds low-chunk alignments early
            options.sort(key=lambda j: (j != prev_ref + 1, j))
            for j in options:
                self.need[tok] = need - 1
                used.add(j)
                self._walk(i + 1, j, used, chunks + (0 if j == prev_ref + 1 else 1))
                used.discard(j)
                self.need[tok] = need
        # position i may stay unmatched only if later occurrences can fill the quota
        if self.occ_after[i] - 1 >= need:
            self._walk(i + 1, -2, used, chunks)


def meteor_alignment(candidate: str, reference: str) -> tuple[int, int]:
    """Return (matched unigrams, minimum chunk count) for the best alignment."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    m = _max_match_count(cand, ref)
    if m == 0:
        return 0, 0
    chunks = _ChunkSearch(cand, ref).run()
    return m, chunks


def meteor(candidate: str, reference: str, cfg: TextMetricConfig = DEFAULT_TEXT_CONFIG) -> float:
    """Exact-match METEOR score in [0, 1]; 0 when nothing aligns."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    m, chunks = meteor_alignment(candidate, reference)
    if m == 0:
        return 0.0
    p = m / len(cand)
    r = m / len(ref)
    num, w = cfg.meteor_fmean_numerator, cfg.meteor_recall_weight
    f_mean = num * p * r / (r + w * p)
    penalty = cfg.meteor_penalty_gamma * (chunks / m) ** cfg.meteor_penalty_exponent
    return f_mean * (1.0 - penalty)
