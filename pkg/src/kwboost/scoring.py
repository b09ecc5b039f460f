"""Word error rate scoring split by biasing-list membership.

Errors are attributed word by word: substitutions and deletions follow
the reference word's membership in the biasing vocabulary, insertions
follow the hypothesis word's.  B-WER divides biased errors by biased
reference words, U-WER the rest; multi-word biasing phrases contribute
each of their written-form words to the biased vocabulary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


@dataclass(frozen=True)
class EditOp:
    """One alignment step; ref/hyp are None for ins/del respectively."""

    kind: str  # "match" | "sub" | "del" | "ins"
    ref: str | None
    hyp: str | None


@dataclass
class Alignment:
    ops: list[EditOp]

    @property
    def distance(self) -> int:
        return sum(1 for op in self.ops if op.kind != "match")


def align(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Minimal edit-distance alignment with a deterministic backtrace.

    Ties break in favor of match, then substitution, then deletion,
    then insertion, so equal-cost alignments always come out the same.
    """
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        for j in range(1, m + 1):
            same = ref[i - 1] == hyp[j - 1]
            row[j] = min(
                prev[j - 1] + (0 if same else 1),
                prev[j] + 1,
                row[j - 1] + 1,
            )
    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            ops.append(EditOp("match", ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            ops.append(EditOp("sub", ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append(EditOp("del", ref[i - 1], None))
            i -= 1
        else:
            ops.append(EditOp("ins", None, hyp[j - 1]))
            j -= 1
    ops.reverse()
    return Alignment(ops)


@dataclass
class ErrorCounts:
    sub_biased: int = 0
    sub_unbiased: int = 0
    del_biased: int = 0
    del_unbiased: int = 0
    ins_biased: int = 0
    ins_unbiased: int = 0

    @property
    def biased(self) -> int:
        return self.sub_biased + self.del_biased + self.ins_biased

    @property
    def unbiased(self) -> int:
        return self.sub_unbiased + self.del_unbiased + self.ins_unbiased

    @property
    def total(self) -> int:
        return self.biased + self.unbiased

    def add(self, other: "ErrorCounts") -> None:
        self.sub_biased += other.sub_biased
        self.sub_unbiased += other.sub_unbiased
        self.del_biased += other.del_biased
        self.del_unbiased += other.del_unbiased
        self.ins_biased += other.ins_biased
        self.ins_unbiased += other.ins_unbiased


def _rate(errors: int, words: int) -> float | None:
    """Percentage rate; None when there are no reference words."""
    if words == 0:
        return None
    return 100.0 * errors / words


@dataclass
class UtteranceScore:
    utt_id: str
    ref_words: int
    biased_ref_words: int
    errors: ErrorCounts

    @property
    def unbiased_ref_words(self) -> int:
        return self.ref_words - self.biased_ref_words

    @property
    def wer(self) -> float | None:
        return _rate(self.errors.total, self.ref_words)

    @property
    def u_wer(self) -> float | None:
        return _rate(self.errors.unbiased, self.unbiased_ref_words)

    @property
    def b_wer(self) -> float | None:
        return _rate(self.errors.biased, self.biased_ref_words)


@dataclass
class KeywordStat:
    term: str
    occurrences: int = 0
    hits: int = 0

    @property
    def misses(self) -> int:
        return self.occurrences - self.hits


@dataclass
class ScoreReport:
    ref_words: int
    biased_ref_words: int
    errors: ErrorCounts
    utterances: list[UtteranceScore] = field(default_factory=list)
    keywords: list[KeywordStat] = field(default_factory=list)

    @property
    def unbiased_ref_words(self) -> int:
        return self.ref_words - self.biased_ref_words

    @property
    def wer(self) -> float | None:
        return _rate(self.errors.total, self.ref_words)

    @property
    def u_wer(self) -> float | None:
        return _rate(self.errors.unbiased, self.unbiased_ref_words)

    @property
    def b_wer(self) -> float | None:
        return _rate(self.errors.biased, self.biased_ref_words)

    def to_dict(self) -> dict:
        def rates(scope) -> dict:
            return {
                "wer": _round(scope.wer),
                "u_wer": _round(scope.u_wer),
                "b_wer": _round(scope.b_wer),
            }

        def counts(err: ErrorCounts) -> dict:
            return {
                "substitutions": {"biased": err.sub_biased, "unbiased": err.sub_unbiased},
                "deletions": {"biased": err.del_biased, "unbiased": err.del_unbiased},
                "insertions": {"biased": err.ins_biased, "unbiased": err.ins_unbiased},
                "biased": err.biased,
                "unbiased": err.unbiased,
                "total": err.total,
            }

        return {
            "corpus": {
                "ref_words": self.ref_words,
                "biased_ref_words": self.biased_ref_words,
                "unbiased_ref_words": self.unbiased_ref_words,
                "errors": counts(self.errors),
                **rates(self),
            },
            "utterances": [
                {
                    "id": utt.utt_id,
                    "ref_words": utt.ref_words,
                    "biased_ref_words": utt.biased_ref_words,
                    "errors": counts(utt.errors),
                    **rates(utt),
                }
                for utt in self.utterances
            ],
            "keywords": [
                {
                    "term": stat.term,
                    "occurrences": stat.occurrences,
                    "hits": stat.hits,
                    "misses": stat.misses,
                }
                for stat in self.keywords
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n",
            encoding="utf-8",
        )


def _round(value: float | None) -> float | None:
    return None if value is None else round(value, 2)


def _phrase_occurrences(words: Sequence[str], phrase: Sequence[str]) -> list[int]:
    """Non-overlapping leftmost start indices of phrase inside words."""
    starts: list[int] = []
    i = 0
    k = len(phrase)
    while k and i + k <= len(words):
        if list(words[i : i + k]) == list(phrase):
            starts.append(i)
            i += k
        else:
            i += 1
    return starts


def biased_wer(
    corpus: Iterable[tuple[str, Sequence[str], Sequence[str]]],
    terms: Sequence[str],
    case_fold: bool = False,
) -> ScoreReport:
    """Score (utt_id, reference words, hypothesis words) triples.

    ``terms`` hold the biasing keywords in written form; membership is
    word-for-word and case-sensitive unless ``case_fold`` is set.
    B-WER stays None when no reference word is biased.
    """
    fold = (lambda w: w.lower()) if case_fold else (lambda w: w)
    terms = list(dict.fromkeys(terms))
    biased_vocab = {fold(word) for term in terms for word in term.split()}
    phrases = [(term, [fold(w) for w in term.split()]) for term in terms]

    total = ErrorCounts()
    ref_words = 0
    biased_ref_words = 0
    utterances: list[UtteranceScore] = []
    keyword_stats = {term: KeywordStat(term) for term, _ in phrases}

    empty = True
    for utt_id, ref, hyp in corpus:
        empty = False
        ref = [fold(w) for w in ref]
        hyp = [fold(w) for w in hyp]
        counts = ErrorCounts()
        alignment = align(ref, hyp)
        ref_op_kinds: list[str] = []
        for op in alignment.ops:
            if op.kind == "match":
                ref_op_kinds.append("match")
            elif op.kind == "sub":
                ref_op_kinds.append("sub")
                if op.ref in biased_vocab:
                    counts.sub_biased += 1
                else:
                    counts.sub_unbiased += 1
            elif op.kind == "del":
                ref_op_kinds.append("del")
                if op.ref in biased_vocab:
                    counts.del_biased += 1
                else:
                    counts.del_unbiased += 1
            else:
                if op.hyp in biased_vocab:
                    counts.ins_biased += 1
                else:
                    counts.ins_unbiased += 1
        n_biased = sum(1 for w in ref if w in biased_vocab)
        utterances.append(UtteranceScore(utt_id, len(ref), n_biased, counts))
        total.add(counts)
        ref_words += len(ref)
        biased_ref_words += n_biased
        for term, phrase in phrases:
            stat = keyword_stats[term]
            for start in _phrase_occurrences(ref, phrase):
                stat.occurrences += 1
                span = ref_op_kinds[start : start + len(phrase)]
                if all(kind == "match" for kind in span):
                    stat.hits += 1
    if empty:
        raise ValueError("empty corpus")
    return ScoreReport(
        ref_words=ref_words,
        biased_ref_words=biased_ref_words,
        errors=total,
        utterances=utterances,
        keywords=[keyword_stats[term] for term, _ in phrases],
    )


def relative_reduction(before: float, after: float) -> float:
    """Relative change in percent: 100 * (before - after) / before."""
    if before <= 0:
        raise ValueError(f"baseline rate must be positive, got {before}")
    return 100.0 * (before - after) / before
