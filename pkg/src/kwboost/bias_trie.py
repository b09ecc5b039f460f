"""Word-level trie over spoken-form keyword variants.

The decoder consults the trie in two ways: the unigram set answers
"does committing this word deserve a partial boost" (gated so common
words are never boosted), and full-path matching finds complete
variant occurrences for the finalization boost and for match reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .lm import NEG_INF, NGramLM
from .norm import NormalizationMapping


@dataclass(frozen=True)
class KeywordMatch:
    """A full variant occurrence: words[start:end] belongs to ``raw``."""

    start: int
    end: int
    raw: str
    weight: float  # owning entry's effective boost weight


@dataclass
class _Node:
    children: dict[str, "_Node"] = field(default_factory=dict)
    # Terminal payload: (owning raw, effective weight, variant length).
    terminal: tuple[str, float, int] | None = None


class BiasTrie:
    """Variant paths with weights, plus the gated unigram boost set."""

    def __init__(self, rarity_threshold: float, default_weight: float):
        self.root = _Node()
        self.rarity_threshold = rarity_threshold
        self.default_weight = default_weight
        self.unigram_weights: dict[str, float] = {}
        self.num_variants = 0

    def _insert(self, variant: Sequence[str], raw: str, weight: float) -> None:
        node = self.root
        for word in variant:
            node = node.children.setdefault(word, _Node())
        node.terminal = (raw, weight, len(variant))
        self.num_variants += 1

    def unigram_weight(self, word: str) -> float | None:
        """Boost weight for one committed word, or None when not boosted."""
        return self.unigram_weights.get(word)

    def find_matches(self, words: Sequence[str]) -> list[KeywordMatch]:
        """Leftmost-longest non-overlapping full variant matches."""
        matches: list[KeywordMatch] = []
        i = 0
        n = len(words)
        while i < n:
            node = self.root
            best: tuple[str, float, int] | None = None
            j = i
            while j < n:
                node = node.children.get(words[j])
                if node is None:
                    break
                j += 1
                if node.terminal is not None:
                    best = node.terminal
            if best is not None:
                raw, weight, length = best
                matches.append(KeywordMatch(i, i + length, raw, weight))
                i += length
            else:
                i += 1
        return matches

    def dump(self) -> str:
        """Deterministic text form, one line per variant path."""
        lines: list[str] = []

        def walk(node: _Node, prefix: tuple[str, ...]) -> None:
            if node.terminal is not None:
                raw, weight, _ = node.terminal
                lines.append(f"{' '.join(prefix)}\t{raw}\t{weight!r}")
            for word in sorted(node.children):
                walk(node.children[word], prefix + (word,))

        walk(self.root, ())
        return "".join(line + "\n" for line in lines)


def build_trie(
    mapping: NormalizationMapping,
    lm: NGramLM | None = None,
    rarity_threshold: float = -4.0,
    default_weight: float = 0.0,
) -> BiasTrie:
    """Build the trie for a mapping, gating the unigram boost set.

    A variant word enters the unigram set only when its LM unigram
    log10 probability is below ``rarity_threshold``; out-of-vocabulary
    words (probability -inf) always qualify, as does everything when no
    LM is supplied.  When several entries share a word the maximum
    weight wins.  Variant ownership follows the mapping's reverse index
    so the trie and inverse normalization never disagree.
    """
    trie = BiasTrie(rarity_threshold, default_weight)
    for variant in sorted(mapping.reverse):
        entry = mapping.reverse[variant]
        weight = entry.weight if entry.weight is not None else default_weight
        trie._insert(variant, entry.raw, weight)
        for word in variant:
            rarity = lm.unigram_log10(word) if lm is not None else NEG_INF
            if rarity < rarity_threshold:
                previous = trie.unigram_weights.get(word)
                if previous is None or weight > previous:
                    trie.unigram_weights[word] = weight
    return trie
