"""Keyword normalization between written and spoken form.

Raw keywords as they appear in a contact list or product catalog
("C3PO", "A&R", "IBM", "356") rarely match the lowercase word alphabet
a speech decoder emits.  This module expands each raw keyword into one
or more spoken-form variants (sequences of lowercase words), keeps the
raw <-> variant association in a NormalizationMapping, and inverts
matched spans of decoder output back to written form.

Expansion rules, applied in order:

1. split on whitespace, then on letter/digit/symbol class boundaries;
2. digit runs adjacent to letters are read digit by digit; standalone
   digit runs of up to four digits are read as a cardinal number, with
   a digit-by-digit variant also emitted;
3. symbols map to spoken words (& -> "and", + -> "plus", * -> "star",
   x between digits -> "by"); dashes and remaining punctuation are
   separators and disappear;
4. an all-uppercase run of two to four letters is read as an
   initialism (one word per letter); when the run is a whole keyword
   piece and is not vowels-only, a whole-word lowercase variant is
   emitted as well ("IBM" -> "i b m" and "ibm");
5. remaining tokens are lowercased;
6. internal case changes split compounds ("CamelCase" -> "camel case").

Every emitted word stays inside the lowercase spoken alphabet; a raw
keyword whose expansion is empty is rejected.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataFormatError, NormalizationError

logger = logging.getLogger(__name__)

Variant = tuple[str, ...]

# Cross products of per-piece readings are capped so pathological
# inputs (long digit lists) cannot explode the variant set.
VARIANT_CAP = 8

_ONES = [
    "zero", "one", "two", "three", "four", "five", "six", "seven",
    "eight", "nine", "ten", "eleven", "twelve", "thirteen", "fourteen",
    "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
]
_TENS = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy",
    "eighty", "ninety",
]
_SYMBOL_WORDS = {"&": "and", "+": "plus", "*": "star"}
_VOWELS = frozenset("aeiou")


def digit_words(run: str) -> list[str]:
    """Read a digit string one digit at a time ("356" -> three five six)."""
    return [_ONES[int(ch)] for ch in run]


def cardinal_words(n: int) -> list[str]:
    """Spell a cardinal in the range 0..9999 as a list of words.

    No hyphens and no "and": 356 -> ["three", "hundred", "fifty", "six"].
    """
    if not 0 <= n <= 9999:
        raise ValueError(f"cardinal out of range: {n}")
    if n == 0:
        return ["zero"]
    words: list[str] = []
    thousands, rest = divmod(n, 1000)
    if thousands:
        words += [_ONES[thousands], "thousand"]
    hundreds, rest = divmod(rest, 100)
    if hundreds:
        words += [_ONES[hundreds], "hundred"]
    if rest >= 20:
        tens, ones = divmod(rest, 10)
        words.append(_TENS[tens])
        if ones:
            words.append(_ONES[ones])
    elif rest:
        words.append(_ONES[rest])
    return words


def is_spoken_word(word: str) -> bool:
    """True when a word is inside the normalized (lowercase) alphabet.

    ASCII input reduces to [a-z]+; non-ASCII alphabetic characters pass
    through lowercased rather than being transliterated.
    """
    return bool(word) and word.isalpha() and word == word.lower()


# --- raw keyword segmentation -------------------------------------------

# Segment kinds: "U" uppercase run, "w" lowercase/caseless word run,
# "D" ASCII digit run, "S" symbol run.


def _classify(ch: str) -> str:
    if "0" <= ch <= "9":
        return "D"
    if ch.isalpha():
        return "U" if ch.isupper() else "w"
    return "S"


def _segment_piece(piece: str) -> list[tuple[str, str]]:
    runs: list[tuple[str, str]] = []
    for kind, group in itertools.groupby(piece, key=_classify):
        runs.append((kind, "".join(group)))
    # Case boundary: an uppercase run followed by lowercase belongs to
    # the next word ("HTMLParser" -> HTML + Parser, "Camel" stays one).
    out: list[tuple[str, str]] = []
    i = 0
    while i < len(runs):
        kind, text = runs[i]
        if kind == "U" and i + 1 < len(runs) and runs[i + 1][0] == "w":
            follower = runs[i + 1][1]
            if len(text) == 1:
                out.append(("w", text + follower))
            else:
                out.append(("U", text[:-1]))
                out.append(("w", text[-1] + follower))
            i += 2
        else:
            out.append((kind, text))
            i += 1
    return out


def _run_readings(runs: list[tuple[str, str]], idx: int) -> list[list[str]]:
    """Alternative spoken readings of one run, primary reading first."""
    kind, text = runs[idx]
    whole_piece = len(runs) == 1
    if kind == "w":
        return [[text.lower()]]
    if kind == "U":
        # A lone x between digit runs is the dimension separator.
        if text in ("X",) and _between_digits(runs, idx):
            return [["by"]]
        if len(text) == 1:
            return [[text.lower()]]
        if 2 <= len(text) <= 4:
            letters = [ch.lower() for ch in text]
            vowels_only = all(ch in _VOWELS for ch in text.lower())
            if whole_piece and not vowels_only:
                return [letters, [text.lower()]]
            return [letters]
        return [[text.lower()]]
    if kind == "D":
        if whole_piece and len(text) <= 4 and (len(text) == 1 or text[0] != "0"):
            readings = [cardinal_words(int(text)), digit_words(text)]
            if readings[0] == readings[1]:
                return readings[:1]
            return readings
        return [digit_words(text)]
    # Symbol run: keep the speakable symbols, drop the rest.
    return [[_SYMBOL_WORDS[ch] for ch in text if ch in _SYMBOL_WORDS]]


def _between_digits(runs: list[tuple[str, str]], idx: int) -> bool:
    return (
        0 < idx < len(runs) - 1
        and runs[idx - 1][0] == "D"
        and runs[idx + 1][0] == "D"
    )


def _piece_readings(piece: str) -> list[list[str]]:
    runs = _segment_piece(piece)
    # Lowercase x between digits ("3x4") segments as a word run.
    fixed: list[list[list[str]]] = []
    for i, (kind, text) in enumerate(runs):
        if kind == "w" and text == "x" and _between_digits(runs, i):
            fixed.append([["by"]])
        else:
            fixed.append(_run_readings(runs, i))
    combos = itertools.product(*fixed)
    readings: list[list[str]] = []
    seen: set[tuple[str, ...]] = set()
    for combo in itertools.islice(combos, VARIANT_CAP * VARIANT_CAP):
        flat = [w for part in combo for w in part]
        key = tuple(flat)
        if key not in seen:
            seen.add(key)
            readings.append(flat)
        if len(readings) >= VARIANT_CAP:
            break
    return readings


def normalize_keyword(
    raw: str,
    exceptions: Mapping[str, Sequence[Sequence[str]]] | None = None,
) -> list[Variant]:
    """Expand a raw keyword into spoken-form variants.

    Returns a non-empty, duplicate-free list of word tuples; the first
    variant is the primary reading.  Entries found in ``exceptions``
    bypass the rules and use the table's variants verbatim.

    Raises NormalizationError when the keyword normalizes to nothing.
    """
    key = raw.strip()
    if not key:
        raise NormalizationError("empty keyword")
    if exceptions is not None and key in exceptions:
        variants = [tuple(v) for v in exceptions[key]]
        if not variants or any(not v for v in variants):
            raise NormalizationError(f"exception entry for {key!r} is empty")
        for variant in variants:
            for word in variant:
                if not is_spoken_word(word):
                    raise NormalizationError(
                        f"exception entry for {key!r} has word {word!r} "
                        "outside the spoken alphabet"
                    )
        return variants

    per_piece = [_piece_readings(piece) for piece in key.split()]
    variants: list[Variant] = []
    seen: set[Variant] = set()
    for combo in itertools.islice(
        itertools.product(*per_piece), VARIANT_CAP * VARIANT_CAP
    ):
        flat = tuple(w for reading in combo for w in reading)
        if flat and flat not in seen:
            seen.add(flat)
            variants.append(flat)
        if len(variants) >= VARIANT_CAP:
            break
    if not variants:
        raise NormalizationError(f"keyword {key!r} normalizes to nothing")
    return variants


# --- mapping -------------------------------------------------------------


@dataclass
class KeywordEntry:
    """One biasing target: raw written form plus its spoken variants.

    raw       -- written form, returned by inverse normalization
    variants  -- spoken-form word tuples over the lowercase alphabet
    weight    -- per-entry boost (natural-log score) or None for the
                 run default
    priority  -- collision tie-break for inverse normalization; lower
                 wins
    """

    raw: str
    variants: tuple[Variant, ...]
    weight: float | None = None
    priority: int = 0


@dataclass(frozen=True)
class CollisionRecord:
    """Two entries normalized to the same variant; one owns it now."""

    variant: Variant
    winner: str
    losers: tuple[str, ...]


@dataclass
class NormalizationMapping:
    """Keyword entries plus the reverse variant -> entry index.

    The reverse index is what inverse normalization and match reporting
    consult, so collisions (two raws sharing a spoken variant) are
    resolved once at build time: lowest priority wins, then the longest
    raw form, then the lexicographically smallest raw form.
    """

    entries: list[KeywordEntry] = field(default_factory=list)
    reverse: dict[Variant, KeywordEntry] = field(default_factory=dict)
    collisions: list[CollisionRecord] = field(default_factory=list)

    @property
    def max_variant_len(self) -> int:
        return max((len(v) for v in self.reverse), default=0)

    def lookup(self, words: Sequence[str]) -> KeywordEntry | None:
        return self.reverse.get(tuple(words))

    def save(self, path: str | Path) -> None:
        save_mapping(self, path)


def _claim_rank(entry: KeywordEntry) -> tuple[int, int, str]:
    return (entry.priority, -len(entry.raw), entry.raw)


def _assemble_mapping(entries: list[KeywordEntry]) -> NormalizationMapping:
    seen_raw: set[str] = set()
    for entry in entries:
        if entry.raw in seen_raw:
            raise NormalizationError(f"duplicate keyword {entry.raw!r}")
        if "\t" in entry.raw or "\n" in entry.raw:
            raise NormalizationError(f"keyword {entry.raw!r} contains a tab or newline")
        seen_raw.add(entry.raw)

    claims: dict[Variant, list[KeywordEntry]] = {}
    for entry in entries:
        for variant in entry.variants:
            claims.setdefault(variant, []).append(entry)

    reverse: dict[Variant, KeywordEntry] = {}
    collisions: list[CollisionRecord] = []
    for variant in sorted(claims):
        claimants = claims[variant]
        winner = min(claimants, key=_claim_rank)
        reverse[variant] = winner
        if len(claimants) > 1:
            losers = tuple(sorted(e.raw for e in claimants if e is not winner))
            record = CollisionRecord(variant, winner.raw, losers)
            collisions.append(record)
            logger.warning(
                "variant %s claimed by %s; kept %r, dropped %s",
                " ".join(variant), len(claimants), winner.raw, ", ".join(losers),
            )
    return NormalizationMapping(entries=entries, reverse=reverse, collisions=collisions)


def build_mapping(
    keywords: Iterable[str | tuple],
    exceptions: Mapping[str, Sequence[Sequence[str]]] | None = None,
) -> NormalizationMapping:
    """Normalize a keyword list into a NormalizationMapping.

    ``keywords`` holds raw strings or (raw, weight, priority) tuples
    with the trailing fields optional.  Duplicate raws are rejected.
    """
    entries: list[KeywordEntry] = []
    for item in keywords:
        if isinstance(item, str):
            raw, weight, priority = item, None, 0
        else:
            raw = item[0]
            weight = item[1] if len(item) > 1 else None
            priority = item[2] if len(item) > 2 and item[2] is not None else 0
        variants = normalize_keyword(raw, exceptions)
        entries.append(
            KeywordEntry(raw.strip(), tuple(variants), weight, priority)
        )
    return _assemble_mapping(entries)


# --- inverse normalization -----------------------------------------------


@dataclass(frozen=True)
class ItnSpan:
    """A replaced span: words[start:end] became the raw written form."""

    start: int
    end: int
    raw: str


def inverse_normalize(
    words: Sequence[str], mapping: NormalizationMapping
) -> tuple[str, list[ItnSpan]]:
    """Map spoken-form words back to written form.

    Scans left to right taking the longest variant match at each
    position (matches never overlap); matched spans are replaced by the
    owning entry's raw form and everything else passes through.
    """
    words = list(words)
    out: list[str] = []
    spans: list[ItnSpan] = []
    limit = mapping.max_variant_len
    i = 0
    while i < len(words):
        entry = None
        span_len = 0
        for length in range(min(limit, len(words) - i), 0, -1):
            entry = mapping.reverse.get(tuple(words[i : i + length]))
            if entry is not None:
                span_len = length
                break
        if entry is not None:
            out.append(entry.raw)
            spans.append(ItnSpan(i, i + span_len, entry.raw))
            i += span_len
        else:
            out.append(words[i])
            i += 1
    return " ".join(out), spans


# --- file formats ---------------------------------------------------------


def load_keyword_list(path: str | Path) -> list[tuple[str, float | None, int]]:
    """Read a keyword list file: ``raw<TAB>weight?<TAB>priority?``.

    Blank lines and lines starting with ``#`` are skipped.
    """
    items: list[tuple[str, float | None, int]] = []
    path = Path(path)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        raw = fields[0].strip()
        if not raw:
            raise DataFormatError(f"{path}:{lineno}: missing keyword")
        weight: float | None = None
        priority = 0
        try:
            if len(fields) > 1 and fields[1].strip():
                weight = float(fields[1])
            if len(fields) > 2 and fields[2].strip():
                priority = int(fields[2])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
        items.append((raw, weight, priority))
    return items


def load_exceptions(path: str | Path) -> dict[str, list[list[str]]]:
    """Read a normalization exceptions file.

    Same TSV shape as a saved mapping: ``raw<TAB>variant words`` with
    one line per variant; weight/priority columns are tolerated and
    ignored (the keyword list stays authoritative for those).
    """
    table: dict[str, list[list[str]]] = {}
    path = Path(path)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 2 or not fields[0].strip() or not fields[1].strip():
            raise DataFormatError(f"{path}:{lineno}: expected raw<TAB>variant")
        table.setdefault(fields[0].strip(), []).append(fields[1].split())
    return table


def save_mapping(mapping: NormalizationMapping, path: str | Path) -> None:
    """Write a mapping as TSV: raw, space-joined variant, weight, priority.

    One line per variant; save -> load -> save is byte-stable.
    """
    lines = []
    for entry in mapping.entries:
        weight = "" if entry.weight is None else repr(entry.weight)
        for variant in entry.variants:
            lines.append(
                f"{entry.raw}\t{' '.join(variant)}\t{weight}\t{entry.priority}"
            )
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def load_mapping(path: str | Path) -> NormalizationMapping:
    """Read a mapping saved by save_mapping."""
    path = Path(path)
    order: list[str] = []
    variants: dict[str, list[Variant]] = {}
    meta: dict[str, tuple[float | None, int]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise DataFormatError(f"{path}:{lineno}: expected 4 tab-separated fields")
        raw, variant_text, weight_text, priority_text = fields
        variant = tuple(variant_text.split())
        if not raw or not variant:
            raise DataFormatError(f"{path}:{lineno}: empty raw or variant")
        try:
            weight = float(weight_text) if weight_text else None
            priority = int(priority_text)
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
        if raw not in variants:
            order.append(raw)
            variants[raw] = []
            meta[raw] = (weight, priority)
        variants[raw].append(variant)
    entries = [
        KeywordEntry(raw, tuple(variants[raw]), meta[raw][0], meta[raw][1])
        for raw in order
    ]
    return _assemble_mapping(entries)
