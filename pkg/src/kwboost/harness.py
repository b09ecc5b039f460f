"""End-to-end runs: decode a manifest, score transcripts, tune weights.

run_decode wires the full pipeline for each utterance: load logits,
decode in the configured mode, inverse-normalize the top hypothesis,
and emit one JSON line with the written-form text and the keyword
spans that were mapped back.  Scoring and grid search consume the same
files, so every number in a report is reproducible from artifacts on
disk.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .bias_trie import BiasTrie, build_trie
from .dataio import (
    ManifestEntry,
    read_logits,
    read_manifest,
    read_transcripts,
    read_vocab_file,
)
from .decoder import DecodeConfig, LogitMatrix, Vocabulary, decode
from .errors import ConfigError, DataFormatError, NormalizationError
from .lm import NGramLM, load_arpa
from .norm import (
    KeywordEntry,
    NormalizationMapping,
    _assemble_mapping,
    build_mapping,
    inverse_normalize,
    load_exceptions,
    load_keyword_list,
    normalize_keyword,
    save_mapping,
)
from .scoring import ScoreReport, biased_wer


@dataclass
class RunConfig:
    """One decode run over a manifest.

    Boost parameters mirror DecodeConfig; ``boost_weight`` doubles as
    the default weight when building the bias trie from the keyword
    list (entries with an explicit list weight keep it).
    """

    manifest: Path
    vocab: Path
    out: Path
    lm: Path | None = None
    keywords: Path | None = None
    exceptions: Path | None = None
    mode: str = "baseline"
    boost_weight: float = 0.0
    lm_weight: float = 0.5
    word_bonus: float = 1.5
    beam_width: int = 50
    rarity_threshold: float = -4.0
    token_min_logp: float = -9.21
    flat_final_boost: bool = False

    def __post_init__(self):
        self.manifest = Path(self.manifest)
        self.vocab = Path(self.vocab)
        self.out = Path(self.out)
        self.lm = Path(self.lm) if self.lm is not None else None
        self.keywords = Path(self.keywords) if self.keywords is not None else None
        self.exceptions = Path(self.exceptions) if self.exceptions is not None else None
        if self.mode != "baseline" and self.keywords is None:
            raise ConfigError(f"mode {self.mode!r} requires a keyword list")
        for path in (self.manifest, self.vocab, self.lm, self.keywords, self.exceptions):
            if path is not None and not path.exists():
                raise ConfigError(f"input file not found: {path}")

    def decode_config(self) -> DecodeConfig:
        return DecodeConfig(
            beam_width=self.beam_width,
            lm_weight=self.lm_weight,
            word_bonus=self.word_bonus,
            mode=self.mode,
            boost_weight=self.boost_weight,
            rarity_threshold=self.rarity_threshold,
            token_min_logp=self.token_min_logp,
            flat_final_boost=self.flat_final_boost,
        )


@dataclass
class LoadedResources:
    vocab: Vocabulary
    lm: NGramLM | None
    mapping: NormalizationMapping | None
    trie: BiasTrie | None


def load_resources(cfg: RunConfig) -> LoadedResources:
    vocab = read_vocab_file(cfg.vocab)
    lm = load_arpa(cfg.lm) if cfg.lm is not None else None
    mapping = None
    trie = None
    if cfg.keywords is not None:
        exceptions = load_exceptions(cfg.exceptions) if cfg.exceptions else None
        mapping = build_mapping(load_keyword_list(cfg.keywords), exceptions)
        if cfg.mode != "baseline":
            trie = build_trie(
                mapping,
                lm=lm,
                rarity_threshold=cfg.rarity_threshold,
                default_weight=cfg.boost_weight,
            )
    return LoadedResources(vocab, lm, mapping, trie)


@dataclass
class DecodeSummary:
    out: Path
    decoded: int
    failed: int


def _decode_entry(
    entry: ManifestEntry, resources: LoadedResources, config: DecodeConfig
) -> dict:
    matrix = read_logits(entry.logits_path)
    result = decode(matrix, resources.vocab, config, lm=resources.lm, trie=resources.trie)
    if resources.mapping is not None:
        text, spans = inverse_normalize(result.words, resources.mapping)
        matches = [{"raw": s.raw, "start": s.start, "end": s.end} for s in spans]
    else:
        text, matches = result.text, []
    return {"id": entry.utt_id, "text": text, "matches": matches}


def run_decode(cfg: RunConfig) -> DecodeSummary:
    """Decode every manifest utterance; never stop on one bad file.

    Output lines keep manifest order.  Utterances whose logits are
    missing or corrupt produce an error record instead of a transcript.
    """
    resources = load_resources(cfg)
    config = cfg.decode_config()
    entries = read_manifest(cfg.manifest)
    decoded = failed = 0
    lines: list[str] = []
    for entry in entries:
        try:
            record = _decode_entry(entry, resources, config)
            decoded += 1
        except (DataFormatError, OSError) as exc:
            record = {"id": entry.utt_id, "error": str(exc)}
            failed += 1
        lines.append(json.dumps(record, sort_keys=False))
    cfg.out.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return DecodeSummary(cfg.out, decoded, failed)


def run_score(
    hyps: str | Path,
    manifest: str | Path,
    keywords: str | Path,
    out: str | Path | None = None,
    case_fold: bool = False,
) -> ScoreReport:
    """Score a transcript file against manifest references."""
    entries = read_manifest(manifest)
    records = read_transcripts(hyps)
    corpus = []
    for entry in entries:
        record = records.get(entry.utt_id)
        if record is None:
            raise DataFormatError(f"no hypothesis for utterance {entry.utt_id!r}")
        if "error" in record:
            raise DataFormatError(
                f"utterance {entry.utt_id!r} carries a decode error: {record['error']}"
            )
        corpus.append(
            (entry.utt_id, entry.reference.split(), str(record["text"]).split())
        )
    if not corpus:
        raise DataFormatError("empty corpus: manifest has no utterances")
    terms = [raw for raw, _, _ in load_keyword_list(keywords)]
    report = biased_wer(corpus, terms, case_fold=case_fold)
    if out is not None:
        report.save(out)
    return report


# --- list preparation -------------------------------------------------------


@dataclass
class PrepareSummary:
    mapping: NormalizationMapping
    rejected: list[tuple[str, str]]  # (raw, reason)


def prepare_list(
    keywords: str | Path,
    out: str | Path | None = None,
    exceptions: str | Path | None = None,
    split_compounds: bool = False,
) -> PrepareSummary:
    """Normalize a raw keyword list into a saved mapping.

    Whitespace-carrying raws are rejected unless ``split_compounds``
    keeps them as multi-word targets.  Entries that normalize to
    nothing are rejected with a diagnostic; the rest build the mapping.
    """
    table = load_exceptions(exceptions) if exceptions else None
    rejected: list[tuple[str, str]] = []
    kept: list[tuple[str, float | None, int]] = []
    for raw, weight, priority in load_keyword_list(keywords):
        if len(raw.split()) > 1 and not split_compounds:
            rejected.append((raw, "contains whitespace (use --split-compounds)"))
            continue
        try:
            normalize_keyword(raw, table)
        except NormalizationError as exc:
            rejected.append((raw, str(exc)))
            continue
        kept.append((raw, weight, priority))
    mapping = build_mapping(kept, table)
    if out is not None:
        save_mapping(mapping, out)
    return PrepareSummary(mapping, rejected)


def raw_target_mapping(
    keywords: Sequence[tuple[str, float | None, int]] | str | Path,
) -> NormalizationMapping:
    """Identity mapping that skips normalization entirely.

    Each raw keyword becomes its own single variant, split on
    whitespace but otherwise verbatim (case, digits and symbols kept).
    Useful as the degraded comparison arm when measuring what
    normalization buys: out-of-alphabet targets can never match
    decoder output, so boosting them changes nothing.
    """
    if isinstance(keywords, (str, Path)):
        keywords = load_keyword_list(keywords)
    entries = [
        KeywordEntry(raw.strip(), (tuple(raw.split()),), weight, priority)
        for raw, weight, priority in keywords
    ]
    return _assemble_mapping(entries)


# --- boost weight tuning -----------------------------------------------------


@dataclass
class GridPoint:
    weight: float
    wer: float | None
    u_wer: float | None
    b_wer: float | None


@dataclass
class GridSearchResult:
    objective: str
    grid: list[GridPoint]
    selected_weight: float
    per_target: dict[str, float] | None = None

    def to_dict(self) -> dict:
        def r(value: float | None) -> float | None:
            return None if value is None else round(value, 2)

        return {
            "objective": self.objective,
            "grid": [
                {
                    "weight": p.weight,
                    "wer": r(p.wer),
                    "u_wer": r(p.u_wer),
                    "b_wer": r(p.b_wer),
                }
                for p in self.grid
            ],
            "selected_weight": self.selected_weight,
            "per_target": self.per_target,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8"
        )


@dataclass
class _DevSet:
    corpus: list[tuple[str, LogitMatrix, str]]
    vocab: Vocabulary
    lm: NGramLM | None
    mapping: NormalizationMapping
    terms: list[str]


def _load_dev_set(cfg: RunConfig) -> _DevSet:
    resources = load_resources(cfg)
    if resources.mapping is None:
        raise ConfigError("tuning requires a keyword list")
    entries = read_manifest(cfg.manifest)
    if not entries:
        raise DataFormatError("empty manifest: nothing to tune on")
    corpus = [
        (entry.utt_id, read_logits(entry.logits_path), entry.reference)
        for entry in entries
    ]
    terms = [entry.raw for entry in resources.mapping.entries]
    return _DevSet(corpus, resources.vocab, resources.lm, resources.mapping, terms)


def _evaluate(
    dev: _DevSet, cfg: RunConfig, mapping: NormalizationMapping, weight: float
) -> GridPoint:
    config = replace(cfg.decode_config(), boost_weight=weight)
    trie = build_trie(
        mapping,
        lm=dev.lm,
        rarity_threshold=cfg.rarity_threshold,
        default_weight=weight,
    )
    scored = []
    for utt_id, matrix, reference in dev.corpus:
        result = decode(matrix, dev.vocab, config, lm=dev.lm, trie=trie)
        text, _ = inverse_normalize(result.words, mapping)
        scored.append((utt_id, reference.split(), text.split()))
    report = biased_wer(scored, dev.terms)
    return GridPoint(weight, report.wer, report.u_wer, report.b_wer)


def _rate_key(point: GridPoint, objective: str) -> tuple[float, float]:
    if objective == "b_wer" and point.b_wer is None:
        raise DataFormatError(
            "B-WER is undefined on this dev set (no biased reference words); "
            "tune with --objective wer"
        )
    b = point.b_wer if point.b_wer is not None else float("inf")
    w = point.wer if point.wer is not None else float("inf")
    return (b, w) if objective == "b_wer" else (w, b)


def grid_search(
    cfg: RunConfig,
    grid: Sequence[float],
    objective: str = "b_wer",
    per_target: bool = False,
) -> GridSearchResult:
    """Pick the boost weight minimizing the objective over the grid.

    The default objective is B-WER with WER as tie-break; rate ties
    resolve to the smallest weight.  With ``per_target`` a single
    coordinate-descent sweep then refines each entry's weight over the
    same grid, holding the others fixed.
    """
    if not grid:
        raise ConfigError("empty weight grid")
    if objective not in ("b_wer", "wer"):
        raise ConfigError(f"unknown objective {objective!r}")
    weights = sorted(set(float(w) for w in grid))
    if any(w < 0 for w in weights):
        raise ConfigError("boost weights must be >= 0")
    dev = _load_dev_set(cfg)
    points = [_evaluate(dev, cfg, dev.mapping, w) for w in weights]
    best = min(points, key=lambda p: _rate_key(p, objective) + (p.weight,))
    result = GridSearchResult(objective, points, best.weight)
    if not per_target:
        return result

    assigned = {entry.raw: best.weight for entry in dev.mapping.entries}
    for entry in dev.mapping.entries:
        candidates = []
        for w in weights:
            trial = dict(assigned)
            trial[entry.raw] = w
            point = _evaluate(
                dev, cfg, _override_weights(dev.mapping, trial), best.weight
            )
            candidates.append((_rate_key(point, objective), w))
        # The sweep includes the current value, so this never worsens.
        _, chosen = min(candidates)
        assigned[entry.raw] = chosen
    result.per_target = assigned
    return result


def _override_weights(
    mapping: NormalizationMapping, weights: dict[str, float]
) -> NormalizationMapping:
    entries = [
        replace(entry, weight=weights.get(entry.raw, entry.weight))
        for entry in mapping.entries
    ]
    return _assemble_mapping(entries)
