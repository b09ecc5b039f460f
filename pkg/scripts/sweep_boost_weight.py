#!/usr/bin/env python3
"""Sweep the keyword boost weight on a synthetic dev corpus.

Runs the grid search used by `kwboost tune` and prints the rate table,
optionally refining per-keyword weights with a coordinate-descent pass.
"""

import argparse
import json
from pathlib import Path

from kwboost.fixtures import make_fixtures
from kwboost.harness import RunConfig, grid_search

ROOT = Path(__file__).resolve().parents[1]


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--spec",
        type=Path,
        default=ROOT / "tests" / "data" / "corpus_spec.jsonl",
        help="fixture corpus spec (JSONL)",
    )
    parser.add_argument(
        "--keywords",
        type=Path,
        default=ROOT / "tests" / "data" / "keywords_demo.txt",
        help="biasing keyword list",
    )
    parser.add_argument(
        "--grid", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0, 4.0, 8.0]
    )
    parser.add_argument("--objective", choices=("b_wer", "wer"), default="b_wer")
    parser.add_argument("--mode", choices=("default", "ngram"), default="ngram")
    parser.add_argument("--per-target", action="store_true")
    parser.add_argument("--out-dir", type=Path, default=Path("sweep_out"))
    parser.add_argument("--seed", type=int, default=7)
    return parser.parse_args()


def rate(value: float | None) -> str:
    return "-" if value is None else f"{value:6.2f}"


def main() -> None:
    args = parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    fixture_set = make_fixtures(args.spec, args.out_dir / "fixtures", seed=args.seed)
    cfg = RunConfig(
        manifest=fixture_set.manifest_path,
        vocab=fixture_set.vocab_path,
        out=args.out_dir / "unused.jsonl",
        keywords=args.keywords,
        mode=args.mode,
        word_bonus=0.0,
    )
    result = grid_search(
        cfg, args.grid, objective=args.objective, per_target=args.per_target
    )

    print(f"{'weight':>6} {'WER':>6} {'U-WER':>6} {'B-WER':>6}")
    for point in result.grid:
        marker = "  <-- selected" if point.weight == result.selected_weight else ""
        print(
            f"{point.weight:6.2f} {rate(point.wer)} {rate(point.u_wer)} "
            f"{rate(point.b_wer)}{marker}"
        )
    if result.per_target:
        print("\nper-keyword weights:")
        for raw, weight in result.per_target.items():
            print(f"  {raw}: {weight}")

    out_path = args.out_dir / "sweep.json"
    result.save(out_path)
    print(f"\nresult -> {out_path}")
    print(json.dumps({"selected_weight": result.selected_weight}))


if __name__ == "__main__":
    main()
