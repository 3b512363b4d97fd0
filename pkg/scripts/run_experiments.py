#!/usr/bin/env python3
"""Full-scale experiments: size sweep, typological distance and cross-grammar matrix.

Runs the full pipeline (default config unless --config is given) and prints
the seed-averaged tables that the run directory also stores as CSV.

    python scripts/run_experiments.py --out runs/full
    python scripts/run_experiments.py --config my.yaml --out runs/alt --workers 4
"""

import argparse
import csv
import json
import time
from dataclasses import replace
from pathlib import Path

from typolex.config import RunConfig
from typolex.pipeline import run_full_pipeline


def table(path: Path, value: str) -> None:
    rows = list(csv.DictReader(open(path, encoding="utf-8")))
    grammars = sorted({r["grammar"] for r in rows})
    sizes = sorted({int(r["size"]) for r in rows})
    cell = {(r["grammar"], int(r["size"])): float(r[value]) for r in rows}
    print(f"{'size':>6} " + " ".join(f"{g:>14}" for g in grammars))
    for n in sizes:
        print(f"{n:>6} " + " ".join(f"{cell[g, n]:>14.4f}" for g in grammars))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", help="YAML run config")
    ap.add_argument("--out", default="runs/full")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    cfg = replace(cfg, output_dir=args.out, workers=args.workers)
    t0 = time.perf_counter()
    manifest = run_full_pipeline(cfg, log=print)
    out = Path(args.out)

    print("\nmean perplexity by lexicon size")
    table(out / "figure_perplexity.csv", "mean_perplexity")
    print("\nmean KL divergence from the PHOIBLE phoneme distribution")
    table(out / "figure_kl.csv", "mean_kl")

    m = json.loads((out / "cross_grammar.json").read_text(encoding="utf-8"))
    print("\ncross-grammar average log-likelihood (rows: train, columns: test)")
    print(f"{'':>14} " + " ".join(f"{g:>14}" for g in m["grammars"]))
    for g, row in zip(m["grammars"], m["log_likelihood"]):
        print(f"{g:>14} " + " ".join(f"{v:>14.4f}" for v in row))

    for kind in m["grammars"]:
        sem = out / "semantics" / f"{kind}.json"
        if sem.exists():
            print(f"semantic alignment rho ({kind}): {json.loads(sem.read_text())['metadata']['score']:.4f}")
    stages = ", ".join(f"{k} {v['seconds']:.0f}s" for k, v in manifest.stages.items())
    print(f"\ntotal {time.perf_counter() - t0:.0f}s ({stages}); manifest at {out / 'manifest.json'}")


if __name__ == "__main__":
    main()
