"""End-to-end run: ingest, sample, generate, assign meanings, evaluate."""

from __future__ import annotations

import hashlib
import json
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean
from typing import Callable

import yaml

from . import __version__
from .config import RunConfig
from .errors import TypolexError
from .evaluation import (
    cross_grammar_matrix,
    size_sweep,
    write_cross_outputs,
    write_metrics_csv,
)
from .grammars import GrammarSpec, Lexicon, generate_lexicon
from .inventory import PhonemeInventory, sample_inventory
from .phoible import (
    SegmentDatabase,
    all_statistics,
    bundled_phoible_path,
    global_phoneme_distribution,
    parse_phoible_csv,
    write_stats_csv,
)
from .seeding import derive_seed, py_rng
from .semantics import hill_climb_assign, load_ontology, sample_leaf_concepts


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _dump(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


@dataclass
class RunManifest:
    config_hash: str
    config: dict
    tool_version: str = __version__
    stages: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time)
    finished: float | None = None
    error: dict | None = None

    def record(self, stage: str, inputs: list[Path], outputs: list[Path], root: Path, t0: float) -> None:
        self.stages[stage] = {
            "inputs": {_rel(p, root): sha256_file(p) for p in inputs},
            "outputs": {_rel(p, root): sha256_file(p) for p in outputs},
            "seconds": round(time.time() - t0, 3),
        }

    def to_dict(self, timestamps: bool = True) -> dict:
        stages = {
            k: {kk: vv for kk, vv in v.items() if timestamps or kk != "seconds"} for k, v in self.stages.items()
        }
        d = {"config_hash": self.config_hash, "config": self.config, "tool_version": self.tool_version,
             "stages": stages, "error": self.error}
        if timestamps:
            d.update(started=self.started, finished=self.finished)
        return d

    def files(self) -> dict[str, str]:
        out = {}
        for s in self.stages.values():
            out.update(s["outputs"])
        return out


def _rel(p: Path, root: Path) -> str:
    p = Path(p).resolve()
    try:
        return str(p.relative_to(root.resolve()))
    except ValueError:
        return p.name  # inputs outside the run directory are keyed by file name


def load_database(config: RunConfig) -> SegmentDatabase:
    return parse_phoible_csv(config.phoible_path or bundled_phoible_path())


def replicate_inventory(db: SegmentDatabase, config: RunConfig, rep_seed: int) -> PhonemeInventory:
    from dataclasses import replace

    return sample_inventory(db, replace(config.sampler, seed=rep_seed))


def _gen(args):
    spec, inv, template, n, seed = args
    return generate_lexicon(spec, inv, template, n, seed=seed)


def _gen_json(args):
    # worker processes exchange JSON text: inventories and lexicons hold read-only mappings
    spec, inv_json, template, n, seed = args
    return _gen((spec, PhonemeInventory.from_json(inv_json), template, n, seed)).to_json()


def _workers(config: RunConfig) -> int:
    env = os.environ.get("TYPOLEX_WORKERS")
    return max(1, int(env)) if env else config.workers


def replicate_lexicons(inv: PhonemeInventory, config: RunConfig, rep_seed: int,
                       n: int | None = None) -> dict[str, Lexicon]:
    """One lexicon per configured grammar, all over the same inventory."""
    n = n or config.max_size
    jobs = [(g, inv, config.template, n, derive_seed(rep_seed, "generate")) for g in config.grammars]
    workers = min(_workers(config), len(jobs))
    if workers > 1:
        inv_json = inv.to_json()
        with ProcessPoolExecutor(workers) as pool:
            texts = list(pool.map(_gen_json, [(g, inv_json, t, m, s) for g, _, t, m, s in jobs]))
        lexs = [Lexicon.from_json(t) for t in texts]
    else:
        lexs = [_gen(j) for j in jobs]
    return {g.kind: lex for g, lex in zip(config.grammars, lexs)}


def figure_tables(reports) -> tuple[list[dict], list[dict]]:
    """Seed-averaged perplexity and KL per (grammar, size)."""
    cells = defaultdict(list)
    for r in reports:
        cells[r.grammar, r.lexicon_size].append(r)
    ppl, kl = [], []
    for (g, n), rs in sorted(cells.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        ppl.append({"grammar": g, "size": n, "mean_perplexity": repr(mean(r.perplexity for r in rs)),
                    "mean_avg_ll": repr(mean(r.avg_log_likelihood for r in rs)), "seeds": len(rs)})
        kl.append({"grammar": g, "size": n, "mean_kl": repr(mean(r.kl_divergence for r in rs)), "seeds": len(rs)})
    return ppl, kl


def _write_rows(rows: list[dict], path: Path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def run_full_pipeline(config: RunConfig, log: Callable[[str], None] | None = None) -> RunManifest:
    """Run every stage, writing artifacts and ``manifest.json`` under ``config.output_dir``."""
    log = log or (lambda msg: None)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config.content_hash(), config.experiment_dict())
    cfg_path = out / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(config.experiment_dict(), sort_keys=False, allow_unicode=True), encoding="utf-8")
    stage = "ingest"
    try:
        t0 = time.time()
        src = Path(config.phoible_path or bundled_phoible_path())
        db = parse_phoible_csv(src)
        stats_path = out / "stats.csv"
        write_stats_csv(all_statistics(db), stats_path)
        reference = global_phoneme_distribution(db)
        ref_path = out / "phoible_distribution.json"
        _dump(reference, ref_path)
        manifest.record(stage, [src, cfg_path], [cfg_path, stats_path, ref_path], out, t0)
        log(f"ingest: {db.n_inventories} inventories")

        stage = "sample"
        t0 = time.time()
        seeds = config.replicate_seeds()
        inventories, inv_paths = {}, []
        for r, s in enumerate(seeds):
            inventories[r] = replicate_inventory(db, config, s)
            p = out / "inventories" / f"replicate{r}.json"
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(inventories[r].to_json() + "\n", encoding="utf-8")
            inv_paths.append(p)
        manifest.record(stage, [cfg_path], inv_paths, out, t0)

        stage = "generate"
        t0 = time.time()
        lexicons, lex_paths = {}, []
        for r, s in enumerate(seeds):
            lexicons[r] = replicate_lexicons(inventories[r], config, s)
            for kind, lex in lexicons[r].items():
                p = out / "lexicons" / f"{kind}_replicate{r}.json"
                p.parent.mkdir(parents=True, exist_ok=True)
                p.write_text(lex.to_json() + "\n", encoding="utf-8")
                lex_paths.append(p)
            log(f"generate: replicate {r} done")
        manifest.record(stage, inv_paths, lex_paths, out, t0)

        stage = "semantics"
        t0 = time.time()
        ont_src = Path(config.ontology_path) if config.ontology_path else None
        ont = load_ontology(ont_src)
        sem_paths, sem_inputs = [], []
        n_sem = config.semantics.size or config.max_size
        for kind, lex in lexicons[0].items():
            words = lex.head(n_sem).words
            ms = sample_leaf_concepts(ont, len(words), py_rng(seeds[0], "meanings", kind))
            sc = config.semantics
            a = hill_climb_assign(ms.meanings, words, ont, sc.restarts, sc.max_iters,
                                  seed=derive_seed(seeds[0], "assign", kind), max_proposals=sc.max_proposals)
            d = a.to_dict()
            d["metadata"].update(grammar=kind, n=len(words), restarts=sc.restarts, max_iters=sc.max_iters,
                                 max_proposals=sc.max_proposals)
            p = out / "semantics" / f"{kind}.json"
            _dump(d, p)
            sem_paths.append(p)
            sem_inputs.append(out / "lexicons" / f"{kind}_replicate0.json")
            log(f"semantics: {kind} rho={a.score:.4f}")
        manifest.record(stage, sem_inputs + ([ont_src] if ont_src else []), sem_paths, out, t0)

        stage = "evaluate"
        t0 = time.time()
        reports = size_sweep({seeds[r]: lexicons[r] for r in lexicons}, config.lexicon_sizes, config.eval, reference)
        metrics = out / "metrics.csv"
        write_metrics_csv(reports, metrics)
        fig_ppl, fig_kl = figure_tables(reports)
        ppl_path, kl_path = out / "figure_perplexity.csv", out / "figure_kl.csv"
        _write_rows(fig_ppl, ppl_path)
        _write_rows(fig_kl, kl_path)
        matrix = cross_grammar_matrix(lexicons[0], config.eval.order, config.eval.smoothing_obj,
                                      config.eval.heldout_fraction, seed=seeds[0])
        cross_csv, cross_json = out / "cross_grammar.csv", out / "cross_grammar.json"
        write_cross_outputs(matrix, cross_csv, cross_json)
        manifest.record(stage, lex_paths + [ref_path], [metrics, ppl_path, kl_path, cross_csv, cross_json], out, t0)
    except TypolexError as exc:
        exc.stage = stage
        manifest.error = exc.to_dict()
        raise
    except Exception as exc:
        manifest.error = {"stage": stage, "error": type(exc).__name__, "message": str(exc)}
        raise
    finally:
        manifest.finished = time.time()
        _dump(manifest.to_dict(), out / "manifest.json")
    return manifest
