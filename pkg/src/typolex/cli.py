"""Command-line interface: ``typolex <subcommand> ...`` or ``python -m typolex``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, documented_defaults
from .errors import TypolexError

SUBCOMMANDS = ("ingest", "stats", "sample-inventory", "gen-lexicon", "assign-semantics", "evaluate",
               "cross-eval", "run")


def _common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--config", type=Path, default=None, help="YAML run configuration")
    p.add_argument("--out", type=Path, required=out_required, help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="typolex", description=__doc__)
    parser.add_argument("--print-config", action="store_true", help="print the documented default config and exit")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}")

    p = sub.add_parser("ingest", help="parse PHOIBLE and write a summary with the global phoneme distribution")
    p.add_argument("--phoible", type=Path, default=None)
    _common(p)

    p = sub.add_parser("stats", help="feature correlations, co-occurrence tests and implications as CSV")
    p.add_argument("--phoible", type=Path, default=None)
    p.add_argument("--no-yates", action="store_true", help="disable the continuity correction")
    _common(p)

    p = sub.add_parser("sample-inventory", help="sample one phoneme inventory as JSON")
    p.add_argument("--phoible", type=Path, default=None)
    p.add_argument("--archetype", default=None, choices=("none", "small_cv", "consonant_rich"))
    _common(p)

    p = sub.add_parser("gen-lexicon", help="generate a lexicon under one grammar")
    p.add_argument("--grammar", required=True, choices=("det", "ot", "ot-stochastic", "hg", "maxent", "random"))
    p.add_argument("--inventory", type=Path, required=True)
    p.add_argument("--n", type=int, required=True)
    _common(p)

    p = sub.add_parser("assign-semantics", help="map ontology meanings onto a lexicon's forms")
    p.add_argument("--lexicon", type=Path, required=True)
    p.add_argument("--ontology", type=Path, default=None)
    p.add_argument("--restarts", type=int, default=None)
    _common(p)

    p = sub.add_parser("evaluate", help="perplexity, log-likelihood, KL and improvement ratio per lexicon")
    p.add_argument("--lexicon", type=Path, nargs="+", required=True)
    p.add_argument("--phoible", type=Path, default=None)
    _common(p)

    p = sub.add_parser("cross-eval", help="train-on-one, test-on-another matrix over lexicons")
    p.add_argument("--lexicon", type=Path, nargs="+", required=True)
    _common(p)

    p = sub.add_parser("run", help="full pipeline into an output directory")
    _common(p, out_required=False)
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def _db(args, cfg):
    from .phoible import bundled_phoible_path, parse_phoible_csv

    return parse_phoible_csv(getattr(args, "phoible", None) or cfg.phoible_path or bundled_phoible_path())


def _write_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")


def _load_lexicon(path: Path):
    from .grammars import Lexicon

    return Lexicon.from_json(path.read_text(encoding="utf-8"))


def cmd_ingest(args, cfg):
    from .phoible import global_phoneme_distribution

    db = _db(args, cfg)
    _write_json({
        "inventories": db.n_inventories,
        "records": len(db.records),
        "segments": len(db.segments),
        "global_distribution": global_phoneme_distribution(db),
    }, args.out)


def cmd_stats(args, cfg):
    from .phoible import all_statistics, write_stats_csv

    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_stats_csv(all_statistics(_db(args, cfg), yates=not args.no_yates), args.out)


def cmd_sample_inventory(args, cfg):
    from .inventory import sample_inventory

    sampler = replace(cfg.sampler, seed=cfg.master_seed)
    if args.archetype:
        sampler = replace(sampler, archetype=args.archetype)
    inv = sample_inventory(_db(args, cfg), sampler)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(inv.to_json() + "\n", encoding="utf-8")


def cmd_gen_lexicon(args, cfg):
    from .grammars import CLI_ALIASES, GrammarSpec, generate_lexicon
    from .inventory import PhonemeInventory

    kind = CLI_ALIASES[args.grammar]
    try:
        spec = cfg.grammar(kind)
    except KeyError:
        spec = GrammarSpec(kind)
    inv = PhonemeInventory.from_json(args.inventory.read_text(encoding="utf-8"))
    lex = generate_lexicon(spec, inv, cfg.template, args.n, seed=cfg.master_seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(lex.to_json() + "\n", encoding="utf-8")


def cmd_assign_semantics(args, cfg):
    from .seeding import derive_seed, py_rng
    from .semantics import hill_climb_assign, load_ontology, sample_leaf_concepts

    lex = _load_lexicon(args.lexicon)
    ont = load_ontology(args.ontology or cfg.ontology_path)
    sc = cfg.semantics
    restarts = args.restarts or sc.restarts
    ms = sample_leaf_concepts(ont, len(lex), py_rng(cfg.master_seed, "meanings"))
    a = hill_climb_assign(ms.meanings, lex.words, ont, restarts, sc.max_iters,
                          seed=derive_seed(cfg.master_seed, "assign"), max_proposals=sc.max_proposals)
    d = a.to_dict()
    d["metadata"].update(n=len(lex), restarts=restarts, max_iters=sc.max_iters, source=str(args.lexicon))
    _write_json(d, args.out)


def cmd_evaluate(args, cfg):
    from .evaluation import EvalReport, evaluate_lexicon, improvement_ratio, write_metrics_csv
    from .phoible import global_phoneme_distribution

    ref = global_phoneme_distribution(_db(args, cfg))
    lexs = [_load_lexicon(p) for p in args.lexicon]
    cells = [(lex.kind or p.stem, len(lex), evaluate_lexicon(lex, cfg.eval, cfg.master_seed, ref))
             for lex, p in zip(lexs, args.lexicon)]
    base = {n: r[1] for k, n, r in cells if k == "random"}
    reports = [EvalReport(k, n, cfg.master_seed, ppl, avg, improvement_ratio(ppl, base[n]) if n in base else None, kl)
               for k, n, (avg, ppl, kl) in cells]
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(reports, args.out)


def cmd_cross_eval(args, cfg):
    from .evaluation import cross_grammar_matrix, write_cross_outputs
    from .errors import InputError

    lexs = {}
    for p in args.lexicon:
        lex = _load_lexicon(p)
        name = lex.kind or p.stem
        if name in lexs:
            raise InputError(f"two lexicons share the grammar name {name!r}")
        lexs[name] = lex
    e = cfg.eval
    m = cross_grammar_matrix(lexs, e.order, e.smoothing_obj, e.heldout_fraction, seed=cfg.master_seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_cross_outputs(m, args.out, args.out.with_suffix(".json"))


def cmd_run(args, cfg):
    from .pipeline import run_full_pipeline

    if args.out is not None:
        cfg = replace(cfg, output_dir=str(args.out))
    m = run_full_pipeline(cfg, log=lambda msg: print(msg, file=sys.stderr))
    print(json.dumps({"output_dir": cfg.output_dir, "config_hash": m.config_hash, "files": len(m.files())}))


HANDLERS = {
    "ingest": cmd_ingest, "stats": cmd_stats, "sample-inventory": cmd_sample_inventory,
    "gen-lexicon": cmd_gen_lexicon, "assign-semantics": cmd_assign_semantics, "evaluate": cmd_evaluate,
    "cross-eval": cmd_cross_eval, "run": cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_config:
        sys.stdout.write(documented_defaults())
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = _config(args)
        HANDLERS[args.command](args, cfg)
    except (TypolexError, OSError, ValueError, KeyError) as exc:
        err = exc.to_dict() if isinstance(exc, TypolexError) else {"error": type(exc).__name__, "message": str(exc)}
        err.setdefault("command", args.command)
        print(json.dumps(err, ensure_ascii=False), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
