"""Run configuration: nested dataclasses with a YAML round trip."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import yaml

from .candidates import TemplateParams
from .errors import ConfigurationError
from .evaluation import EvalConfig
from .grammars import GrammarSpec
from .inventory import SamplerConfig
from .seeding import derive_seed

DEFAULT_GRAMMARS = ("deterministic", "strict_ot", "maxent", "random")


@dataclass(frozen=True)
class SemanticsConfig:
    restarts: int = 8
    max_iters: int = 2000
    max_proposals: int | None = 250_000
    pair_subsample: int | None = None
    size: int | None = None  # None: largest lexicon size

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ConfigurationError("restarts and max_iters must be >= 1")
        if self.max_proposals is not None and self.max_proposals < 1:
            raise ConfigurationError("max_proposals must be >= 1 or null")


@dataclass(frozen=True)
class RunConfig:
    phoible_path: str | None = None
    ontology_path: str | None = None
    master_seed: int = 0
    replicates: int = 5
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    template: TemplateParams = field(default_factory=TemplateParams)
    grammars: tuple[GrammarSpec, ...] = tuple(GrammarSpec(k) for k in DEFAULT_GRAMMARS)
    lexicon_sizes: tuple[int, ...] = (100, 500, 1000, 2500, 5000)
    semantics: SemanticsConfig = field(default_factory=SemanticsConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    output_dir: str = "runs/default"
    workers: int = 1

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.lexicon_sizes)
        object.__setattr__(self, "lexicon_sizes", sizes)
        object.__setattr__(self, "grammars", tuple(self.grammars))
        if not sizes or sizes != tuple(sorted(sizes)) or sizes[0] < 2:
            raise ConfigurationError("lexicon_sizes must be ascending and >= 2")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be >= 1")
        if not self.grammars:
            raise ConfigurationError("at least one grammar is required")
        kinds = [g.kind for g in self.grammars]
        if len(set(kinds)) != len(kinds):
            raise ConfigurationError(f"duplicate grammar kinds {kinds}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    @property
    def max_size(self) -> int:
        return self.lexicon_sizes[-1]

    def replicate_seeds(self) -> list[int]:
        """Per-replicate seeds split from the master seed."""
        return [derive_seed(self.master_seed, "replicate", r) for r in range(self.replicates)]

    def grammar(self, kind: str) -> GrammarSpec:
        for g in self.grammars:
            if g.kind == kind:
                return g
        raise KeyError(kind)

    def to_dict(self) -> dict:
        return {
            "phoible_path": self.phoible_path,
            "ontology_path": self.ontology_path,
            "master_seed": self.master_seed,
            "replicates": self.replicates,
            "sampler": self.sampler.to_dict(),
            "template": self.template.to_dict(),
            "grammars": [g.to_dict() for g in self.grammars],
            "lexicon_sizes": list(self.lexicon_sizes),
            "semantics": dataclasses.asdict(self.semantics),
            "eval": dataclasses.asdict(self.eval),
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: Mapping | None) -> "RunConfig":
        d = dict(d or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        try:
            if "sampler" in d:
                d["sampler"] = SamplerConfig.from_dict(d["sampler"] or {})
            if "template" in d:
                d["template"] = TemplateParams.from_dict(d["template"] or {})
            if "grammars" in d:
                d["grammars"] = tuple(
                    GrammarSpec(g) if isinstance(g, str) else GrammarSpec.from_dict(g) for g in d["grammars"]
                )
            if "semantics" in d:
                d["semantics"] = SemanticsConfig(**(d["semantics"] or {}))
            if "eval" in d:
                d["eval"] = EvalConfig(**(d["eval"] or {}))
            return cls(**d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True)

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        return cls.from_dict(yaml.safe_load(text))

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_yaml(Path(path).read_text(encoding="utf-8"))

    def experiment_dict(self) -> dict:
        """Everything that affects results (output location and parallelism excluded)."""
        d = self.to_dict()
        del d["output_dir"], d["workers"]
        return d

    def content_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.experiment_dict(), sort_keys=True).encode("utf-8")).hexdigest()


_DOCS = """\
# typolex run configuration (all values shown are the defaults)
#
# phoible_path     PHOIBLE-format CSV (.csv or .csv.gz); null = bundled PHOIBLE 2.0
# ontology_path    concept tree JSON; null = bundled Swadesh-207 + Leipzig-Jakarta tree
# master_seed      every stream is hashed from this seed plus stage labels
# replicates       independent (inventory, lexicon) replicates for the size sweep
# sampler          inventory sampler: count ranges, vowel/consonant ratio bounds,
#                  archetype (none | small_cv | consonant_rich), size-conditioned weights
# template         syllable template for candidate generation
# grammars         kinds: deterministic, strict_ot, stochastic_ot, hg, maxent, random;
#                  ranking/ranking_values/noise_sigma/weights as applicable,
#                  candidates_per_word, structural cluster limits for the filter
# lexicon_sizes    ascending; smaller lexicons are prefixes of the largest
# semantics        restarts, max_iters (consecutive rejections), max_proposals
#                  per restart (null = unbounded), pair_subsample for scoring only,
#                  size (null = largest lexicon size)
# eval             n-gram order, smoothing (add_k | witten_bell), k, heldout_fraction
# output_dir       where run artifacts and manifest.json are written
# workers          processes for per-grammar generation (env TYPOLEX_WORKERS overrides)
"""


def documented_defaults() -> str:
    return _DOCS + RunConfig().to_yaml()
