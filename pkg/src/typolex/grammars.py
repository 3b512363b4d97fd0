"""Candidate selection under six regimes and lexicon generation.

Every selector takes a list of ``(WordForm, ViolationVector)`` pairs and
returns a :class:`Tableau` recording the winner (``winner_index`` is None when
the deterministic filter rejects the whole set).
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Sequence

from .candidates import CONSTRAINTS, TemplateParams, ViolationVector, WordForm, iter_candidates
from .errors import CapacityError, ConfigurationError
from .inventory import PhonemeInventory
from .seeding import py_rng

KINDS = ("deterministic", "strict_ot", "stochastic_ot", "hg", "maxent", "random")
CLI_ALIASES = {
    "det": "deterministic", "ot": "strict_ot", "ot-stochastic": "stochastic_ot",
    "hg": "hg", "maxent": "maxent", "random": "random",
}
DEFAULT_RANKING = ("SSP", "NasalStopHomorganic", "*Complex", "Onset", "NoCoda")
DEFAULT_WEIGHTS = {"SSP": 8.0, "NasalStopHomorganic": 6.0, "*Complex": 4.0, "Onset": 2.0, "NoCoda": 1.0}
DEFAULT_RANKING_VALUES = {"SSP": 50.0, "NasalStopHomorganic": 40.0, "*Complex": 30.0, "Onset": 20.0, "NoCoda": 10.0}

Candidate = tuple[WordForm, ViolationVector]


@dataclass(frozen=True)
class GrammarSpec:
    kind: str
    ranking: tuple[str, ...] = DEFAULT_RANKING
    ranking_values: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_RANKING_VALUES))
    noise_sigma: float = 2.0
    weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    candidates_per_word: int = 64
    # structural cluster limits used by the deterministic filter
    max_onset_cluster: int = 2
    max_coda_cluster: int = 1

    def __post_init__(self):
        kind = CLI_ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "ranking", tuple(self.ranking))
        if kind not in KINDS:
            raise ConfigurationError(f"unknown grammar kind {self.kind!r}; expected one of {KINDS}")
        if sorted(self.ranking) != sorted(CONSTRAINTS):
            raise ConfigurationError(f"ranking must be a total order over {CONSTRAINTS}, got {self.ranking}")
        if set(self.ranking_values) != set(CONSTRAINTS):
            raise ConfigurationError("ranking_values must cover every constraint")
        if set(self.weights) != set(CONSTRAINTS):
            raise ConfigurationError("weights must cover every constraint")
        if any(w < 0 for w in self.weights.values()):
            raise ConfigurationError("HG/MaxEnt weights must be non-negative")
        if kind == "stochastic_ot" and not self.noise_sigma > 0:
            raise ConfigurationError("stochastic OT needs noise_sigma > 0")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")
        if self.candidates_per_word < 1:
            raise ConfigurationError("candidates_per_word must be >= 1")
        if self.max_onset_cluster < 0 or self.max_coda_cluster < 0:
            raise ConfigurationError("structural cluster limits must be >= 0")

    @property
    def weight_vector(self) -> tuple[float, ...]:
        return tuple(float(self.weights[c]) for c in CONSTRAINTS)

    @property
    def ranking_indices(self) -> tuple[int, ...]:
        return tuple(CONSTRAINTS.index(c) for c in self.ranking)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ranking": list(self.ranking),
            "ranking_values": dict(self.ranking_values),
            "noise_sigma": self.noise_sigma,
            "weights": dict(self.weights),
            "candidates_per_word": self.candidates_per_word,
            "max_onset_cluster": self.max_onset_cluster,
            "max_coda_cluster": self.max_coda_cluster,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GrammarSpec":
        return cls(**dict(d))


@dataclass(frozen=True)
class Tableau:
    candidates: tuple[Candidate, ...]
    winner_index: int | None
    harmony: tuple[float, ...] | None = None
    probabilities: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.winner_index is not None and not 0 <= self.winner_index < len(self.candidates):
            raise ValueError("winner_index out of range")
        if self.probabilities is not None and abs(math.fsum(self.probabilities) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")

    @property
    def winner(self) -> WordForm | None:
        return None if self.winner_index is None else self.candidates[self.winner_index][0]


# ---------------------------------------------------------------------------
# selectors


def passes_hard_filter(cand: Candidate, max_onset: int = 2, max_coda: int = 1) -> bool:
    w, v = cand
    vals = v.values
    if vals[3] or vals[4]:  # SSP, NasalStopHomorganic
        return False
    return all(s.onset <= max_onset and s.coda <= max_coda for s in w.syllables)


def deterministic_select(candidates: Sequence[Candidate], max_onset: int = 2, max_coda: int = 1) -> Tableau:
    if not candidates:
        raise ValueError("empty candidate set")
    for i, c in enumerate(candidates):
        if passes_hard_filter(c, max_onset, max_coda):
            return Tableau(tuple(candidates), i)
    return Tableau(tuple(candidates), None)


def _lex_argmin(candidates: Sequence[Candidate], order: Sequence[int]) -> int:
    best, best_key = 0, None
    for i, (_, v) in enumerate(candidates):
        key = tuple(v.values[k] for k in order)
        if best_key is None or key < best_key:
            best, best_key = i, key
    return best


def _ranking_indices(ranking: Sequence[str]) -> list[int]:
    if sorted(ranking) != sorted(CONSTRAINTS):
        raise ConfigurationError(f"ranking must be a total order over {CONSTRAINTS}")
    return [CONSTRAINTS.index(c) for c in ranking]


def strict_ot_select(candidates: Sequence[Candidate], ranking: Sequence[str] = DEFAULT_RANKING) -> Tableau:
    """Lexicographic minimum under ``ranking``; ties go to the earliest candidate."""
    if not candidates:
        raise ValueError("empty candidate set")
    return Tableau(tuple(candidates), _lex_argmin(candidates, _ranking_indices(ranking)))


def stochastic_ot_select(candidates: Sequence[Candidate], ranking_values: Mapping[str, float],
                         noise_sigma: float, rng: random.Random) -> Tableau:
    if not candidates:
        raise ValueError("empty candidate set")
    if not noise_sigma > 0:
        raise ConfigurationError("noise_sigma must be > 0")
    noisy = {c: ranking_values[c] + rng.gauss(0.0, noise_sigma) for c in CONSTRAINTS}
    ranking = sorted(CONSTRAINTS, key=lambda c: -noisy[c])
    return strict_ot_select(candidates, ranking)


def harmonies(candidates: Sequence[Candidate], weights: Mapping[str, float]) -> list[float]:
    w = [float(weights[c]) for c in CONSTRAINTS]
    if any(x < 0 for x in w):
        raise ConfigurationError("weights must be non-negative")
    return [math.fsum(a * b for a, b in zip(w, v.values)) for _, v in candidates]


def hg_select(candidates: Sequence[Candidate], weights: Mapping[str, float]) -> Tableau:
    if not candidates:
        raise ValueError("empty candidate set")
    h = harmonies(candidates, weights)
    best = min(range(len(h)), key=lambda i: (h[i], i))
    return Tableau(tuple(candidates), best, harmony=tuple(h))


def softmax_neg(h: Sequence[float]) -> list[float]:
    """exp(-h) normalised, via log-sum-exp."""
    m = min(h)
    z = [math.exp(m - x) for x in h]
    s = math.fsum(z)
    return [x / s for x in z]


def maxent_probabilities(candidates: Sequence[Candidate], weights: Mapping[str, float]) -> list[float]:
    return softmax_neg(harmonies(candidates, weights))


def maxent_sample(candidates: Sequence[Candidate], weights: Mapping[str, float], rng: random.Random) -> Tableau:
    if not candidates:
        raise ValueError("empty candidate set")
    h = harmonies(candidates, weights)
    p = softmax_neg(h)
    u = rng.random()
    acc, pick = 0.0, len(p) - 1
    for i, x in enumerate(p):
        acc += x
        if u < acc:
            pick = i
            break
    return Tableau(tuple(candidates), pick, harmony=tuple(h), probabilities=tuple(p))


def select(spec: GrammarSpec, candidates: Sequence[Candidate], rng: random.Random) -> Tableau:
    k = spec.kind
    if k == "deterministic":
        return deterministic_select(candidates, spec.max_onset_cluster, spec.max_coda_cluster)
    if k == "strict_ot":
        return strict_ot_select(candidates, spec.ranking)
    if k == "stochastic_ot":
        return stochastic_ot_select(candidates, spec.ranking_values, spec.noise_sigma, rng)
    if k == "hg":
        return hg_select(candidates, spec.weights)
    if k == "maxent":
        return maxent_sample(candidates, spec.weights, rng)
    if k == "random":
        return Tableau(tuple(candidates[:1]), 0)
    raise ConfigurationError(f"unknown grammar kind {k!r}")


# ---------------------------------------------------------------------------
# lexicons


def _config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class Lexicon:
    words: tuple[WordForm, ...]
    provenance: Mapping = field(default_factory=dict)

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    @property
    def forms(self) -> list[str]:
        return [w.form for w in self.words]

    @property
    def kind(self) -> str | None:
        return self.provenance.get("grammar", {}).get("kind")

    def head(self, n: int) -> "Lexicon":
        """First ``n`` words; generation is sequential so this equals a size-n run."""
        prov = dict(self.provenance)
        prov["n"] = min(n, len(self.words))
        return Lexicon(self.words[:n], MappingProxyType(prov))

    def to_dict(self) -> dict:
        return {
            "words": self.forms,
            "phonemes": [list(w.phonemes) for w in self.words],
            "shapes": [".".join(s.pattern for s in w.syllables) for w in self.words],
            "provenance": dict(self.provenance),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=1)

    @classmethod
    def from_dict(cls, d: Mapping, inventory: PhonemeInventory | None = None) -> "Lexicon":
        prov = MappingProxyType(dict(d.get("provenance", {})))
        if "phonemes" in d and "shapes" in d:
            words = tuple(WordForm.from_dict({"phonemes": p, "shape": s}) for p, s in zip(d["phonemes"], d["shapes"]))
            return cls(words, prov)
        if inventory is None:
            raise ValueError("bare word strings need an inventory for tokenization")
        words = []
        for s in d["words"]:
            phon = tokenize(s, inventory.segments)
            words.append(_syllabify(phon, set(inventory.vowels)))
        return cls(tuple(words), prov)

    @classmethod
    def from_json(cls, text: str, inventory: PhonemeInventory | None = None) -> "Lexicon":
        return cls.from_dict(json.loads(text), inventory)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def tokenize(form: str, segments: Sequence[str]) -> tuple[str, ...]:
    """Greedy longest-match split of ``form`` into inventory segments."""
    by_len = sorted(set(segments), key=len, reverse=True)
    out, i = [], 0
    while i < len(form):
        for s in by_len:
            if form.startswith(s, i):
                out.append(s)
                i += len(s)
                break
        else:
            raise ValueError(f"cannot tokenize {form!r} at position {i}")
    return tuple(out)


def _syllabify(phon: Sequence[str], vowels: set) -> WordForm:
    """Maximal-onset syllabification (used only for bare-string input)."""
    from .candidates import SyllableSkeleton

    nuclei = [i for i, p in enumerate(phon) if p in vowels]
    if not nuclei:
        raise ValueError(f"form {''.join(phon)!r} has no vowel")
    sylls, start = [], 0
    for j, n in enumerate(nuclei):
        end = nuclei[j + 1] if j + 1 < len(nuclei) else len(phon)
        if j + 1 < len(nuclei):
            gap = end - n - 1
            coda = 1 if gap > 2 else 0
            end = n + 1 + coda
        sylls.append(SyllableSkeleton(n - start, end - n - 1))
        start = end
    return WordForm(tuple(phon), tuple(sylls))


def template_for(inventory: PhonemeInventory, params: TemplateParams) -> TemplateParams:
    """Template actually used for ``inventory``: small-CV inventories get no complex codas."""
    if (inventory.config or {}).get("archetype") == "small_cv" and params.max_coda_width > 1:
        return replace(params, max_coda_width=1)
    return params


def _select_word(spec: GrammarSpec, inventory: PhonemeInventory, params: TemplateParams,
                 rng: random.Random) -> WordForm | None:
    k = spec.candidates_per_word
    it = iter_candidates(inventory, params, rng, k)
    if spec.kind == "random":
        return next(it)[0]
    if spec.kind == "deterministic":
        # the filter takes the first survivor, so stop drawing once one passes
        for cand in it:
            if passes_hard_filter(cand, spec.max_onset_cluster, spec.max_coda_cluster):
                return cand[0]
        return None
    return select(spec, list(it), rng).winner


def generate_lexicon(grammar: GrammarSpec, inventory: PhonemeInventory, template_params: TemplateParams,
                     n: int, seed: int = 0, retry_factor: int = 50) -> Lexicon:
    """``n`` distinct forms, one independent stream per word index.

    A word's stream is used for its first candidate set and any regenerations
    (rejections or duplicates). The retry budget is shared across the lexicon.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    template_params = template_for(inventory, template_params)
    budget = retry_factor * n
    seen: set[str] = set()
    words: list[WordForm] = []
    for idx in range(n):
        rng = py_rng(seed, "lexicon", grammar.kind, idx)
        while True:
            w = _select_word(grammar, inventory, template_params, rng)
            if w is not None and w.form not in seen:
                break
            budget -= 1
            if budget < 0:
                raise CapacityError(
                    f"retry budget exhausted after {len(words)} of {n} distinct forms", achieved=len(words))
        seen.add(w.form)
        words.append(w)
    prov = {
        "grammar": grammar.to_dict(),
        "seed": seed,
        "n": n,
        "inventory_hash": inventory.content_hash(),
        "template": template_params.to_dict(),
        "config_hash": _config_hash({"grammar": grammar.to_dict(), "template": template_params.to_dict()}),
    }
    return Lexicon(tuple(words), MappingProxyType(prov))
