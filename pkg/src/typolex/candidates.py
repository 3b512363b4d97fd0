"""Template-based candidate word forms and the shared constraint set."""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Mapping, Sequence

from .errors import ConfigurationError, FeatureLookupError, InfeasibleFillError
from .inventory import PhonemeInventory

CONSTRAINTS = ("Onset", "NoCoda", "*Complex", "SSP", "NasalStopHomorganic")


@dataclass(frozen=True)
class SyllableSkeleton:
    """Onset and coda cluster widths around a single-vowel nucleus."""

    onset: int = 1
    coda: int = 0

    def __post_init__(self):
        if self.onset < 0 or self.coda < 0:
            raise ValueError("cluster widths must be non-negative")

    @property
    def pattern(self) -> str:
        return "C" * self.onset + "V" + "C" * self.coda

    def __len__(self):
        return self.onset + 1 + self.coda

    @classmethod
    def from_pattern(cls, pattern: str) -> "SyllableSkeleton":
        if pattern.count("V") != 1 or set(pattern) - {"C", "V"}:
            raise ValueError(f"bad syllable pattern {pattern!r}")
        onset, coda = pattern.split("V")
        return cls(len(onset), len(coda))


@dataclass(frozen=True)
class TemplateParams:
    syllable_count_distribution: Mapping[int, float] = field(
        default_factory=lambda: {1: 0.2, 2: 0.4, 3: 0.3, 4: 0.1}
    )
    onset_probability: float = 0.95
    max_onset_width: int = 2
    complex_onset_probability: float = 0.3
    coda_probability: float = 0.1
    max_coda_width: int = 2
    complex_coda_probability: float = 0.2

    def __post_init__(self):
        dist = self.syllable_count_distribution
        if not dist or any(int(k) < 1 or v < 0 for k, v in dist.items()):
            raise ConfigurationError("syllable counts must be >= 1 with non-negative probabilities")
        if abs(sum(dist.values()) - 1.0) > 1e-9:
            raise ConfigurationError(f"syllable_count_distribution sums to {sum(dist.values())}, not 1")
        if self.max_onset_width < 0 or self.max_coda_width < 0:
            raise ConfigurationError("cluster widths must be >= 0")
        for name in ("onset_probability", "coda_probability", "complex_onset_probability",
                     "complex_coda_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {p}")

    @cached_property
    def _cumulative(self) -> tuple[list[int], list[float]]:
        keys = sorted(self.syllable_count_distribution)
        return keys, list(itertools.accumulate(self.syllable_count_distribution[k] for k in keys))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["syllable_count_distribution"] = {str(k): v for k, v in sorted(self.syllable_count_distribution.items())}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "TemplateParams":
        d = dict(d)
        if "syllable_count_distribution" in d:
            d["syllable_count_distribution"] = {int(k): float(v) for k, v in d["syllable_count_distribution"].items()}
        return cls(**d)


@dataclass(frozen=True)
class WordForm:
    phonemes: tuple[str, ...]
    syllables: tuple[SyllableSkeleton, ...]

    def __post_init__(self):
        if not self.phonemes:
            raise ValueError("a word form needs at least one phoneme")
        if sum(len(s) for s in self.syllables) != len(self.phonemes):
            raise ValueError("syllabification does not partition the phoneme list")

    @property
    def form(self) -> str:
        return "".join(self.phonemes)

    @property
    def boundaries(self) -> list[int]:
        """Start index of each syllable."""
        out, pos = [], 0
        for s in self.syllables:
            out.append(pos)
            pos += len(s)
        return out

    def to_dict(self) -> dict:
        return {"phonemes": list(self.phonemes), "boundaries": self.boundaries,
                "shape": ".".join(s.pattern for s in self.syllables)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: Mapping, vowels: Sequence[str] | None = None) -> "WordForm":
        phon = tuple(d["phonemes"])
        if "shape" in d:
            sylls = tuple(SyllableSkeleton.from_pattern(p) for p in d["shape"].split("."))
        else:
            if vowels is None:
                raise ValueError("need the vowel set to recover syllable shapes from boundaries")
            bounds = list(d["boundaries"]) + [len(phon)]
            vset = set(vowels)
            sylls = []
            for a, b in zip(bounds, bounds[1:]):
                chunk = phon[a:b]
                nuc = [i for i, p in enumerate(chunk) if p in vset]
                if len(nuc) != 1:
                    raise ValueError(f"syllable {chunk} does not have exactly one vowel")
                sylls.append(SyllableSkeleton(nuc[0], len(chunk) - nuc[0] - 1))
            sylls = tuple(sylls)
        return cls(phon, sylls)

    def __str__(self):
        return self.form


@dataclass(frozen=True)
class ViolationVector:
    """Violation counts in ``CONSTRAINTS`` order."""

    values: tuple[int, ...]

    def __post_init__(self):
        if len(self.values) != len(CONSTRAINTS) or any(v < 0 for v in self.values):
            raise ValueError(f"bad violation vector {self.values}")

    @property
    def counts(self) -> dict[str, int]:
        return dict(zip(CONSTRAINTS, self.values))

    def __getitem__(self, name: str) -> int:
        return self.values[CONSTRAINTS.index(name)]

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "ViolationVector":
        if set(counts) != set(CONSTRAINTS):
            raise ValueError(f"violation keys must be exactly {CONSTRAINTS}")
        return cls(tuple(int(counts[c]) for c in CONSTRAINTS))


# ---------------------------------------------------------------------------
# sampling


_SKELETONS: dict[tuple[int, int], SyllableSkeleton] = {}


def _skeleton(onset: int, coda: int) -> SyllableSkeleton:
    s = _SKELETONS.get((onset, coda))
    if s is None:
        s = _SKELETONS[(onset, coda)] = SyllableSkeleton(onset, coda)
    return s


def sample_skeleton(params: TemplateParams, rng: random.Random) -> tuple[SyllableSkeleton, ...]:
    keys, cum = params._cumulative
    u = rng.random() * cum[-1]
    n = keys[-1]
    for k, c in zip(keys, cum):
        if u < c:
            n = k
            break
    rand = rng.random
    mo, mc = params.max_onset_width, params.max_coda_width
    out = []
    for _ in range(n):
        onset = 0
        if mo > 0 and rand() < params.onset_probability:
            onset = 1
            if mo > 1 and rand() < params.complex_onset_probability:
                onset = rng.randint(2, mo)
        coda = 0
        if mc > 0 and rand() < params.coda_probability:
            coda = 1
            if mc > 1 and rand() < params.complex_coda_probability:
                coda = rng.randint(2, mc)
        out.append(_skeleton(onset, coda))
    return tuple(out)


def fill_skeleton(skeleton: Sequence[SyllableSkeleton], inventory: PhonemeInventory,
                  rng: random.Random) -> WordForm:
    """Nuclei from the vowels, margins from the consonants, uniformly."""
    cons, vows = inventory.consonants, inventory.vowels
    if not vows:
        raise InfeasibleFillError("inventory has no vowels to fill nuclei")
    if not cons and any(s.onset or s.coda for s in skeleton):
        raise InfeasibleFillError("skeleton has consonant slots but the inventory has no consonants")
    rand = rng.random
    nc, nv = len(cons), len(vows)
    phon = []
    for s in skeleton:
        for _ in range(s.onset):
            phon.append(cons[int(rand() * nc)])
        phon.append(vows[int(rand() * nv)])
        for _ in range(s.coda):
            phon.append(cons[int(rand() * nc)])
    return WordForm(tuple(phon), tuple(skeleton))


def evaluate_constraints(w: WordForm, inventory: PhonemeInventory) -> ViolationVector:
    """Score ``w`` on Onset, NoCoda, *Complex, SSP and nasal-stop homorganicity.

    SSP is checked inside onset and coda clusters only; homorganicity applies to
    every adjacent nasal + stop pair in the word, across syllable boundaries too.
    """
    phon = inventory.phonology
    try:
        info = [phon[p] for p in w.phonemes]
    except KeyError as exc:
        raise FeatureLookupError(f"no sonority/place features for segment {exc.args[0]!r}") from None
    onset = nocoda = complex_ = ssp = hom = 0
    pos = 0
    for syl in w.syllables:
        if syl.onset == 0:
            onset += 1
        elif syl.onset > 1:
            complex_ += 1
            for i in range(pos, pos + syl.onset - 1):
                if info[i].sonority >= info[i + 1].sonority:
                    ssp += 1
        pos += syl.onset + 1
        if syl.coda:
            nocoda += 1
            if syl.coda > 1:
                complex_ += 1
                for i in range(pos, pos + syl.coda - 1):
                    if info[i].sonority <= info[i + 1].sonority:
                        ssp += 1
        pos += syl.coda
    for a, b in zip(info, info[1:]):
        if a.nasal and b.stop and a.place != b.place and a.place != "other" and b.place != "other":
            hom += 1
    return ViolationVector((onset, nocoda, complex_, ssp, hom))


def iter_candidates(inventory: PhonemeInventory, params: TemplateParams, rng: random.Random,
                    limit: int = 64, max_draws: int | None = None) -> Iterator[tuple[WordForm, ViolationVector]]:
    """Yield up to ``limit`` distinct scored candidates; duplicates are redrawn."""
    seen = set()
    max_draws = max_draws or 20 * limit
    draws = 0
    while len(seen) < limit and draws < max_draws:
        draws += 1
        w = fill_skeleton(sample_skeleton(params, rng), inventory, rng)
        key = (w.phonemes, w.syllables)
        if key in seen:
            continue
        seen.add(key)
        yield w, evaluate_constraints(w, inventory)


def generate_candidates(inventory: PhonemeInventory, params: TemplateParams, rng: random.Random,
                        limit: int = 64) -> list[tuple[WordForm, ViolationVector]]:
    return list(iter_candidates(inventory, params, rng, limit))
