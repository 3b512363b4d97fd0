"""Frequency-weighted phoneme inventory sampling with universal repair."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, FeatureLookupError, InfeasibleInventoryError, RepairFailureError
from .features import SONORITY, has_flag, place_class, sonority_class
from .phoible import SegmentDatabase, inventory_table
from .seeding import np_rng

ARCHETYPES = ("none", "small_cv", "consonant_rich")
SIZE_DISTRIBUTIONS = ("empirical", "uniform")
MAX_ATTEMPTS = 1000

# marked classes whose weight is scaled by inventory size
MARKED_CONSONANT_FLAGS = ("click", "ejective", "implosive", "pharyngeal")
MARKED_VOWEL_FLAGS = ("long_vowel",)


@dataclass(frozen=True)
class SamplerConfig:
    consonant_count_range: tuple[int, int] = (14, 36)
    vowel_count_range: tuple[int, int] = (3, 12)
    ratio_bounds: tuple[float, float] = (0.15, 0.40)
    archetype: str = "none"
    seed: int = 0
    size_conditioning: bool = True
    size_distribution: str = "empirical"

    def __post_init__(self):
        lo, hi = self.ratio_bounds
        if not (0 < lo < hi < 1):
            raise ConfigurationError(f"ratio_bounds must satisfy 0 < min < max < 1, got {self.ratio_bounds}")
        for name in ("consonant_count_range", "vowel_count_range"):
            a, b = getattr(self, name)
            if a < 1 or b < a:
                raise ConfigurationError(f"{name} must be a non-empty positive range, got {(a, b)}")
        if self.archetype not in ARCHETYPES:
            raise ConfigurationError(f"unknown archetype {self.archetype!r}; expected one of {ARCHETYPES}")
        if self.size_distribution not in SIZE_DISTRIBUTIONS:
            raise ConfigurationError(f"unknown size_distribution {self.size_distribution!r}")

    def effective_ranges(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Count ranges after the archetype override (quartiles of the configured ranges)."""
        (c0, c1), (v0, v1) = self.consonant_count_range, self.vowel_count_range
        if self.archetype == "small_cv":
            return (c0, c0 + (c1 - c0) // 4), (v0, v0 + (v1 - v0) // 4)
        if self.archetype == "consonant_rich":
            return (c1 - (c1 - c0) // 4, c1), (v0, v1)
        return (c0, c1), (v0, v1)

    def masked_flags(self) -> tuple[str, ...]:
        if self.archetype == "small_cv":
            return MARKED_CONSONANT_FLAGS
        return ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["consonant_count_range"] = list(self.consonant_count_range)
        d["vowel_count_range"] = list(self.vowel_count_range)
        d["ratio_bounds"] = list(self.ratio_bounds)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SamplerConfig":
        d = dict(d)
        for k in ("consonant_count_range", "vowel_count_range", "ratio_bounds"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass(frozen=True)
class UniversalRule:
    antecedent: str
    consequent: str
    strength: float = 1.0

    def __post_init__(self):
        if not (0 < self.strength <= 1):
            raise ConfigurationError(f"rule strength must be in (0, 1], got {self.strength}")

    @property
    def enforcement(self) -> str:
        return "deterministic" if self.strength == 1.0 else "probabilistic"


# conditional probabilities observed over PHOIBLE 2.0
DEFAULT_RULES = (
    UniversalRule("pharyngeal", "uvular"),
    UniversalRule("nasal_vowel", "oral_vowel"),
    UniversalRule("voiced_obstruent", "voiceless_obstruent", 0.997),
    UniversalRule("fricative", "stop"),
    UniversalRule("front_rounded", "front_unrounded"),
)


def rules_from_statistics(stats) -> tuple[UniversalRule, ...]:
    """Turn conditional-probability stats into rules (P = 1 becomes deterministic)."""
    rules = []
    for s in stats:
        if s.kind == "conditional_prob" and s.total_x:
            rules.append(UniversalRule(s.lhs, s.rhs, round(s.value, 3) if s.value < 1 else 1.0))
    return tuple(rules)


@dataclass(frozen=True)
class SegmentPhonology:
    sonority: int
    place: str
    nasal: bool
    stop: bool


@dataclass(frozen=True)
class PhonemeInventory:
    consonants: tuple[str, ...]
    vowels: tuple[str, ...]
    features: Mapping[str, Mapping[str, bool]]
    seed: int | None = None
    config: Mapping | None = None

    @property
    def segments(self) -> tuple[str, ...]:
        return self.consonants + self.vowels

    def __contains__(self, seg) -> bool:
        return seg in self.features

    def has(self, flag: str) -> bool:
        return any(has_flag(self.features[s], flag) for s in self.segments)

    def violates(self, rule: UniversalRule) -> bool:
        return self.has(rule.antecedent) and not self.has(rule.consequent)

    @property
    def ratio(self) -> float:
        return len(self.vowels) / len(self.consonants)

    @cached_property
    def phonology(self) -> Mapping[str, SegmentPhonology]:
        """Sonority/place lookups for constraint evaluation, built on first use."""
        out = {}
        for s in self.segments:
            f = self.features[s]
            cls = "vowel" if s in self.vowels else "consonant"
            try:
                son = SONORITY[sonority_class(s, cls, f)]
                place = place_class(s, f) if cls == "consonant" else "other"
            except FeatureLookupError:
                continue
            out[s] = SegmentPhonology(son, place, cls == "consonant" and has_flag(f, "nasal") and son == 2,
                                      has_flag(f, "stop"))
        return MappingProxyType(out)

    def to_dict(self) -> dict:
        return {
            "consonants": list(self.consonants),
            "vowels": list(self.vowels),
            "seed": self.seed,
            "config": dict(self.config) if self.config is not None else None,
            "features": {s: dict(sorted(self.features[s].items())) for s in self.segments},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    @classmethod
    def from_dict(cls, d: Mapping) -> "PhonemeInventory":
        return cls(
            consonants=tuple(d["consonants"]),
            vowels=tuple(d["vowels"]),
            features=MappingProxyType({s: MappingProxyType(dict(f)) for s, f in d["features"].items()}),
            seed=d.get("seed"),
            config=d.get("config"),
        )

    @classmethod
    def from_json(cls, text: str) -> "PhonemeInventory":
        return cls.from_dict(json.loads(text))

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    @classmethod
    def from_segments(cls, db: SegmentDatabase, consonants: Sequence[str], vowels: Sequence[str], **kw):
        feats = {s: db.segments[s].features for s in list(consonants) + list(vowels)}
        return cls(tuple(consonants), tuple(vowels), MappingProxyType(feats), **kw)


# ---------------------------------------------------------------------------
# sizes


def size_histograms(db: SegmentDatabase) -> tuple[dict[int, int], dict[int, int]]:
    table = inventory_table(db)
    c = np.bincount(table["consonant_count"])
    v = np.bincount(table["vowel_count"])
    return ({i: int(n) for i, n in enumerate(c) if n}, {i: int(n) for i, n in enumerate(v) if n})


def _support(rng_range, hist):
    lo, hi = rng_range
    values = np.arange(lo, hi + 1)
    if hist is None:
        return values, np.full(len(values), 1.0 / len(values))
    w = np.array([hist.get(int(x), 0) for x in values], dtype=float)
    if w.sum() == 0:
        raise ConfigurationError(f"no PHOIBLE inventories have a count in {rng_range}")
    keep = w > 0
    return values[keep], w[keep] / w.sum()


def sample_sizes(config: SamplerConfig, rng: np.random.Generator, histograms=None) -> tuple[int, int]:
    """Draw (consonant count, vowel count) with vowel/consonant ratio inside the bounds.

    ``histograms`` is the (consonant, vowel) count histogram pair used when the
    config asks for the empirical size distribution; without it counts are
    uniform over the ranges.
    """
    c_range, v_range = config.effective_ranges()
    use_hist = config.size_distribution == "empirical" and histograms is not None
    c_vals, c_p = _support(c_range, histograms[0] if use_hist else None)
    v_vals, v_p = _support(v_range, histograms[1] if use_hist else None)
    lo, hi = config.ratio_bounds
    ratios = v_vals[None, :] / c_vals[:, None]
    if not ((ratios >= lo) & (ratios <= hi)).any():
        raise ConfigurationError(
            f"no (consonant, vowel) count in {c_range} x {v_range} gives a ratio within {config.ratio_bounds}"
        )
    for _ in range(MAX_ATTEMPTS):
        n_c = int(rng.choice(c_vals, p=c_p))
        n_v = int(rng.choice(v_vals, p=v_p))
        if lo <= n_v / n_c <= hi:
            return n_c, n_v
    raise ConfigurationError(f"ratio bounds not met after {MAX_ATTEMPTS} draws; the configuration is miscalibrated")


# ---------------------------------------------------------------------------
# segment draws


def _size_factor(n: int, median: float, scale: float) -> float:
    # 1.0 at the median size, towards 0 below it and 2.0 above it
    return 2.0 / (1.0 + math.exp(-(n - median) / scale))


@dataclass
class _Pool:
    segments: list[str]
    counts: np.ndarray
    marked: np.ndarray
    masked: np.ndarray


def _usable(db: SegmentDatabase, seg: str) -> bool:
    info = db.segments[seg]
    try:
        sonority_class(seg, info.segment_class, info.features)
        if info.segment_class == "consonant":
            place_class(seg, info.features)
    except FeatureLookupError:
        return False
    return True


_POOL_CACHE: dict = {}


def _pools(db: SegmentDatabase, masked_flags: tuple[str, ...]) -> tuple[_Pool, _Pool]:
    key = (id(db), masked_flags)
    hit = _POOL_CACHE.get(key)
    if hit is not None and hit[0] is db:
        return hit[1]
    pools = []
    for cls, marked_flags in (("consonant", MARKED_CONSONANT_FLAGS), ("vowel", MARKED_VOWEL_FLAGS)):
        segs = [s for s in db.segments_of_class(cls) if _usable(db, s)]
        info = [db.segments[s] for s in segs]
        pools.append(_Pool(
            segments=segs,
            counts=np.array([db.global_counts[s] for s in segs], dtype=float),
            marked=np.array([any(i.has(f) for f in marked_flags) for i in info]),
            masked=np.array([any(i.has(f) for f in masked_flags) for i in info]),
        ))
    _POOL_CACHE[key] = (db, tuple(pools))
    return tuple(pools)


def _medians(db: SegmentDatabase) -> tuple[float, float]:
    table = inventory_table(db)
    return float(np.median(table["consonant_count"])), float(np.median(table["vowel_count"]))


def segment_weights(pool: _Pool, n: int, median: float, scale: float, size_conditioning: bool) -> np.ndarray:
    w = pool.counts.copy()
    w[pool.masked] = 0.0
    if size_conditioning:
        w[pool.marked] *= _size_factor(n, median, scale)
    return w


def _draw(pool: _Pool, n: int, weights: np.ndarray, rng: np.random.Generator, what: str) -> list[str]:
    available = int((weights > 0).sum())
    if available < n:
        raise InfeasibleInventoryError(f"only {available} {what} segments available, {n} requested")
    idx = rng.choice(len(pool.segments), size=n, replace=False, p=weights / weights.sum())
    return [pool.segments[i] for i in idx]


def _order(db: SegmentDatabase, segs) -> tuple[str, ...]:
    return tuple(sorted(segs, key=lambda s: (-db.global_counts[s], s)))


def sample_inventory(db: SegmentDatabase, config: SamplerConfig, rng: np.random.Generator | None = None,
                     rules: Sequence[UniversalRule] = DEFAULT_RULES) -> PhonemeInventory:
    """Sample one inventory; deterministic given (db, config) and the generator state."""
    if db.n_inventories == 0:
        raise InfeasibleInventoryError("segment database is empty")
    if rng is None:
        rng = np_rng(config.seed, "inventory")
    cons_pool, vow_pool = _pools(db, config.masked_flags())
    (c_min, _), (v_min, _) = config.effective_ranges()
    if len(cons_pool.segments) < c_min or len(vow_pool.segments) < v_min:
        raise InfeasibleInventoryError(
            f"database has {len(cons_pool.segments)} consonants / {len(vow_pool.segments)} vowels; "
            f"config needs at least {c_min} / {v_min}"
        )
    hists = size_histograms(db) if config.size_distribution == "empirical" else None
    med_c, med_v = _medians(db)
    lo, hi = config.ratio_bounds
    for _ in range(MAX_ATTEMPTS):
        n_c, n_v = sample_sizes(config, rng, hists)
        wc = segment_weights(cons_pool, n_c, med_c, 3.0, config.size_conditioning)
        wv = segment_weights(vow_pool, n_v, med_v, 1.5, config.size_conditioning)
        cons = _draw(cons_pool, n_c, wc, rng, "consonant")
        vows = _draw(vow_pool, n_v, wv, rng, "vowel")
        inv = PhonemeInventory.from_segments(
            db, _order(db, cons), _order(db, vows), seed=config.seed, config=config.to_dict()
        )
        inv = repair_universals(inv, rules, db, rng)
        if lo <= inv.ratio <= hi:
            return inv
    raise InfeasibleInventoryError(f"no inventory within ratio bounds after {MAX_ATTEMPTS} attempts")


def _flag_pool(db: SegmentDatabase, flag: str) -> list[str]:
    key = (id(db), "flag", flag)
    hit = _POOL_CACHE.get(key)
    if hit is not None and hit[0] is db:
        return hit[1]
    pool = [s for s in sorted(db.segments) if db.segments[s].has(flag) and _usable(db, s)]
    _POOL_CACHE[key] = (db, pool)
    return pool


def repair_universals(inv: PhonemeInventory, rules: Sequence[UniversalRule], db: SegmentDatabase,
                      rng: np.random.Generator) -> PhonemeInventory:
    """Add consequent segments until every enforced rule holds; never removes segments.

    Probabilistic rules repair a violation with probability ``strength``. A
    rule is revisited when an addition triggers its antecedent, but a
    probabilistic rule left unrepaired once is not retried.
    """
    cons, vows = list(inv.consonants), list(inv.vowels)
    present = set(cons) | set(vows)
    waived = set()

    def has(flag):
        return any(db.segments[s].has(flag) for s in present)

    for _ in range(4 * len(rules) + 1):
        changed = False
        for rule in rules:
            if rule in waived or not has(rule.antecedent) or has(rule.consequent):
                continue
            if rule.enforcement == "probabilistic" and rng.random() >= rule.strength:
                waived.add(rule)
                continue
            pool = [s for s in _flag_pool(db, rule.consequent) if s not in present]
            if not pool:
                raise RepairFailureError(f"no segment in the database satisfies {rule.consequent!r}")
            w = np.array([db.global_counts[s] for s in pool], dtype=float)
            seg = pool[int(rng.choice(len(pool), p=w / w.sum()))]
            present.add(seg)
            (vows if db.segments[seg].segment_class == "vowel" else cons).append(seg)
            changed = True
        if not changed:
            break
    if len(present) == len(inv.segments):
        return inv
    return PhonemeInventory.from_segments(db, _order(db, cons), _order(db, vows), seed=inv.seed, config=inv.config)
