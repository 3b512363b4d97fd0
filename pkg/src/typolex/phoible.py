"""PHOIBLE ingestion and the typological statistics behind the sampler.

The database is built once from the PHOIBLE CSV (plain or gzipped) and is
immutable afterwards. Every statistic counts inventories, not languages: a
language with several PHOIBLE doculects contributes each of them.
"""

from __future__ import annotations

import csv
import gzip
import io
import logging
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
from scipy import stats as sps

from .errors import EmptyInputError, SchemaError, UndefinedStatisticError
from .features import PHOIBLE_FEATURES, derive_flags, has_flag

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("InventoryID", "Glottocode", "Phoneme", "SegmentClass")
SEGMENT_CLASSES = ("consonant", "vowel", "tone")


def bundled_phoible_path() -> Path:
    """Path of the PHOIBLE 2.0 table shipped with the package."""
    return Path(str(resources.files("typolex") / "data" / "phoible.csv.gz"))


@dataclass(frozen=True)
class SegmentRecord:
    inventory_id: str
    glottocode: str
    segment: str
    segment_class: str
    features: Mapping[str, bool]

    def __post_init__(self):
        if not self.segment:
            raise SchemaError(f"empty segment string in inventory {self.inventory_id}")
        if self.segment_class not in SEGMENT_CLASSES:
            raise SchemaError(f"unknown SegmentClass {self.segment_class!r} for {self.segment!r}")

    def has(self, flag: str) -> bool:
        return has_flag(self.features, flag)


@dataclass(frozen=True)
class SegmentInfo:
    """Inventory-independent description of one segment type."""

    segment: str
    segment_class: str
    features: Mapping[str, bool]

    def has(self, flag: str) -> bool:
        return has_flag(self.features, flag)


@dataclass(frozen=True)
class SegmentDatabase:
    records: tuple[SegmentRecord, ...]
    inventories: Mapping[str, frozenset[str]]
    global_counts: Mapping[str, int]
    segments: Mapping[str, SegmentInfo]

    @classmethod
    def from_records(cls, records: Iterable[SegmentRecord]) -> "SegmentDatabase":
        seen = set()
        kept = []
        members: dict[str, set[str]] = {}
        segments: dict[str, SegmentInfo] = {}
        for rec in records:
            key = (rec.inventory_id, rec.segment)
            if key in seen:
                continue
            seen.add(key)
            kept.append(rec)
            members.setdefault(rec.inventory_id, set()).add(rec.segment)
            if rec.segment not in segments:
                segments[rec.segment] = SegmentInfo(rec.segment, rec.segment_class, rec.features)
        counts = Counter(s for segs in members.values() for s in segs)
        return cls(
            records=tuple(kept),
            inventories=MappingProxyType({k: frozenset(v) for k, v in members.items()}),
            global_counts=MappingProxyType(dict(counts)),
            segments=MappingProxyType(segments),
        )

    @property
    def n_inventories(self) -> int:
        return len(self.inventories)

    def inventory_ids(self) -> list[str]:
        return sorted(self.inventories, key=_id_sort_key)

    def segments_of_class(self, segment_class: str) -> list[str]:
        return sorted(s for s, info in self.segments.items() if info.segment_class == segment_class)

    @cached_property
    def size_table(self) -> dict[str, np.ndarray]:
        """Consonant and vowel counts per inventory, aligned on ``inventory_ids()``."""
        ids = self.inventory_ids()
        n_c = np.zeros(len(ids), dtype=np.int64)
        n_v = np.zeros(len(ids), dtype=np.int64)
        for i, inv in enumerate(ids):
            for s in self.inventories[inv]:
                cls = self.segments[s].segment_class
                if cls == "consonant":
                    n_c[i] += 1
                elif cls == "vowel":
                    n_v[i] += 1
        return {"consonant_count": n_c, "vowel_count": n_v, "inventory_size": n_c + n_v}

    def inventory_has(self, inventory_id: str, flag: str) -> bool:
        return any(self.segments[s].has(flag) for s in self.inventories[inventory_id])

    def class_count(self, inventory_id: str, segment_class: str) -> int:
        return sum(1 for s in self.inventories[inventory_id] if self.segments[s].segment_class == segment_class)


def _id_sort_key(x: str):
    return (0, int(x), x) if x.isdigit() else (1, 0, x)


def _open_text(path: Path):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def parse_phoible_csv(path) -> SegmentDatabase:
    """Read a PHOIBLE-format CSV into a :class:`SegmentDatabase`.

    Duplicate (inventory, segment) rows are kept once. Feature columns are
    optional; rows lacking them get flags from the base-letter table.
    """
    path = Path(path)
    records = []
    with _open_text(path) as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError(f"missing required column {col!r} in {path}")
        feature_cols = [c for c in PHOIBLE_FEATURES if c in header]
        if not feature_cols:
            log.warning("%s has no feature columns; using the bundled base-letter table", path)
        for row in reader:
            raw = {c: row[c] for c in feature_cols} if feature_cols else None
            seg = row["Phoneme"].strip()
            cls = row["SegmentClass"].strip()
            records.append(
                SegmentRecord(
                    inventory_id=row["InventoryID"].strip(),
                    glottocode=row["Glottocode"].strip(),
                    segment=seg,
                    segment_class=cls,
                    features=MappingProxyType(derive_flags(seg, cls, raw)),
                )
            )
    if not records:
        raise EmptyInputError(f"{path} has a header but no data rows")
    return SegmentDatabase.from_records(records)


def global_phoneme_distribution(db: SegmentDatabase) -> dict[str, float]:
    """Segment -> share of all (inventory, segment) memberships."""
    total = sum(db.global_counts.values())
    if total == 0:
        raise EmptyInputError("segment database is empty")
    return {s: c / total for s, c in sorted(db.global_counts.items())}


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class FeatureStat:
    kind: str  # pearson_r | chi_square | conditional_prob
    lhs: str
    rhs: str
    value: float
    p_value: float | None = None
    total_x: int | None = None
    violations: int | None = None
    note: str | None = None

    @property
    def failure_rate(self) -> float | None:
        if self.kind != "conditional_prob" or not self.total_x:
            return None
        return self.violations / self.total_x

    def as_row(self) -> dict:
        return {
            "kind": self.kind,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "value": self.value,
            "p_value": "" if self.p_value is None else self.p_value,
            "total_x": "" if self.total_x is None else self.total_x,
            "violations": "" if self.violations is None else self.violations,
        }


CORRELATIONS = (
    ("consonant_count", "ejective"),
    ("consonant_count", "click"),
    ("inventory_size", "click"),
    ("vowel_count", "long_vowel"),
)

COOCCURRENCES = (
    ("ejective", "uvular"),
    ("pharyngeal", "uvular"),
    ("nasal_vowel", "oral_vowel"),
    ("voiced_obstruent", "voiceless_obstruent"),
    ("fricative", "stop"),
    ("front_rounded", "front_unrounded"),
)

IMPLICATIONS = (
    ("pharyngeal", "uvular"),
    ("nasal_vowel", "oral_vowel"),
    ("voiced_obstruent", "voiceless_obstruent"),
    ("fricative", "stop"),
    ("front_rounded", "front_unrounded"),
)


def inventory_table(db: SegmentDatabase, flags: Iterable[str] = ()) -> dict[str, np.ndarray]:
    """Per-inventory size counts and flag presence, aligned on ``db.inventory_ids()``."""
    flags = tuple(flags)
    table = dict(db.size_table)
    if not flags:
        return table
    ids = db.inventory_ids()
    for f in flags:
        carriers = {s for s, info in db.segments.items() if info.has(f)}
        table[f] = np.array([1 if db.inventories[inv] & carriers else 0 for inv in ids], dtype=np.int64)
    return table


def pearson_r(x, y) -> tuple[float, float]:
    """Pearson r with a two-sided t-test p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 3:
        raise UndefinedStatisticError("need at least 3 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise UndefinedStatisticError("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return r, float(2 * sps.t.sf(abs(t), n - 2))


def pearson_feature_correlations(db: SegmentDatabase) -> list[FeatureStat]:
    if db.n_inventories < 3:
        raise EmptyInputError("need at least 3 inventories for correlations")
    table = inventory_table(db, {f for _, f in CORRELATIONS})
    out = []
    for lhs, rhs in CORRELATIONS:
        try:
            r, p = pearson_r(table[lhs], table[rhs])
            out.append(FeatureStat("pearson_r", lhs, rhs, r, p))
        except UndefinedStatisticError as exc:
            log.warning("correlation %s~%s undefined: %s", lhs, rhs, exc)
            out.append(FeatureStat("pearson_r", lhs, rhs, math.nan, None, note=f"undefined: {exc}"))
    return out


def chi_square_2x2(table, yates: bool = True) -> tuple[float, float]:
    """Chi-square test of independence on a 2x2 table.

    A zero row or column margin gives (0.0, 1.0) instead of an error.
    """
    t = np.asarray(table, dtype=float)
    if t.shape != (2, 2):
        raise ValueError("expected a 2x2 table")
    total = t.sum()
    rows = t.sum(axis=1)
    cols = t.sum(axis=0)
    if total == 0 or (rows == 0).any() or (cols == 0).any():
        return 0.0, 1.0
    expected = np.outer(rows, cols) / total
    diff = np.abs(t - expected)
    if yates:
        diff = np.maximum(diff - 0.5, 0.0)
    chi2 = float((diff**2 / expected).sum())
    return chi2, float(sps.chi2.sf(chi2, 1))


def contingency(db: SegmentDatabase, x_flag: str, y_flag: str) -> np.ndarray:
    """[[X&Y, X&~Y], [~X&Y, ~X&~Y]] counted over inventories."""
    table = inventory_table(db, (x_flag, y_flag))
    x = table[x_flag].astype(bool)
    y = table[y_flag].astype(bool)
    return np.array([[np.sum(x & y), np.sum(x & ~y)], [np.sum(~x & y), np.sum(~x & ~y)]])


def chi_square_cooccurrence(db: SegmentDatabase, yates: bool = True) -> list[FeatureStat]:
    if db.n_inventories == 0:
        raise EmptyInputError("segment database is empty")
    table = inventory_table(db, {f for pair in COOCCURRENCES for f in pair})
    out = []
    for lhs, rhs in COOCCURRENCES:
        x = table[lhs].astype(bool)
        y = table[rhs].astype(bool)
        cont = [[np.sum(x & y), np.sum(x & ~y)], [np.sum(~x & y), np.sum(~x & ~y)]]
        chi2, p = chi_square_2x2(cont, yates=yates)
        out.append(FeatureStat("chi_square", lhs, rhs, chi2, p))
    return out


def implicational_conditional_probabilities(db: SegmentDatabase) -> list[FeatureStat]:
    if db.n_inventories == 0:
        raise EmptyInputError("segment database is empty")
    table = inventory_table(db, {f for pair in IMPLICATIONS for f in pair})
    out = []
    for lhs, rhs in IMPLICATIONS:
        x = table[lhs].astype(bool)
        y = table[rhs].astype(bool)
        total_x = int(x.sum())
        violations = int((x & ~y).sum())
        if total_x == 0:
            out.append(FeatureStat("conditional_prob", lhs, rhs, math.nan, None, 0, 0, note="undefined implication"))
            continue
        out.append(FeatureStat("conditional_prob", lhs, rhs, (total_x - violations) / total_x, None, total_x, violations))
    return out


def all_statistics(db: SegmentDatabase, yates: bool = True) -> list[FeatureStat]:
    return (
        pearson_feature_correlations(db)
        + chi_square_cooccurrence(db, yates=yates)
        + implicational_conditional_probabilities(db)
    )


STATS_COLUMNS = ("kind", "lhs", "rhs", "value", "p_value", "total_x", "violations")


def write_stats_csv(stats: Iterable[FeatureStat], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=STATS_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for s in stats:
            writer.writerow(s.as_row())


def read_stats_csv(path) -> list[FeatureStat]:
    def opt(v, typ):
        return None if v in ("", None) else typ(v)

    with open(path, encoding="utf-8", newline="") as fh:
        return [
            FeatureStat(
                r["kind"], r["lhs"], r["rhs"], float(r["value"]),
                opt(r["p_value"], float), opt(r["total_x"], int), opt(r["violations"], int),
            )
            for r in csv.DictReader(fh)
        ]
