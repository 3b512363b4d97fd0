import csv
import gzip
import math
import random
from collections import Counter, defaultdict

import numpy as np
import pytest
from scipy import stats as sps

from typolex.errors import EmptyInputError, SchemaError
from typolex.phoible import (
    SegmentDatabase,
    SegmentRecord,
    bundled_phoible_path,
    chi_square_2x2,
    chi_square_cooccurrence,
    contingency,
    global_phoneme_distribution,
    implicational_conditional_probabilities,
    parse_phoible_csv,
    pearson_feature_correlations,
    pearson_r,
    read_stats_csv,
    write_stats_csv,
    all_statistics,
)
from typolex.errors import UndefinedStatisticError

HEADER = ["InventoryID", "Glottocode", "Phoneme", "SegmentClass", "consonantal", "sonorant"]


def _write(path, rows, header=HEADER):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _rec(inv, seg, cls="consonant", **flags):
    return SegmentRecord(str(inv), "x", seg, cls, flags)


def test_three_row_fixture(tmp_path):
    p = _write(tmp_path / "a.csv", [
        ["1", "aaaa1234", "p", "consonant", "+", "-"],
        ["1", "aaaa1234", "a", "vowel", "-", "+"],
        ["2", "bbbb1234", "p", "consonant", "+", "-"],
    ])
    db = parse_phoible_csv(p)
    assert db.n_inventories == 2
    assert dict(db.global_counts) == {"p": 2, "a": 1}
    assert len(db.records) == 3


def test_duplicate_row_is_ignored(tmp_path):
    rows = [["1", "g", "p", "consonant", "+", "-"], ["1", "g", "a", "vowel", "-", "+"]]
    a = parse_phoible_csv(_write(tmp_path / "a.csv", rows))
    b = parse_phoible_csv(_write(tmp_path / "b.csv", rows + [rows[0]]))
    assert dict(a.global_counts) == dict(b.global_counts)
    assert len(b.records) == 2


def test_missing_column_named(tmp_path):
    p = _write(tmp_path / "a.csv", [["1", "p", "consonant"]], header=["InventoryID", "Phoneme", "SegmentClass"])
    with pytest.raises(SchemaError, match="Glottocode"):
        parse_phoible_csv(p)


def test_header_only_is_empty(tmp_path):
    with pytest.raises(EmptyInputError):
        parse_phoible_csv(_write(tmp_path / "a.csv", []))


def test_unreadable_file(tmp_path):
    with pytest.raises(OSError):
        parse_phoible_csv(tmp_path / "missing.csv")


def test_record_invariants():
    with pytest.raises(SchemaError):
        _rec(1, "")
    with pytest.raises(SchemaError):
        _rec(1, "p", cls="syllable")


def test_full_database_counts(db):
    # independent group-by over the raw file
    ids = set()
    pairs = set()
    with gzip.open(bundled_phoible_path(), "rt", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ids.add(row["InventoryID"])
            pairs.add((row["InventoryID"], row["Phoneme"]))
    assert db.n_inventories == len(ids) > 2000
    assert sum(db.global_counts.values()) == len(pairs)
    assert all(1 <= c <= db.n_inventories for c in db.global_counts.values())


def test_global_distribution_toy():
    db = SegmentDatabase.from_records(
        [_rec(i, "p") for i in range(3)] + [_rec(0, "t")]
    )
    assert global_phoneme_distribution(db) == pytest.approx({"p": 0.75, "t": 0.25})
    single = SegmentDatabase.from_records([_rec(0, "p")])
    assert global_phoneme_distribution(single) == {"p": 1.0}
    with pytest.raises(EmptyInputError):
        global_phoneme_distribution(SegmentDatabase.from_records([]))


def test_global_distribution_full(db):
    dist = global_phoneme_distribution(db)
    assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-9)
    with gzip.open(bundled_phoible_path(), "rt", encoding="utf-8") as fh:
        seen = {(r["InventoryID"], r["Phoneme"]) for r in csv.DictReader(fh)}
    top = [s for s, _ in Counter(p for _, p in seen).most_common(10)]
    assert sorted(dist, key=dist.get, reverse=True)[:10] == top
    assert {"m", "k", "i", "a"} <= set(top)


def test_pearson_matches_scipy():
    g = np.random.default_rng(0)
    x = g.normal(size=200)
    y = 0.3 * x + g.normal(size=200)
    r, p = pearson_r(x, y)
    ref = sps.pearsonr(x, y)
    assert r == pytest.approx(ref.statistic, abs=1e-12)
    assert p == pytest.approx(ref.pvalue, rel=1e-9)


def test_pearson_zero_variance():
    with pytest.raises(UndefinedStatisticError):
        pearson_r([1, 1, 1, 1], [1, 2, 3, 4])


def test_ejective_indicator_of_large_inventories():
    recs = []
    for i, n in enumerate([10, 12, 14, 20, 22, 24]):
        recs += [_rec(i, f"c{j}", consonantal=True) for j in range(n)]
        if n > 17:
            recs.append(SegmentRecord(str(i), "x", "kʼ", "consonant", {"ejective": True}))
    stats = {s.rhs + s.lhs: s for s in pearson_feature_correlations(SegmentDatabase.from_records(recs))}
    assert stats["ejectiveconsonant_count"].value > 0
    # no clicks anywhere: reported as undefined, not raised
    assert math.isnan(stats["clickconsonant_count"].value)


@pytest.mark.parametrize("yates", [True, False])
def test_chi_square_matches_scipy(yates):
    g = np.random.default_rng(1)
    for _ in range(50):
        t = g.integers(1, 60, size=(2, 2))
        chi2, p = chi_square_2x2(t, yates=yates)
        ref = sps.chi2_contingency(t, correction=yates)
        assert chi2 == pytest.approx(ref.statistic, rel=1e-9, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-12)


def test_chi_square_hand_values():
    # independence with equal margins
    assert chi_square_2x2([[25, 25], [25, 25]], yates=False)[0] == pytest.approx(0.0)
    # diagonal table: chi-square equals the table total
    assert chi_square_2x2([[30, 0], [0, 70]], yates=False)[0] == pytest.approx(100.0)
    assert chi_square_2x2([[0, 0], [3, 4]]) == (0.0, 1.0)
    assert chi_square_2x2([[5, 0], [3, 0]]) == (0.0, 1.0)


def test_conditional_probability_fixture():
    recs = []
    for i in range(4):
        recs.append(SegmentRecord(str(i), "x", "ħ", "consonant", {"pharyngeal": True}))
        if i != 3:
            recs.append(SegmentRecord(str(i), "x", "q", "consonant", {"uvular": True}))
    recs.append(SegmentRecord("9", "x", "a", "vowel", {}))
    stats = {s.lhs: s for s in implicational_conditional_probabilities(SegmentDatabase.from_records(recs))}
    s = stats["pharyngeal"]
    assert (s.total_x, s.violations, s.value) == (4, 1, 0.75)
    assert s.value + s.failure_rate == 1.0
    assert math.isnan(stats["fricative"].value) and stats["fricative"].total_x == 0


def test_full_statistics_invariants(db):
    for s in all_statistics(db):
        if s.kind == "conditional_prob":
            assert 0 <= s.value <= 1 and s.total_x >= s.violations >= 0
            assert s.value + s.failure_rate == 1.0
            assert s.value == (s.total_x - s.violations) / s.total_x
        elif s.kind == "pearson_r":
            assert -1 <= s.value <= 1
        else:
            assert s.value >= 0


def test_reported_implications(db):
    stats = {s.lhs: s for s in implicational_conditional_probabilities(db)}
    ph = stats["pharyngeal"]
    assert (ph.total_x, ph.violations, ph.value) == (15, 0, 1.0)
    vo = stats["voiced_obstruent"]
    assert vo.violations == 6
    assert abs(vo.total_x - 2355) <= 0.05 * 2355
    assert vo.value == pytest.approx(0.997, abs=0.005)


def test_reported_correlations(db):
    expected = {("consonant_count", "ejective"): 0.324, ("consonant_count", "click"): 0.188,
                ("inventory_size", "click"): 0.188, ("vowel_count", "long_vowel"): 0.412}
    for s in pearson_feature_correlations(db):
        assert s.value == pytest.approx(expected[s.lhs, s.rhs], abs=0.02)
        assert s.p_value < 0.001


def test_voicing_cooccurrence(db):
    s = {(x.lhs, x.rhs): x for x in chi_square_cooccurrence(db)}[("voiced_obstruent", "voiceless_obstruent")]
    assert s.value == pytest.approx(0.656, abs=0.01)
    assert s.p_value == pytest.approx(0.418, abs=0.01)


@pytest.mark.xfail(strict=True, reason="both features are frequent in the bundled release, so the margins are non-empty")
@pytest.mark.parametrize("pair", [("ejective", "uvular"), ("pharyngeal", "uvular")])
def test_degenerate_cooccurrence_rows(db, pair):
    s = {(x.lhs, x.rhs): x for x in chi_square_cooccurrence(db)}[pair]
    assert s.value == pytest.approx(0.0, abs=1e-3)


def test_contingency_layout(db):
    t = contingency(db, "pharyngeal", "uvular")
    assert t.sum() == db.n_inventories
    assert t[0, 1] == 0 and t[0].sum() == 15


def test_stats_csv_roundtrip(db, tmp_path):
    stats = all_statistics(db)
    write_stats_csv(stats, tmp_path / "s.csv")
    back = read_stats_csv(tmp_path / "s.csv")
    with open(tmp_path / "s.csv", encoding="utf-8") as fh:
        assert fh.readline().strip() == "kind,lhs,rhs,value,p_value,total_x,violations"
    assert [(b.kind, b.lhs, b.rhs, b.total_x, b.violations) for b in back] == \
        [(s.kind, s.lhs, s.rhs, s.total_x, s.violations) for s in stats]
    assert [b.value for b in back] == pytest.approx([s.value for s in stats], nan_ok=True)


def test_statistics_permutation_invariant(db):
    recs = list(db.records)
    random.Random(3).shuffle(recs)
    shuffled = SegmentDatabase.from_records(recs)
    a = [(s.value, s.p_value) for s in pearson_feature_correlations(db)]
    b = [(s.value, s.p_value) for s in pearson_feature_correlations(shuffled)]
    assert a == b
