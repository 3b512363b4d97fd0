import json
import math
import random
from collections import Counter
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from typolex.candidates import CONSTRAINTS, SyllableSkeleton, TemplateParams, ViolationVector, WordForm
from typolex.errors import CapacityError, ConfigurationError
from typolex.grammars import (
    DEFAULT_RANKING,
    DEFAULT_WEIGHTS,
    KINDS,
    GrammarSpec,
    Lexicon,
    Tableau,
    deterministic_select,
    generate_lexicon,
    harmonies,
    hg_select,
    maxent_probabilities,
    maxent_sample,
    passes_hard_filter,
    softmax_neg,
    stochastic_ot_select,
    strict_ot_select,
    tokenize,
)
from typolex.inventory import PhonemeInventory, SamplerConfig, sample_inventory

CV = SyllableSkeleton(1, 0)


def cand(values, form=("t", "a"), sylls=(CV,)):
    return WordForm(tuple(form), tuple(sylls)), ViolationVector(tuple(values))


def vec(**kw):
    return tuple(kw.get(c.replace("*", "X"), 0) for c in CONSTRAINTS)


def brute_ot(cands, ranking):
    order = [CONSTRAINTS.index(c) for c in ranking]
    keyed = sorted(range(len(cands)), key=lambda i: ([cands[i][1].values[k] for k in order], i))
    return keyed[0]


def brute_hg(cands, weights):
    hs = [sum(weights[c] * v for c, v in zip(CONSTRAINTS, vv.values)) for _, vv in cands]
    return min(range(len(hs)), key=lambda i: (hs[i], i))


tableaux = st.lists(st.lists(st.integers(0, 3), min_size=5, max_size=5), min_size=1, max_size=8)


def test_spec_validation():
    assert GrammarSpec("ot").kind == "strict_ot"
    with pytest.raises(ConfigurationError):
        GrammarSpec("optimal")
    with pytest.raises(ConfigurationError):
        GrammarSpec("strict_ot", ranking=("SSP", "Onset"))
    with pytest.raises(ConfigurationError):
        GrammarSpec("hg", weights={**DEFAULT_WEIGHTS, "SSP": -1})
    with pytest.raises(ConfigurationError):
        GrammarSpec("stochastic_ot", noise_sigma=0.0)
    g = GrammarSpec("maxent")
    assert GrammarSpec.from_dict(json.loads(json.dumps(g.to_dict()))) == g


def test_tableau_invariants():
    with pytest.raises(ValueError):
        Tableau((cand(vec()),), 3)
    with pytest.raises(ValueError):
        Tableau((cand(vec()),), 0, probabilities=(0.7,))


def test_deterministic_pass_through():
    clean = cand(vec())
    t = deterministic_select([cand(vec(SSP=1)), clean, cand(vec())])
    assert t.winner_index == 1


def test_deterministic_rejects_all():
    t = deterministic_select([cand(vec(SSP=1)), cand(vec(SSP=2, Onset=1))])
    assert t.winner_index is None and t.winner is None


def test_deterministic_structural_limit():
    wide_coda = cand(vec(NoCoda=1, XComplex=1), form=("t", "a", "n", "t"), sylls=(SyllableSkeleton(1, 2),))
    assert not passes_hard_filter(wide_coda, max_onset=2, max_coda=1)
    assert passes_hard_filter(wide_coda, max_onset=2, max_coda=2)


def test_strict_domination():
    a = cand(vec(SSP=1))
    b = cand(vec(XComplex=1, Onset=1, NoCoda=1))
    assert strict_ot_select([a, b]).winner_index == 1


def test_ot_ties_go_first():
    assert strict_ot_select([cand(vec(Onset=1)), cand(vec(Onset=1))]).winner_index == 0


@settings(max_examples=300, deadline=None)
@given(rows=tableaux, perm=st.permutations(CONSTRAINTS))
def test_ot_matches_brute_force(rows, perm):
    cands = [cand(r) for r in rows]
    w = strict_ot_select(cands, perm).winner_index
    assert w == brute_ot(cands, perm)
    order = [CONSTRAINTS.index(c) for c in perm]
    key = lambda i: [cands[i][1].values[k] for k in order]
    assert all(key(w) <= key(i) for i in range(len(cands)))


def test_gang_effect():
    a = cand(vec(SSP=1))
    b = cand(vec(Onset=1, NoCoda=1, XComplex=1, NasalStopHomorganic=1))
    low = dict.fromkeys(CONSTRAINTS, 1.0)
    assert hg_select([a, b], {**low, "SSP": 3.0}).winner_index == 0
    assert hg_select([a, b], {**low, "SSP": 5.0}).winner_index == 1


def test_hg_zero_weights():
    t = hg_select([cand(vec(SSP=3)), cand(vec())], dict.fromkeys(CONSTRAINTS, 0.0))
    assert t.winner_index == 0


@settings(max_examples=300, deadline=None)
@given(rows=tableaux, w=st.lists(st.integers(0, 10), min_size=5, max_size=5), lam=st.sampled_from([0.5, 2, 7, 1000]))
def test_hg_matches_brute_force_and_scaling(rows, w, lam):
    cands = [cand(r) for r in rows]
    weights = dict(zip(CONSTRAINTS, map(float, w)))
    win = hg_select(cands, weights).winner_index
    assert win == brute_hg(cands, weights)
    assert hg_select(cands, {c: lam * x for c, x in weights.items()}).winner_index == win


def test_softmax_closed_forms():
    assert softmax_neg([1.0, 1.0]) == pytest.approx([0.5, 0.5])
    assert softmax_neg([0.0, math.log(2)]) == pytest.approx([2 / 3, 1 / 3], abs=1e-12)
    # large harmonies stay finite
    p = softmax_neg([10_000.0, 10_001.0])
    assert p == pytest.approx([1 / (1 + math.exp(-1)), math.exp(-1) / (1 + math.exp(-1))])


@settings(max_examples=200, deadline=None)
@given(h=st.lists(st.floats(0, 50), min_size=1, max_size=8), c=st.floats(-100, 100))
def test_softmax_shift_invariant(h, c):
    p = softmax_neg(h)
    assert math.fsum(p) == pytest.approx(1.0, abs=1e-9)
    assert softmax_neg([x + c for x in h]) == pytest.approx(p, abs=1e-9)


def test_maxent_sampling_frequencies():
    cands = [cand(vec()), cand(vec(Onset=1)), cand(vec(NoCoda=2))]
    weights = dict.fromkeys(CONSTRAINTS, 0.7)
    p = maxent_probabilities(cands, weights)
    rng = random.Random(4)
    n = 100_000
    counts = Counter(maxent_sample(cands, weights, rng).winner_index for _ in range(n))
    assert chisquare([counts[i] for i in range(3)], [x * n for x in p]).pvalue > 0.01


def test_maxent_tableau_fields():
    t = maxent_sample([cand(vec()), cand(vec(SSP=1))], DEFAULT_WEIGHTS, random.Random(0))
    assert t.harmony == (0.0, 8.0)
    assert sum(t.probabilities) == pytest.approx(1.0)


def test_stochastic_ot_vanishing_noise():
    rng = random.Random(0)
    values = {c: 10.0 * (5 - i) for i, c in enumerate(DEFAULT_RANKING)}
    for _ in range(200):
        rows = [[rng.randint(0, 2) for _ in CONSTRAINTS] for _ in range(5)]
        cands = [cand(r) for r in rows]
        assert stochastic_ot_select(cands, values, 1e-9, rng).winner_index == strict_ot_select(cands).winner_index


def test_stochastic_ot_well_separated():
    rng = random.Random(1)
    values = {c: 100.0 - 20 * i for i, c in enumerate(DEFAULT_RANKING)}
    cands = [cand(vec(SSP=1)), cand(vec(NasalStopHomorganic=1)), cand(vec(Onset=1, NoCoda=1))]
    target = strict_ot_select(cands).winner_index
    hits = sum(stochastic_ot_select(cands, values, 2.0, rng).winner_index == target for _ in range(10_000))
    assert hits / 10_000 > 0.99


def test_stochastic_ot_symmetric_tie():
    rng = random.Random(2)
    values = {"SSP": 50.0, "NasalStopHomorganic": 50.0, "*Complex": 30.0, "Onset": 20.0, "NoCoda": 10.0}
    cands = [cand(vec(SSP=1)), cand(vec(NasalStopHomorganic=1))]
    wins = sum(stochastic_ot_select(cands, values, 2.0, rng).winner_index == 0 for _ in range(10_000))
    assert wins / 10_000 == pytest.approx(0.5, abs=0.02)


def test_stochastic_needs_noise():
    with pytest.raises(ConfigurationError):
        stochastic_ot_select([cand(vec())], {c: 1.0 for c in CONSTRAINTS}, 0.0, random.Random(0))


def test_empty_candidates():
    for f in (deterministic_select, strict_ot_select):
        with pytest.raises(ValueError):
            f([])
    with pytest.raises(ValueError):
        hg_select([], DEFAULT_WEIGHTS)


# ---------------------------------------------------------------------------
# lexicons


def test_single_deterministic_word(inventory):
    lex = generate_lexicon(GrammarSpec("deterministic"), inventory, TemplateParams(), 1, seed=3)
    assert len(lex) == 1
    from typolex.candidates import evaluate_constraints

    v = evaluate_constraints(lex.words[0], inventory)
    assert v["SSP"] == 0 and v["NasalStopHomorganic"] == 0


def test_deterministic_lexicon_post_check(inventory):
    from typolex.candidates import evaluate_constraints

    lex = generate_lexicon(GrammarSpec("deterministic"), inventory, TemplateParams(), 1000, seed=0)
    for w in lex:
        assert passes_hard_filter((w, evaluate_constraints(w, inventory)))


@pytest.mark.parametrize("kind", KINDS)
def test_lexicon_reproducible(inventory, kind):
    spec = GrammarSpec(kind)
    a = generate_lexicon(spec, inventory, TemplateParams(), 60, seed=9)
    b = generate_lexicon(spec, inventory, TemplateParams(), 60, seed=9)
    assert a.to_json() == b.to_json()
    assert len(set(a.forms)) == 60
    assert set(p for w in a for p in w.phonemes) <= set(inventory.segments)
    assert a.kind == kind


def test_smaller_lexicon_is_prefix(inventory):
    spec = GrammarSpec("maxent")
    big = generate_lexicon(spec, inventory, TemplateParams(), 80, seed=1)
    small = generate_lexicon(spec, inventory, TemplateParams(), 30, seed=1)
    assert big.head(30).forms == small.forms


def test_capacity_error(db):
    inv = PhonemeInventory.from_segments(db, ["t"], ["a"])
    params = TemplateParams(syllable_count_distribution={1: 1.0}, onset_probability=1.0, coda_probability=0.0,
                            max_onset_width=1)
    with pytest.raises(CapacityError) as exc:
        generate_lexicon(GrammarSpec("random"), inv, params, 3)
    assert exc.value.achieved == 1
    assert exc.value.to_dict()["achieved"] == 1


def test_small_cv_has_no_complex_codas(db):
    inv = sample_inventory(db, SamplerConfig(archetype="small_cv", seed=2))
    params = TemplateParams(coda_probability=0.8, complex_coda_probability=0.9)
    lex = generate_lexicon(GrammarSpec("random"), inv, params, 200)
    assert all(s.coda <= 1 for w in lex for s in w.syllables)


def test_provenance_and_roundtrip(inventory):
    lex = generate_lexicon(GrammarSpec("hg"), inventory, TemplateParams(), 25, seed=4)
    prov = lex.provenance
    assert prov["inventory_hash"] == inventory.content_hash()
    assert {"grammar", "seed", "config_hash", "template"} <= set(prov)
    back = Lexicon.from_json(lex.to_json())
    assert back.words == lex.words and back.content_hash() == lex.content_hash()


def test_bare_string_lexicon(db):
    inv = PhonemeInventory.from_segments(db, ["t", "tʰ", "n"], ["a", "i"])
    assert tokenize("tʰata", inv.segments) == ("tʰ", "a", "t", "a")
    lex = Lexicon.from_dict({"words": ["tʰata", "antina"]}, inv)
    assert [w.phonemes for w in lex] == [("tʰ", "a", "t", "a"), ("a", "n", "t", "i", "n", "a")]
    assert [".".join(s.pattern for s in w.syllables) for w in lex] == ["CV.CV", "V.CCV.CV"]
    with pytest.raises(ValueError):
        tokenize("xa", inv.segments)
