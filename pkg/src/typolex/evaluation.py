"""Phoneme-level n-gram models, KL against PHOIBLE and cross-grammar scoring.

All log quantities are natural logs. Words are padded with ``order - 1`` start
markers and one end marker; the start marker is context only and is never
predicted, so conditionals are normalised over ``model.outcomes`` (training
symbols, the end marker and the unknown symbol).
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import CoverageError, EmptyInputError, InputError
from .grammars import Lexicon
from .seeding import py_rng

BOS, EOS, UNK = "<s>", "</s>", "<unk>"
SMOOTHINGS = ("add_k", "witten_bell")


@dataclass(frozen=True)
class Smoothing:
    kind: str = "add_k"
    k: float = 0.1

    def __post_init__(self):
        if self.kind not in SMOOTHINGS:
            raise InputError(f"unknown smoothing {self.kind!r}; expected one of {SMOOTHINGS}")
        if self.kind == "add_k" and not self.k > 0:
            raise InputError("add-k smoothing needs k > 0")


def _words(lexicon) -> list[tuple[str, ...]]:
    if isinstance(lexicon, Lexicon):
        return [w.phonemes for w in lexicon.words]
    out = []
    for w in lexicon:
        out.append(tuple(w.phonemes) if hasattr(w, "phonemes") else tuple(w))
    return out


class NgramModel:
    """Counts for every order up to ``order`` (lower orders feed Witten-Bell)."""

    def __init__(self, order: int, smoothing: Smoothing, counts: list[dict], vocabulary: frozenset):
        self.order = order
        self.smoothing = smoothing
        self._counts = counts  # counts[j]: context of length j -> Counter
        self._totals = [{h: sum(c.values()) for h, c in level.items()} for level in counts]
        self._types = [{h: len(c) for h, c in level.items()} for level in counts]
        self.vocabulary = vocabulary
        self.outcomes = tuple(sorted(vocabulary - {BOS}))
        self._v = len(self.outcomes)

    @property
    def counts(self) -> Mapping[tuple, Counter]:
        """Highest-order context -> symbol -> count."""
        return self._counts[self.order - 1]

    def prob(self, symbol: str, context: Sequence[str]) -> float:
        if symbol not in self.vocabulary or symbol == BOS:
            symbol = UNK
        ctx = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        if self.smoothing.kind == "add_k":
            k = self.smoothing.k
            c = self._counts[len(ctx)].get(ctx)
            num = c.get(symbol, 0) if c else 0
            return (num + k) / (self._totals[len(ctx)].get(ctx, 0) + k * self._v)
        return self._wb(symbol, ctx)

    def _wb(self, symbol: str, ctx: tuple) -> float:
        p = 1.0 / self._v
        for j in range(0, len(ctx) + 1):
            h = ctx[len(ctx) - j:]
            tot = self._totals[j].get(h, 0)
            if tot == 0:
                continue
            t = self._types[j][h]
            p = (self._counts[j][h].get(symbol, 0) + t * p) / (tot + t)
        return p

    def distribution(self, context: Sequence[str]) -> dict[str, float]:
        return {s: self.prob(s, context) for s in self.outcomes}


def _padded(word: Sequence[str], order: int) -> list[str]:
    return [BOS] * (order - 1) + list(word) + [EOS]


def train_ngram(lexicon, order: int = 3, smoothing: Smoothing | None = None) -> NgramModel:
    smoothing = smoothing or Smoothing()
    words = _words(lexicon)
    if not words:
        raise EmptyInputError("cannot train an n-gram model on an empty lexicon")
    if order < 1:
        raise InputError("order must be >= 1")
    counts = [defaultdict(Counter) for _ in range(order)]
    vocab = {BOS, EOS, UNK}
    for w in words:
        vocab.update(w)
        toks = _padded(w, order)
        for i in range(order - 1, len(toks)):
            sym = toks[i]
            for j in range(order):
                counts[j][tuple(toks[i - j:i])][sym] += 1
    return NgramModel(order, smoothing, [dict(c) for c in counts], frozenset(vocab))


def score(model: NgramModel, heldout) -> tuple[float, float]:
    """(average log-likelihood per token in nats, perplexity)."""
    words = _words(heldout)
    if not words:
        raise EmptyInputError("held-out set is empty")
    total, n = 0.0, 0
    o = model.order
    for w in words:
        toks = [t if t in model.vocabulary else UNK for t in _padded(w, o)]
        for i in range(o - 1, len(toks)):
            total += math.log(model.prob(toks[i], toks[i - o + 1:i] if o > 1 else ()))
            n += 1
    avg = total / n
    return avg, math.exp(-avg)


def improvement_ratio(model_metric: float, random_metric: float) -> float:
    """random / model perplexity; above 1 means the model beats the baseline."""
    if not (model_metric > 0 and random_metric > 0):
        raise InputError("perplexities must be positive")
    return random_metric / model_metric


def kl_divergence(lexicon, reference: Mapping[str, float]) -> float:
    """D(P || Q) in nats, P being the lexicon's phoneme unigram distribution."""
    c = Counter(p for w in _words(lexicon) for p in w)
    if not c:
        raise EmptyInputError("lexicon has no phonemes")
    total = sum(c.values())
    d = 0.0
    for ph, n in sorted(c.items()):
        q = reference.get(ph, 0.0)
        if not q > 0:
            raise CoverageError(f"phoneme {ph!r} has no mass in the reference distribution")
        p = n / total
        d += p * math.log(p / q)
    return max(d, 0.0)


def split_heldout(lexicon: Lexicon, fraction: float, seed: int, label="heldout") -> tuple[Lexicon, Lexicon]:
    """Seeded word-level split into disjoint (train, heldout)."""
    if not 0 < fraction < 1:
        raise InputError("heldout_fraction must lie in (0, 1)")
    n = len(lexicon)
    if n < 2:
        raise InputError("need at least two words to split")
    idx = list(range(n))
    py_rng(seed, label, n).shuffle(idx)
    cut = min(max(1, round(n * fraction)), n - 1)
    held = sorted(idx[:cut])
    train = sorted(idx[cut:])
    prov = dict(lexicon.provenance)
    return (Lexicon(tuple(lexicon.words[i] for i in train), prov),
            Lexicon(tuple(lexicon.words[i] for i in held), prov))


@dataclass(frozen=True)
class EvalConfig:
    order: int = 3
    smoothing: str = "add_k"
    k: float = 0.1
    heldout_fraction: float = 0.2

    def __post_init__(self):
        if self.order < 1:
            raise InputError("order must be >= 1")
        Smoothing(self.smoothing, self.k)
        if not 0 < self.heldout_fraction < 1:
            raise InputError("heldout_fraction must lie in (0, 1)")

    @property
    def smoothing_obj(self) -> Smoothing:
        return Smoothing(self.smoothing, self.k)


@dataclass(frozen=True)
class EvalReport:
    grammar: str
    lexicon_size: int
    seed: int
    perplexity: float
    avg_log_likelihood: float
    improvement_ratio: float | None
    kl_divergence: float | None

    def as_row(self) -> dict:
        return {
            "grammar": self.grammar, "size": self.lexicon_size, "seed": self.seed,
            "perplexity": repr(self.perplexity), "avg_ll": repr(self.avg_log_likelihood),
            "improvement_ratio": "" if self.improvement_ratio is None else repr(self.improvement_ratio),
            "kl": "" if self.kl_divergence is None else repr(self.kl_divergence),
        }


def evaluate_lexicon(lexicon: Lexicon, config: EvalConfig, seed: int,
                     reference: Mapping[str, float] | None = None) -> tuple[float, float, float | None]:
    """(avg_ll, perplexity, kl) for one lexicon using a seeded held-out split."""
    train, held = split_heldout(lexicon, config.heldout_fraction, seed)
    avg, ppl = score(train_ngram(train, config.order, config.smoothing_obj), held)
    kl = kl_divergence(lexicon, reference) if reference is not None else None
    return avg, ppl, kl


@dataclass
class CrossGrammarMatrix:
    grammars: list[str]
    log_likelihood: list[list[float]]
    perplexity: list[list[float]]
    meta: dict = field(default_factory=dict)

    def ll(self, train: str, test: str) -> float:
        return self.log_likelihood[self.grammars.index(train)][self.grammars.index(test)]

    def ppl(self, train: str, test: str) -> float:
        return self.perplexity[self.grammars.index(train)][self.grammars.index(test)]

    def rows(self) -> list[dict]:
        return [
            {"train": a, "test": b, "avg_ll": repr(self.log_likelihood[i][j]), "perplexity": repr(self.perplexity[i][j])}
            for i, a in enumerate(self.grammars) for j, b in enumerate(self.grammars)
        ]

    def to_dict(self) -> dict:
        return asdict(self)


def cross_grammar_matrix(lexicons: Mapping[str, Lexicon], order: int = 3, smoothing: Smoothing | None = None,
                         heldout_fraction: float = 0.2, seed: int = 0) -> CrossGrammarMatrix:
    """Entry (a, b): model trained on a's training split, scored on b's held-out words.

    Every row uses the same training split, so the diagonal is never scored on
    memorised words and all entries see equally many training words.
    """
    if not lexicons:
        raise EmptyInputError("no lexicons given")
    sizes = {len(v) for v in lexicons.values()}
    if len(sizes) != 1:
        raise InputError(f"lexicon sizes differ: { {k: len(v) for k, v in lexicons.items()} }")
    smoothing = smoothing or Smoothing()
    names = list(lexicons)
    # shared split indices so identical lexicons give identical entries
    splits = {g: split_heldout(lexicons[g], heldout_fraction, seed, "cross") for g in names}
    ll = [[0.0] * len(names) for _ in names]
    pp = [[0.0] * len(names) for _ in names]
    for i, a in enumerate(names):
        model = train_ngram(splits[a][0], order, smoothing)
        for j, b in enumerate(names):
            ll[i][j], pp[i][j] = score(model, splits[b][1])
    meta = {"order": order, "smoothing": asdict(smoothing), "heldout_fraction": heldout_fraction,
            "seed": seed, "size": sizes.pop(), "log_base": "e"}
    return CrossGrammarMatrix(names, ll, pp, meta)


def size_sweep(lexicons_by_seed: Mapping[int, Mapping[str, Lexicon]], sizes: Sequence[int], config: EvalConfig,
               reference: Mapping[str, float] | None = None, baseline: str = "random") -> list[EvalReport]:
    """One report per (grammar, size, seed); lexicons of size n are prefixes of the largest run."""
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise InputError("sizes must be sorted ascending")
    reports = []
    for seed, lexicons in lexicons_by_seed.items():
        for n in sizes:
            cell = {}
            for g, lex in lexicons.items():
                if len(lex) < n:
                    raise InputError(f"lexicon for {g} has {len(lex)} words, need {n}")
                cell[g] = evaluate_lexicon(lex.head(n), config, seed, reference)
            base = cell.get(baseline)
            for g, (avg, ppl, kl) in cell.items():
                ratio = improvement_ratio(ppl, base[1]) if base else None
                reports.append(EvalReport(g, n, seed, ppl, avg, ratio, kl))
    return reports


METRIC_COLUMNS = ("grammar", "size", "seed", "perplexity", "avg_ll", "improvement_ratio", "kl")


def write_metrics_csv(reports: Iterable[EvalReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow(r.as_row())


def read_metrics_csv(path) -> list[EvalReport]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(EvalReport(
                row["grammar"], int(row["size"]), int(row["seed"]), float(row["perplexity"]),
                float(row["avg_ll"]),
                float(row["improvement_ratio"]) if row["improvement_ratio"] else None,
                float(row["kl"]) if row["kl"] else None,
            ))
    return out


def write_cross_outputs(matrix: CrossGrammarMatrix, csv_path, json_path=None) -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=("train", "test", "avg_ll", "perplexity"), lineterminator="\n")
        w.writeheader()
        w.writerows(matrix.rows())
    if json_path is not None:
        Path(json_path).write_text(json.dumps(matrix.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
