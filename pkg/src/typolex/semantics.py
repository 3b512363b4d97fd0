"""Concept ontology, meaning sampling and Spearman-optimal form assignment.

Meaning ids are ontology leaf ids (``category.concept``). When more meanings
are requested than there are leaves, extra senses ``leaf#k`` hang off a leaf
through a zero-length edge, so they inherit its distances to everything else.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import EmptyInputError, InputError, StructuralError, UndefinedStatisticError
from .seeding import np_rng

DATA_DIR = Path(__file__).resolve().parent / "data"


def bundled_ontology_path() -> Path:
    return DATA_DIR / "ontology.json"


@dataclass(frozen=True)
class OntologyNode:
    gloss: str
    parent: str | None
    children: tuple[str, ...]
    sources: tuple[str, ...] = ()


@dataclass(frozen=True)
class Ontology:
    nodes: Mapping[str, OntologyNode]
    root: str

    @classmethod
    def from_parents(cls, parents: Mapping[str, str | None], glosses: Mapping[str, str] | None = None,
                     sources: Mapping[str, Sequence[str]] | None = None) -> "Ontology":
        """Build from a child -> parent map (the root maps to None)."""
        roots = [n for n, p in parents.items() if p is None]
        if len(roots) != 1:
            raise StructuralError(f"expected a single root, found {sorted(roots)}")
        children: dict[str, list[str]] = {n: [] for n in parents}
        for n, p in parents.items():
            if p is None:
                continue
            if p not in parents:
                raise StructuralError(f"node {n!r} has unknown parent {p!r}")
            children[p].append(n)
        glosses = glosses or {}
        sources = sources or {}
        nodes = {
            n: OntologyNode(glosses.get(n, n), parents[n], tuple(children[n]), tuple(sources.get(n, ())))
            for n in parents
        }
        ont = cls(MappingProxyType(nodes), roots[0])
        ont._validate()
        return ont

    def _validate(self):
        if self.root not in self.nodes:
            raise StructuralError(f"root {self.root!r} is not a node")
        for n, node in self.nodes.items():
            if (node.parent is None) != (n == self.root):
                raise StructuralError(f"node {n!r} is an orphan" if node.parent is None else "root has a parent")
        seen = {self.root}
        stack = [self.root]
        while stack:
            for c in self.nodes[stack.pop()].children:
                if c in seen:
                    raise StructuralError(f"node {c!r} is reachable twice (cycle or second parent)")
                seen.add(c)
                stack.append(c)
        unreachable = set(self.nodes) - seen
        if unreachable:
            raise StructuralError(f"node {sorted(unreachable)[0]!r} is not reachable from the root (cycle or orphan)")

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        return tuple(n for n, node in self.nodes.items() if not node.children and n != self.root)

    @cached_property
    def _depths(self) -> dict[str, int]:
        d = {self.root: 0}
        stack = [self.root]
        while stack:
            n = stack.pop()
            for c in self.nodes[n].children:
                d[c] = d[n] + 1
                stack.append(c)
        return d

    def resolve(self, node_id: str) -> str:
        base = node_id.split("#", 1)[0]
        if base not in self.nodes:
            raise KeyError(f"unknown concept {node_id!r}")
        return base

    def depth(self, node_id: str) -> int:
        return self._depths[self.resolve(node_id)]

    def ancestors(self, node_id: str) -> list[str]:
        """Path from the node up to and including the root."""
        n = self.resolve(node_id)
        path = [n]
        while self.nodes[n].parent is not None:
            n = self.nodes[n].parent
            path.append(n)
        return path

    def lca(self, a: str, b: str) -> str:
        anc = set(self.ancestors(a))
        for n in self.ancestors(b):
            if n in anc:
                return n
        raise StructuralError("nodes share no ancestor")

    def category_of(self, leaf: str) -> str:
        return self.nodes[self.resolve(leaf)].parent

    def to_dict(self) -> dict:
        out = {}
        for n, node in self.nodes.items():
            d = {"gloss": node.gloss, "parent": node.parent, "children": list(node.children)}
            if node.sources:
                d["sources"] = list(node.sources)
            out[n] = d
        return {"root": self.root, "nodes": out}


def load_ontology(path=None) -> Ontology:
    path = Path(path) if path is not None else bundled_ontology_path()
    data = json.loads(path.read_text(encoding="utf-8"))
    raw = data.get("nodes")
    if not raw:
        raise EmptyInputError(f"ontology {path} has no nodes")
    declared_parent: dict[str, str | None] = {}
    for n, d in raw.items():
        declared_parent[n] = d.get("parent")
    # children lists must agree with parent pointers; a node claimed by two
    # parents is a structural error rather than silently re-parented
    claimed: dict[str, str] = {}
    for n, d in raw.items():
        for c in d.get("children", []):
            if c in claimed and claimed[c] != n:
                raise StructuralError(f"node {c!r} has two parents ({claimed[c]!r}, {n!r})")
            claimed[c] = n
            if c not in raw:
                raise StructuralError(f"node {n!r} lists unknown child {c!r}")
            if declared_parent[c] != n:
                raise StructuralError(f"node {c!r} has two parents ({declared_parent[c]!r}, {n!r})")
    root = data.get("root")
    if root is None:
        roots = [n for n, p in declared_parent.items() if p is None]
        root = roots[0] if len(roots) == 1 else None
    if root is None or declared_parent.get(root) is not None:
        raise StructuralError("ontology needs exactly one root")
    glosses = {n: d.get("gloss", n) for n, d in raw.items()}
    sources = {n: d.get("sources", ()) for n, d in raw.items()}
    for n, p in declared_parent.items():
        if p is None and n != root:
            raise StructuralError(f"node {n!r} is an orphan")
    return Ontology.from_parents(declared_parent, glosses, sources)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class MeaningSet:
    meanings: tuple[str, ...]
    weights_used: Mapping[str, float]

    def __post_init__(self):
        if len(set(self.meanings)) != len(self.meanings):
            raise ValueError("duplicate meaning ids")

    def __len__(self):
        return len(self.meanings)


def sample_leaf_concepts(ont: Ontology, n: int, rng: random.Random) -> MeaningSet:
    """Draw ``n`` meanings: a category uniformly, then a leaf uniformly inside it.

    Without replacement while leaves remain (exhausted categories drop out);
    beyond the leaf count, further draws reuse leaves as numbered senses.
    """
    leaves = ont.leaves
    if not leaves:
        raise EmptyInputError("ontology has no leaves")
    if n < 0:
        raise InputError("n must be >= 0")
    by_cat: dict[str, list[str]] = {}
    for leaf in leaves:
        by_cat.setdefault(ont.nodes[leaf].parent, []).append(leaf)
    cats = sorted(by_cat)
    weights = {c: 1.0 / len(cats) for c in cats}
    remaining = {c: sorted(by_cat[c]) for c in cats}
    out: list[str] = []
    active = list(cats)
    while len(out) < min(n, len(leaves)):
        c = active[rng.randrange(len(active))]
        pool = remaining[c]
        out.append(pool.pop(rng.randrange(len(pool))))
        if not pool:
            active.remove(c)
    sense = {leaf: 1 for leaf in out}
    while len(out) < n:
        c = cats[rng.randrange(len(cats))]
        leaf = by_cat[c][rng.randrange(len(by_cat[c]))]
        sense[leaf] = sense.get(leaf, 0) + 1
        out.append(f"{leaf}#{sense[leaf]}")
    return MeaningSet(tuple(out), MappingProxyType(weights))


# ---------------------------------------------------------------------------
# distances


def semantic_distance(a: str, b: str, ont: Ontology) -> int:
    return ont.depth(a) + ont.depth(b) - 2 * ont.depth(ont.lca(a, b))


def semantic_matrix(meanings: Sequence[str], ont: Ontology) -> np.ndarray:
    """All pairwise tree distances, via ancestor paths (depth <= a few levels)."""
    base = [ont.resolve(m) for m in meanings]
    uniq = sorted(set(base))
    index = {u: i for i, u in enumerate(uniq)}
    paths = [ont.ancestors(u) for u in uniq]
    k = len(uniq)
    small = np.zeros((k, k), dtype=np.int16)
    for i in range(k):
        anc_i = {node: depth for depth, node in enumerate(paths[i])}
        for j in range(i + 1, k):
            for up, node in enumerate(paths[j]):
                if node in anc_i:
                    small[i, j] = small[j, i] = anc_i[node] + up
                    break
    idx = np.array([index[b] for b in base], dtype=np.int64)
    return small[np.ix_(idx, idx)]


def form_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Unit-cost edit distance over phoneme tokens."""
    a, b = list(a), list(b)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def _phonemes(w) -> tuple[str, ...]:
    return tuple(w.phonemes) if hasattr(w, "phonemes") else tuple(w)


def form_matrix(words: Sequence) -> np.ndarray:
    seqs = [_phonemes(w) for w in words]
    codes: dict[str, int] = {}
    flat = [codes.setdefault(p, len(codes)) for s in seqs for p in s]
    offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(s) for s in seqs])
    return _kernels.levenshtein_matrix(np.asarray(flat, dtype=np.int64), offsets)


# ---------------------------------------------------------------------------
# Spearman over pair vectors


def _average_ranks(hist: np.ndarray) -> np.ndarray:
    """Average 1-based rank of each value given its multiplicity."""
    cum = np.cumsum(hist)
    start = cum - hist
    return (start + 1 + cum) / 2.0


@dataclass(frozen=True)
class _RankCode:
    """Centred, doubled average ranks per distance value (integers)."""

    table: np.ndarray
    sum_sq: float
    pairs: int

    @classmethod
    def of(cls, d: np.ndarray) -> "_RankCode":
        size = int(d.max()) + 1 if d.size else 1
        hist = _kernels.upper_histogram(d, size)
        m = int(hist.sum())
        doubled = 2.0 * _average_ranks(hist) - (m + 1)
        table = np.rint(doubled).astype(np.int64)
        return cls(table, float(np.dot(hist, doubled.astype(np.float64) ** 2)), m)


def _rho(cross: float, rs: _RankCode, rf: _RankCode) -> float:
    if rs.sum_sq == 0 or rf.sum_sq == 0:
        raise UndefinedStatisticError("a distance vector has zero variance; Spearman rho is undefined")
    return max(-1.0, min(1.0, cross / math.sqrt(rs.sum_sq * rf.sum_sq)))


def spearman_from_matrices(ds: np.ndarray, df: np.ndarray, perm: np.ndarray | None = None) -> float:
    """rho between upper-triangle entries of ``ds`` and of ``df`` permuted by ``perm``."""
    n = ds.shape[0]
    if n < 3:
        raise InputError("need at least three items")
    perm = np.arange(n, dtype=np.int64) if perm is None else np.asarray(perm, dtype=np.int64)
    rs, rf = _RankCode.of(ds), _RankCode.of(df)
    return _rho(_kernels.permuted_cross_sum(ds, df, rs.table, rf.table, perm), rs, rf)


def alignment_score(mapping: Mapping[str, object], meanings: Sequence[str], ont: Ontology,
                    pair_subsample: int | None = None, seed: int = 0) -> float:
    """Spearman rho between semantic and form distances over all meaning pairs.

    ``pair_subsample`` estimates rho from that many uniformly drawn pairs.
    """
    meanings = list(meanings)
    if len(meanings) < 3:
        raise InputError("alignment needs at least three meanings")
    ds = semantic_matrix(meanings, ont)
    df = form_matrix([mapping[m] for m in meanings])
    n = len(meanings)
    if pair_subsample is None or pair_subsample >= n * (n - 1) // 2:
        return spearman_from_matrices(ds, df)
    from scipy.stats import spearmanr

    g = np_rng(seed, "pairs", n)
    i = g.integers(0, n, size=pair_subsample)
    j = (i + g.integers(1, n, size=pair_subsample)) % n
    a, b = ds[i, j], df[i, j]
    if a.min() == a.max() or b.min() == b.max():
        raise UndefinedStatisticError("a distance vector has zero variance; Spearman rho is undefined")
    return float(spearmanr(a, b).statistic)


# ---------------------------------------------------------------------------
# hill climbing


@dataclass
class Assignment:
    mapping: dict[str, tuple[str, ...]]
    score: float
    trace: list[list[tuple[int, float]]]
    best_restart: int
    defined: bool = True
    initial_scores: list[float] = field(default_factory=list)
    final_scores: list[float] = field(default_factory=list)

    def forms(self) -> dict[str, str]:
        return {m: "".join(p) for m, p in self.mapping.items()}

    def to_dict(self) -> dict:
        return {
            "lexicon": self.forms(),
            "metadata": {
                "score": self.score,
                "score_defined": self.defined,
                "best_restart": self.best_restart,
                "initial_scores": self.initial_scores,
                "final_scores": self.final_scores,
                "trace": [[[it, s] for it, s in tr] for tr in self.trace],
                "phonemes": {m: list(p) for m, p in self.mapping.items()},
            },
        }


CHUNK = 4096


def hill_climb_assign(meanings: Sequence[str], words: Sequence, ontology: Ontology, restarts: int = 8,
                      max_iters: int = 2000, seed: int = 0, max_proposals: int | None = 250_000) -> Assignment:
    """Random-restart swap search for the bijection maximising Spearman rho.

    Ranks depend only on the distance values, whose multiset is fixed for
    every bijection, so a swap changes rho by an exact O(N) integer delta.
    A restart stops after ``max_iters`` consecutive rejected proposals or
    ``max_proposals`` proposals in total.
    """
    meanings = list(meanings.meanings if isinstance(meanings, MeaningSet) else meanings)
    words = [_phonemes(w) for w in words]
    n = len(meanings)
    if n != len(words):
        raise InputError(f"{n} meanings but {len(words)} word forms")
    if n < 3:
        raise InputError("assignment needs at least three meanings")
    if restarts < 1 or max_iters < 1:
        raise InputError("restarts and max_iters must be >= 1")
    ds = semantic_matrix(meanings, ontology)
    df = form_matrix(words)
    rs, rf = _RankCode.of(ds), _RankCode.of(df)
    defined = rs.sum_sq > 0 and rf.sum_sq > 0
    denom = math.sqrt(rs.sum_sq * rf.sum_sq) if defined else 1.0
    # exact int64 deltas while they cannot overflow, float64 beyond that
    bound = 2 * n * float(rs.table.max() - rs.table.min()) * float(rf.table.max() - rf.table.min())
    a_s, a_f = (rs.table, rf.table) if bound < 2 ** 62 else (rs.table.astype(float), rf.table.astype(float))
    budget = max_proposals if max_proposals is not None else np.iinfo(np.int64).max

    traces, inits, finals, perms = [], [], [], []
    for r in range(restarts):
        g = np_rng(seed, "restart", r)
        perm = g.permutation(n).astype(np.int64)
        cross = _kernels.permuted_cross_sum(ds, df, a_s, a_f, perm)
        score0 = cross / denom if defined else 0.0
        trace = [(0, score0)]
        stall, used = 0, 0
        acc_iter = np.empty(CHUNK, dtype=np.int64)
        acc_delta = np.empty(CHUNK, dtype=np.float64)  # filled via float(d)
        while defined and stall < max_iters and used < budget:
            size = int(min(CHUNK, budget - used))
            pi = g.integers(0, n, size=size)
            pj = g.integers(0, n - 1, size=size)
            pj = pj + (pj >= pi)
            k, n_acc, stall = _kernels.climb_chunk(ds, df, a_s, a_f, perm, pi, pj, stall, max_iters, used + 1,
                                                   acc_iter, acc_delta)
            for t in range(n_acc):
                cross += acc_delta[t]
                trace.append((int(acc_iter[t]), cross / denom))
            used += k
        # the trace holds running sums; the reported score is recomputed from scratch
        final = _kernels.permuted_cross_sum(ds, df, a_s, a_f, perm) / denom if defined else 0.0
        traces.append(trace)
        inits.append(score0)
        finals.append(final)
        perms.append(perm.copy())
    best = max(range(restarts), key=lambda r: (finals[r], -r))
    mapping = {meanings[i]: words[perms[best][i]] for i in range(n)}
    return Assignment(mapping, finals[best], traces, best, defined, inits, finals)
