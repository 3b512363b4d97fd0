"""Typologically grounded phonotactic lexicon generation.

Stages: PHOIBLE ingest and statistics (:mod:`typolex.phoible`), inventory
sampling (:mod:`typolex.inventory`), candidate generation and constraint
scoring (:mod:`typolex.candidates`), grammar-based selection
(:mod:`typolex.grammars`), meaning assignment (:mod:`typolex.semantics`) and
evaluation (:mod:`typolex.evaluation`). :mod:`typolex.pipeline` chains them.
"""

__version__ = "0.1.0"
