"""Per-language semantic interpreters: an inverted TF-IDF index from terms to
weighted basic concepts, built from each concept's support documents. A
document maps to the centroid of its tokens' concept vectors, and its
feature set is the top-k concepts of that centroid.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from math import log
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .corpus import LabeledDocument, TokenStream, tokenize
from .errors import DataError
from .ontology import SupportIndex

FORMAT_MAGIC = "xlcat-interpreter"
FORMAT_VERSION = 1

# Sparse concept-weight map; zero entries are never stored.
SemanticVector = Dict[str, float]


class InterpreterError(DataError):
    pass


@dataclass(frozen=True)
class ConceptFeatureSet:
    """Basic concepts generated for one document."""

    concepts: frozenset
    source_language: str


@dataclass
class SemanticInterpreter:
    language: str
    doc_count: int
    df: Dict[str, int]
    term_index: Dict[str, List[Tuple[str, float]]]
    concept_universe: frozenset
    k_term: int

    def idf(self, term: str) -> float:
        count = self.df.get(term)
        return log(self.doc_count / count) if count else 0.0

    def save(self, path: str | Path) -> None:
        payload = {
            "format": FORMAT_MAGIC,
            "version": FORMAT_VERSION,
            "language": self.language,
            "doc_count": self.doc_count,
            "k_term": self.k_term,
            "df": self.df,
            "concept_universe": sorted(self.concept_universe),
            "term_index": {t: [[c, w] for c, w in pairs] for t, pairs in self.term_index.items()},
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "SemanticInterpreter":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != FORMAT_MAGIC:
            raise InterpreterError(f"{path}: not an interpreter file")
        if payload.get("version") != FORMAT_VERSION:
            raise InterpreterError(f"{path}: unsupported version {payload.get('version')}")
        return cls(
            language=payload["language"],
            doc_count=payload["doc_count"],
            df={t: int(c) for t, c in payload["df"].items()},
            term_index={
                t: [(c, float(w)) for c, w in pairs]
                for t, pairs in payload["term_index"].items()
            },
            concept_universe=frozenset(payload["concept_universe"]),
            k_term=payload["k_term"],
        )


def pseudo_document_counts(
    idx: SupportIndex, concept_id: str, language: str, stopwords: Optional[frozenset] = None
) -> Counter:
    """Term counts of a concept's pseudo-document: its tokenized support
    articles plus any injected virtual table."""
    counts: Counter = Counter()
    for article in idx.articles(concept_id, language):
        counts.update(tokenize(article.text, language, stopwords))
    table = idx.virtual(concept_id, language)
    if table is not None:
        counts.update(table.terms)
    return counts


def build_interpreter(
    idx: SupportIndex,
    language: str,
    concepts: Iterable[str],
    k_term: int,
    stopwords: Optional[frozenset] = None,
) -> SemanticInterpreter:
    """Build the inverted term -> concept index for one language.

    tf is the raw count of a term in a concept's pseudo-document, idf is
    ln(N/df) over the N given concepts, and each term's inverted list keeps
    only the k_term highest-weighted concepts. Terms occurring in every
    pseudo-document have zero idf and are omitted entirely.
    """
    if k_term < 1:
        raise ValueError("k_term must be >= 1")
    universe = sorted(set(concepts))
    n = len(universe)
    if n == 0:
        raise InterpreterError("interpreter needs at least one concept")
    per_concept: Dict[str, Counter] = {}
    for cid in universe:
        if not idx.has_support(cid, language):
            raise InterpreterError(f"concept {cid!r} has no support in language {language!r}")
        per_concept[cid] = pseudo_document_counts(idx, cid, language, stopwords)

    df: Dict[str, int] = {}
    for cid in universe:
        for term in per_concept[cid]:
            df[term] = df.get(term, 0) + 1

    index: Dict[str, List[Tuple[str, float]]] = {}
    for cid in universe:
        for term, tf in per_concept[cid].items():
            if df[term] == n:
                continue
            index.setdefault(term, []).append((cid, tf * log(n / df[term])))
    for term, pairs in index.items():
        pairs.sort(key=lambda cw: (-cw[1], cw[0]))
        del pairs[k_term:]
    return SemanticInterpreter(
        language=language,
        doc_count=n,
        df=df,
        term_index=index,
        concept_universe=frozenset(universe),
        k_term=k_term,
    )


def interpret(si: SemanticInterpreter, doc: TokenStream) -> SemanticVector:
    """Centroid over token occurrences of the tokens' concept vectors.
    Repeated tokens contribute once per occurrence; tokens unknown to the
    index contribute nothing but still count toward the denominator."""
    if not doc:
        return {}
    sums: SemanticVector = {}
    for token in doc:
        for cid, weight in si.term_index.get(token, ()):
            sums[cid] = sums.get(cid, 0.0) + weight
    inv = 1.0 / len(doc)
    return {cid: total * inv for cid, total in sums.items()}


def top_k_features(v: SemanticVector, k_doc: int, language: str) -> ConceptFeatureSet:
    """The k_doc concepts of maximal weight; ties break toward the smaller
    concept id. Fewer than k_doc nonzero entries yields them all."""
    if k_doc < 1:
        raise ValueError("k_doc must be >= 1")
    ranked = sorted(v.items(), key=lambda cw: (-cw[1], cw[0]))
    return ConceptFeatureSet(
        concepts=frozenset(cid for cid, _ in ranked[:k_doc]),
        source_language=language,
    )


def generate_basic_features(
    interpreters: Mapping[str, SemanticInterpreter],
    doc: LabeledDocument,
    k_doc: int,
    stopwords: Optional[Mapping[str, frozenset]] = None,
) -> ConceptFeatureSet:
    """Dispatch the document to its language's interpreter and return its
    top-k basic concept features."""
    si = interpreters.get(doc.language)
    if si is None:
        raise InterpreterError(f"no interpreter for {doc.language!r}")
    words = (stopwords or {}).get(doc.language)
    tokens = tokenize(doc.text, doc.language, words)
    return top_k_features(interpret(si, tokens), k_doc, doc.language)
