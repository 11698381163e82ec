"""Loading, validation, filtering and tokenization of the multilingual
support corpus and the labeled train/test document sets.

File formats are UTF-8 JSON lines; see the README for the exact schemas.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import DataError

# Ordered list of normalized tokens.
TokenStream = list[str]

ARTICLE_FLAGS = frozenset({"disambiguation", "redirect", "catalog"})


class CorpusFormatError(DataError):
    """A corpus or dataset file violates its schema. Carries the line number."""

    def __init__(self, message: str, path: str | Path = "", line: int = 0):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}: " if line else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class SupportArticle:
    """One support document for a (concept, language) pair.

    The same (concept_id, language) pair may carry several articles.
    """

    concept_id: str
    language: str
    title: str = ""
    text: str = ""
    links_in: int = 0
    links_out: int = 0
    flags: frozenset = frozenset()

    def __post_init__(self):
        if not self.concept_id:
            raise DataError("support article has empty concept_id")
        if not self.language:
            raise DataError("support article has empty language")
        if self.links_in < 0 or self.links_out < 0:
            raise DataError("link counts must be nonnegative")
        bad = set(self.flags) - ARTICLE_FLAGS
        if bad:
            raise DataError(f"unknown article flags: {sorted(bad)}")

    def to_dict(self) -> dict:
        return {
            "concept_id": self.concept_id,
            "language": self.language,
            "title": self.title,
            "text": self.text,
            "links_in": self.links_in,
            "links_out": self.links_out,
            "flags": sorted(self.flags),
        }


@dataclass(frozen=True)
class LabeledDocument:
    """A document to classify; label is None for unlabeled inputs."""

    doc_id: str
    language: str
    text: str
    label: Optional[str] = None

    def to_dict(self) -> dict:
        rec = {"doc_id": self.doc_id, "language": self.language, "text": self.text}
        if self.label is not None:
            rec["label"] = self.label
        return rec


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for pruning extraneous support articles."""

    min_chars: int = 500
    min_links_in: int = 5
    min_links_out: int = 5
    drop_flags: frozenset = ARTICLE_FLAGS

    def __post_init__(self):
        if min(self.min_chars, self.min_links_in, self.min_links_out) < 0:
            raise ValueError("filter thresholds must be nonnegative")
        object.__setattr__(self, "drop_flags", frozenset(self.drop_flags))

    @classmethod
    def from_dict(cls, d: dict) -> "FilterConfig":
        return cls(
            min_chars=d.get("min_chars", 500),
            min_links_in=d.get("min_links_in", 5),
            min_links_out=d.get("min_links_out", 5),
            drop_flags=frozenset(d.get("drop_flags", ARTICLE_FLAGS)),
        )

    def to_dict(self) -> dict:
        return {
            "min_chars": self.min_chars,
            "min_links_in": self.min_links_in,
            "min_links_out": self.min_links_out,
            "drop_flags": sorted(self.drop_flags),
        }


def _read_jsonl(path: str | Path):
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise CorpusFormatError(f"cannot open file: {exc}", path) from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"malformed JSON: {exc.msg}", path, lineno) from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError("line is not a JSON object", path, lineno)
            yield lineno, obj


def _require(obj: dict, key: str, path, lineno: int):
    if key not in obj or obj[key] is None:
        raise CorpusFormatError(f"missing required field {key!r}", path, lineno)
    return obj[key]


def _require_str(obj: dict, key: str, path, lineno: int) -> str:
    val = _require(obj, key, path, lineno)
    if not isinstance(val, str):
        raise CorpusFormatError(f"field {key!r} must be a string", path, lineno)
    return val


def _opt_int(obj: dict, key: str, path, lineno: int) -> int:
    val = obj.get(key, 0)
    if isinstance(val, bool) or not isinstance(val, int):
        raise CorpusFormatError(f"field {key!r} must be an integer", path, lineno)
    return val


def load_support_corpus(path: str | Path) -> list[SupportArticle]:
    """Read support articles from a JSON-lines file, in file order.

    Required keys per line: concept_id, language, text. Optional: title,
    links_in, links_out, flags. Unknown keys are ignored.
    """
    articles = []
    for lineno, obj in _read_jsonl(path):
        flags = obj.get("flags", [])
        if not isinstance(flags, list) or not all(isinstance(f, str) for f in flags):
            raise CorpusFormatError("field 'flags' must be an array of strings", path, lineno)
        try:
            articles.append(
                SupportArticle(
                    concept_id=_require_str(obj, "concept_id", path, lineno),
                    language=_require_str(obj, "language", path, lineno),
                    title=obj.get("title", ""),
                    text=_require_str(obj, "text", path, lineno),
                    links_in=_opt_int(obj, "links_in", path, lineno),
                    links_out=_opt_int(obj, "links_out", path, lineno),
                    flags=frozenset(flags),
                )
            )
        except DataError as exc:
            if isinstance(exc, CorpusFormatError):
                raise
            raise CorpusFormatError(str(exc), path, lineno) from exc
    return articles


def save_support_corpus(articles: Iterable[SupportArticle], path: str | Path) -> None:
    from ._util import dump_jsonl

    dump_jsonl((a.to_dict() for a in articles), path)


def load_labeled_dataset(path: str | Path) -> list[LabeledDocument]:
    """Read labeled (or unlabeled) documents; doc_ids must be unique."""
    docs = []
    seen = set()
    for lineno, obj in _read_jsonl(path):
        doc_id = _require_str(obj, "doc_id", path, lineno)
        if doc_id in seen:
            raise CorpusFormatError(f"duplicate doc_id {doc_id!r}", path, lineno)
        seen.add(doc_id)
        label = obj.get("label")
        if label is not None and not isinstance(label, str):
            raise CorpusFormatError("field 'label' must be a string when present", path, lineno)
        docs.append(
            LabeledDocument(
                doc_id=doc_id,
                language=_require_str(obj, "language", path, lineno),
                text=_require_str(obj, "text", path, lineno),
                label=label,
            )
        )
    return docs


def save_labeled_dataset(docs: Iterable[LabeledDocument], path: str | Path) -> None:
    from ._util import dump_jsonl

    dump_jsonl((d.to_dict() for d in docs), path)


def filter_articles(
    articles: Sequence[SupportArticle], cfg: FilterConfig = FilterConfig()
) -> list[SupportArticle]:
    """Keep articles meeting the length/link thresholds and carrying none of
    the dropped flags. Order is preserved; filtering is idempotent."""
    return [
        a
        for a in articles
        if len(a.text) >= cfg.min_chars
        and a.links_in >= cfg.min_links_in
        and a.links_out >= cfg.min_links_out
        and not (a.flags & cfg.drop_flags)
    ]


def _is_word_char(ch: str) -> bool:
    # Letters, marks and numbers form tokens; everything else separates them.
    return unicodedata.category(ch)[0] in "LMN"


def _is_numeric(ch: str) -> bool:
    return unicodedata.category(ch)[0] == "N"


def tokenize(text: str, language: str = "", stopwords: Optional[frozenset] = None) -> TokenStream:
    """Language-neutral tokenization: NFC normalization, Unicode case folding,
    tokens are maximal runs of letter/mark/number characters. Pure-number
    tokens are dropped; no stemming or diacritic folding. `language` is kept
    for callers that attach per-language stopword lists.
    """
    norm = unicodedata.normalize("NFC", unicodedata.normalize("NFC", text).casefold())
    tokens: TokenStream = []
    start = None
    for i, ch in enumerate(norm):
        if _is_word_char(ch):
            if start is None:
                start = i
        elif start is not None:
            tokens.append(norm[start:i])
            start = None
    if start is not None:
        tokens.append(norm[start:])
    tokens = [t for t in tokens if not all(_is_numeric(c) for c in t)]
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    return tokens


def load_stopwords(path: str | Path) -> frozenset:
    """One token per line; normalized the same way tokenize() normalizes."""
    words = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word:
                words.add(unicodedata.normalize("NFC", unicodedata.normalize("NFC", word).casefold()))
    return frozenset(words)
