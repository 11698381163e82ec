"""End-to-end experiment orchestration for the four cross-lingual setups:
resource loading, virtual-document construction, interpreter building,
stratified sampling, feature-space assembly, training and evaluation.
All randomness flows from the config seed through named RNG streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import mean, stdev
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from ._util import dump_json, load_json, stable_rng
from .corpus import (
    FilterConfig,
    LabeledDocument,
    SupportArticle,
    filter_articles,
    load_labeled_dataset,
    load_stopwords,
    load_support_corpus,
)
from .errors import DataError, SetupViolation
from .features import build_feature_space, project_documents, save_vectors, select_features
from .interpreter import SemanticInterpreter, build_interpreter
from .learner import evaluate, train
from .ontology import (
    Hierarchy,
    SupportIndex,
    load_concepts,
    load_hierarchy_edges,
    merge_hierarchies,
    retained_concepts,
)
from .virtualdocs import InsufficientAncestryError, construct_virtual_document, save_virtual_docs

REPORT_MAGIC = "xlcat-report"
AGGREGATE_MAGIC = "xlcat-report-aggregate"
ABLATION_MAGIC = "xlcat-ablation"
REPORT_VERSION = 1

SETUPS = ("CLTC1", "CLTC2", "CLTC3", "UCLTC")


@dataclass(frozen=True)
class Hyperparams:
    k_term: int = 5000
    k_doc: int = 100
    m: int = 3
    p: int = 10
    t: int = 200
    n_select: int = 20000
    lambda_: float = 1e-4
    epochs: int = 20

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        d = dict(d)
        if "lambda" in d:
            d["lambda_"] = d.pop("lambda")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise DataError(f"unknown hyperparameters: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = {name: getattr(self, name) for name in self.__dataclass_fields__}
        d["lambda"] = d.pop("lambda_")
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    setup: str
    source_languages: Tuple[str, ...]
    target_languages: Tuple[str, ...]
    samples_per_category_per_language: int
    seed: int
    corpus_path: str
    concepts_path: str
    hierarchy_path: str
    datasets: Mapping[str, Mapping[str, str]]  # lang -> {"train": path, "test": path}
    hyperparams: Hyperparams = Hyperparams()
    virtual_docs: bool = True
    filter: FilterConfig = FilterConfig()
    stopword_paths: Mapping[str, str] = field(default_factory=dict)
    seeds: Tuple[int, ...] = ()  # optional multi-seed sweep

    def needed_languages(self) -> List[str]:
        return sorted(set(self.source_languages) | set(self.target_languages))

    def validate(self) -> None:
        if self.setup not in SETUPS:
            raise SetupViolation(f"unknown setup {self.setup!r}; expected one of {SETUPS}")
        src = set(self.source_languages)
        tgt = set(self.target_languages)
        if not src or not tgt:
            raise SetupViolation("source and target language sets must be nonempty")
        if self.setup == "CLTC1" and not (len(src) == 1 and len(tgt) == 1 and src == tgt):
            raise SetupViolation("CLTC1 requires a single shared training/testing language")
        if self.setup == "CLTC2" and not (len(src) == 1 and len(tgt) == 1 and src != tgt):
            raise SetupViolation("CLTC2 requires single, distinct training and testing languages")
        if self.setup == "CLTC3" and not (len(src) > 1 and len(tgt) == 1):
            raise SetupViolation("CLTC3 requires multiple training languages and one testing language")
        if self.samples_per_category_per_language < 1:
            raise SetupViolation("samples_per_category_per_language must be positive")
        for lang in self.source_languages:
            if lang not in self.datasets or "train" not in self.datasets[lang]:
                raise SetupViolation(f"no training dataset configured for language {lang!r}")
        for lang in self.target_languages:
            if lang not in self.datasets or "test" not in self.datasets[lang]:
                raise SetupViolation(f"no test dataset configured for language {lang!r}")

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path = ".") -> "ExperimentConfig":
        base = Path(base_dir)

        def resolve(p: str) -> str:
            return str(p) if Path(p).is_absolute() else str(base / p)

        try:
            paths = d["paths"]
            datasets = {
                lang: {split: resolve(p) for split, p in per.items()}
                for lang, per in paths["datasets"].items()
            }
            cfg = cls(
                setup=d["setup"],
                source_languages=tuple(d["source_languages"]),
                target_languages=tuple(d["target_languages"]),
                samples_per_category_per_language=d["samples_per_category_per_language"],
                seed=d.get("seed", 0),
                corpus_path=resolve(paths["corpus"]),
                concepts_path=resolve(paths["concepts"]),
                hierarchy_path=resolve(paths["hierarchy"]),
                datasets=datasets,
                hyperparams=Hyperparams.from_dict(d.get("hyperparams", {})),
                virtual_docs=d.get("virtual_docs", True),
                filter=FilterConfig.from_dict(d.get("filter", {})),
                stopword_paths={
                    lang: resolve(p) for lang, p in d.get("stopwords", {}).items()
                },
                seeds=tuple(d.get("seeds", ())),
            )
        except KeyError as exc:
            raise DataError(f"experiment config is missing key {exc}") from exc
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(load_json(path), base_dir=path.parent)

    def to_dict(self) -> dict:
        return {
            "setup": self.setup,
            "source_languages": sorted(self.source_languages),
            "target_languages": sorted(self.target_languages),
            "samples_per_category_per_language": self.samples_per_category_per_language,
            "seed": self.seed,
            "paths": {
                "corpus": self.corpus_path,
                "concepts": self.concepts_path,
                "hierarchy": self.hierarchy_path,
                "datasets": {
                    lang: dict(per) for lang, per in sorted(self.datasets.items())
                },
            },
            "hyperparams": self.hyperparams.to_dict(),
            "virtual_docs": self.virtual_docs,
            "filter": self.filter.to_dict(),
            "stopwords": dict(sorted(self.stopword_paths.items())),
            "seeds": list(self.seeds),
        }


@dataclass
class Resources:
    """Loaded-and-filtered inputs, reusable across arms of an ablation."""

    articles: List[SupportArticle]
    basic: Set[str]
    meta: Set[str]
    edges_by_language: Dict[str, Set[Tuple[str, str]]]
    stopwords: Dict[str, frozenset]


def load_resources(cfg: ExperimentConfig) -> Resources:
    articles = filter_articles(load_support_corpus(cfg.corpus_path), cfg.filter)
    basic, meta = load_concepts(cfg.concepts_path)
    edges = load_hierarchy_edges(cfg.hierarchy_path)
    stopwords = {lang: load_stopwords(p) for lang, p in sorted(cfg.stopword_paths.items())}
    return Resources(articles, basic, meta, edges, stopwords)


def _sample_training_docs(
    cfg: ExperimentConfig,
) -> Tuple[List[LabeledDocument], List[str]]:
    """Stratified sampling without replacement: per source language, per
    category, cfg.samples_per_category_per_language documents."""
    per_lang_docs: Dict[str, List[LabeledDocument]] = {}
    categories: Set[str] = set()
    for lang in sorted(set(cfg.source_languages)):
        docs = [d for d in load_labeled_dataset(cfg.datasets[lang]["train"]) if d.label]
        if not docs:
            raise DataError(f"training dataset for {lang!r} has no labeled documents")
        per_lang_docs[lang] = docs
        categories |= {d.label for d in docs}
    wanted = cfg.samples_per_category_per_language
    sampled: List[LabeledDocument] = []
    for lang in sorted(per_lang_docs):
        by_cat: Dict[str, List[LabeledDocument]] = {}
        for doc in per_lang_docs[lang]:
            by_cat.setdefault(doc.label, []).append(doc)
        for cat in sorted(categories):
            candidates = by_cat.get(cat, [])
            if len(candidates) < wanted:
                raise DataError(
                    f"language {lang!r} has {len(candidates)} training document(s) "
                    f"for category {cat!r}; {wanted} required"
                )
            rng = stable_rng(cfg.seed, "sample", lang, cat)
            sampled.extend(rng.sample(candidates, wanted))
    return sampled, sorted(categories)


def _construct_virtual_docs(cfg, h, idx, stopwords) -> list:
    """Give every basic concept that has support somewhere a virtual document
    in each needed language it lacks; concepts whose ancestry cannot supply
    enough documents are skipped and simply stay unretained."""
    needed = cfg.needed_languages()
    tables = []
    for cid in sorted(idx.basic_concepts):
        covered = idx.languages_with_support(cid)
        if not covered & set(needed):
            continue
        for lang in needed:
            if idx.has_support(cid, lang):
                continue
            try:
                table = construct_virtual_document(
                    h, idx, cid, lang, cfg.hyperparams.p, cfg.hyperparams.t,
                    stopwords.get(lang),
                )
            except InsufficientAncestryError:
                continue
            idx.add_virtual(table)
            tables.append(table)
    return tables


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: Optional[str | Path] = None,
    workers: int = 1,
) -> dict:
    """Execute one experiment end to end and return its report dict; when
    out_dir is given, intermediate artifacts and the report are written there.
    """
    cfg.validate()
    return _run(cfg, load_resources(cfg), out_dir=out_dir, workers=workers)


@dataclass
class Prepared:
    """Semantic resources shared by the preprocessing-stage CLI commands and
    the experiment runner."""

    hierarchy: Hierarchy
    index: SupportIndex
    virtual_tables: List
    retained: Set[str]
    interpreters: Dict[str, SemanticInterpreter]


def prepare_semantic_resources(
    cfg: ExperimentConfig,
    res: Resources,
    allowed_concepts: Optional[Set[str]] = None,
    dropped_articles: Optional[Set[Tuple[str, str]]] = None,
) -> Prepared:
    """Hierarchy merge, virtual-document construction, concept retention and
    per-language interpreter building. `allowed_concepts` restricts the basic
    concept universe; `dropped_articles` removes all real support for given
    (concept, language) pairs. Both exist for the virtual-document ablation
    protocol."""
    basic = set(res.basic)
    edges_by_language = res.edges_by_language
    if allowed_concepts is not None:
        basic &= allowed_concepts
        kept = basic | set(res.meta)
        edges_by_language = {
            lang: {(p, c) for (p, c) in edges if c in kept}
            for lang, edges in edges_by_language.items()
        }
    needed = cfg.needed_languages()
    articles = [
        a
        for a in res.articles
        if a.concept_id in basic
        and a.language in needed
        and not (dropped_articles and (a.concept_id, a.language) in dropped_articles)
    ]
    h = merge_hierarchies(edges_by_language, basic, res.meta)
    idx = SupportIndex(basic, articles)

    tables = []
    if cfg.virtual_docs:
        tables = _construct_virtual_docs(cfg, h, idx, res.stopwords)

    retained = retained_concepts(idx, needed)
    if not retained:
        raise DataError("no concepts are supported in every required language")
    hp = cfg.hyperparams
    interpreters = {
        lang: build_interpreter(idx, lang, retained, hp.k_term, res.stopwords.get(lang))
        for lang in needed
    }
    return Prepared(h, idx, tables, retained, interpreters)


def _run(
    cfg: ExperimentConfig,
    res: Resources,
    out_dir: Optional[str | Path] = None,
    workers: int = 1,
    allowed_concepts: Optional[Set[str]] = None,
    dropped_articles: Optional[Set[Tuple[str, str]]] = None,
) -> dict:
    prep = prepare_semantic_resources(cfg, res, allowed_concepts, dropped_articles)
    h, interpreters, tables = prep.hierarchy, prep.interpreters, prep.virtual_tables
    retained = prep.retained
    hp = cfg.hyperparams

    training, categories = _sample_training_docs(cfg)
    train_labels = [d.label for d in training]
    space, train_vecs = build_feature_space(
        training, interpreters, h, hp.k_doc, hp.m, res.stopwords, workers
    )
    space, train_vecs = select_features(space, train_vecs, train_labels, hp.n_select)
    initial_size = space.metadata.get("selected_from", len(space))

    model = train(
        train_vecs,
        train_labels,
        categories,
        len(space),
        lambda_=hp.lambda_,
        epochs=hp.epochs,
        seed=cfg.seed,
        feature_space_ref={"n_features": len(space)},
    )

    test_docs: List[LabeledDocument] = []
    for lang in sorted(set(cfg.target_languages)):
        test_docs.extend(load_labeled_dataset(cfg.datasets[lang]["test"]))
    unlabeled = [d.doc_id for d in test_docs if d.label is None]
    if unlabeled:
        raise DataError(f"test documents lack labels, e.g. {unlabeled[0]!r}")
    test_vecs = project_documents(
        space, test_docs, interpreters, h, hp.k_doc, hp.m, res.stopwords, workers
    )
    report = evaluate(model, test_vecs, [d.label for d in test_docs])

    result = {
        "format": REPORT_MAGIC,
        "version": REPORT_VERSION,
        "config": cfg.to_dict(),
        "data": {
            "n_train": len(training),
            "n_test": len(test_docs),
            "categories": categories,
            "n_retained_concepts": len(retained),
            "n_virtual_docs": len(tables),
            "feature_space_size_initial": initial_size,
            "feature_space_size_selected": len(space),
            "train_doc_ids": [d.doc_id for d in training],
        },
        "results": report.to_dict(),
    }

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for lang, si in sorted(interpreters.items()):
            si.save(out / f"interpreter_{lang}.json")
        save_virtual_docs(tables, out / "virtual_docs.jsonl")
        space.save(out / "feature_space.json")
        save_vectors(train_vecs, training, out / "train_vectors.jsonl")
        model.save(out / "model.json")
        dump_json(result, out / "report.json")
    return result


def run_seeds(
    cfg: ExperimentConfig,
    seeds: Sequence[int],
    out_dir: Optional[str | Path] = None,
    workers: int = 1,
) -> dict:
    """Run the experiment once per seed and aggregate mean/stdev metrics."""
    if not seeds:
        raise DataError("seed list must be nonempty")
    cfg.validate()
    res = load_resources(cfg)
    per_seed = {}
    for s in seeds:
        run_dir = Path(out_dir) / f"seed_{s}" if out_dir is not None else None
        per_seed[s] = _run(replace(cfg, seed=s), res, out_dir=run_dir, workers=workers)
    accuracies = [per_seed[s]["results"]["accuracy"] for s in seeds]
    macro_f1s = [per_seed[s]["results"]["macro_f1"] for s in seeds]
    aggregate = {
        "format": AGGREGATE_MAGIC,
        "version": REPORT_VERSION,
        "config": cfg.to_dict(),
        "seeds": list(seeds),
        "per_seed_results": {str(s): per_seed[s]["results"] for s in seeds},
        "mean_accuracy": mean(accuracies),
        "std_accuracy": stdev(accuracies) if len(accuracies) > 1 else 0.0,
        "mean_macro_f1": mean(macro_f1s),
        "std_macro_f1": stdev(macro_f1s) if len(macro_f1s) > 1 else 0.0,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(aggregate, out / "report.json")
    return aggregate


def ablation(
    cfg: ExperimentConfig,
    toggle: str,
    out_dir: Optional[str | Path] = None,
    workers: int = 1,
    prefix_fraction: float = 0.7,
    n_blocks: int = 3,
) -> dict:
    """Paired runs differing only in one component.

    meta_features: identical experiment with and without hierarchical
    enrichment (m forced to 0 in the off arm).

    virtual_docs: concepts are ranked by source-language support length; the
    top prefix keeps real support everywhere, and successive blocks of the
    remainder are added with their target-language support either kept
    (original arm), replaced by constructed virtual documents (virtual arm),
    or removed with construction disabled (deleted arm).
    """
    cfg.validate()
    if toggle == "meta_features":
        res = load_resources(cfg)
        with_meta = _run(cfg, res, workers=workers)
        without_meta = _run(
            replace(cfg, hyperparams=replace(cfg.hyperparams, m=0)), res, workers=workers
        )
        result = {
            "format": ABLATION_MAGIC,
            "version": REPORT_VERSION,
            "toggle": toggle,
            "with": with_meta,
            "without": without_meta,
            "delta_accuracy": with_meta["results"]["accuracy"]
            - without_meta["results"]["accuracy"],
        }
    elif toggle == "virtual_docs":
        result = _virtual_docs_curve(cfg, workers, prefix_fraction, n_blocks)
    else:
        raise DataError(f"unknown ablation toggle {toggle!r}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(result, out / "ablation.json")
    return result


def _virtual_docs_curve(
    cfg: ExperimentConfig, workers: int, prefix_fraction: float, n_blocks: int
) -> dict:
    if not 0.0 < prefix_fraction < 1.0:
        raise DataError("prefix_fraction must lie in (0, 1)")
    if n_blocks < 1:
        raise DataError("n_blocks must be positive")
    res = load_resources(cfg)
    reference_lang = sorted(cfg.source_languages)[0]
    lengths: Dict[str, int] = {c: 0 for c in res.basic}
    for a in res.articles:
        if a.language == reference_lang and a.concept_id in lengths:
            lengths[a.concept_id] += len(a.text)
    ranked = sorted(res.basic, key=lambda c: (-lengths[c], c))
    n_prefix = max(1, round(prefix_fraction * len(ranked)))
    tail = ranked[n_prefix:]
    if not tail:
        raise DataError("prefix covers every concept; nothing to ablate")
    blocks: List[List[str]] = []
    base, extra = divmod(len(tail), n_blocks)
    start = 0
    for b in range(n_blocks):
        size = base + (1 if b < extra else 0)
        blocks.append(tail[start : start + size])
        start += size
    blocks = [b for b in blocks if b]

    targets = sorted(set(cfg.target_languages))
    curve = {"original": [], "virtual": [], "deleted": []}
    block_counts = list(range(len(blocks) + 1))
    sizes = []
    for j in block_counts:
        added = [c for block in blocks[:j] for c in block]
        allowed = set(ranked[:n_prefix]) | set(added)
        sizes.append(len(allowed))
        dropped = {(c, lang) for c in added for lang in targets}
        arms = {
            "original": (replace(cfg, virtual_docs=False), None),
            "virtual": (replace(cfg, virtual_docs=True), dropped),
            "deleted": (replace(cfg, virtual_docs=False), dropped),
        }
        for arm, (arm_cfg, arm_dropped) in arms.items():
            report = _run(
                arm_cfg,
                res,
                workers=workers,
                allowed_concepts=allowed,
                dropped_articles=arm_dropped,
            )
            curve[arm].append(report["results"]["accuracy"])
    return {
        "format": ABLATION_MAGIC,
        "version": REPORT_VERSION,
        "toggle": "virtual_docs",
        "config": cfg.to_dict(),
        "reference_language": reference_lang,
        "prefix_fraction": prefix_fraction,
        "n_prefix": n_prefix,
        "block_counts": block_counts,
        "n_concepts": sizes,
        "curves": curve,
    }
