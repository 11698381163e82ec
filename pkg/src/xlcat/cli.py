"""Command-line interface.

Subcommands cover the pipeline stages individually (build-interpreter,
make-virtual-docs, gen-features, train, classify, evaluate) and end to end
(experiment, ablate), plus the synthetic corpus generator (synth).

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 setup violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from ._util import dump_json, load_json
from .corpus import load_labeled_dataset
from .errors import DataError, SetupViolation
from .features import FeatureSpace, build_feature_space, load_vectors, project_documents, save_vectors, select_features
from .interpreter import SemanticInterpreter
from .learner import LinearModel, predict, report_from_pairs, train
from .pipeline import (
    ExperimentConfig,
    ablation,
    load_resources,
    prepare_semantic_resources,
    run_experiment,
    run_seeds,
)
from .synth import SyntheticCorpusSpec, generate_synthetic_corpus
from .virtualdocs import save_virtual_docs

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SETUP = 3


class _Parser(argparse.ArgumentParser):
    # argparse defaults to exit code 2 on usage errors; the contract is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_experiment_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_interpreters(args, cfg, res=None):
    """Saved interpreters from --interpreters, else rebuilt from the config."""
    if args.interpreters:
        interpreters = {}
        for path in sorted(Path(args.interpreters).glob("interpreter_*.json")):
            si = SemanticInterpreter.load(path)
            interpreters[si.language] = si
        if not interpreters:
            raise DataError(f"no interpreter_*.json files under {args.interpreters}")
        if res is None:
            res = load_resources(cfg)
        return interpreters, res
    if res is None:
        res = load_resources(cfg)
    prep = prepare_semantic_resources(cfg, res)
    return prep.interpreters, res


def _cmd_synth(args) -> int:
    spec = SyntheticCorpusSpec.from_dict(load_json(args.config))
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    corpus = generate_synthetic_corpus(spec, _out_dir(args))
    print(
        f"synthetic corpus: {spec.n_concepts} concepts, "
        f"{spec.n_languages} languages -> {corpus.out_dir}"
    )
    return EXIT_OK


def _cmd_build_interpreter(args) -> int:
    cfg = _load_experiment_config(args)
    cfg.validate()
    out = _out_dir(args)
    prep = prepare_semantic_resources(cfg, load_resources(cfg))
    languages = args.language or sorted(prep.interpreters)
    for lang in languages:
        if lang not in prep.interpreters:
            raise DataError(f"language {lang!r} is not part of this experiment")
        path = out / f"interpreter_{lang}.json"
        prep.interpreters[lang].save(path)
        print(f"wrote {path} ({len(prep.retained)} concepts)")
    return EXIT_OK


def _cmd_make_virtual_docs(args) -> int:
    cfg = _load_experiment_config(args)
    cfg.validate()
    if not cfg.virtual_docs:
        cfg = replace(cfg, virtual_docs=True)
    out = _out_dir(args)
    prep = prepare_semantic_resources(cfg, load_resources(cfg))
    path = out / "virtual_docs.jsonl"
    save_virtual_docs(prep.virtual_tables, path)
    print(f"wrote {path} ({len(prep.virtual_tables)} virtual documents)")
    return EXIT_OK


def _cmd_gen_features(args) -> int:
    cfg = _load_experiment_config(args)
    cfg.validate()
    out = _out_dir(args)
    interpreters, res = _load_interpreters(args, cfg)
    from .ontology import merge_hierarchies

    prep_h = merge_hierarchies(res.edges_by_language, res.basic, res.meta)
    docs = []
    for path in args.dataset:
        docs.extend(load_labeled_dataset(path))
    if not docs:
        raise DataError("no documents in the given dataset(s)")
    hp = cfg.hyperparams
    if args.space:
        space = FeatureSpace.load(args.space)
        vectors = project_documents(
            space, docs, interpreters, prep_h, hp.k_doc, hp.m, res.stopwords, args.workers
        )
    else:
        space, vectors = build_feature_space(
            docs, interpreters, prep_h, hp.k_doc, hp.m, res.stopwords, args.workers
        )
        labels = [d.label for d in docs]
        if all(labels):
            space, vectors = select_features(space, vectors, labels, hp.n_select)
        space.save(out / "feature_space.json")
    save_vectors(vectors, docs, out / "vectors.jsonl")
    print(f"wrote {out / 'vectors.jsonl'} ({len(docs)} documents, {len(space)} features)")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = _load_experiment_config(args)
    out = _out_dir(args)
    space = FeatureSpace.load(args.space)
    vectors, labels, _ = load_vectors(args.vectors)
    if any(lab is None for lab in labels):
        raise DataError("training vectors must all carry labels")
    hp = cfg.hyperparams
    model = train(
        vectors,
        labels,
        sorted(set(labels)),
        len(space),
        lambda_=hp.lambda_,
        epochs=hp.epochs,
        seed=cfg.seed,
        feature_space_ref={"n_features": len(space)},
    )
    model.save(out / "model.json")
    print(f"wrote {out / 'model.json'} ({len(model.categories)} categories)")
    return EXIT_OK


def _cmd_classify(args) -> int:
    cfg = _load_experiment_config(args)
    out = _out_dir(args)
    model = LinearModel.load(args.model)
    space = FeatureSpace.load(args.space)
    interpreters, res = _load_interpreters(args, cfg)
    from .ontology import merge_hierarchies

    h = merge_hierarchies(res.edges_by_language, res.basic, res.meta)
    docs = load_labeled_dataset(args.dataset)
    hp = cfg.hyperparams
    vectors = project_documents(
        space, docs, interpreters, h, hp.k_doc, hp.m, res.stopwords, args.workers
    )
    records = []
    for doc, vec in zip(docs, vectors):
        rec = {"doc_id": doc.doc_id, "predicted": predict(model, vec)}
        if doc.label is not None:
            rec["label"] = doc.label
        records.append(rec)
    path = out / "predictions.jsonl"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    print(f"wrote {path} ({len(records)} predictions)")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    out = _out_dir(args)
    from .corpus import _read_jsonl

    predictions = {}
    for lineno, obj in _read_jsonl(args.predictions):
        if "doc_id" not in obj or "predicted" not in obj:
            raise DataError(f"{args.predictions}:{lineno}: need doc_id and predicted")
        predictions[obj["doc_id"]] = obj["predicted"]
    docs = load_labeled_dataset(args.dataset)
    y_true, y_pred = [], []
    for doc in docs:
        if doc.label is None:
            continue
        if doc.doc_id not in predictions:
            raise DataError(f"no prediction for document {doc.doc_id!r}")
        y_true.append(doc.label)
        y_pred.append(predictions[doc.doc_id])
    if not y_true:
        raise DataError("no labeled documents to score")
    report = report_from_pairs(y_true, y_pred, sorted(set(y_true) | set(y_pred)))
    dump_json(report.to_dict(), out / "eval.json")
    print(f"accuracy {report.accuracy:.4f}  macro-F1 {report.macro_f1:.4f}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    cfg = _load_experiment_config(args)
    out = _out_dir(args)
    if cfg.seeds:
        report = run_seeds(cfg, list(cfg.seeds), out_dir=out, workers=args.workers)
        print(
            f"mean accuracy {report['mean_accuracy']:.4f} "
            f"(std {report['std_accuracy']:.4f}) over {len(cfg.seeds)} seeds"
        )
    else:
        report = run_experiment(cfg, out_dir=out, workers=args.workers)
        print(
            f"accuracy {report['results']['accuracy']:.4f}  "
            f"macro-F1 {report['results']['macro_f1']:.4f}"
        )
    print(f"report written to {out / 'report.json'}")
    return EXIT_OK


def _cmd_ablate(args) -> int:
    cfg = _load_experiment_config(args)
    out = _out_dir(args)
    result = ablation(
        cfg,
        args.toggle,
        out_dir=out,
        workers=args.workers,
        prefix_fraction=args.prefix_fraction,
        n_blocks=args.blocks,
    )
    if args.toggle == "meta_features":
        print(f"delta accuracy (with - without): {result['delta_accuracy']:+.4f}")
    else:
        final = {arm: curve[-1] for arm, curve in result["curves"].items()}
        print(
            "final accuracies: "
            + "  ".join(f"{arm}={acc:.4f}" for arm, acc in sorted(final.items()))
        )
    print(f"ablation written to {out / 'ablation.json'}")
    return EXIT_OK


def _add_common(sub, config_required=True):
    sub.add_argument("--config", required=config_required, help="experiment config JSON")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--workers", type=int, default=1, help="worker count (results are identical for any value)")
    sub.add_argument("--out-dir", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xlcat", description=__doc__.strip().splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("synth", help="generate a synthetic multilingual corpus")
    sub.add_argument("--config", required=True, help="synthetic corpus spec JSON")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--out-dir", required=True)
    sub.set_defaults(func=_cmd_synth)

    sub = commands.add_parser("build-interpreter", help="build and save per-language interpreters")
    _add_common(sub)
    sub.add_argument("--language", action="append", help="restrict to a language (repeatable)")
    sub.set_defaults(func=_cmd_build_interpreter)

    sub = commands.add_parser("make-virtual-docs", help="construct virtual support documents")
    _add_common(sub)
    sub.set_defaults(func=_cmd_make_virtual_docs)

    sub = commands.add_parser("gen-features", help="generate concept feature vectors for datasets")
    _add_common(sub)
    sub.add_argument("--dataset", action="append", required=True, help="labeled dataset JSONL (repeatable)")
    sub.add_argument("--interpreters", help="directory with saved interpreter_*.json files")
    sub.add_argument("--space", help="existing feature-space file; project instead of build")
    sub.set_defaults(func=_cmd_gen_features)

    sub = commands.add_parser("train", help="train a classifier from saved vectors")
    _add_common(sub)
    sub.add_argument("--space", required=True, help="feature-space file")
    sub.add_argument("--vectors", required=True, help="labeled vectors JSONL")
    sub.set_defaults(func=_cmd_train)

    sub = commands.add_parser("classify", help="classify a dataset with a saved model")
    _add_common(sub)
    sub.add_argument("--model", required=True)
    sub.add_argument("--space", required=True)
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--interpreters", help="directory with saved interpreter_*.json files")
    sub.set_defaults(func=_cmd_classify)

    sub = commands.add_parser("evaluate", help="score predictions against labels")
    sub.add_argument("--predictions", required=True, help="predictions JSONL from classify")
    sub.add_argument("--dataset", required=True, help="labeled dataset JSONL")
    sub.add_argument("--out-dir", required=True)
    sub.set_defaults(func=_cmd_evaluate)

    sub = commands.add_parser("experiment", help="run a configured experiment end to end")
    _add_common(sub)
    sub.set_defaults(func=_cmd_experiment)

    sub = commands.add_parser("ablate", help="paired runs toggling one component")
    _add_common(sub)
    sub.add_argument("--toggle", required=True, choices=["meta_features", "virtual_docs"])
    sub.add_argument("--prefix-fraction", type=float, default=0.7)
    sub.add_argument("--blocks", type=int, default=3)
    sub.set_defaults(func=_cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SetupViolation as exc:
        print(f"setup violation: {exc}", file=sys.stderr)
        return EXIT_SETUP
    except (DataError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
