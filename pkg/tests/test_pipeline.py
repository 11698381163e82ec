import json
import random
from dataclasses import replace

import pytest

from xlcat.errors import DataError, SetupViolation
from xlcat.pipeline import (
    ExperimentConfig,
    Hyperparams,
    ablation,
    run_experiment,
    run_seeds,
)
from xlcat.synth import SyntheticCorpusSpec

from conftest import make_config, make_corpus


@pytest.fixture
def corpus(tmp_path, small_spec):
    return make_corpus(tmp_path, small_spec)


def default_hp():
    return dict(k_doc=4, m=2, p=3, t=12, samples=15)


class TestSetupValidation:
    def test_cltc1_same_language_valid(self, corpus):
        cfg = make_config(corpus, setup="CLTC1", sources=("l0",), targets=("l0",), **default_hp())
        cfg.validate()

    def test_cltc2_same_language_rejected(self, corpus):
        cfg = make_config(corpus, setup="CLTC2", sources=("l0",), targets=("l0",), **default_hp())
        with pytest.raises(SetupViolation):
            cfg.validate()

    def test_unknown_setup_rejected(self, corpus):
        cfg = make_config(corpus, **default_hp())
        with pytest.raises(SetupViolation):
            replace(cfg, setup="CLTC9").validate()

    def test_empty_targets_rejected(self, corpus):
        cfg = make_config(corpus, setup="UCLTC", targets=(), **default_hp())
        with pytest.raises(SetupViolation):
            cfg.validate()

    def test_random_assignments_match_set_algebra(self, corpus):
        # Validators must accept exactly the configurations allowed by the
        # set-level definitions of the four setups.
        rng = random.Random(3)
        langs = ["l0", "l1"]
        for _ in range(200):
            sources = tuple(l for l in langs if rng.random() < 0.6)
            targets = tuple(l for l in langs if rng.random() < 0.6)
            setup = rng.choice(["CLTC1", "CLTC2", "CLTC3", "UCLTC"])
            src, tgt = set(sources), set(targets)
            if setup == "CLTC1":
                legal = len(src) == 1 and len(tgt) == 1 and src == tgt
            elif setup == "CLTC2":
                legal = len(src) == 1 and len(tgt) == 1 and src != tgt
            elif setup == "CLTC3":
                legal = len(src) > 1 and len(tgt) == 1
            else:
                legal = len(src) >= 1 and len(tgt) >= 1
            cfg = make_config(corpus, setup=setup, sources=sources, targets=targets, **default_hp())
            if legal:
                cfg.validate()
            else:
                with pytest.raises(SetupViolation):
                    cfg.validate()


class TestRunExperiment:
    def test_end_to_end_determinism(self, corpus, tmp_path):
        cfg = make_config(corpus, seed=5, **default_hp())
        r1 = run_experiment(cfg, out_dir=tmp_path / "a")
        r2 = run_experiment(cfg, out_dir=tmp_path / "b")
        assert r1 == r2
        assert (tmp_path / "a" / "report.json").read_bytes() == (
            tmp_path / "b" / "report.json"
        ).read_bytes()

    def test_workers_do_not_change_report(self, corpus):
        cfg = make_config(corpus, seed=5, **default_hp())
        assert run_experiment(cfg, workers=1) == run_experiment(cfg, workers=4)

    def test_ucltc_path_subsumes_cltc2(self, corpus):
        hp = default_hp()
        cltc2 = make_config(corpus, setup="CLTC2", **hp)
        ucltc = make_config(corpus, setup="UCLTC", **hp)
        r2, ru = run_experiment(cltc2), run_experiment(ucltc)
        assert r2["results"] == ru["results"]
        assert r2["data"] == ru["data"]

    def test_insufficient_samples_error(self, corpus):
        cfg = make_config(corpus, samples=10 ** 6, k_doc=4, m=2, p=3, t=12)
        with pytest.raises(DataError):
            run_experiment(cfg)

    def test_artifacts_written(self, corpus, tmp_path):
        out = tmp_path / "run"
        cfg = make_config(corpus, **default_hp())
        run_experiment(cfg, out_dir=out)
        for name in (
            "report.json",
            "model.json",
            "feature_space.json",
            "train_vectors.jsonl",
            "virtual_docs.jsonl",
            "interpreter_l0.json",
            "interpreter_l1.json",
        ):
            assert (out / name).exists()
        report = json.loads((out / "report.json").read_text())
        assert report["results"]["accuracy"] <= 1.0
        assert report["data"]["n_train"] == 15 * 3

    def test_multi_seed_aggregate(self, corpus, tmp_path):
        cfg = make_config(corpus, **default_hp())
        agg = run_seeds(cfg, [1, 2, 3], out_dir=tmp_path / "sweep")
        assert len(agg["per_seed_results"]) == 3
        assert 0.0 <= agg["mean_accuracy"] <= 1.0
        assert (tmp_path / "sweep" / "seed_2" / "report.json").exists()

    def test_ucltc_three_sources_450_examples(self, tmp_path, small_spec):
        # 3 source languages x 3 categories x 50 samples = 450 training docs.
        spec = replace(small_spec, n_languages=3, docs_per_category=50)
        corpus = make_corpus(tmp_path, spec, "tri")
        cfg = make_config(
            corpus, setup="UCLTC", sources=("l0", "l1", "l2"),
            targets=("l0", "l1", "l2"), samples=50, k_doc=4, m=2, p=3, t=12,
        )
        report = run_experiment(cfg)
        assert report["data"]["n_train"] == 450
        assert report["data"]["n_test"] == 450


class TestConfigIO:
    def test_round_trip_via_file(self, corpus, tmp_path):
        cfg = make_config(corpus, **default_hp())
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg.to_dict()), encoding="utf-8")
        loaded = ExperimentConfig.from_file(path)
        assert loaded.to_dict() == cfg.to_dict()

    def test_relative_paths_resolved_against_config_dir(self, corpus, tmp_path):
        cfg = make_config(corpus, **default_hp())
        d = cfg.to_dict()
        base = corpus.out_dir
        d["paths"]["corpus"] = "corpus.jsonl"
        path = base / "config.json"
        path.write_text(json.dumps(d), encoding="utf-8")
        loaded = ExperimentConfig.from_file(path)
        assert loaded.corpus_path == str(base / "corpus.jsonl")

    def test_missing_key_is_data_error(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"setup": "CLTC2"}), encoding="utf-8")
        with pytest.raises(DataError):
            ExperimentConfig.from_file(path)

    def test_unknown_hyperparameter_rejected(self):
        with pytest.raises(DataError):
            Hyperparams.from_dict({"bogus": 3})

    def test_lambda_alias(self):
        hp = Hyperparams.from_dict({"lambda": 0.5})
        assert hp.lambda_ == 0.5
        assert hp.to_dict()["lambda"] == 0.5


class TestAblation:
    def test_meta_toggle_same_samples(self, corpus):
        cfg = make_config(corpus, **default_hp())
        result = ablation(cfg, "meta_features")
        assert result["with"]["data"]["train_doc_ids"] == result["without"]["data"]["train_doc_ids"]
        assert result["without"]["config"]["hyperparams"]["m"] == 0
        assert result["delta_accuracy"] == pytest.approx(
            result["with"]["results"]["accuracy"] - result["without"]["results"]["accuracy"]
        )

    def test_virtual_curve_shape(self, tmp_path):
        spec = SyntheticCorpusSpec(
            n_concepts=12, n_meta_levels=1, branching=3, vocab_size_per_language=300,
            n_languages=2, n_categories=3, docs_per_category=15, noise_rate=0.05,
            seed=4, category_layout="interleaved",
        )
        corpus = make_corpus(tmp_path, spec)
        cfg = make_config(corpus, samples=10, k_doc=4, m=1, p=2, t=12)
        result = ablation(cfg, "virtual_docs", prefix_fraction=0.7, n_blocks=2)
        assert result["block_counts"] == [0, 1, 2]
        for arm in ("original", "virtual", "deleted"):
            assert len(result["curves"][arm]) == 3
        first = {arm: result["curves"][arm][0] for arm in result["curves"]}
        assert len(set(first.values())) == 1  # identical runs at block 0

    def test_unknown_toggle_rejected(self, corpus):
        cfg = make_config(corpus, **default_hp())
        with pytest.raises(DataError):
            ablation(cfg, "nonsense")
