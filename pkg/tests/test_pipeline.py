"""End-to-end wiring: config parsing, training artifacts, inference from
checkpoints, the ablation report, and the command-line entry points.

Training runs here use deliberately tiny models and corpora; quality
claims live in the acceptance suite.
"""

import json
import math

import numpy as np
import pytest

import synthcap.pipeline as pipeline
from synthcap.cli import main
from synthcap.corpus import (
    ToyGrammar,
    build_vocab,
    generate_toy_corpus,
    write_corpus,
)
from synthcap.decoder import (
    DecoderConfig,
    DecoderModel,
    PrefixInput,
    generate,
    load_checkpoint,
    save_checkpoint,
)
from synthcap.embeddings import read_embeddings, write_embeddings
from synthcap.errors import ValidationError
from synthcap.pipeline import (
    PipelineConfig,
    Toggles,
    ToySettings,
    caption_one,
    load_training_data,
    mean_paired_cosine,
    prefix_image_features,
    run_inference,
    run_training,
)
from synthcap.support import build_support_set, project_matrix
from synthcap.toyenc import ToyEncoderSpec, encode_images, encode_texts


def toy_raw(**sections):
    raw = {
        "seed": 0,
        "toy": {"enabled": True, "dim": 16, "train_items": 40, "eval_items": 8},
        "decoder": {
            "layers": 1,
            "heads": 2,
            "model_dim": 32,
            "max_len": 14,
            "dropout": 0.0,
            "epochs": 2,
            "batch_size": 16,
        },
        "refine": {"epochs": 2, "batch_size": 32},
    }
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key].update(value)
        else:
            raw[key] = value
    return raw


def toy_config(**sections):
    return PipelineConfig.from_dict(toy_raw(**sections))


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    """One training pass with every stage on, shared across tests."""
    base = tmp_path_factory.mktemp("full_run")
    cfg = toy_config(
        toggles={"fo": True, "fp": True, "af": True},
        paths={
            "checkpoint": str(base / "full.ckpt"),
            "loss_report": str(base / "losses.jsonl"),
        },
    )
    return cfg, run_training(cfg)


# ---------------------------------------------------------------------------
# toggles and config parsing


def test_toggle_names_and_grid_order():
    assert Toggles().name == "baseline"
    assert Toggles(fo=True).name == "fo"
    assert Toggles(fo=True, fp=True).name == "fo_fp"
    assert Toggles(fo=True, fp=True, af=True).name == "full"
    names = [t.name for t in Toggles.grid()]
    assert names == [
        "baseline", "fo", "fp", "af", "fo_af", "fo_fp", "fp_af", "full",
    ]


def test_config_defaults():
    cfg = PipelineConfig.from_dict({})
    assert cfg.seed == 0
    assert cfg.projection_temperature == 0.08
    assert not cfg.toy.enabled
    assert cfg.toy.eval_noise_scale == 0.25
    assert cfg.toggles == Toggles()


def test_config_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict({"bogus": 1})
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict({"toggles": {"zz": True}})
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict({"paths": {"weird": "x"}})
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict({"toy": {"nope": 1}})


def test_config_rejects_bad_values():
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict({"projection_temperature": 0})
    with pytest.raises(ValidationError):
        ToySettings(eval_noise_scale=-0.1)
    cfg = PipelineConfig.from_dict({"refine": {"typo": 1}})
    with pytest.raises(ValidationError):
        cfg.refine_config()
    cfg = PipelineConfig.from_dict({"decoder": {"typo": 1}})
    with pytest.raises(ValidationError):
        cfg.decoder_config(vocab_size=10, feature_dim=8, use_aux=False)


def test_config_sub_seeds_derive_from_main_seed():
    cfg = PipelineConfig.from_dict({"seed": 7})
    assert cfg.refine_config().seed == 8
    assert cfg.decoder_config(10, 8, False).seed == 9
    cfg = PipelineConfig.from_dict(
        {"seed": 7, "refine": {"seed": 100}, "decoder": {"seed": 200}}
    )
    assert cfg.refine_config().seed == 100
    assert cfg.decoder_config(10, 8, False).seed == 200


def test_config_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(toy_raw()), encoding="utf-8")
    cfg = PipelineConfig.from_file(str(path))
    assert cfg.toy.train_items == 40

    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValidationError):
        PipelineConfig.from_file(str(bad))
    rooted = tmp_path / "rooted.json"
    rooted.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ValidationError):
        PipelineConfig.from_file(str(rooted))
    with pytest.raises(ValidationError):
        PipelineConfig.from_file(str(tmp_path / "missing.json"))


# ---------------------------------------------------------------------------
# data loading


def test_toy_training_data_alignment():
    cfg = toy_config()
    data = load_training_data(cfg)
    assert len(data.records) == 40
    assert data.text_features.shape == (40, 16)
    assert data.image_features.shape == (40, 16)
    assert data.tag_words == list(ToyGrammar(seed=0).objects)
    assert data.tag_features.shape == (len(data.tag_words), 16)
    assert data.encoder_spec.noise_scale == pytest.approx(0.1)


def test_eval_data_uses_held_out_noise_scale():
    cfg = toy_config()
    records, feats = pipeline._load_eval_data(cfg, train_count=40)
    assert len(records) == 8
    assert feats.shape == (8, 16)

    grammar = cfg.toy.grammar(cfg.seed)
    expected_records = generate_toy_corpus(grammar, 48)[40:]
    assert [r.text for r in records] == [r.text for r in expected_records]

    tokens = [r.tokens for r in records]
    eval_spec = cfg.toy.eval_encoder_spec(cfg.seed)
    assert eval_spec.noise_scale == pytest.approx(0.25)
    np.testing.assert_array_equal(
        feats, encode_images(tokens, eval_spec, index_offset=40)
    )
    train_spec = cfg.toy.encoder_spec(cfg.seed)
    assert not np.array_equal(
        feats, encode_images(tokens, train_spec, index_offset=40)
    )


def test_file_mode_training_data(tmp_path):
    records = generate_toy_corpus(ToyGrammar(seed=3), 5)
    corpus = tmp_path / "train.jsonl"
    write_corpus(records, str(corpus))
    spec = ToyEncoderSpec(dim=8, seed=3)
    tokens = [r.tokens for r in records]
    text_path = tmp_path / "text.syne"
    image_path = tmp_path / "image.syne"
    write_embeddings(encode_texts(tokens, spec), str(text_path))
    write_embeddings(encode_images(tokens, spec), str(image_path))

    cfg = PipelineConfig.from_dict(
        {
            "paths": {
                "corpus": str(corpus),
                "text_embeddings": str(text_path),
                "image_embeddings": str(image_path),
            }
        }
    )
    data = load_training_data(cfg)
    assert len(data.records) == 5
    assert data.text_features.shape == (5, 8)
    assert data.tag_encoder is None

    # row-count drift between corpus and features must be a hard error
    extra = generate_toy_corpus(ToyGrammar(seed=3), 6)
    write_embeddings(
        encode_texts([r.tokens for r in extra], spec), str(text_path)
    )
    with pytest.raises(ValidationError):
        load_training_data(cfg)


def test_file_mode_requires_paths(tmp_path):
    with pytest.raises(ValidationError, match="corpus"):
        load_training_data(PipelineConfig.from_dict({}))
    records = generate_toy_corpus(ToyGrammar(seed=1), 3)
    corpus = tmp_path / "c.jsonl"
    write_corpus(records, str(corpus))
    cfg = PipelineConfig.from_dict({"paths": {"corpus": str(corpus)}})
    with pytest.raises(ValidationError, match="embeddings"):
        load_training_data(cfg)


def test_file_mode_tag_bank_validation(tmp_path):
    records = generate_toy_corpus(ToyGrammar(seed=1), 3)
    corpus = tmp_path / "c.jsonl"
    write_corpus(records, str(corpus))
    spec = ToyEncoderSpec(dim=8, seed=1)
    tokens = [r.tokens for r in records]
    text_path = tmp_path / "t.syne"
    image_path = tmp_path / "i.syne"
    write_embeddings(encode_texts(tokens, spec), str(text_path))
    write_embeddings(encode_images(tokens, spec), str(image_path))
    paths = {
        "corpus": str(corpus),
        "text_embeddings": str(text_path),
        "image_embeddings": str(image_path),
    }

    cfg = PipelineConfig.from_dict(
        {"toggles": {"af": True}, "paths": dict(paths)}
    )
    with pytest.raises(ValidationError, match="tag_list"):
        load_training_data(cfg)

    tag_list = tmp_path / "tags.json"
    tag_feats = tmp_path / "tags.syne"
    tag_list.write_text(json.dumps(["cat", "dog"]), encoding="utf-8")
    write_embeddings(np.eye(3, 8, dtype=np.float64), str(tag_feats))
    paths["tag_list"] = str(tag_list)
    paths["tag_embeddings"] = str(tag_feats)
    cfg = PipelineConfig.from_dict(
        {"toggles": {"af": True}, "paths": dict(paths)}
    )
    with pytest.raises(ValidationError, match="rows"):
        load_training_data(cfg)

    write_embeddings(np.eye(2, 8, dtype=np.float64), str(tag_feats))
    data = load_training_data(cfg)
    assert data.tag_words == ["cat", "dog"]

    tag_list.write_text(json.dumps(["cat", 3]), encoding="utf-8")
    with pytest.raises(ValidationError, match="array of strings"):
        load_training_data(cfg)


# ---------------------------------------------------------------------------
# the feature-to-prefix mapping


def test_mean_paired_cosine():
    a = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert mean_paired_cosine(a, a) == pytest.approx(1.0)
    b = np.array([[0.0, 1.0], [3.0, 0.0]])
    assert mean_paired_cosine(a, b) == pytest.approx(0.0)
    with pytest.raises(ValidationError):
        mean_paired_cosine(a, b[:1])
    with pytest.raises(ValidationError):
        mean_paired_cosine(a, np.zeros_like(b))


def test_prefix_mapping_identity_and_projection():
    rng = np.random.default_rng(4)
    support_rows = rng.normal(size=(6, 5))
    queries = rng.normal(size=(3, 5))
    support = build_support_set(support_rows, temperature=0.5)

    off = prefix_image_features(queries, support, project=False)
    np.testing.assert_array_equal(off, queries)
    assert off is not queries

    on = prefix_image_features(queries, support, project=True)
    np.testing.assert_allclose(on, project_matrix(queries, support), atol=0)

    with pytest.raises(ValidationError):
        prefix_image_features(queries, None, project=True)


def test_baseline_training_consumes_raw_image_features(monkeypatch):
    cfg = toy_config()
    captured = {}
    real_train = pipeline.train

    def spy(model, items, cfg=None):
        captured["items"] = items
        return real_train(model, items, cfg)

    monkeypatch.setattr(pipeline, "train", spy)
    run_training(cfg)
    data = load_training_data(cfg)
    items = captured["items"]
    assert len(items) == 40
    for i in (0, 7, 39):
        np.testing.assert_array_equal(items[i].v, data.image_features[i])
        assert items[i].fuse_query is None


def test_projected_training_consumes_projected_features(monkeypatch):
    cfg = toy_config(toggles={"fp": True, "af": True})
    captured = {}
    real_train = pipeline.train

    def spy(model, items, cfg=None):
        captured["items"] = items
        return real_train(model, items, cfg)

    monkeypatch.setattr(pipeline, "train", spy)
    run_training(cfg)
    data = load_training_data(cfg)
    support = build_support_set(
        data.text_features, cfg.projection_temperature
    )
    expected = project_matrix(data.image_features, support)
    items = captured["items"]
    for i in (0, 11, 39):
        np.testing.assert_allclose(items[i].v, expected[i], atol=0)
        # the fusion query stays unprojected; projection feeds only the
        # decoder prefix slot
        np.testing.assert_array_equal(
            items[i].fuse_query, data.image_features[i]
        )


# ---------------------------------------------------------------------------
# training artifacts


def test_checkpoint_metadata_and_extras(full_run):
    cfg, result = full_run
    model, metadata, extras = load_checkpoint(cfg.paths["checkpoint"])
    assert metadata["toggles"] == {"fo": True, "fp": True, "af": True}
    assert metadata["projection_temperature"] == pytest.approx(0.08)
    assert metadata["vocab"] == result.vocab.tokens_by_id
    assert metadata["toy_encoder"]["dim"] == 16
    assert metadata["toy_encoder"]["noise_scale"] == pytest.approx(0.1)
    assert metadata["tag_words"] == sorted(result.tag_lookup.by_word)
    np.testing.assert_array_equal(
        extras["support.features"], result.support.features
    )
    stacked = np.stack(
        [result.tag_lookup.by_word[w] for w in metadata["tag_words"]]
    )
    np.testing.assert_array_equal(extras["tags.features"], stacked)
    assert model.config.use_aux


def test_loss_report_lines(full_run):
    cfg, result = full_run
    lines = [
        json.loads(line)
        for line in open(cfg.paths["loss_report"], encoding="utf-8")
    ]
    refine_lines = [l for l in lines if l["stage"] == "refine"]
    decoder_lines = [l for l in lines if l["stage"] == "decoder"]
    assert len(refine_lines) == 2
    assert len(decoder_lines) == 2
    assert [l["epoch"] for l in decoder_lines] == [0, 1]
    assert all(math.isfinite(l["mean_loss"]) for l in lines)
    assert result.decoder_losses[-1] == pytest.approx(
        decoder_lines[-1]["mean_loss"]
    )
    assert result.cosine_after > result.cosine_before


def test_training_reruns_are_byte_identical(full_run, tmp_path):
    cfg, _ = full_run
    again = toy_config(
        toggles={"fo": True, "fp": True, "af": True},
        paths={"checkpoint": str(tmp_path / "again.ckpt")},
    )
    run_training(again)
    first = open(cfg.paths["checkpoint"], "rb").read()
    second = open(again.paths["checkpoint"], "rb").read()
    assert first == second


# ---------------------------------------------------------------------------
# inference from checkpoints


def _eval_features(cfg, n=4):
    records, feats = pipeline._load_eval_data(cfg, train_count=cfg.toy.train_items)
    return records[:n], feats[:n]


def test_inference_matches_in_memory_pipeline(full_run):
    cfg, result = full_run
    records, feats = _eval_features(cfg)
    ids = [r.id for r in records]
    objects = [r.objects for r in records]

    rows = run_inference(cfg.paths["checkpoint"], feats, ids, objects)
    assert [row["id"] for row in rows] == ids
    assert [row["objects"] for row in rows] == objects
    expected = [
        caption_one(
            result.model, cfg.toggles, result.support, result.tag_lookup,
            result.vocab, feats[i], objects[i],
        )
        for i in range(len(records))
    ]
    assert [row["text"] for row in rows] == expected

    again = run_inference(cfg.paths["checkpoint"], feats, ids, objects)
    assert again == rows


def test_inference_validates_inputs(full_run):
    cfg, _ = full_run
    records, feats = _eval_features(cfg)
    ids = [r.id for r in records]
    objects = [r.objects for r in records]
    with pytest.raises(ValidationError, match="align"):
        run_inference(cfg.paths["checkpoint"], feats, ids[:-1], objects)
    with pytest.raises(ValidationError, match="align"):
        run_inference(cfg.paths["checkpoint"], feats, ids, objects[:-1])
    with pytest.raises(ValidationError, match="dim"):
        run_inference(
            cfg.paths["checkpoint"], feats[:, :8], ids, objects
        )


def test_inference_needs_support_features_for_projection(tmp_path):
    vocab = build_vocab(generate_toy_corpus(ToyGrammar(seed=0), 6))
    dcfg = DecoderConfig(
        vocab_size=len(vocab), feature_dim=8, model_dim=16, heads=2,
        layers=1, max_len=10,
    )
    model = DecoderModel(dcfg)
    path = tmp_path / "broken.ckpt"
    save_checkpoint(
        str(path),
        model,
        {
            "toggles": {"fp": True},
            "projection_temperature": 0.08,
            "vocab": vocab.tokens_by_id,
        },
        {},
    )
    with pytest.raises(ValidationError, match="support"):
        run_inference(str(path), np.zeros((1, 8)), ["a"], [[]])


def test_caption_one_equals_direct_generation(full_run):
    # with projection on, the caption must come from the projected prefix
    cfg, result = full_run
    _, feats = _eval_features(cfg, n=1)
    feature = feats[0]
    v = prefix_image_features(
        feature[None, :], result.support, project=True
    )[0]
    from synthcap.fusion import fuse

    objset = result.tag_lookup.object_set(["cat"])
    u = fuse(feature, objset, result.model.fusion)
    ids = generate(result.model, PrefixInput(v=v, u=u))
    direct = " ".join(result.vocab.decode(ids))
    via_pipeline = caption_one(
        result.model, cfg.toggles, result.support, result.tag_lookup,
        result.vocab, feature, ["cat"],
    )
    assert via_pipeline == direct


def test_object_recall_counts_only_tagged_records():
    records = generate_toy_corpus(ToyGrammar(seed=0), 3)
    captions = [
        records[0].text,          # contains its object word
        "something unrelated",    # misses
        records[2].text,
    ]
    value = pipeline._object_recall(records, captions)
    assert value == pytest.approx(2 / 3)
    blank = [
        pipeline.CaptionRecord(id="x", text="no tags here", objects=[])
    ]
    assert pipeline._object_recall(blank, ["anything"]) == 0.0


# ---------------------------------------------------------------------------
# command-line interface


def test_cli_feature_workflow(tmp_path):
    corpus = str(tmp_path / "train.jsonl")
    assert main(["gen-toy", "--n", "30", "--seed", "5", "--out", corpus]) == 0
    again = str(tmp_path / "again.jsonl")
    assert main(["gen-toy", "--n", "30", "--seed", "5", "--out", again]) == 0
    assert open(corpus, "rb").read() == open(again, "rb").read()
    assert len(open(corpus, encoding="utf-8").readlines()) == 30

    text_f = str(tmp_path / "text.syne")
    image_f = str(tmp_path / "image.syne")
    assert main([
        "encode-toy", "--corpus", corpus, "--out-text", text_f,
        "--out-image", image_f, "--dim", "16", "--seed", "5",
    ]) == 0
    assert read_embeddings(text_f).shape == (30, 16)
    assert read_embeddings(image_f).shape == (30, 16)

    refined = str(tmp_path / "refined.syne")
    losses = str(tmp_path / "refine_losses.jsonl")
    assert main([
        "refine", "--images", image_f, "--text", text_f, "--out", refined,
        "--epochs", "2", "--seed", "5", "--losses", losses,
    ]) == 0
    assert read_embeddings(refined).shape == (30, 16)
    assert len(open(losses, encoding="utf-8").readlines()) == 2

    support_f = str(tmp_path / "support.syne")
    assert main(["build-support", "--text", text_f, "--out", support_f]) == 0
    np.testing.assert_array_equal(
        read_embeddings(support_f), read_embeddings(text_f)
    )

    projected = str(tmp_path / "projected.syne")
    assert main([
        "project", "--input", image_f, "--support", support_f,
        "--output", projected, "--temperature", "0.08",
    ]) == 0
    support = build_support_set(
        read_embeddings(support_f).astype(np.float64), temperature=0.08
    )
    expected = project_matrix(
        read_embeddings(image_f).astype(np.float64), support
    )
    np.testing.assert_allclose(read_embeddings(projected), expected, atol=1e-6)


def test_cli_train_infer_eval(tmp_path, capsys):
    ckpt = str(tmp_path / "model.ckpt")
    raw = toy_raw(
        toy={"train_items": 24, "eval_items": 0},
        decoder={"epochs": 1},
        paths={"checkpoint": ckpt},
    )
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(raw, fh)

    assert main(["train", "--config", cfg_path]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["checkpoint"] == ckpt
    assert summary["decoder_epochs"] == 1
    assert math.isfinite(summary["final_train_loss"])

    # caption four held-out feature rows
    grammar = ToyGrammar(seed=0)
    records = generate_toy_corpus(grammar, 28)[24:]
    spec = ToyEncoderSpec(dim=16, seed=0, noise_scale=0.25)
    feats = encode_images([r.tokens for r in records], spec, index_offset=24)
    images_f = str(tmp_path / "eval.syne")
    write_embeddings(feats, images_f)

    captions_f = str(tmp_path / "captions.jsonl")
    assert main([
        "infer", "--checkpoint", ckpt, "--images", images_f,
        "--out", captions_f,
    ]) == 0
    rows = [
        json.loads(line) for line in open(captions_f, encoding="utf-8")
    ]
    assert len(rows) == 4
    assert rows[0]["id"] == "img-0000"
    assert set(rows[0]) == {"id", "text", "objects"}

    # an objects corpus supplies ids and tag words
    objects_f = str(tmp_path / "objects.jsonl")
    write_corpus(records, objects_f)
    assert main([
        "infer", "--checkpoint", ckpt, "--images", images_f,
        "--objects", objects_f, "--out", captions_f,
    ]) == 0
    rows = [
        json.loads(line) for line in open(captions_f, encoding="utf-8")
    ]
    assert [r["id"] for r in rows] == [r.id for r in records]

    # identity candidates score perfectly
    refs_f = str(tmp_path / "refs.jsonl")
    write_corpus(records, refs_f)
    report_f = str(tmp_path / "report.json")
    assert main([
        "eval", "--candidates", refs_f, "--references", refs_f,
        "--out", report_f,
    ]) == 0
    report = json.load(open(report_f, encoding="utf-8"))
    assert report["n_pairs"] == 4
    assert report["bleu4"] == pytest.approx(1.0, abs=1e-9)
    assert report["rouge_l"] == pytest.approx(1.0, abs=1e-9)
    assert report["cider_d"] == pytest.approx(10.0, abs=1e-6)


def test_cli_ablate_report_shape(tmp_path):
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(toy_raw(), fh)
    report_f = str(tmp_path / "ablation.json")
    assert main([
        "ablate", "--config", cfg_path, "--out", report_f,
        "--set", "toy.train_items=24",
        "--set", "toy.eval_items=4",
        "--set", "decoder.epochs=1",
        "--set", "refine.epochs=1",
    ]) == 0
    report = json.load(open(report_f, encoding="utf-8"))
    assert report["n_train"] == 24
    assert report["n_eval"] == 4
    assert len(report["refinement"]["epoch_losses"]) == 1
    assert math.isfinite(report["refinement"]["mean_cosine_before"])
    names = [v["name"] for v in report["variants"]]
    assert names == [
        "baseline", "fo", "fp", "af", "fo_af", "fo_fp", "fp_af", "full",
    ]
    for variant in report["variants"]:
        for key in ("bleu4", "rouge_l", "cider_d", "object_recall"):
            assert math.isfinite(variant[key])
        assert 0.0 <= variant["object_recall"] <= 1.0
        assert len(variant["sample_captions"]) == 4
        assert set(variant["sample_captions"][0]) == {
            "id", "text", "reference",
        }


def test_cli_exit_codes(tmp_path):
    # validation and file problems exit 2
    assert main(["train", "--config", str(tmp_path / "missing.json")]) == 2
    corpus = str(tmp_path / "c.jsonl")
    assert main(["gen-toy", "--n", "5", "--seed", "1", "--out", corpus]) == 0
    assert main(["encode-toy", "--corpus", corpus]) == 2
    assert main(["gen-toy", "--n", "100000", "--out", corpus]) == 2

    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(toy_raw(toy={"train_items": 12}, decoder={"epochs": 1}), fh)
    assert main(["train", "--config", cfg_path, "--set", "no-equals"]) == 2
    assert main(["train", "--config", cfg_path, "--set", "seed.x=1"]) == 2
    assert main(["train", "--config", cfg_path, "--set", "bogus=1"]) == 2

    # non-finite optimization state exits 3; small batches so a second
    # batch sees the poisoned parameters
    assert main([
        "train", "--config", cfg_path,
        "--set", "decoder.learning_rate=NaN",
        "--set", "decoder.batch_size=4",
    ]) == 3


def test_cli_eval_requires_matching_ids(tmp_path):
    records = generate_toy_corpus(ToyGrammar(seed=2), 3)
    refs_f = str(tmp_path / "refs.jsonl")
    write_corpus(records, refs_f)
    cands_f = str(tmp_path / "cands.jsonl")
    renamed = [
        pipeline.CaptionRecord(id=f"other-{i}", text=r.text, objects=r.objects)
        for i, r in enumerate(records)
    ]
    write_corpus(renamed, cands_f)
    assert main([
        "eval", "--candidates", cands_f, "--references", refs_f,
    ]) == 2
