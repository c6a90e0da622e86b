import numpy as np
import pytest

from digitrec.audio_io import parse_wav, write_wav
from digitrec.endpointing import detect_endpoints
from digitrec.errors import (
    ConfigError,
    DimensionMismatch,
    EmptyDataset,
    FormatError,
    ParseError,
)
from digitrec.features import FeatureConfig, FeatureVector, write_feature_text
from digitrec.neuralnet import Mlp, forward, init_network
from digitrec.pipeline import (
    Dataset,
    EvaluationReport,
    TrainingConfig,
    classify,
    dataset_from_clips,
    evaluate,
    load_dataset,
    load_model,
    one_hot_target,
    parity_split,
    save_model,
    synth_corpus,
    train_network,
)


def one_hot_dataset(per_class=3, scale=10.0, classes=10):
    """Trivially separable items: scaled one-hot inputs."""
    items = []
    for label in range(classes):
        for _ in range(per_class):
            values = np.zeros(classes)
            values[label] = scale
            items.append(FeatureVector(values=values, label=label))
    return Dataset(items=items, class_count=classes)


def oracle_net(classes=10, gain=20.0):
    """Net that maps scaled one-hot inputs straight to their class."""
    w = np.eye(classes) * gain
    b = np.full(classes, -10.0)
    return Mlp((classes, classes), [w], [b])


class TestOneHot:
    def test_zero(self):
        np.testing.assert_array_equal(
            one_hot_target(0, 10), [1, 0, 0, 0, 0, 0, 0, 0, 0, 0]
        )

    def test_nine(self):
        t = one_hot_target(9, 10)
        assert t[9] == 1.0 and t.sum() == 1.0

    def test_sums_to_one(self):
        assert one_hot_target(3, 10).sum() == 1.0

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            one_hot_target(10, 10)
        with pytest.raises(IndexError):
            one_hot_target(-1, 10)


class TestTrainNetwork:
    def test_stops_after_first_epoch_when_target_met(self):
        data = one_hot_dataset()
        cfg = TrainingConfig(target_sse=1e9, max_epochs=50)
        _, history = train_network(data, cfg, (10, 4, 10))
        assert len(history) == 1

    def test_runs_to_max_epochs(self):
        data = one_hot_dataset()
        cfg = TrainingConfig(target_sse=1e-12, max_epochs=7)
        _, history = train_network(data, cfg, (10, 4, 10))
        assert len(history) == 7

    def test_fixed_seed_bit_identical(self):
        data = one_hot_dataset()
        cfg = TrainingConfig(max_epochs=20)
        net_a, hist_a = train_network(data, cfg, (10, 4, 10))
        net_b, hist_b = train_network(data, cfg, (10, 4, 10))
        assert hist_a == hist_b
        for x, y in zip(net_a.weights + net_a.biases, net_b.weights + net_b.biases):
            np.testing.assert_array_equal(x, y)

    def test_no_shuffle_reproducible(self):
        data = one_hot_dataset()
        cfg = TrainingConfig(max_epochs=10, shuffle_each_epoch=False)
        net_a, hist_a = train_network(data, cfg, (10, 4, 10))
        net_b, hist_b = train_network(data, cfg, (10, 4, 10))
        assert hist_a == hist_b
        for x, y in zip(net_a.weights + net_a.biases, net_b.weights + net_b.biases):
            np.testing.assert_array_equal(x, y)

    def test_sse_decreases_on_easy_data(self):
        data = one_hot_dataset()
        cfg = TrainingConfig(max_epochs=300)
        _, history = train_network(data, cfg, (10, 8, 10))
        assert history[-1] < history[0] / 10

    def test_learns_easy_data(self):
        data = one_hot_dataset()
        net, _ = train_network(data, TrainingConfig(max_epochs=400), (10, 8, 10))
        report = evaluate(net, data)
        assert report.total_rate_percent == 100.0

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            train_network(Dataset(items=[], class_count=10), TrainingConfig(), (250, 16, 10))

    def test_topology_mismatch(self):
        data = one_hot_dataset()
        with pytest.raises(DimensionMismatch):
            train_network(data, TrainingConfig(), (9, 4, 10))
        with pytest.raises(DimensionMismatch):
            train_network(data, TrainingConfig(), (10, 4, 9))

    def test_epoch_callback(self):
        data = one_hot_dataset()
        seen = []
        train_network(
            data,
            TrainingConfig(max_epochs=5, target_sse=1e-12),
            (10, 4, 10),
            on_epoch=lambda e, s: seen.append((e, s)),
        )
        assert [e for e, _ in seen] == [1, 2, 3, 4, 5]


class TestClassify:
    def test_argmax(self):
        net = oracle_net()
        x = np.zeros(10)
        x[4] = 10.0
        label, scores = classify(net, x)
        assert label == 4
        assert scores.shape == (10,)

    def test_tie_breaks_lowest_index(self):
        # all-zero weights and biases make every score identical
        net = Mlp((4, 3), [np.zeros((3, 4))], [np.zeros(3)])
        label, scores = classify(net, np.ones(4))
        assert label == 0
        assert np.all(scores == scores[0])

    def test_exact_tie_between_2_and_7(self):
        biases = np.zeros(10)
        biases[2] = biases[7] = 1.0
        net = Mlp((4, 10), [np.zeros((10, 4))], [biases])
        label, scores = classify(net, np.zeros(4))
        assert scores[2] == scores[7]
        assert label == 2

    def test_accepts_feature_vector(self):
        net = oracle_net()
        fv = FeatureVector(values=one_hot_target(7, 10) * 10.0, label=7)
        label, _ = classify(net, fv)
        assert label == 7


class TestEvaluate:
    def test_perfect_classifier(self):
        data = one_hot_dataset(per_class=15)
        report = evaluate(oracle_net(), data)
        assert report.total_tested == 150
        assert report.total_correct == 150
        assert report.total_rate_percent == 100.0
        for c in range(10):
            assert report.rate_percent(c) == 100.0
        np.testing.assert_array_equal(np.diag(report.confusion), np.full(10, 15))

    def test_14_of_15_prints_9333(self):
        data = one_hot_dataset(per_class=15)
        # corrupt one item of class 0 so it lands on class 5
        bad = np.zeros(10)
        bad[5] = 10.0
        data.items[0] = FeatureVector(values=bad, label=0)
        report = evaluate(oracle_net(), data)
        assert report.correct[0] == 14
        assert f"{report.rate_percent(0):.2f}" == "93.33"
        assert report.confusion[0, 5] == 1

    def test_total_rate_143_of_150(self):
        data = one_hot_dataset(per_class=15)
        for i in range(7):  # push 7 items of various classes to a wrong class
            label = data.items[i * 20].label
            bad = np.zeros(10)
            bad[(label + 1) % 10] = 10.0
            data.items[i * 20] = FeatureVector(values=bad, label=label)
        report = evaluate(oracle_net(), data)
        assert report.total_correct == 143
        assert f"{report.total_rate_percent:.2f}" == "95.33"

    def test_render_has_table_rows_and_confusion(self):
        data = one_hot_dataset(per_class=2)
        text = evaluate(oracle_net(), data).render()
        lines = text.splitlines()
        assert lines[0].split() == ["digit", "tested", "correct", "rate%"]
        assert lines[1].split() == ["0", "2", "2", "100.00"]
        assert any(line.startswith("total") for line in lines)
        assert any("mean of per-class rates" in line for line in lines)
        assert any("confusion matrix" in line for line in lines)

    def test_render_tsv(self):
        data = one_hot_dataset(per_class=2)
        text = evaluate(oracle_net(), data).render(tsv=True)
        lines = text.splitlines()
        assert lines[0] == "digit\ttested\tcorrect\trate_percent"
        assert lines[1] == "0\t2\t2\t100.00"
        assert sum(1 for l in lines if l.startswith("confusion\t")) == 10

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            evaluate(oracle_net(), Dataset(items=[], class_count=10))

    def test_counts_consistent(self):
        report = EvaluationReport(
            tested=np.array([2, 1]),
            correct=np.array([1, 1]),
            confusion=np.array([[1, 1], [0, 1]]),
        )
        assert report.total_tested == 3
        assert report.total_correct == 2
        assert abs(report.mean_class_rate_percent - 75.0) < 1e-12


class TestModelPersistence:
    def test_roundtrip_forward_bit_identical(self):
        net = init_network([250, 16, 10], 42)
        back = load_model(save_model(net))
        rng = np.random.default_rng(50)
        for _ in range(100):
            x = rng.uniform(-10, 10, 250)
            np.testing.assert_array_equal(
                forward(net, x).outputs[-1], forward(back, x).outputs[-1]
            )

    def test_header_lines(self):
        text = save_model(init_network([2, 2, 1], 3)).decode()
        lines = text.splitlines()
        assert lines[0] == "MLPMODEL v1"
        assert lines[1] == "layers 2 2 1"
        assert lines[2] == "activation sigmoid"
        assert lines[3] == "weights 0"

    def test_truncated_file(self):
        data = save_model(init_network([2, 2, 1], 3))
        with pytest.raises(FormatError):
            load_model(data[: len(data) // 2])

    def test_bad_magic(self):
        with pytest.raises(FormatError):
            load_model(b"WRONG v1\nlayers 2 1\nactivation sigmoid\n")

    def test_wrong_weight_count(self):
        text = (
            "MLPMODEL v1\nlayers 2 2 1\nactivation sigmoid\n"
            "weights 0\n0.1 0.2\n0.3 0.4\nbiases 0\n0.5 0.6\n"
            "weights 1\n0.7\nbiases 1\n0.9\n"
        )
        with pytest.raises(DimensionMismatch):
            load_model(text)

    def test_bad_float(self):
        text = (
            "MLPMODEL v1\nlayers 1 1\nactivation sigmoid\n"
            "weights 0\nnope\nbiases 0\n0.5\n"
        )
        with pytest.raises(FormatError):
            load_model(text)


class TestSynthCorpus:
    def test_byte_identical_regeneration(self):
        a = synth_corpus(5, 2)
        b = synth_corpus(5, 2)
        assert len(a) == len(b) == 20
        for (clip_a, lab_a), (clip_b, lab_b) in zip(a, b):
            assert lab_a == lab_b
            np.testing.assert_array_equal(clip_a.samples, clip_b.samples)
            assert write_wav(clip_a) == write_wav(clip_b)

    def test_300_clips_for_30_per_class(self):
        items = synth_corpus(42, 30)
        assert len(items) == 300
        labels = [label for _, label in items]
        assert all(labels.count(c) == 30 for c in range(10))

    def test_every_clip_has_detectable_voiced_segment(self):
        for clip, _ in synth_corpus(11, 2):
            seg = detect_endpoints(clip)
            assert len(seg) > 0

    def test_durations_within_template_range(self):
        for clip, _ in synth_corpus(13, 2):
            assert 0.85 <= clip.duration_s <= 1.25  # 0.4..0.7 voiced + 2*0.25 pad

    def test_samples_in_valid_range(self):
        for clip, _ in synth_corpus(17, 2):
            assert clip.samples.min() >= -1.0
            assert clip.samples.max() < 1.0

    def test_min_clips_per_class(self):
        with pytest.raises(ConfigError):
            synth_corpus(1, 1)

    def test_different_seeds_differ(self):
        a = synth_corpus(5, 2)
        b = synth_corpus(6, 2)
        assert any(
            not np.array_equal(ca.samples, cb.samples)
            for (ca, _), (cb, _) in zip(a, b)
        )


class TestParitySplit:
    def test_even_odd_counts(self):
        items = synth_corpus(5, 4)
        train, test = parity_split(items, 4)
        assert len(train) == len(test) == 20
        train_labels = [lab for _, lab in train]
        assert all(train_labels.count(c) == 2 for c in range(10))

    def test_disjoint_and_complete(self):
        items = list(range(40))
        train, test = parity_split(items, 4)
        assert sorted(train + test) == items
        assert set(train).isdisjoint(test)


class TestDatasetFromClips:
    def test_labels_and_lengths(self):
        items = synth_corpus(21, 2)[:6]
        data = dataset_from_clips(items)
        assert len(data) == 6
        for fv, (_, label) in zip(data.items, items):
            assert fv.label == label
            assert len(fv) == 250


class TestDatasetValidation:
    def test_unlabeled_rejected(self):
        with pytest.raises(ConfigError):
            Dataset(items=[FeatureVector(np.zeros(5))], class_count=10)

    def test_mixed_lengths_rejected(self):
        with pytest.raises(DimensionMismatch):
            Dataset(
                items=[
                    FeatureVector(np.zeros(5), label=0),
                    FeatureVector(np.zeros(6), label=1),
                ],
                class_count=10,
            )


class TestLoadDataset:
    @pytest.fixture()
    def corpus_dir(self, tmp_path):
        items = synth_corpus(31, 2)
        lines = []
        for i, (clip, label) in enumerate(items[:8]):
            name = f"c{i}.wav"
            (tmp_path / name).write_bytes(write_wav(clip))
            lines.append(f"{name} {label}")
        manifest = tmp_path / "manifest.txt"
        manifest.write_text("\n".join(lines) + "\n")
        return tmp_path, manifest, items[:8]

    def test_manifest_wavs(self, corpus_dir):
        _, manifest, items = corpus_dir
        data = load_dataset(manifest)
        assert len(data) == 8
        assert [fv.label for fv in data.items] == [label for _, label in items]
        assert all(len(fv) == 250 for fv in data.items)

    def test_manifest_feature_files(self, tmp_path):
        fv = FeatureVector(np.arange(250, dtype=float), label=4)
        (tmp_path / "a.feat").write_text(write_feature_text(fv))
        (tmp_path / "m.txt").write_text("a.feat 4\n")
        data = load_dataset(tmp_path / "m.txt")
        np.testing.assert_array_equal(data.items[0].values, fv.values)
        assert data.items[0].label == 4

    def test_manifest_label_overrides_file_label(self, tmp_path):
        fv = FeatureVector(np.arange(250, dtype=float), label=4)
        (tmp_path / "a.feat").write_text(write_feature_text(fv))
        (tmp_path / "m.txt").write_text("a.feat 7\n")
        data = load_dataset(tmp_path / "m.txt")
        assert data.items[0].label == 7

    def test_directory_tree(self, tmp_path):
        items = synth_corpus(33, 2)
        for i, (clip, label) in enumerate(items[:6]):
            sub = tmp_path / str(label)
            sub.mkdir(exist_ok=True)
            (sub / f"x{i}.wav").write_bytes(write_wav(clip))
        data = load_dataset(tmp_path)
        assert len(data) == 6
        assert all(fv.label is not None for fv in data.items)

    def test_bad_manifest_line(self, tmp_path):
        (tmp_path / "m.txt").write_text("one_field_only\n")
        with pytest.raises(ParseError):
            load_dataset(tmp_path / "m.txt")

    def test_empty_manifest(self, tmp_path):
        (tmp_path / "m.txt").write_text("\n# nothing\n")
        with pytest.raises(EmptyDataset):
            load_dataset(tmp_path / "m.txt")
