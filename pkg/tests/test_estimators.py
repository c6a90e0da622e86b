import numpy as np
import pytest

from digitrec.audio_io import AudioClip
from digitrec.endpointing import trim_to_voiced
from digitrec.errors import ConfigError, NotFitted
from digitrec.estimators import BackpropDigitClassifier, EndpointTrimmer, MfccExtractor
from digitrec.features import FeatureConfig, build_mel_filterbank, extract_features
from digitrec.pipeline import synth_corpus


@pytest.fixture(scope="module")
def small_corpus():
    return synth_corpus(77, 2)


class TestParamsProtocol:
    def test_get_params_returns_init_args(self):
        est = MfccExtractor(n_coeffs=6, hop=64)
        params = est.get_params()
        assert params["n_coeffs"] == 6
        assert params["hop"] == 64
        assert params["frame_len"] == 256

    def test_set_params_roundtrip(self):
        est = BackpropDigitClassifier()
        est.set_params(hidden_units=8, learning_rate=0.1)
        assert est.hidden_units == 8
        assert est.learning_rate == 0.1

    def test_set_params_rejects_unknown(self):
        with pytest.raises(ValueError):
            EndpointTrimmer().set_params(nope=1)

    def test_reconstructible_from_params(self):
        est = MfccExtractor(n_coeffs=5, vector_len=100)
        clone = MfccExtractor(**est.get_params())
        assert clone.get_params() == est.get_params()

    def test_repr_mentions_params(self):
        text = repr(EndpointTrimmer(energy_k=2.5))
        assert text.startswith("EndpointTrimmer(")
        assert "energy_k=2.5" in text


class TestEndpointTrimmer:
    def test_requires_fit(self):
        with pytest.raises(NotFitted):
            EndpointTrimmer().transform([])

    def test_trims_like_functional_path(self, small_corpus):
        clips = [clip for clip, _ in small_corpus[:5]]
        trimmed = EndpointTrimmer().fit().transform(clips)
        for clip, got in zip(clips, trimmed):
            expected = trim_to_voiced(clip)
            np.testing.assert_array_equal(got.samples, expected.samples)

    def test_detect_returns_segment(self, small_corpus):
        clip = small_corpus[0][0]
        seg = EndpointTrimmer().fit().detect(clip)
        assert 0 <= seg.start_sample < seg.end_sample <= len(clip)


class TestMfccExtractor:
    def test_requires_fit(self):
        with pytest.raises(NotFitted):
            MfccExtractor().transform([])

    def test_shape_and_match_functional(self, small_corpus):
        clips = [trim_to_voiced(clip) for clip, _ in small_corpus[:4]]
        ext = MfccExtractor().fit()
        out = ext.transform(clips)
        assert out.shape == (4, 250)
        cfg = FeatureConfig()
        bank = build_mel_filterbank(cfg, 8000)
        for i, clip in enumerate(clips):
            np.testing.assert_array_equal(out[i], extract_features(clip, cfg, bank).values)

    def test_accepts_bare_arrays(self):
        rng = np.random.default_rng(0)
        out = MfccExtractor().fit().transform([rng.uniform(-0.5, 0.5, 3000)])
        assert out.shape == (1, 250)

    def test_rate_mismatch_rejected(self):
        clip = AudioClip(np.zeros(4000) + 0.1, 16000)
        ext = MfccExtractor(sample_rate_hz=8000).fit()
        with pytest.raises(ConfigError):
            ext.transform([clip])

    def test_fit_transform(self, small_corpus):
        clips = [trim_to_voiced(clip) for clip, _ in small_corpus[:2]]
        out = MfccExtractor().fit_transform(clips)
        assert out.shape == (2, 250)


class TestBackpropDigitClassifier:
    def make_xy(self, per_class=4, classes=10, scale=10.0):
        X = np.zeros((per_class * classes, classes))
        y = np.repeat(np.arange(classes), per_class)
        for i, label in enumerate(y):
            X[i, label] = scale
        return X, y

    def test_requires_fit(self):
        with pytest.raises(NotFitted):
            BackpropDigitClassifier().predict(np.zeros((1, 250)))

    def test_learns_separable_data(self):
        X, y = self.make_xy()
        clf = BackpropDigitClassifier(hidden_units=8, max_epochs=400).fit(X, y)
        assert clf.score(X, y) == 1.0
        assert clf.n_features_in_ == 10
        np.testing.assert_array_equal(clf.classes_, np.arange(10))

    def test_history_records_epochs(self):
        X, y = self.make_xy()
        clf = BackpropDigitClassifier(max_epochs=5, target_sse=1e-12).fit(X, y)
        assert len(clf.history_) == 5

    def test_deterministic_per_seed(self):
        X, y = self.make_xy()
        a = BackpropDigitClassifier(max_epochs=30, seed=9).fit(X, y)
        b = BackpropDigitClassifier(max_epochs=30, seed=9).fit(X, y)
        np.testing.assert_array_equal(a.predict_scores(X), b.predict_scores(X))

    def test_predict_scores_shape(self):
        X, y = self.make_xy()
        clf = BackpropDigitClassifier(max_epochs=10).fit(X, y)
        assert clf.predict_scores(X).shape == (X.shape[0], 10)

    def test_bad_shapes(self):
        with pytest.raises(ConfigError):
            BackpropDigitClassifier().fit(np.zeros((3, 4)), np.zeros(2, dtype=int))


class TestSklearnInterop:
    def test_clone_and_pipeline(self, small_corpus):
        sklearn = pytest.importorskip("sklearn")
        from sklearn.base import clone
        from sklearn.pipeline import Pipeline

        est = BackpropDigitClassifier(hidden_units=8, max_epochs=40)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

        clips = [clip for clip, _ in small_corpus]
        y = np.array([label for _, label in small_corpus])
        pipe = Pipeline(
            [
                ("trim", EndpointTrimmer()),
                ("mfcc", MfccExtractor()),
                ("net", BackpropDigitClassifier(hidden_units=8, max_epochs=40)),
            ]
        )
        pipe.fit(clips, y)
        preds = pipe.predict(clips)
        assert preds.shape == y.shape
