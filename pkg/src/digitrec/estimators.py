"""Estimator-style facade over the functional core.

The three classes follow the scikit-learn protocol (``fit`` /
``transform`` / ``predict`` plus ``get_params`` / ``set_params``) so
they drop into sklearn pipelines and ``clone`` without this package
depending on scikit-learn itself.  Constructor arguments are stored
untouched; anything derived during fit gets a trailing underscore.
"""
from __future__ import annotations

import inspect

import numpy as np

from .audio_io import AudioClip
from .endpointing import EndpointParams, detect_endpoints, trim_to_voiced
from .errors import ConfigError, NotFitted
from .features import FeatureConfig, FeatureVector, build_mel_filterbank, extract_features
from .neuralnet import forward
from .pipeline import Dataset, TrainingConfig, train_network


class ParamsMixin:
    """get_params/set_params over the constructor signature."""

    @classmethod
    def _param_names(cls):
        signature = inspect.signature(cls.__init__)
        return [
            p.name
            for p in signature.parameters.values()
            if p.name != "self"
            and p.kind in (p.POSITIONAL_OR_KEYWORD, p.KEYWORD_ONLY)
        ]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(
                    f"invalid parameter {name!r} for {type(self).__name__}; "
                    f"valid parameters are {sorted(valid)}"
                )
            setattr(self, name, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def _check_fitted(estimator, attribute: str):
    if not hasattr(estimator, attribute):
        raise NotFitted(f"{type(estimator).__name__} must be fitted before use")


def _as_clip(x, sample_rate_hz: int) -> AudioClip:
    if isinstance(x, AudioClip):
        return x
    return AudioClip(np.asarray(x, dtype=np.float64), sample_rate_hz)


class EndpointTrimmer(ParamsMixin):
    """Transformer that cuts each clip down to its detected voiced segment."""

    def __init__(
        self,
        frame_ms: float = 10.0,
        energy_k: float = 3.0,
        zcr_k: float = 2.0,
        noise_window_ms: float = 100.0,
        zcr_extension_ms: float = 250.0,
        sample_rate_hz: int = 8000,
    ):
        self.frame_ms = frame_ms
        self.energy_k = energy_k
        self.zcr_k = zcr_k
        self.noise_window_ms = noise_window_ms
        self.zcr_extension_ms = zcr_extension_ms
        self.sample_rate_hz = sample_rate_hz

    def _params(self) -> EndpointParams:
        return EndpointParams(
            analysis_frame_ms=self.frame_ms,
            energy_k=self.energy_k,
            zcr_k=self.zcr_k,
            noise_window_ms=self.noise_window_ms,
            zcr_extension_ms=self.zcr_extension_ms,
        )

    def fit(self, X=None, y=None):
        self.params_ = self._params()
        return self

    def detect(self, clip):
        _check_fitted(self, "params_")
        return detect_endpoints(_as_clip(clip, self.sample_rate_hz), self.params_)

    def transform(self, X):
        _check_fitted(self, "params_")
        return [
            trim_to_voiced(_as_clip(x, self.sample_rate_hz), self.params_) for x in X
        ]

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


class MfccExtractor(ParamsMixin):
    """Transformer from clips to fixed-length MFCC vectors.

    ``transform`` accepts AudioClips or bare 1-D sample arrays (assumed
    to be at ``sample_rate_hz``) and returns an (n, vector_len) array.
    """

    def __init__(
        self,
        sample_rate_hz: int = 8000,
        frame_len: int = 256,
        hop: int = 128,
        preemphasis: float = 0.97,
        n_filters: int = 20,
        n_coeffs: int = 8,
        fmin_hz: float = 0.0,
        fmax_hz: float = 4000.0,
        vector_len: int = 250,
        log_floor: float = 1e-10,
        include_formants: bool = False,
    ):
        self.sample_rate_hz = sample_rate_hz
        self.frame_len = frame_len
        self.hop = hop
        self.preemphasis = preemphasis
        self.n_filters = n_filters
        self.n_coeffs = n_coeffs
        self.fmin_hz = fmin_hz
        self.fmax_hz = fmax_hz
        self.vector_len = vector_len
        self.log_floor = log_floor
        self.include_formants = include_formants

    def _config(self) -> FeatureConfig:
        return FeatureConfig(
            frame_len_samples=self.frame_len,
            hop_samples=self.hop,
            preemphasis_alpha=self.preemphasis,
            n_mel_filters=self.n_filters,
            n_coeffs=self.n_coeffs,
            fmin_hz=self.fmin_hz,
            fmax_hz=self.fmax_hz,
            vector_len=self.vector_len,
            log_floor=self.log_floor,
            include_formants=self.include_formants,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        self.filterbank_ = build_mel_filterbank(self.config_, self.sample_rate_hz)
        return self

    def transform(self, X) -> np.ndarray:
        _check_fitted(self, "filterbank_")
        out = np.empty((len(X), self.config_.vector_len))
        for i, x in enumerate(X):
            clip = _as_clip(x, self.sample_rate_hz)
            if clip.sample_rate_hz != self.sample_rate_hz:
                raise ConfigError(
                    f"clip rate {clip.sample_rate_hz} != extractor rate {self.sample_rate_hz}"
                )
            out[i] = extract_features(clip, self.config_, self.filterbank_).values
        return out

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


class BackpropDigitClassifier(ParamsMixin):
    """Sigmoid MLP classifier trained online with the generalized delta rule.

    After ``fit``: ``net_`` is the trained network, ``history_`` the
    per-epoch summed SSE, ``classes_`` the label set.
    """

    def __init__(
        self,
        hidden_units: int = 16,
        n_classes: int = 10,
        learning_rate: float = 0.2,
        max_epochs: int = 10000,
        target_sse: float = 0.01,
        seed: int = 42,
        shuffle_each_epoch: bool = True,
    ):
        self.hidden_units = hidden_units
        self.n_classes = n_classes
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.target_sse = target_sse
        self.seed = seed
        self.shuffle_each_epoch = shuffle_each_epoch

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ConfigError("X must be (n_samples, n_features) matching len(y)")
        items = [
            FeatureVector(values=row, label=int(label)) for row, label in zip(X, y)
        ]
        data = Dataset(items=items, class_count=self.n_classes)
        cfg = TrainingConfig(
            learning_rate=self.learning_rate,
            max_epochs=self.max_epochs,
            target_sse=self.target_sse,
            seed=self.seed,
            shuffle_each_epoch=self.shuffle_each_epoch,
        )
        topology = (X.shape[1], self.hidden_units, self.n_classes)
        self.net_, self.history_ = train_network(data, cfg, topology)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.arange(self.n_classes)
        return self

    def predict_scores(self, X) -> np.ndarray:
        _check_fitted(self, "net_")
        X = np.asarray(X, dtype=np.float64)
        return np.vstack([forward(self.net_, row).outputs[-1] for row in X])

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_scores(X), axis=1)

    def score(self, X, y) -> float:
        y = np.asarray(y, dtype=np.int64)
        return float(np.mean(self.predict(X) == y))
