"""Dataset handling, the training loop, evaluation reporting, model
persistence, and a synthetic ten-class corpus for desk-scale runs."""
from __future__ import annotations

import math
import pathlib
from dataclasses import dataclass

import numpy as np

from .audio_io import (
    AudioClip,
    RIFF_CHUNKS,
    RiffChunks,
    WavParseMode,
    parse_wav,
    read_voiced_text,
)
from .endpointing import EndpointParams, trim_to_voiced
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyDataset,
    FormatError,
    ParseError,
)
from .features import (
    FeatureConfig,
    FeatureVector,
    build_mel_filterbank,
    extract_features,
    read_feature_text,
)
from .neuralnet import Mlp, Rng, forward, init_network_from_rng, train_pattern


@dataclass
class Dataset:
    """Labeled feature vectors, all the same length."""

    items: list[FeatureVector]
    class_count: int = 10

    def __post_init__(self):
        lengths = set()
        for item in self.items:
            if item.label is None:
                raise ConfigError("every dataset item needs a label")
            if not 0 <= item.label < self.class_count:
                raise ConfigError(f"label {item.label} outside 0..{self.class_count - 1}")
            lengths.add(item.values.size)
        if len(lengths) > 1:
            raise DimensionMismatch(f"mixed vector lengths in dataset: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.2
    max_epochs: int = 10000
    target_sse: float = 0.01
    seed: int = 42
    shuffle_each_epoch: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0 or self.max_epochs <= 0 or self.target_sse <= 0:
            raise ConfigError("learning_rate, max_epochs and target_sse must be positive")
        if self.seed == 0:
            raise ConfigError("seed must be nonzero")


def one_hot_target(label: int, n: int) -> np.ndarray:
    """Row ``label`` of the n x n identity matrix."""
    if not 0 <= label < n:
        raise IndexError(f"label {label} outside 0..{n - 1}")
    target = np.zeros(n)
    target[label] = 1.0
    return target


def train_network(
    data: Dataset,
    cfg: TrainingConfig | None = None,
    topology=(250, 16, 10),
    on_epoch=None,
) -> tuple[Mlp, list[float]]:
    """Train an MLP online over the dataset until the SSE target or epoch cap.

    One xorshift64* stream seeded with cfg.seed first initializes the
    network (identical to init_network(topology, seed)) and then drives
    the per-epoch Fisher-Yates shuffles, so runs are reproducible
    bit-for-bit.  Returns the trained net and one summed SSE per epoch.
    """
    cfg = cfg or TrainingConfig()
    if not data.items:
        raise EmptyDataset("no training items")
    sizes = tuple(int(n) for n in topology)
    n_inputs = data.items[0].values.size
    if sizes[0] != n_inputs:
        raise DimensionMismatch(f"topology input {sizes[0]} != feature length {n_inputs}")
    if sizes[-1] != data.class_count:
        raise DimensionMismatch(
            f"topology output {sizes[-1]} != class count {data.class_count}"
        )
    rng = Rng(cfg.seed)
    net = init_network_from_rng(sizes, rng)
    patterns = [item.values for item in data.items]
    targets = [one_hot_target(item.label, sizes[-1]) for item in data.items]
    order = list(range(len(patterns)))
    history: list[float] = []
    for epoch in range(cfg.max_epochs):
        if cfg.shuffle_each_epoch:
            rng.shuffle(order)
        epoch_sse = 0.0
        for i in order:
            _, sse = train_pattern(net, patterns[i], targets[i], cfg.learning_rate)
            epoch_sse += sse
        history.append(epoch_sse)
        if on_epoch is not None:
            on_epoch(epoch + 1, epoch_sse)
        if epoch_sse <= cfg.target_sse:
            break
    return net, history


def classify(net: Mlp, fv) -> tuple[int, np.ndarray]:
    """Predicted label (argmax of the output activations, lowest index wins ties) plus all scores."""
    values = fv.values if isinstance(fv, FeatureVector) else np.asarray(fv, np.float64)
    scores = forward(net, values).outputs[-1]
    return int(np.argmax(scores)), scores


@dataclass
class EvaluationReport:
    """Per-class recognition counts plus a confusion matrix.

    Carries both aggregate rates: the pooled rate 100*sum(correct)/sum(tested)
    and the unweighted mean of the per-class rates — the two commonly
    conflated conventions.
    """

    tested: np.ndarray
    correct: np.ndarray
    confusion: np.ndarray

    @property
    def class_count(self) -> int:
        return self.tested.size

    def rate_percent(self, label: int) -> float:
        if self.tested[label] == 0:
            return 0.0
        return 100.0 * self.correct[label] / self.tested[label]

    @property
    def total_tested(self) -> int:
        return int(self.tested.sum())

    @property
    def total_correct(self) -> int:
        return int(self.correct.sum())

    @property
    def total_rate_percent(self) -> float:
        if self.total_tested == 0:
            return 0.0
        return 100.0 * self.total_correct / self.total_tested

    @property
    def mean_class_rate_percent(self) -> float:
        rates = [self.rate_percent(c) for c in range(self.class_count) if self.tested[c] > 0]
        return sum(rates) / len(rates) if rates else 0.0

    def render(self, tsv: bool = False) -> str:
        if tsv:
            lines = ["digit\ttested\tcorrect\trate_percent"]
            for c in range(self.class_count):
                lines.append(f"{c}\t{self.tested[c]}\t{self.correct[c]}\t{self.rate_percent(c):.2f}")
            lines.append(
                f"total\t{self.total_tested}\t{self.total_correct}\t{self.total_rate_percent:.2f}"
            )
            lines.append(f"mean_class_rate\t\t\t{self.mean_class_rate_percent:.2f}")
            for c in range(self.class_count):
                row = "\t".join(str(v) for v in self.confusion[c])
                lines.append(f"confusion\t{c}\t{row}")
            return "\n".join(lines) + "\n"

        lines = ["digit  tested  correct    rate%"]
        for c in range(self.class_count):
            lines.append(
                f"{c:>5}  {self.tested[c]:>6}  {self.correct[c]:>7}  {self.rate_percent(c):>7.2f}"
            )
        lines.append(
            f"total  {self.total_tested:>6}  {self.total_correct:>7}  {self.total_rate_percent:>7.2f}"
        )
        lines.append(f"mean of per-class rates: {self.mean_class_rate_percent:.2f}%")
        lines.append("")
        lines.append("confusion matrix (rows: true digit, columns: predicted)")
        header = "     " + "".join(f"{c:>5}" for c in range(self.class_count))
        lines.append(header)
        for c in range(self.class_count):
            row = "".join(f"{v:>5}" for v in self.confusion[c])
            lines.append(f"{c:>5}{row}")
        return "\n".join(lines) + "\n"


def evaluate(net: Mlp, data: Dataset) -> EvaluationReport:
    """Classify every item and tally per-class and total recognition counts."""
    if not data.items:
        raise EmptyDataset("no evaluation items")
    k = data.class_count
    tested = np.zeros(k, dtype=np.int64)
    correct = np.zeros(k, dtype=np.int64)
    confusion = np.zeros((k, k), dtype=np.int64)
    for item in data.items:
        pred, _ = classify(net, item)
        tested[item.label] += 1
        confusion[item.label, pred] += 1
        if pred == item.label:
            correct[item.label] += 1
    return EvaluationReport(tested=tested, correct=correct, confusion=confusion)


# --- model persistence ----------------------------------------------------
#
# Text format:
#   MLPMODEL v1
#   layers <s0> <s1> ... <sk>
#   activation sigmoid
#   weights <l>   followed by size(l+1) rows of size(l) reals
#   biases <l>    followed by one row of size(l+1) reals

_MODEL_MAGIC = "MLPMODEL"
_MODEL_VERSION = "v1"


def save_model(net: Mlp) -> bytes:
    """Serialize a network; reals carry up to 17 significant digits so
    load(save(net)) forwards bit-identically."""
    lines = [
        f"{_MODEL_MAGIC} {_MODEL_VERSION}",
        "layers " + " ".join(str(n) for n in net.layer_sizes),
        "activation sigmoid",
    ]
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        lines.append(f"weights {l}")
        for row in w:
            lines.append(" ".join(f"{v:.17g}" for v in row))
        lines.append(f"biases {l}")
        lines.append(" ".join(f"{v:.17g}" for v in b))
    return ("\n".join(lines) + "\n").encode("ascii")


def _floats(line: str, expected: int, what: str) -> np.ndarray:
    tokens = line.split()
    if len(tokens) != expected:
        raise DimensionMismatch(f"{what}: expected {expected} values, found {len(tokens)}")
    try:
        return np.array([float(t) for t in tokens])
    except ValueError:
        raise FormatError(f"{what}: non-numeric value") from None


def load_model(data) -> Mlp:
    """Parse a serialized network; FormatError for structural problems,
    DimensionMismatch when counts disagree with the declared layers."""
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else str(data)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != [_MODEL_MAGIC, _MODEL_VERSION]:
        raise FormatError("bad model magic/version line")
    if len(lines) < 3:
        raise FormatError("model file truncated before the header ends")
    layer_line = lines[1].split()
    if not layer_line or layer_line[0] != "layers" or len(layer_line) < 3:
        raise FormatError("missing or malformed layers line")
    try:
        sizes = tuple(int(t) for t in layer_line[1:])
    except ValueError:
        raise FormatError("non-integer layer size") from None
    if any(s < 1 for s in sizes):
        raise FormatError("layer sizes must be positive")
    if lines[2].split() != ["activation", "sigmoid"]:
        raise FormatError("missing or unsupported activation line")

    pos = 3
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    for l in range(len(sizes) - 1):
        fan_in, fan_out = sizes[l], sizes[l + 1]
        if pos >= len(lines) or lines[pos].split() != ["weights", str(l)]:
            raise FormatError(f"expected 'weights {l}' section")
        pos += 1
        if pos + fan_out > len(lines):
            raise FormatError(f"weights {l}: file truncated")
        rows = [_floats(lines[pos + r], fan_in, f"weights {l} row {r}") for r in range(fan_out)]
        pos += fan_out
        weights.append(np.vstack(rows))
        if pos >= len(lines) or lines[pos].split() != ["biases", str(l)]:
            raise FormatError(f"expected 'biases {l}' section")
        pos += 1
        if pos >= len(lines):
            raise FormatError(f"biases {l}: file truncated")
        biases.append(_floats(lines[pos], fan_out, f"biases {l}"))
        pos += 1
    if pos != len(lines):
        raise DimensionMismatch("trailing content after the declared layers")
    return Mlp(sizes, weights, biases)


# --- synthetic corpus -----------------------------------------------------
#
# Class templates are chosen for separability after the MFCC chain: each
# band holds ten mel-equidistant positions and the three bands are walked
# with different strides, so any two classes differ substantially in at
# least two partials.  Durations are bimodal on purpose: even digits stay
# short enough that their 250-value vectors always end in zero padding,
# odd digits run long enough that the centered truncation always engages;
# clips near the pad/truncate switchover are fragile (a one-frame
# endpointing wobble re-aligns every coefficient), so no class sits there.

_PARTIAL_AMPS = (0.40, 0.26, 0.16)
_ATTACK_S = 0.035
_RELEASE_S = 0.05
_LEAD_SILENCE_S = 0.25
_SNR_DB = 20.0
_BAND_EDGES_HZ = ((240.0, 1150.0), (1300.0, 2400.0), (2550.0, 3600.0))
_PAD_REGIME_BASE_S = 0.400
_PAD_REGIME_STEP_S = 0.011
_TRUNC_REGIME_BASE_S = 0.560
_TRUNC_REGIME_STEP_S = 0.022


def _band_positions(lo_hz: float, hi_hz: float, n: int = 10) -> list[float]:
    from .features import hz_to_mel, mel_to_hz

    return [mel_to_hz(m) for m in np.linspace(hz_to_mel(lo_hz), hz_to_mel(hi_hz), n)]


def _class_template(digit: int) -> tuple[tuple[float, float, float], float]:
    """Partial frequencies (Hz) and duration (s) for one digit class."""
    low = _band_positions(*_BAND_EDGES_HZ[0])
    mid = _band_positions(*_BAND_EDGES_HZ[1])
    high = _band_positions(*_BAND_EDGES_HZ[2])
    freqs = (low[digit], mid[(3 * digit + 1) % 10], high[(7 * digit + 4) % 10])
    rank = digit // 2
    if digit % 2 == 0:
        duration = _PAD_REGIME_BASE_S + _PAD_REGIME_STEP_S * rank
    else:
        duration = _TRUNC_REGIME_BASE_S + _TRUNC_REGIME_STEP_S * rank
    return freqs, duration


def _envelope(n: int, rate: int) -> np.ndarray:
    env = np.ones(n)
    attack = min(int(_ATTACK_S * rate), n // 2)
    release = min(int(_RELEASE_S * rate), n // 2)
    if attack > 0:
        env[:attack] = 0.5 * (1.0 - np.cos(np.pi * np.arange(attack) / attack))
    if release > 0:
        env[n - release :] = 0.5 * (1.0 + np.cos(np.pi * np.arange(release) / release))
    return env


def synth_corpus(seed: int, clips_per_class: int, out_rate: int = 8000) -> list[tuple[AudioClip, int]]:
    """Deterministic ten-class tone corpus.

    Each class has a fixed template of three sinusoidal partials and a
    class-specific duration between 0.4 and 0.7 s; each clip jitters the
    partial frequencies by up to 2% and amplitudes by up to 10%, draws a
    random phase per partial, adds white (uniform) noise 20 dB below the
    voiced RMS, and is padded with 0.25 s of noise-only lead-in and
    lead-out.  Per clip the rng is consumed in a fixed order (freq
    factor, amp factor, phase for each partial, then the noise samples),
    classes 0..9 outer, clip index inner, so a seed pins every byte.
    """
    if clips_per_class < 2:
        raise ConfigError("need at least 2 clips per class")
    if out_rate <= 0:
        raise ConfigError("out_rate must be positive")
    rng = Rng(seed)
    pad = int(round(_LEAD_SILENCE_S * out_rate))
    items: list[tuple[AudioClip, int]] = []
    for digit in range(10):
        freqs, duration = _class_template(digit)
        n_tone = int(round(duration * out_rate))
        t = np.arange(n_tone) / out_rate
        env = _envelope(n_tone, out_rate)
        for _ in range(clips_per_class):
            tone = np.zeros(n_tone)
            for f, a in zip(freqs, _PARTIAL_AMPS):
                f_clip = f * (1.0 + 0.02 * rng.next_unit())
                a_clip = a * (1.0 + 0.10 * rng.next_unit())
                phase = math.pi * rng.next_unit()
                tone += a_clip * np.sin(2.0 * np.pi * f_clip * t + phase)
            tone *= env
            rms = math.sqrt(float(np.mean(tone**2)))
            noise_amp = (rms / 10.0 ** (_SNR_DB / 20.0)) * math.sqrt(3.0)  # uniform noise std -> amp
            total = pad + n_tone + pad
            samples = noise_amp * np.array([rng.next_unit() for _ in range(total)])
            samples[pad : pad + n_tone] += tone
            np.clip(samples, -1.0, 127.0 / 128.0, out=samples)
            items.append((AudioClip(samples, out_rate), digit))
    return items


def parity_split(items, clips_per_class: int):
    """Even within-class clip indices train, odd test (items class-major)."""
    train, test = [], []
    for i, item in enumerate(items):
        (train if (i % clips_per_class) % 2 == 0 else test).append(item)
    return train, test


class _BankCache:
    """Mel filterbanks keyed by sample rate, built on first use."""

    def __init__(self, cfg: FeatureConfig):
        self.cfg = cfg
        self._banks = {}

    def get(self, sample_rate_hz: int):
        if sample_rate_hz not in self._banks:
            self._banks[sample_rate_hz] = build_mel_filterbank(self.cfg, sample_rate_hz)
        return self._banks[sample_rate_hz]


def dataset_from_clips(
    labeled_clips,
    feature_cfg: FeatureConfig | None = None,
    endpoint_params: EndpointParams | None = None,
    class_count: int = 10,
) -> Dataset:
    """Endpoint, featurize and label a list of (clip, label) pairs."""
    cfg = feature_cfg or FeatureConfig()
    banks = _BankCache(cfg)
    items = []
    for idx, (clip, label) in enumerate(labeled_clips):
        voiced = trim_to_voiced(clip, endpoint_params)
        items.append(
            extract_features(
                voiced, cfg, banks.get(voiced.sample_rate_hz), label=label, source_id=f"clip{idx:04d}"
            )
        )
    return Dataset(items=items, class_count=class_count)


# --- datasets on disk -------------------------------------------------------


def _item_from_path(
    path: pathlib.Path,
    label: int | None,
    cfg: FeatureConfig,
    banks: _BankCache,
    endpoint_params: EndpointParams | None,
    wav_mode: WavParseMode,
) -> FeatureVector:
    suffix = path.suffix.lower()
    if suffix in (".feat", ".mfcc"):
        fv = read_feature_text(path.read_text())
        if label is None:
            label = fv.label
        return FeatureVector(values=fv.values, label=label, source_id=fv.source_id or path.stem)
    if suffix in (".wav", ".wave") or (
        suffix != ".txt" and not isinstance(wav_mode, RiffChunks)
    ):
        clip = parse_wav(path.read_bytes(), wav_mode)
        voiced = trim_to_voiced(clip, endpoint_params)
        return extract_features(
            voiced, cfg, banks.get(voiced.sample_rate_hz), label=label, source_id=path.stem
        )
    # anything else is the integer-text voiced format: already endpointed
    clip = read_voiced_text(path.read_text())
    return extract_features(
        clip, cfg, banks.get(clip.sample_rate_hz), label=label, source_id=path.stem
    )


def load_dataset(
    path,
    feature_cfg: FeatureConfig | None = None,
    endpoint_params: EndpointParams | None = None,
    wav_mode: WavParseMode = RIFF_CHUNKS,
    class_count: int = 10,
) -> Dataset:
    """Load a labeled dataset from a manifest file or a class-directory tree.

    A manifest holds one `<path> <label>` pair per line, paths relative
    to the manifest; a directory dataset has subdirectories named 0..9.
    WAV items run through endpoint detection; integer-text items are
    taken as already-voiced samples; .feat/.mfcc items are read as
    stored vectors.  A manifest label wins over a label stored in a
    feature file.
    """
    root = pathlib.Path(path)
    cfg = feature_cfg or FeatureConfig()
    banks = _BankCache(cfg)
    entries: list[tuple[pathlib.Path, int | None]] = []
    if root.is_dir():
        for sub in sorted(root.iterdir()):
            if sub.is_dir() and sub.name.isdigit() and 0 <= int(sub.name) < class_count:
                for f in sorted(sub.iterdir()):
                    if f.is_file():
                        entries.append((f, int(sub.name)))
    else:
        for lineno, raw in enumerate(root.read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"{root}:{lineno}: expected '<path> <label>', got {raw!r}")
            item_path = root.parent / parts[0]
            if parts[1] == "?":
                label = None
            else:
                try:
                    label = int(parts[1])
                except ValueError:
                    raise ParseError(f"{root}:{lineno}: bad label {parts[1]!r}") from None
            entries.append((item_path, label))
    if not entries:
        raise EmptyDataset(f"no dataset items under {root}")
    items = [
        _item_from_path(item_path, label, cfg, banks, endpoint_params, wav_mode)
        for item_path, label in entries
    ]
    return Dataset(items=items, class_count=class_count)
