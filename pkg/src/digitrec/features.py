"""MFCC feature chain: pre-emphasis, framing, Hamming window, radix-2
DFT, mel filterbank, DCT, and assembly into fixed-length input vectors.

Every step is exposed on its own so each can be checked against a naive
reference; `extract_features` strings them together for one clip.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyPayload,
    FormatError,
    LengthNotSupported,
    NoPeaks,
)


@dataclass(frozen=True)
class FeatureConfig:
    """Knobs of the feature chain.

    Defaults give 32 ms frames with 50% overlap at 8 kHz, 20 triangular
    mel filters over 0-4000 Hz, 8 cepstral coefficients per frame and a
    250-value output vector.
    """

    frame_len_samples: int = 256
    hop_samples: int = 128
    preemphasis_alpha: float = 0.97
    n_mel_filters: int = 20
    n_coeffs: int = 8
    fmin_hz: float = 0.0
    fmax_hz: float = 4000.0
    vector_len: int = 250
    log_floor: float = 1e-10
    include_formants: bool = False


def validate_config(cfg: FeatureConfig, sample_rate_hz: int) -> None:
    """Raise ConfigError if the configuration is unusable at this rate."""
    n = cfg.frame_len_samples
    if n < 2 or n & (n - 1):
        raise ConfigError("frame_len_samples must be a power of two >= 2")
    if not 1 <= cfg.hop_samples <= n:
        raise ConfigError("hop_samples must lie in [1, frame_len_samples]")
    if not 0.0 <= cfg.preemphasis_alpha < 1.0:
        raise ConfigError("preemphasis_alpha must lie in [0, 1)")
    if cfg.n_mel_filters < 1 or not 1 <= cfg.n_coeffs <= cfg.n_mel_filters:
        raise ConfigError("need 1 <= n_coeffs <= n_mel_filters")
    if not 0.0 <= cfg.fmin_hz < cfg.fmax_hz:
        raise ConfigError("need 0 <= fmin_hz < fmax_hz")
    if cfg.fmax_hz > sample_rate_hz / 2:
        raise ConfigError("fmax_hz exceeds the Nyquist frequency")
    if cfg.vector_len < 1:
        raise ConfigError("vector_len must be positive")
    if cfg.log_floor <= 0:
        raise ConfigError("log_floor must be positive")


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum with its bin spacing in Hz."""

    magnitudes: np.ndarray
    bin_hz: float

    def __post_init__(self):
        object.__setattr__(self, "magnitudes", np.asarray(self.magnitudes, np.float64))


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular filters as rows over FFT bins; each row peaks at 1.0."""

    weights: np.ndarray
    center_bins: np.ndarray

    @property
    def n_filters(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length input pattern with an optional class label."""

    values: np.ndarray
    label: int | None = None
    source_id: str | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if not np.all(np.isfinite(values)):
            raise ConfigError("feature values must be finite")
        if self.label is not None and not 0 <= self.label <= 9:
            raise ConfigError("label must lie in 0..9")

    def __len__(self) -> int:
        return self.values.size


def pre_emphasis(samples, alpha: float) -> np.ndarray:
    """First-order high-pass: y[0] = x[0], y[n] = x[n] - alpha*x[n-1]."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise EmptyPayload("no samples to pre-emphasize")
    if not 0.0 <= alpha < 1.0:
        raise ConfigError("alpha must lie in [0, 1)")
    y = x.copy()
    y[1:] -= alpha * x[:-1]
    return y


def frame_blocks(samples, frame_len: int, hop: int) -> np.ndarray:
    """Split into overlapping frames of ``frame_len`` every ``hop`` samples.

    Frame i covers [i*hop, i*hop + frame_len); the trailing partial
    frame is zero-padded, and at least one frame is always produced.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise EmptyPayload("no samples to frame")
    if frame_len < 1 or not 1 <= hop <= frame_len:
        raise ConfigError("need frame_len >= 1 and 1 <= hop <= frame_len")
    n_frames = -(-x.size // hop)
    frames = np.zeros((n_frames, frame_len))
    for i in range(n_frames):
        seg = x[i * hop : i * hop + frame_len]
        frames[i, : seg.size] = seg
    return frames


_window_cache: dict[int, np.ndarray] = {}


def hamming_window(n: int) -> np.ndarray:
    """w[k] = 0.54 - 0.46*cos(2*pi*k/(n-1)), k = 0..n-1."""
    if n < 2:
        raise ConfigError("window length must be at least 2")
    if n not in _window_cache:
        k = np.arange(n)
        _window_cache[n] = 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (n - 1))
    return _window_cache[n]


def _fft_radix2(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 Cooley-Tukey along the last axis (length 2^k)."""
    a = np.asarray(x)
    n = a.shape[-1]
    lead = a.shape[:-1]
    out = a.reshape(-1, 1, n).astype(np.complex128)
    while out.shape[2] > 1:
        rows = out.shape[1]
        half = out.shape[2] // 2
        even = out[:, :, :half]
        odd = out[:, :, half:]
        twiddle = np.exp(-1j * np.pi * np.arange(rows) / rows).reshape(1, rows, 1)
        out = np.concatenate([even + twiddle * odd, even - twiddle * odd], axis=1)
    return out.reshape(*lead, n)


def dft_magnitude(frame, sample_rate_hz: int = 8000) -> Spectrum:
    """One-sided magnitude spectrum of a real frame via the radix-2 FFT.

    Only power-of-two lengths are accepted (LengthNotSupported
    otherwise); bins run 0..N/2 with spacing sample_rate/N.
    """
    x = np.asarray(frame, dtype=np.float64)
    n = x.size
    if n < 2 or n & (n - 1):
        raise LengthNotSupported(f"fast transform needs a power-of-two length, got {n}")
    spectrum = _fft_radix2(x)
    return Spectrum(np.abs(spectrum[: n // 2 + 1]), sample_rate_hz / n)


def hz_to_mel(f):
    """mel = 2595 * log10(1 + f/700)."""
    result = 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)
    return float(result) if result.ndim == 0 else result


def mel_to_hz(m):
    """Inverse of hz_to_mel."""
    result = 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)
    return float(result) if result.ndim == 0 else result


def build_mel_filterbank(cfg: FeatureConfig, sample_rate_hz: int) -> MelFilterbank:
    """Triangular filters with edges equally spaced on the mel scale.

    n_mel_filters + 2 edge points span [fmin, fmax] in mel, are mapped
    back to FFT bins, and filter j rises over (edge j, edge j+1] and
    falls over [edge j+1, edge j+2); the peak bin gets weight exactly 1.
    """
    validate_config(cfg, sample_rate_hz)
    n_bins = cfg.frame_len_samples // 2 + 1
    bin_hz = sample_rate_hz / cfg.frame_len_samples
    mel_edges = np.linspace(
        hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mel_filters + 2
    )
    bins = np.floor(mel_to_hz(mel_edges) / bin_hz + 0.5).astype(int)
    centers = bins[1:-1]
    if np.any(np.diff(centers) <= 0):
        raise ConfigError(
            "duplicate mel filter center bins; use fewer filters or longer frames"
        )
    weights = np.zeros((cfg.n_mel_filters, n_bins))
    for j in range(cfg.n_mel_filters):
        lo, mid, hi = bins[j], bins[j + 1], bins[j + 2]
        for b in range(lo, mid):
            weights[j, b] = (b - lo) / (mid - lo)
        for b in range(mid + 1, hi):
            weights[j, b] = (hi - b) / (hi - mid)
        weights[j, mid] = 1.0
    return MelFilterbank(weights=weights, center_bins=centers.copy())


def log_mel_energies(spec: Spectrum, bank: MelFilterbank, log_floor: float = 1e-10) -> np.ndarray:
    """ln of filterbank-weighted spectral power, floored at log_floor."""
    if bank.weights.shape[1] != spec.magnitudes.size:
        raise DimensionMismatch(
            f"filterbank covers {bank.weights.shape[1]} bins, spectrum has {spec.magnitudes.size}"
        )
    power = spec.magnitudes**2
    return np.log(np.maximum(bank.weights @ power, log_floor))


_dct_cache: dict[tuple[int, int], np.ndarray] = {}


def dct_ii(values, n_coeffs: int) -> np.ndarray:
    """Unnormalized DCT-II: c[k] = sum_m v[m]*cos(pi*k*(m+0.5)/M)."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or not 1 <= n_coeffs <= v.size:
        raise DimensionMismatch("need a 1-D input with 1 <= n_coeffs <= len(values)")
    key = (v.size, n_coeffs)
    if key not in _dct_cache:
        k = np.arange(n_coeffs)[:, None]
        m = np.arange(v.size)[None, :] + 0.5
        _dct_cache[key] = np.cos(np.pi * k * m / v.size)
    return _dct_cache[key] @ v


def mfcc_frame(frame, cfg: FeatureConfig, bank: MelFilterbank, sample_rate_hz: int = 8000) -> np.ndarray:
    """Cepstral coefficients of one frame: window -> DFT -> mel -> log -> DCT."""
    x = np.asarray(frame, dtype=np.float64)
    if x.size != cfg.frame_len_samples:
        raise DimensionMismatch(
            f"frame has {x.size} samples, config expects {cfg.frame_len_samples}"
        )
    spec = dft_magnitude(x * hamming_window(x.size), sample_rate_hz)
    return dct_ii(log_mel_energies(spec, bank, cfg.log_floor), cfg.n_coeffs)


def estimate_formants(spec: Spectrum) -> tuple[float, float]:
    """Center frequencies of the two lowest strict local maxima.

    Magnitudes are smoothed with a 3-bin moving average first; bin 0 and
    the Nyquist bin are excluded from the search.
    """
    m = spec.magnitudes
    if m.size < 5:
        raise DimensionMismatch("need at least 5 spectral bins")
    smooth = m.copy()
    smooth[1:-1] = (m[:-2] + m[1:-1] + m[2:]) / 3.0
    smooth[0] = (m[0] + m[1]) / 2.0
    smooth[-1] = (m[-2] + m[-1]) / 2.0
    interior = smooth[1:-1]
    peaks = np.flatnonzero((interior > smooth[:-2]) & (interior > smooth[2:])) + 1
    if peaks.size < 2:
        raise NoPeaks(f"found {peaks.size} spectral peaks, need 2")
    return peaks[0] * spec.bin_hz, peaks[1] * spec.bin_hz


def assemble_feature_vector(
    per_frame_coeffs,
    cfg: FeatureConfig,
    label: int | None = None,
    source_id: str | None = None,
) -> FeatureVector:
    """Flatten frame-major coefficients and fit them to cfg.vector_len.

    Overlong inputs keep the centered vector_len values (odd overflow
    drops one extra from the end); short inputs are zero-padded at the
    end.
    """
    rows = [np.asarray(r, dtype=np.float64).ravel() for r in per_frame_coeffs]
    if not rows:
        raise EmptyPayload("no coefficient frames to assemble")
    flat = np.concatenate(rows)
    target = cfg.vector_len
    if flat.size > target:
        head = (flat.size - target) // 2
        flat = flat[head : head + target]
    elif flat.size < target:
        flat = np.concatenate([flat, np.zeros(target - flat.size)])
    return FeatureVector(values=flat, label=label, source_id=source_id)


def extract_features(
    clip: AudioClip,
    cfg: FeatureConfig | None = None,
    bank: MelFilterbank | None = None,
    label: int | None = None,
    source_id: str | None = None,
) -> FeatureVector:
    """Full chain for one (already endpointed) clip.

    With include_formants on, each frame contributes its two formant
    estimates in kHz after the cepstral coefficients (0, 0 when the
    spectrum has fewer than two peaks).
    """
    cfg = cfg or FeatureConfig()
    validate_config(cfg, clip.sample_rate_hz)
    if bank is None:
        bank = build_mel_filterbank(cfg, clip.sample_rate_hz)
    emphasized = pre_emphasis(clip.samples, cfg.preemphasis_alpha)
    frames = frame_blocks(emphasized, cfg.frame_len_samples, cfg.hop_samples)
    window = hamming_window(cfg.frame_len_samples)
    rows = []
    for frame in frames:
        spec = dft_magnitude(frame * window, clip.sample_rate_hz)
        coeffs = dct_ii(log_mel_energies(spec, bank, cfg.log_floor), cfg.n_coeffs)
        if cfg.include_formants:
            try:
                f1, f2 = estimate_formants(spec)
            except NoPeaks:
                f1 = f2 = 0.0
            coeffs = np.concatenate([coeffs, [f1 / 1000.0, f2 / 1000.0]])
        rows.append(coeffs)
    return assemble_feature_vector(rows, cfg, label=label, source_id=source_id)


def frame_count(n_samples: int, cfg: FeatureConfig) -> int:
    """Number of frames extract_features produces for a clip of this length."""
    return -(-n_samples // cfg.hop_samples)


# --- feature file format -------------------------------------------------
#
# Line 1: MFCCFEAT v1 dims <n> label <digit|?> source <id>
# then n reals, one per line, printed with up to 17 significant digits.

_MAGIC = "MFCCFEAT"
_VERSION = "v1"


def write_feature_text(fv: FeatureVector) -> str:
    label = "?" if fv.label is None else str(fv.label)
    source = fv.source_id if fv.source_id else "-"
    source = "".join("_" if ch.isspace() else ch for ch in source)
    head = f"{_MAGIC} {_VERSION} dims {fv.values.size} label {label} source {source}\n"
    return head + "".join(f"{v:.17g}\n" for v in fv.values)


def read_feature_text(text: str) -> FeatureVector:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty feature file")
    head = lines[0].split()
    if len(head) != 8 or head[0] != _MAGIC or head[1] != _VERSION:
        raise FormatError(f"bad feature header: {lines[0]!r}")
    if head[2] != "dims" or head[4] != "label" or head[6] != "source":
        raise FormatError(f"bad feature header: {lines[0]!r}")
    try:
        dims = int(head[3])
    except ValueError:
        raise FormatError(f"bad dims field: {head[3]!r}") from None
    label = None if head[5] == "?" else int(head[5]) if head[5].isdigit() else None
    if head[5] != "?" and label is None:
        raise FormatError(f"bad label field: {head[5]!r}")
    source = None if head[7] == "-" else head[7]
    tokens = " ".join(lines[1:]).split()
    if len(tokens) != dims:
        raise FormatError(f"expected {dims} values, found {len(tokens)}")
    try:
        values = np.array([float(t) for t in tokens])
    except ValueError:
        raise FormatError("non-numeric feature value") from None
    return FeatureVector(values=values, label=label, source_id=source)
