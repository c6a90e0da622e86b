"""Word-boundary detection for silence-speech-silence recordings.

Classic short-time energy + zero-crossing approach: noise statistics
come from the leading window (recordings start with silence by
protocol), an energy threshold picks the longest voiced run, and a
zero-crossing threshold grows the run outward to catch low-energy
fricative edges.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip
from .errors import ClipTooShort, ConfigError, EmptyPayload, NoVoicedData


@dataclass(frozen=True)
class VoicedSegment:
    """Half-open sample range [start_sample, end_sample) of detected speech."""

    start_sample: int
    end_sample: int

    def __post_init__(self):
        if self.start_sample < 0 or self.end_sample <= self.start_sample:
            raise ConfigError("segment needs 0 <= start < end")

    def __len__(self) -> int:
        return self.end_sample - self.start_sample


@dataclass(frozen=True)
class EndpointParams:
    analysis_frame_ms: float = 10.0
    energy_k: float = 3.0
    zcr_k: float = 2.0
    noise_window_ms: float = 100.0
    zcr_extension_ms: float = 250.0

    def __post_init__(self):
        for name in (
            "analysis_frame_ms",
            "energy_k",
            "zcr_k",
            "noise_window_ms",
            "zcr_extension_ms",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


def _frame_length(clip: AudioClip, frame_ms: float) -> int:
    n = int(round(frame_ms * clip.sample_rate_hz / 1000.0))
    if n < 1:
        raise ConfigError("frame_ms yields an empty analysis frame")
    return n


def short_time_energy(clip: AudioClip, frame_ms: float) -> np.ndarray:
    """Sum of squared samples per non-overlapping frame (trailing partial included)."""
    if len(clip) == 0:
        raise EmptyPayload("empty clip")
    frame_len = _frame_length(clip, frame_ms)
    x = clip.samples
    n_frames = -(-x.size // frame_len)
    energies = np.empty(n_frames)
    for i in range(n_frames):
        seg = x[i * frame_len : (i + 1) * frame_len]
        energies[i] = np.dot(seg, seg)
    return energies


def zero_crossing_rate(clip: AudioClip, frame_ms: float) -> np.ndarray:
    """Per frame: fraction of adjacent sample pairs with opposite sign.

    Zero counts as non-negative, so an all-zero frame has rate 0.
    A single-sample frame has no pairs and also gets rate 0.
    """
    if len(clip) == 0:
        raise EmptyPayload("empty clip")
    frame_len = _frame_length(clip, frame_ms)
    nonneg = clip.samples >= 0.0
    n_frames = -(-nonneg.size // frame_len)
    rates = np.empty(n_frames)
    for i in range(n_frames):
        seg = nonneg[i * frame_len : (i + 1) * frame_len]
        if seg.size < 2:
            rates[i] = 0.0
        else:
            rates[i] = np.count_nonzero(seg[1:] != seg[:-1]) / (seg.size - 1)
    return rates


def _longest_true_run(mask: np.ndarray) -> tuple[int, int]:
    """(start, end) frame indices of the longest run of True; earliest wins ties."""
    best_start, best_len = -1, 0
    run_start = None
    for i, flag in enumerate(mask):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            if i - run_start > best_len:
                best_start, best_len = run_start, i - run_start
            run_start = None
    if run_start is not None and mask.size - run_start > best_len:
        best_start, best_len = run_start, mask.size - run_start
    return best_start, best_start + best_len


def detect_endpoints(clip: AudioClip, params: EndpointParams | None = None) -> VoicedSegment:
    """Locate the voiced segment of a clip.

    Noise mean/std of energy and zero-crossing rate are estimated from
    the leading ``noise_window_ms``.  Frames whose energy exceeds
    mean + energy_k*std are speech candidates; the longest consecutive
    run wins (ties broken earliest).  The run is then extended at both
    ends, up to ``zcr_extension_ms``, through frames whose
    zero-crossing rate exceeds mean + zcr_k*std.  Returned indices are
    frame-aligned sample offsets.
    """
    params = params or EndpointParams()
    frame_len = _frame_length(clip, params.analysis_frame_ms)
    noise_samples = int(round(params.noise_window_ms * clip.sample_rate_hz / 1000.0))
    n_noise = noise_samples // frame_len
    if len(clip) <= noise_samples or n_noise < 1:
        raise ClipTooShort(
            f"clip ({clip.duration_s * 1000:.1f} ms) does not extend past the "
            f"{params.noise_window_ms:.1f} ms noise window"
        )

    energies = short_time_energy(clip, params.analysis_frame_ms)
    zcrs = zero_crossing_rate(clip, params.analysis_frame_ms)

    energy_thresh = energies[:n_noise].mean() + params.energy_k * energies[:n_noise].std()
    zcr_thresh = zcrs[:n_noise].mean() + params.zcr_k * zcrs[:n_noise].std()

    active = energies > energy_thresh
    if not active.any():
        raise NoVoicedData("no frame rises above the energy threshold")
    start_f, end_f = _longest_true_run(active)

    max_ext = int(round(params.zcr_extension_ms * clip.sample_rate_hz / 1000.0)) // frame_len
    ext = 0
    while start_f > 0 and ext < max_ext and zcrs[start_f - 1] > zcr_thresh:
        start_f -= 1
        ext += 1
    ext = 0
    while end_f < len(energies) and ext < max_ext and zcrs[end_f] > zcr_thresh:
        end_f += 1
        ext += 1

    return VoicedSegment(
        start_sample=start_f * frame_len,
        end_sample=min(end_f * frame_len, len(clip)),
    )


def trim_to_voiced(clip: AudioClip, params: EndpointParams | None = None) -> AudioClip:
    """Return just the detected voiced part of a clip."""
    seg = detect_endpoints(clip, params)
    return clip.slice(seg.start_sample, seg.end_sample)
