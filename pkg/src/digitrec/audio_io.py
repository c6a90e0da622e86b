"""WAV/PCM decoding and the integer-text voiced-sample format.

Two container modes are supported: proper RIFF/WAVE chunk parsing
(`RIFF_CHUNKS`, the default) and a legacy mode that blindly skips a
fixed-size header and reads the remainder as raw 8-bit PCM
(`LegacySkip`).  All decoding lands in an :class:`AudioClip` holding
float samples in [-1.0, 1.0).
"""
from __future__ import annotations

import pathlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyPayload,
    MalformedContainer,
    ParseError,
    RangeError,
    TruncatedFile,
    UnsupportedEncoding,
)

DEFAULT_SAMPLE_RATE = 8000


@dataclass(frozen=True)
class AudioClip:
    """A mono waveform: float samples in [-1.0, 1.0) plus a sample rate."""

    samples: np.ndarray
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DimensionMismatch("samples must be one-dimensional")
        if samples.size == 0:
            raise EmptyPayload("clip has no samples")
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample_rate_hz must be positive")
        if samples.min() < -1.0 or samples.max() >= 1.0:
            raise RangeError("samples must lie in [-1.0, 1.0)")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def slice(self, start: int, end: int) -> "AudioClip":
        """Clip covering samples [start, end)."""
        return AudioClip(self.samples[start:end], self.sample_rate_hz)


class RiffChunks:
    """Marker for standard RIFF/WAVE chunk parsing."""

    def __repr__(self):
        return "RIFF_CHUNKS"


RIFF_CHUNKS = RiffChunks()


@dataclass(frozen=True)
class LegacySkip:
    """Skip a fixed-size header, read the rest as unsigned 8-bit PCM.

    Provided for bit-compatibility with recorders that prepend a
    nonstandard header of known size; real WAV files should use
    RIFF_CHUNKS instead.
    """

    header_bytes: int = 58
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if self.header_bytes < 0:
            raise ConfigError("header_bytes must be non-negative")
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample_rate_hz must be positive")


WavParseMode = RiffChunks | LegacySkip


def decode_pcm8(raw: int) -> float:
    """Map an unsigned 8-bit PCM value to a float: (raw - 128) / 128."""
    if not 0 <= raw <= 255:
        raise RangeError(f"8-bit PCM value out of range: {raw}")
    return (raw - 128) / 128.0


def encode_pcm8(sample: float) -> int:
    """Inverse of decode_pcm8, rounded to nearest and clamped to [0, 255]."""
    raw = int(np.floor(sample * 128.0 + 128.0 + 0.5))
    return min(255, max(0, raw))


def _decode_pcm8_array(raw: np.ndarray) -> np.ndarray:
    return (raw.astype(np.float64) - 128.0) / 128.0


def parse_wav(data: bytes, mode: WavParseMode = RIFF_CHUNKS) -> AudioClip:
    """Decode a WAV/PCM byte string into an AudioClip.

    RIFF_CHUNKS walks the RIFF container and accepts PCM format tag 1
    with 8-bit unsigned or 16-bit signed little-endian samples;
    multi-channel input is averaged to mono.  LegacySkip drops
    ``header_bytes`` and treats the remainder as 8-bit unsigned mono at
    the mode's sample rate.
    """
    if isinstance(mode, LegacySkip):
        return _parse_legacy(data, mode)
    if not isinstance(mode, RiffChunks):
        raise ConfigError(f"unknown parse mode: {mode!r}")
    return _parse_riff(data)


def _parse_legacy(data: bytes, mode: LegacySkip) -> AudioClip:
    if len(data) < mode.header_bytes:
        raise TruncatedFile(
            f"file holds {len(data)} bytes, shorter than the {mode.header_bytes}-byte header"
        )
    payload = np.frombuffer(data, dtype=np.uint8, offset=mode.header_bytes)
    if payload.size == 0:
        raise EmptyPayload("no sample bytes after the skipped header")
    return AudioClip(_decode_pcm8_array(payload), mode.sample_rate_hz)


def _parse_riff(data: bytes) -> AudioClip:
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedContainer("missing RIFF/WAVE magic")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + size > len(data):
            raise TruncatedFile(
                f"chunk {chunk_id!r} declares {size} bytes but the file ends early"
            )
        if chunk_id == b"fmt ":
            if size < 16:
                raise MalformedContainer("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            payload = data[body_start : body_start + size]
        pos = body_start + size + (size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise MalformedContainer("missing fmt or data chunk")
    format_tag, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if format_tag != 1:
        raise UnsupportedEncoding(f"format tag {format_tag} is not PCM")
    if channels < 1:
        raise MalformedContainer("fmt declares zero channels")
    if len(payload) == 0:
        raise EmptyPayload("data chunk is empty")

    if bits == 8:
        values = np.frombuffer(payload, dtype=np.uint8)
        frame_bytes = channels
        samples = _decode_pcm8_array(values)
    elif bits == 16:
        if len(payload) % 2:
            raise TruncatedFile("16-bit payload has an odd byte count")
        values = np.frombuffer(payload, dtype="<i2")
        frame_bytes = 2 * channels
        samples = values.astype(np.float64) / 32768.0
    else:
        raise UnsupportedEncoding(f"{bits}-bit PCM is not supported")

    if len(payload) % frame_bytes:
        raise TruncatedFile("payload ends mid-frame")
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    return AudioClip(samples, sample_rate)


def write_wav(clip: AudioClip, bits: int = 8) -> bytes:
    """Encode a clip as a canonical RIFF/WAVE PCM file (8- or 16-bit mono)."""
    if bits == 8:
        raw = np.floor(clip.samples * 128.0 + 128.5).astype(np.int64)
        payload = np.clip(raw, 0, 255).astype(np.uint8).tobytes()
    elif bits == 16:
        raw = np.floor(clip.samples * 32768.0 + 0.5).astype(np.int64)
        payload = np.clip(raw, -32768, 32767).astype("<i2").tobytes()
    else:
        raise UnsupportedEncoding(f"cannot write {bits}-bit PCM")
    block_align = bits // 8
    header = b"RIFF"
    header += struct.pack("<I", 36 + len(payload))
    header += b"WAVEfmt "
    header += struct.pack(
        "<IHHIIHH",
        16,
        1,
        1,
        clip.sample_rate_hz,
        clip.sample_rate_hz * block_align,
        block_align,
        bits,
    )
    header += b"data" + struct.pack("<I", len(payload))
    return header + payload


def read_voiced_text(text: str) -> AudioClip:
    """Parse whitespace-separated 8-bit integers into a clip at 8 kHz."""
    tokens = text.split()
    if not tokens:
        raise EmptyPayload("voiced-text stream holds no values")
    values = np.empty(len(tokens), dtype=np.float64)
    for i, token in enumerate(tokens):
        try:
            raw = int(token)
        except ValueError:
            raise ParseError(f"not an integer: {token!r}") from None
        if not 0 <= raw <= 255:
            raise RangeError(f"value outside [0, 255]: {raw}")
        values[i] = raw
    return AudioClip(_decode_pcm8_array(values), DEFAULT_SAMPLE_RATE)


def write_voiced_text(clip: AudioClip) -> str:
    """Render a clip as one 8-bit integer per line (newline-terminated)."""
    raw = np.clip(np.floor(clip.samples * 128.0 + 128.5), 0, 255).astype(np.int64)
    return "".join(f"{v}\n" for v in raw)


def read_clip_file(path, mode: WavParseMode = RIFF_CHUNKS) -> AudioClip:
    """Load a clip from disk: .wav/.wave via parse_wav, anything else as voiced text."""
    p = pathlib.Path(path)
    if p.suffix.lower() in (".wav", ".wave"):
        return parse_wav(p.read_bytes(), mode)
    return read_voiced_text(p.read_text())
