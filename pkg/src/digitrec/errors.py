"""Exception types shared across the package."""


class DigitrecError(Exception):
    """Base class for every error raised by this package."""


class MalformedContainer(DigitrecError):
    """RIFF/WAVE container is missing required magic or chunks."""


class UnsupportedEncoding(DigitrecError):
    """PCM format tag or sample width is not supported."""


class EmptyPayload(DigitrecError):
    """No samples or values where at least one was required."""


class TruncatedFile(DigitrecError):
    """File ends before its declared payload does."""


class ParseError(DigitrecError):
    """A token could not be parsed."""


class RangeError(DigitrecError):
    """A value lies outside its permitted range."""


class NoVoicedData(DigitrecError):
    """Endpoint detection found no frame above the energy threshold."""


class ClipTooShort(DigitrecError):
    """Clip does not extend past the leading noise-estimation window."""


class LengthNotSupported(DigitrecError):
    """The fast transform only accepts power-of-two lengths."""


class ConfigError(DigitrecError):
    """Invalid configuration or parameter value."""


class DimensionMismatch(DigitrecError):
    """Array shapes or sizes do not agree."""


class NoPeaks(DigitrecError):
    """Spectrum does not contain two usable local maxima."""


class EmptyDataset(DigitrecError):
    """Dataset contains no items."""


class FormatError(DigitrecError):
    """Model or feature file violates its expected format."""


class NotFitted(DigitrecError):
    """Estimator was used before fit()."""
