"""Isolated spoken-digit recognition.

End to end: 8 kHz / 8-bit PCM decoding, energy+zero-crossing endpoint
detection, MFCC feature vectors (8 coefficients per frame flattened to
250 values), and a 250-16-10 sigmoid MLP trained online with the
generalized delta rule.  Everything is seeded and reproducible; the
`digitrec` CLI exposes the same pipeline as subcommands.
"""

from .audio_io import (
    AudioClip,
    LegacySkip,
    RIFF_CHUNKS,
    decode_pcm8,
    encode_pcm8,
    parse_wav,
    read_clip_file,
    read_voiced_text,
    write_voiced_text,
    write_wav,
)
from .endpointing import (
    EndpointParams,
    VoicedSegment,
    detect_endpoints,
    short_time_energy,
    trim_to_voiced,
    zero_crossing_rate,
)
from .errors import DigitrecError
from .estimators import BackpropDigitClassifier, EndpointTrimmer, MfccExtractor
from .features import (
    FeatureConfig,
    FeatureVector,
    MelFilterbank,
    Spectrum,
    assemble_feature_vector,
    build_mel_filterbank,
    dct_ii,
    dft_magnitude,
    estimate_formants,
    extract_features,
    frame_blocks,
    hamming_window,
    hz_to_mel,
    log_mel_energies,
    mel_to_hz,
    mfcc_frame,
    pre_emphasis,
    read_feature_text,
    write_feature_text,
)
from .neuralnet import (
    Activations,
    Mlp,
    Rng,
    forward,
    hidden_deltas,
    init_network,
    output_deltas,
    sigmoid,
    train_pattern,
)
from .pipeline import (
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

__version__ = "0.1.0"
