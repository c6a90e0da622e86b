"""Command-line front end: extract, train, eval, predict, synth.

Per-file outcomes go to stderr as one tab-separated line each
(``ok``/``error``, path, detail); human-readable summaries and tables go
to stdout.  Exit code 0 means every requested file succeeded.
"""
from __future__ import annotations

import argparse
import pathlib
import sys

import numpy as np

from .audio_io import (
    AudioClip,
    LegacySkip,
    RIFF_CHUNKS,
    parse_wav,
    read_voiced_text,
    write_wav,
)
from .endpointing import EndpointParams, trim_to_voiced
from .errors import DigitrecError
from .features import (
    FeatureConfig,
    build_mel_filterbank,
    extract_features,
    frame_count,
    write_feature_text,
)
from .pipeline import (
    TrainingConfig,
    classify,
    evaluate,
    load_dataset,
    load_model,
    parity_split,
    save_model,
    synth_corpus,
    train_network,
)


def _add_wav_flags(parser):
    group = parser.add_argument_group("wav parsing")
    group.add_argument(
        "--legacy-header-skip",
        type=int,
        default=None,
        metavar="N",
        help="skip a fixed N-byte header and read raw 8-bit PCM instead of parsing RIFF chunks",
    )
    group.add_argument(
        "--legacy-rate",
        type=int,
        default=8000,
        help="sample rate assumed in legacy header-skip mode",
    )


def _add_feature_flags(parser):
    group = parser.add_argument_group("feature extraction")
    group.add_argument("--frame-len", type=int, default=256, help="analysis frame length in samples")
    group.add_argument("--hop", type=int, default=128, help="hop between frames in samples")
    group.add_argument("--preemphasis", type=float, default=0.97, help="pre-emphasis coefficient")
    group.add_argument("--mel-filters", type=int, default=20, help="number of triangular mel filters")
    group.add_argument("--coeffs", type=int, default=8, help="cepstral coefficients per frame")
    group.add_argument("--fmin", type=float, default=0.0, help="filterbank lower edge in Hz")
    group.add_argument("--fmax", type=float, default=4000.0, help="filterbank upper edge in Hz")
    group.add_argument("--vector-len", type=int, default=250, help="assembled feature vector length")
    group.add_argument("--log-floor", type=float, default=1e-10, help="floor applied before the log")
    group.add_argument(
        "--include-formants",
        action="store_true",
        help="append per-frame formant estimates (kHz) to the coefficients",
    )


def _add_endpoint_flags(parser):
    group = parser.add_argument_group("endpoint detection")
    group.add_argument("--ep-frame-ms", type=float, default=10.0, help="analysis frame length in ms")
    group.add_argument("--energy-k", type=float, default=3.0, help="energy threshold in noise std units")
    group.add_argument("--zcr-k", type=float, default=2.0, help="zero-crossing threshold in noise std units")
    group.add_argument("--noise-ms", type=float, default=100.0, help="leading noise-estimation window in ms")
    group.add_argument("--zcr-ext-ms", type=float, default=250.0, help="max zero-crossing extension in ms")


def _wav_mode(args):
    if args.legacy_header_skip is not None:
        return LegacySkip(args.legacy_header_skip, args.legacy_rate)
    return RIFF_CHUNKS


def _feature_config(args) -> FeatureConfig:
    return FeatureConfig(
        frame_len_samples=args.frame_len,
        hop_samples=args.hop,
        preemphasis_alpha=args.preemphasis,
        n_mel_filters=args.mel_filters,
        n_coeffs=args.coeffs,
        fmin_hz=args.fmin,
        fmax_hz=args.fmax,
        vector_len=args.vector_len,
        log_floor=args.log_floor,
        include_formants=args.include_formants,
    )


def _endpoint_params(args) -> EndpointParams:
    return EndpointParams(
        analysis_frame_ms=args.ep_frame_ms,
        energy_k=args.energy_k,
        zcr_k=args.zcr_k,
        noise_window_ms=args.noise_ms,
        zcr_extension_ms=args.zcr_ext_ms,
    )


def _status(ok: bool, path, detail: str = ""):
    tag = "ok" if ok else "error"
    line = f"{tag}\t{path}" + (f"\t{detail}" if detail else "")
    print(line, file=sys.stderr)


def _load_clip(path: pathlib.Path, mode) -> tuple[AudioClip, bool]:
    """Returns (clip, already_voiced): integer-text files are pre-trimmed.

    .txt files hold voiced integer text; .wav/.wave parse as containers;
    any other extension is treated as a raw recording when legacy
    header-skip mode is active, as voiced text otherwise.
    """
    suffix = path.suffix.lower()
    if suffix == ".txt":
        return read_voiced_text(path.read_text()), True
    if suffix in (".wav", ".wave") or isinstance(mode, LegacySkip):
        return parse_wav(path.read_bytes(), mode), False
    return read_voiced_text(path.read_text()), True


def _infer_label(path: pathlib.Path) -> int | None:
    parent = path.parent.name
    if parent.isdigit() and 0 <= int(parent) <= 9:
        return int(parent)
    return None


def run_extract(args) -> int:
    cfg = _feature_config(args)
    ep = _endpoint_params(args)
    mode = _wav_mode(args)
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    banks = {}
    failures = 0
    overall_min = np.inf
    overall_max = -np.inf
    for name in args.inputs:
        path = pathlib.Path(name)
        try:
            clip, already_voiced = _load_clip(path, mode)
            voiced = clip if already_voiced else trim_to_voiced(clip, ep)
            rate = voiced.sample_rate_hz
            if rate not in banks:
                banks[rate] = build_mel_filterbank(cfg, rate)
            label = args.label if args.label is not None else _infer_label(path)
            fv = extract_features(voiced, cfg, banks[rate], label=label, source_id=path.stem)
            out_path = out_dir / (path.stem + ".feat")
            out_path.write_text(write_feature_text(fv))
            overall_min = min(overall_min, fv.values.min())
            overall_max = max(overall_max, fv.values.max())
            n_frames = frame_count(len(voiced), cfg)
            print(
                f"{path.name}: voiced {1000 * voiced.duration_s:.1f} ms, "
                f"{n_frames} frames -> {out_path.name}"
            )
            _status(True, path, str(out_path))
        except (DigitrecError, OSError) as exc:
            failures += 1
            _status(False, path, f"{type(exc).__name__}: {exc}")
    if np.isfinite(overall_min):
        print(f"feature value range across outputs: {overall_min:.4f} .. {overall_max:.4f}")
    if failures:
        print(f"{failures} of {len(args.inputs)} inputs failed", file=sys.stderr)
    return 1 if failures else 0


def run_train(args) -> int:
    data = load_dataset(
        args.manifest,
        feature_cfg=_feature_config(args),
        endpoint_params=_endpoint_params(args),
        wav_mode=_wav_mode(args),
    )
    cfg = TrainingConfig(
        learning_rate=args.lr,
        max_epochs=args.max_epochs,
        target_sse=args.target_sse,
        seed=args.seed,
        shuffle_each_epoch=not args.no_shuffle,
    )
    topology = (data.items[0].values.size, args.hidden, data.class_count)

    def log(epoch, sse):
        if args.log_every and epoch % args.log_every == 0:
            print(f"epoch {epoch}  sse {sse:.6f}")

    net, history = train_network(data, cfg, topology, on_epoch=log)
    reason = (
        "target sse reached"
        if history[-1] <= cfg.target_sse
        else "max epochs reached"
    )
    print(f"stopped after {len(history)} epochs ({reason}); final sse {history[-1]:.6f}")
    out = pathlib.Path(args.out)
    out.write_bytes(save_model(net))
    print(f"model written to {out}")
    _status(True, out)
    return 0


def run_eval(args) -> int:
    net = load_model(pathlib.Path(args.model).read_bytes())
    data = load_dataset(
        args.manifest,
        feature_cfg=_feature_config(args),
        endpoint_params=_endpoint_params(args),
        wav_mode=_wav_mode(args),
    )
    report = evaluate(net, data)
    print(report.render(tsv=args.tsv), end="")
    return 0


def run_predict(args) -> int:
    net = load_model(pathlib.Path(args.model).read_bytes())
    path = pathlib.Path(args.wav)
    clip, already_voiced = _load_clip(path, _wav_mode(args))
    voiced = clip if already_voiced else trim_to_voiced(clip, _endpoint_params(args))
    cfg = _feature_config(args)
    fv = extract_features(voiced, cfg, source_id=path.stem)
    label, scores = classify(net, fv)
    print(f"predicted digit: {label}")
    ranked = sorted(enumerate(scores), key=lambda kv: (-kv[1], kv[0]))
    for digit, score in ranked:
        print(f"  {digit}: {score:.6f}")
    print(f"score sum (sigmoid outputs, not a distribution): {scores.sum():.6f}")
    _status(True, path, f"label={label}")
    return 0


def run_synth(args) -> int:
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    items = synth_corpus(args.seed, args.per_class, args.rate)
    names = []
    for i, (clip, label) in enumerate(items):
        idx = i % args.per_class
        name = f"d{label}_{idx:02d}.wav"
        (out_dir / name).write_bytes(write_wav(clip, bits=8))
        names.append((name, label))
        _status(True, out_dir / name)
    train_items, test_items = parity_split(names, args.per_class)
    for manifest_name, subset in (("train_manifest.txt", train_items), ("test_manifest.txt", test_items)):
        lines = "".join(f"{name} {label}\n" for name, label in subset)
        (out_dir / manifest_name).write_text(lines)
    print(
        f"wrote {len(names)} wav files, train_manifest.txt ({len(train_items)} items), "
        f"test_manifest.txt ({len(test_items)} items) to {out_dir}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="digitrec",
        description="Isolated spoken-digit recognition: endpointing, MFCC features, backprop MLP.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser(
        "extract",
        help="extract feature files from recordings",
        description="Decode each input, find its voiced segment, and write one "
        "feature file per input. Integer-text inputs are treated as already voiced. "
        "A label is taken from --label or from a parent directory named 0..9.",
        formatter_class=fmt,
    )
    p.add_argument("inputs", nargs="+", help="wav or integer-text recordings")
    p.add_argument("--out-dir", required=True, help="directory for .feat files")
    p.add_argument("--label", type=int, default=None, help="force this class label on all outputs")
    _add_feature_flags(p)
    _add_endpoint_flags(p)
    _add_wav_flags(p)
    p.set_defaults(func=run_extract)

    p = sub.add_parser(
        "train",
        help="train a network on a labeled dataset",
        description="Train an MLP on a manifest (or class-directory tree) and write the model file.",
        formatter_class=fmt,
    )
    p.add_argument("manifest", help="manifest file or class-directory dataset")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--hidden", type=int, default=16, help="hidden layer size")
    p.add_argument("--lr", type=float, default=0.2, help="learning rate")
    p.add_argument("--max-epochs", type=int, default=10000, help="epoch cap")
    p.add_argument("--target-sse", type=float, default=0.01, help="stop once epoch SSE falls this low")
    p.add_argument("--seed", type=int, default=42, help="initialization/shuffle seed (nonzero)")
    p.add_argument("--no-shuffle", action="store_true", help="present patterns in fixed order")
    p.add_argument("--log-every", type=int, default=100, help="log SSE every N epochs (0 = quiet)")
    _add_feature_flags(p)
    _add_endpoint_flags(p)
    _add_wav_flags(p)
    p.set_defaults(func=run_train)

    p = sub.add_parser(
        "eval",
        help="evaluate a model on a labeled dataset",
        description="Print per-digit recognition counts and rates, both aggregate rates, "
        "and the confusion matrix.",
        formatter_class=fmt,
    )
    p.add_argument("manifest", help="manifest file or class-directory dataset")
    p.add_argument("--model", required=True, help="model file to evaluate")
    p.add_argument("--tsv", action="store_true", help="machine-readable tab-separated output")
    _add_feature_flags(p)
    _add_endpoint_flags(p)
    _add_wav_flags(p)
    p.set_defaults(func=run_eval)

    p = sub.add_parser(
        "predict",
        help="classify one recording",
        description="Print the predicted digit and all output scores, best first.",
        formatter_class=fmt,
    )
    p.add_argument("wav", help="wav or integer-text recording")
    p.add_argument("--model", required=True, help="model file")
    _add_feature_flags(p)
    _add_endpoint_flags(p)
    _add_wav_flags(p)
    p.set_defaults(func=run_predict)

    p = sub.add_parser(
        "synth",
        help="generate the synthetic tone corpus",
        description="Write a deterministic ten-class corpus of 8 kHz 8-bit wav files plus "
        "train/test manifests (even clip indices train, odd test).",
        formatter_class=fmt,
    )
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=42, help="corpus seed (nonzero)")
    p.add_argument("--per-class", type=int, default=30, help="clips per digit class")
    p.add_argument("--rate", type=int, default=8000, help="sample rate in Hz")
    p.set_defaults(func=run_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DigitrecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
