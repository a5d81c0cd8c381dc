"""``collarwave`` command line.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 validation
failure, 4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import CollarwaveError, InputError, ValidationFailure
from .evaluate import per_group_report, plot_recall, pooled_report, to_csv, to_text
from .features import (
    FeatureConfig,
    apply_normalizer,
    concat_datasets,
    featurize,
    fit_normalizer,
    read_dataset_csv,
    write_dataset_csv,
)
from .ingest import (
    RawRecording,
    merge_annotations,
    parse_annotations_csv,
    parse_cwa,
    parse_samples_csv,
    trim_recording,
    validate_rate,
    write_samples_csv,
)
from .metrics import metrics
from .models import FORMAT_VERSION, TrainConfig, canonical_kind, cross_validate, load_model, save_model, train
from .preprocess import WindowSpec, label_windows, make_windows
from .stream import Detector, DetectorConfig, read_live

log = logging.getLogger("collarwave")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_VALIDATION, EXIT_INTERNAL = 0, 1, 2, 3, 4
MODEL_CHOICES = ["nb", "logreg", "knn", "rf", "svm"]


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _write(path: str | None, data: str | bytes) -> None:
    if path is None or path == "-":
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        sys.stdout.flush()
        return
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"})) as f:
        f.write(data)


def load_recording(path: str, rate: float = 12.5, recording_id: str | None = None) -> RawRecording:
    data = Path(path).read_bytes()
    rid = Path(path).stem if recording_id is None else recording_id
    if data[:2] == b"MD":
        rec = parse_cwa(data)
        for w in rec.warnings:
            log.warning("%s: %s", path, w)
        return RawRecording(rid, rec.nominal_rate_hz, rec.t, rec.xyz, rec.warnings)
    return parse_samples_csv(data.decode("utf-8"), rid, rate)


def _keep_interval(text: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START_MS:END_MS, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _models(text: str) -> list[str]:
    kinds = [k for k in text.split(",") if k]
    try:
        return [canonical_kind(k) for k in kinds]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


# ---------------------------------------------------------------------------
# commands


def cmd_convert(args) -> int:
    data = Path(args.inp).read_bytes()
    rec = parse_cwa(data)
    for w in rec.warnings:
        log.warning("%s: %s", args.inp, w)
    _write(args.out, write_samples_csv(rec))
    return EXIT_OK


def cmd_validate(args) -> int:
    rec = load_recording(args.inp, args.rate)
    rep = validate_rate(rec, args.rate, args.tol)
    print(json.dumps({"samples": len(rec), "empirical_hz": rep.empirical_hz, "expected_hz": rep.expected_hz,
                      "rel_tol": rep.rel_tol, "pass": rep.passed}))
    if not rep.passed:
        raise ValidationFailure(f"empirical rate {rep.empirical_hz:.4f} Hz outside {args.tol:g} of {args.rate:g} Hz")
    return EXIT_OK


def cmd_featurize(args) -> int:
    rec = load_recording(args.samples, args.rate, args.recording_id)
    if args.keep:
        rec = trim_recording(rec, sorted(args.keep))
    track = parse_annotations_csv(Path(args.annotations).read_text(encoding="utf-8"), rec.device_id)
    if args.annotations2:
        other = parse_annotations_csv(Path(args.annotations2).read_text(encoding="utf-8"), rec.device_id)
        track = merge_annotations(track, other)
    spec = WindowSpec(args.window, args.overlap)
    windows = label_windows(make_windows(rec, spec), track, args.min_overlap)
    ds = featurize(windows, FeatureConfig(fs=rec.nominal_rate_hz, n_cepstral=args.n_cepstral))
    _write(args.out, write_dataset_csv(ds))
    return EXIT_OK


def _read_features(paths: Sequence[str]):
    return concat_datasets([read_dataset_csv(Path(p).read_text(encoding="utf-8")) for p in paths])


def _train_config(args, kind: str | None = None) -> TrainConfig:
    return TrainConfig(kind or args.model, seed=args.seed, positive_label=args.positive,
                       class_weight=args.class_weight)


def cmd_train(args) -> int:
    ds = _read_features(args.features)
    stats = fit_normalizer(ds)
    model = train(apply_normalizer(ds, stats), _train_config(args), stats)
    _write(args.out, save_model(model))
    return EXIT_OK


def cmd_cv(args) -> int:
    ds = _read_features(args.features)
    rep = cross_validate(ds, _train_config(args), args.k, args.seed)
    m = metrics(rep.confusion)
    doc = rep.as_dict()
    doc["metrics"] = {"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support,
                      "accuracy": m.accuracy, "flags": list(m.flags)}
    _write(args.out, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    ds = _read_features(args.features)
    if args.mode == "pooled":
        rows = pooled_report(ds, args.models, _train_config(args, "nb"), args.k)
    else:
        rows = []
        for kind in args.models:
            rows += per_group_report(ds, _train_config(args, kind), args.k)
    if args.out is None:
        _write(None, to_csv(rows))
    else:
        _write(args.out, to_csv(rows))
        _write(None, to_text(rows))
    if args.plot:
        plot_recall(rows, args.plot)
    return EXIT_OK


def cmd_detect(args) -> int:
    model = load_model(Path(args.model).read_bytes())
    config = DetectorConfig(m=args.m, n=args.n, refractory_ms=args.refractory_ms, nominal_rate_hz=args.rate)
    detector = Detector(model, config)
    if args.replay:
        samples = load_recording(args.replay, args.rate).samples
    else:
        samples = read_live(sys.stdin)
    for alert in detector.run(samples):
        print(alert.format(), flush=True)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> Parser:
    p = Parser(prog="collarwave", description="Spin detection from collar accelerometer logs.")
    p.add_argument("--version", action="version",
                   version=f"collarwave {__version__} (model format {FORMAT_VERSION})")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=Parser)
    sub.required = True

    c = sub.add_parser("convert", help="binary log to samples CSV")
    c.add_argument("--in", dest="inp", required=True, metavar="FILE.cwa")
    c.add_argument("--out", metavar="FILE.csv", help="default: stdout")
    c.set_defaults(func=cmd_convert)

    c = sub.add_parser("validate", help="check the empirical sample rate")
    c.add_argument("--in", dest="inp", required=True, metavar="FILE", help="samples CSV or binary log")
    c.add_argument("--rate", type=float, default=12.5, help="expected rate in Hz (default 12.5)")
    c.add_argument("--tol", type=float, default=0.02, help="relative tolerance (default 0.02)")
    c.set_defaults(func=cmd_validate)

    c = sub.add_parser("featurize", help="windowed feature table from samples + annotations")
    c.add_argument("--samples", required=True, metavar="FILE", help="samples CSV or binary log")
    c.add_argument("--annotations", required=True, metavar="FILE.csv")
    c.add_argument("--annotations2", metavar="FILE.csv", help="second annotator; only agreed spans are kept")
    c.add_argument("--out", metavar="FILE.csv", help="default: stdout")
    c.add_argument("--recording-id", help="id written to the feature file (default: samples file stem)")
    c.add_argument("--rate", type=float, default=12.5, help="nominal rate for CSV input (default 12.5)")
    c.add_argument("--window", type=_positive_int, default=12, help="window length in samples (default 12)")
    c.add_argument("--overlap", type=float, default=0.5, help="window overlap fraction (default 0.5)")
    c.add_argument("--min-overlap", type=float, default=0.5,
                   help="fraction of a window an annotation must cover to label it (default 0.5)")
    c.add_argument("--n-cepstral", type=_positive_int, default=4, help="cepstral coefficients per channel (default 4)")
    c.add_argument("--keep", type=_keep_interval, action="append", metavar="START_MS:END_MS",
                   help="keep only samples inside these spans (repeatable)")
    c.set_defaults(func=cmd_featurize)

    def model_opts(c, with_model=True):
        if with_model:
            c.add_argument("--model", choices=MODEL_CHOICES, default="nb", help="classifier (default nb)")
        c.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
        c.add_argument("--positive", default="spin", help="positive class label (default spin)")
        c.add_argument("--class-weight", choices=["balanced"], default=None,
                       help="inverse-frequency class weighting")

    c = sub.add_parser("train", help="fit a classifier on a feature file")
    c.add_argument("--features", required=True, nargs="+", metavar="FILE.csv",
                   help="one or more feature files with the same columns")
    c.add_argument("--out", metavar="MODEL.json", help="default: stdout")
    model_opts(c)
    c.set_defaults(func=cmd_train)

    c = sub.add_parser("cv", help="stratified k-fold cross-validation")
    c.add_argument("--features", required=True, nargs="+", metavar="FILE.csv",
                   help="one or more feature files with the same columns")
    c.add_argument("--k", type=_positive_int, default=10, help="folds (default 10)")
    c.add_argument("--out", metavar="REPORT.json", help="default: stdout")
    model_opts(c)
    c.set_defaults(func=cmd_cv)

    c = sub.add_parser("report", help="per-dog or pooled metrics table")
    c.add_argument("--features", required=True, nargs="+", metavar="FILE.csv",
                   help="one or more feature files with the same columns")
    c.add_argument("--mode", choices=["per-dog", "pooled"], default="pooled")
    c.add_argument("--models", type=_models, default=_models("nb,rf,svm,logreg,knn"),
                   help="comma-separated kinds (default nb,rf,svm,logreg,knn)")
    c.add_argument("--k", type=_positive_int, default=10, help="folds (default 10)")
    c.add_argument("--out", metavar="REPORT.csv", help="CSV report; the text table then goes to stdout")
    c.add_argument("--plot", metavar="FILE.svg", help="bar chart of recall")
    model_opts(c, with_model=False)
    c.set_defaults(func=cmd_report)

    c = sub.add_parser("detect", help="streaming spin detector")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--replay", metavar="FILE", help="samples CSV or binary log to replay")
    src.add_argument("--live", action="store_true", help="read 't_ms x_g y_g z_g' lines from stdin")
    c.add_argument("--model", required=True, metavar="MODEL.json")
    c.add_argument("--m", type=_positive_int, default=2, help="positive windows needed (default 2)")
    c.add_argument("--n", type=_positive_int, default=3, help="out of the last n windows (default 3)")
    c.add_argument("--refractory-ms", type=float, default=30000.0, help="alert hold-off (default 30000)")
    c.add_argument("--rate", type=float, default=12.5, help="nominal sample rate (default 12.5)")
    c.set_defaults(func=cmd_detect)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    if args.command == "detect" and args.m > args.n:
        print("collarwave detect: error: --m must not exceed --n", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CollarwaveError as e:
        print(f"collarwave {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, UnicodeDecodeError, ValueError) as e:
        print(f"collarwave {args.command}: {InputError.__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # pragma: no cover - last-resort guard
        print(f"collarwave {args.command}: internal error: {e!r}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())
