"""Window feature dictionary (statistical, temporal, spectral) and z-scoring.

Conventions for degenerate windows: any moment ratio, correlation or
spectral quantity whose denominator vanishes is reported as 0, so feature
rows are always finite.
"""

from __future__ import annotations

import csv
import hashlib
import io
import statistics
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadHeader, EmptyInput, MixedWindowLength, RowParse, SchemaMismatch, TooFewRows
from .preprocess import LabeledWindow

CHANNELS = ("x", "y", "z", "amag")
PAIRS = (("x", "y"), ("x", "z"), ("y", "z"))
STAT_NAMES = ("kurtosis", "skewness", "mean", "std", "iqr", "rms", "mad")
TEMPORAL_NAMES = ("autocorr", "zero_crossings")

FS_HZ = 12.5
N_CEPSTRAL = 4
VAR_EPS = 1e-12
LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class FeatureConfig:
    fs: float = FS_HZ
    n_cepstral: int = N_CEPSTRAL

    def spectral_names(self) -> tuple[str, ...]:
        ceps = tuple(f"cepstral_{i}" for i in range(self.n_cepstral))
        return ("max_frequency", "median_frequency", *ceps, "max_power", "power_bandwidth",
                "fundamental_frequency")


@dataclass(frozen=True)
class FeatureSchema:
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate feature names")

    def __len__(self) -> int:
        return len(self.names)

    @property
    def hash(self) -> str:
        return hashlib.sha256("\n".join(self.names).encode()).hexdigest()[:16]

    @classmethod
    def for_config(cls, config: FeatureConfig = FeatureConfig()) -> FeatureSchema:
        per_channel = STAT_NAMES + TEMPORAL_NAMES + config.spectral_names()
        names = [f"{ch}.{f}" for ch in CHANNELS for f in per_channel]
        names += [f"{a}{b}.pairwise_corr" for a, b in PAIRS]
        return cls(tuple(names))


@dataclass(eq=False)
class Dataset:
    schema: FeatureSchema
    X: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    starts: np.ndarray = field(default=None)  # window start indices, for export

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, len(self.schema))
        self.labels = np.asarray(self.labels, dtype=object)
        self.groups = np.asarray(self.groups, dtype=object)
        if self.starts is None:
            self.starts = np.zeros(len(self.X), dtype=np.int64)
        self.starts = np.asarray(self.starts, dtype=np.int64)
        if not len(self.X) == len(self.labels) == len(self.groups) == len(self.starts):
            raise ValueError("rows, labels, groups and starts must have equal length")

    def __len__(self) -> int:
        return len(self.X)

    def subset(self, idx) -> Dataset:
        return Dataset(self.schema, self.X[idx], self.labels[idx], self.groups[idx], self.starts[idx])

    def with_X(self, X: np.ndarray) -> Dataset:
        return Dataset(self.schema, X, self.labels, self.groups, self.starts)

    def fingerprint(self) -> str:
        h = hashlib.sha256(self.schema.hash.encode())
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update("\x1f".join(map(str, self.labels)).encode())
        return h.hexdigest()[:16]


def concat_datasets(parts: Sequence[Dataset]) -> Dataset:
    """Stack feature tables that share one schema, keeping row order."""
    if not parts:
        raise EmptyInput("no datasets to combine")
    schema = parts[0].schema
    for ds in parts[1:]:
        if ds.schema.hash != schema.hash:
            raise SchemaMismatch("feature files were built with different schemas")
    return Dataset(
        schema,
        np.vstack([ds.X for ds in parts]),
        np.concatenate([ds.labels for ds in parts]),
        np.concatenate([ds.groups for ds in parts]),
        np.concatenate([ds.starts for ds in parts]),
    )


@dataclass(frozen=True)
class NormalizationStats:
    mean: np.ndarray
    std: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.std < VAR_EPS


# ---------------------------------------------------------------------------
# statistical


def iqr(v: np.ndarray) -> float:
    """Interquartile range using exclusive-method linear interpolation
    (quantile positions p*(n+1), as in ``statistics.quantiles(method="exclusive")``)."""
    q1, _, q3 = statistics.quantiles(v.tolist(), n=4, method="exclusive")
    return q3 - q1


def _mean(v: np.ndarray) -> float:
    return v.sum() / len(v)


def _median(v: np.ndarray) -> float:
    # np.median carries a lot of overhead for 12-sample windows
    s = np.sort(v)
    n = len(s)
    return float(s[n // 2]) if n % 2 else float(0.5 * (s[n // 2 - 1] + s[n // 2]))


def stat_features(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    mean = _mean(v)
    d = v - mean
    m2 = _mean(d * d)
    if m2 < VAR_EPS:
        kurt = skew = 0.0
    else:
        kurt = _mean(d**4) / m2**2 - 3.0
        skew = _mean(d**3) / m2**1.5
    med = _median(v)
    return np.array([
        kurt,
        skew,
        mean,
        np.sqrt(m2),
        iqr(v),
        np.sqrt(_mean(v * v)),
        _median(np.abs(v - med)),
    ])


# ---------------------------------------------------------------------------
# temporal


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da, db = a - _mean(a), b - _mean(b)
    saa, sbb = np.dot(da, da), np.dot(db, db)
    if saa < VAR_EPS * len(a) or sbb < VAR_EPS * len(b):
        return 0.0
    return min(1.0, max(-1.0, float(np.dot(da, db) / np.sqrt(saa * sbb))))


def autocorr_lag1(v) -> float:
    v = np.asarray(v, dtype=np.float64)
    return pearson(v[:-1], v[1:])


def zero_crossings(v) -> int:
    """Sign changes of the mean-removed series; exact zeros keep the previous sign."""
    v = np.asarray(v, dtype=np.float64)
    d = v - _mean(v)
    if _mean(d * d) < VAR_EPS:
        return 0
    signs = np.sign(d)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def temporal_features(xyz: np.ndarray, amag: np.ndarray) -> dict[str, float]:
    chans = {"x": xyz[:, 0], "y": xyz[:, 1], "z": xyz[:, 2], "amag": amag}
    out: dict[str, float] = {}
    for name, v in chans.items():
        out[f"{name}.autocorr"] = autocorr_lag1(v)
        out[f"{name}.zero_crossings"] = float(zero_crossings(v))
    for a, b in PAIRS:
        out[f"{a}{b}.pairwise_corr"] = pearson(chans[a], chans[b])
    return out


# ---------------------------------------------------------------------------
# spectral


def power_spectrum(v) -> np.ndarray:
    """One-sided power |X[k]|^2 / L, k = 0..L//2, of the mean-removed series."""
    v = np.asarray(v, dtype=np.float64)
    X = np.fft.rfft(v - _mean(v))
    return (X.real**2 + X.imag**2) / len(v)


def _first_reaching(cum: np.ndarray, level: float) -> int:
    return int(np.searchsorted(cum, level, side="left"))


def spectral_features(v, fs: float = FS_HZ, n_cepstral: int = N_CEPSTRAL) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    L = len(v)
    out = np.zeros(5 + n_cepstral)
    if _mean((v - _mean(v)) ** 2) < VAR_EPS:
        return out
    P = power_spectrum(v)
    freqs = np.arange(len(P)) * fs / L
    cum = np.cumsum(P)
    total = cum[-1]
    if total <= 0:
        return out
    ceps = np.fft.irfft(np.log(P + LOG_FLOOR), n=L)[:n_cepstral]
    out[0] = freqs[_first_reaching(cum, 0.95 * total)]
    out[1] = freqs[_first_reaching(cum, 0.5 * total)]
    out[2 : 2 + n_cepstral] = ceps
    out[2 + n_cepstral] = P.max()
    out[3 + n_cepstral] = freqs[_first_reaching(cum, 0.975 * total)] - freqs[
        _first_reaching(cum, 0.025 * total)
    ]
    out[4 + n_cepstral] = freqs[1 + int(np.argmax(P[1:]))]
    return out


# ---------------------------------------------------------------------------
# assembly


def window_vector(xyz: np.ndarray, amag: np.ndarray, config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Feature vector of one window, ordered as ``FeatureSchema.for_config(config)``."""
    temporal = temporal_features(xyz, amag)
    chans = {"x": xyz[:, 0], "y": xyz[:, 1], "z": xyz[:, 2], "amag": amag}
    parts = []
    for name in CHANNELS:
        v = chans[name]
        parts.append(stat_features(v))
        parts.append([temporal[f"{name}.autocorr"], temporal[f"{name}.zero_crossings"]])
        parts.append(spectral_features(v, config.fs, config.n_cepstral))
    parts.append([temporal[f"{a}{b}.pairwise_corr"] for a, b in PAIRS])
    return np.concatenate(parts)


def featurize(
    windows: Sequence[LabeledWindow],
    config: FeatureConfig = FeatureConfig(),
    groups: Sequence[str] | None = None,
) -> Dataset:
    """Feature matrix with one row per window, in window order.

    ``groups`` defaults to each window's recording id. Unlabelled windows get
    an empty-string label.
    """
    if len(windows) == 0:
        raise EmptyInput("no windows to featurize")
    L = len(windows[0])
    if L < 4:
        raise EmptyInput(f"windows of {L} samples are too short for spectral features")
    if any(len(w) != L for w in windows):
        raise MixedWindowLength("windows differ in length")
    schema = FeatureSchema.for_config(config)
    X = np.vstack([window_vector(w.xyz, w.amag, config) for w in windows])
    labels = [w.label or "" for w in windows]
    if groups is None:
        groups = [w.recording_id for w in windows]
    return Dataset(schema, X, labels, groups, [w.start_index for w in windows])


def fit_normalizer(ds: Dataset) -> NormalizationStats:
    if len(ds) < 2:
        raise TooFewRows(f"normalizer needs at least 2 rows, got {len(ds)}")
    return NormalizationStats(ds.X.mean(axis=0), ds.X.std(axis=0))


def normalize_rows(X: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    const = stats.constant
    safe = np.where(const, 1.0, stats.std)
    return np.where(const, 0.0, (X - stats.mean) / safe)


def apply_normalizer(ds: Dataset, stats: NormalizationStats) -> Dataset:
    return ds.with_X(normalize_rows(ds.X, stats))


# ---------------------------------------------------------------------------
# feature file

FILE_KEY_COLUMNS = ["recording_id", "window_start_index", "label"]


def write_dataset_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FILE_KEY_COLUMNS + list(ds.schema.names))
    for g, s, lab, row in zip(ds.groups, ds.starts, ds.labels, ds.X):
        w.writerow([g, int(s), lab, *(repr(float(v)) for v in row)])
    return buf.getvalue()


def read_dataset_csv(text: str) -> Dataset:
    """Inverse of :func:`write_dataset_csv`; the recording id becomes the group."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or rows[0][:3] != FILE_KEY_COLUMNS:
        raise BadHeader(f"feature file must start with {','.join(FILE_KEY_COLUMNS)}")
    try:
        schema = FeatureSchema(tuple(rows[0][3:]))
    except ValueError as e:
        raise BadHeader(str(e)) from None
    X = np.empty((len(rows) - 1, len(schema)))
    groups, starts, labels = [], [], []
    for i, row in enumerate(rows[1:]):
        line_no = i + 2
        if len(row) != 3 + len(schema):
            raise RowParse(line_no, f"expected {3 + len(schema)} fields")
        try:
            starts.append(int(row[1]))
            X[i] = [float(v) for v in row[3:]]
        except ValueError as e:
            raise RowParse(line_no, str(e)) from None
        if not np.all(np.isfinite(X[i])):
            raise RowParse(line_no, "non-finite feature value")
        groups.append(row[0])
        labels.append(row[2])
    return Dataset(schema, X, labels, groups, starts)
