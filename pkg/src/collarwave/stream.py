"""Online spin detector: sliding window, per-window classification, m-of-n debounce."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, TextIO

import numpy as np

from .errors import NonMonotonicTimestamp, RowParse, SchemaMismatch
from .features import FeatureConfig, FeatureSchema, featurize, window_vector
from .ingest import RawRecording, Sample
from .models import ModelArtifact, normalize_for, predict_many
from .preprocess import GAP_FACTOR, WindowSpec, make_windows, magnitude_of


@dataclass(frozen=True)
class DetectorConfig:
    window: WindowSpec = WindowSpec()
    m: int = 2
    n: int = 3
    refractory_ms: float = 30000.0
    nominal_rate_hz: float = 12.5

    def __post_init__(self) -> None:
        if not 1 <= self.m <= self.n:
            raise ValueError("need 1 <= m <= n")
        if self.refractory_ms < 0:
            raise ValueError("refractory_ms must be >= 0")
        if not self.nominal_rate_hz > 0:
            raise ValueError("nominal_rate_hz must be positive")


class WindowDecision(NamedTuple):
    start_ms: float
    end_ms: float
    label: str
    score: float
    positive: bool


class AlertEvent(NamedTuple):
    t_ms: float
    confidence: float
    window_span: tuple[float, float]

    def format(self) -> str:
        lo, hi = self.window_span
        return f"ALERT t_ms={int(round(self.t_ms))} confidence={self.confidence:.3f} span={int(round(lo))}-{int(round(hi))}"


class Debouncer:
    """Fires when at least m of the last n decisions are positive, then holds
    off for ``refractory_ms``."""

    def __init__(self, m: int = 2, n: int = 3, refractory_ms: float = 30000.0) -> None:
        self.m, self.n, self.refractory_ms = m, n, refractory_ms
        self.reset()

    def reset(self) -> None:
        self.history: deque[WindowDecision] = deque(maxlen=self.n)
        self.last_alert_ms: float | None = None

    def in_refractory(self, t_ms: float) -> bool:
        return self.last_alert_ms is not None and t_ms - self.last_alert_ms < self.refractory_ms

    def update(self, decision: WindowDecision, t_ms: float) -> AlertEvent | None:
        self.history.append(decision)
        hits = [d for d in self.history if d.positive]
        if len(hits) < self.m or self.in_refractory(t_ms):
            return None
        self.last_alert_ms = t_ms
        confidence = float(np.clip(np.mean([d.score for d in hits]), 0.0, 1.0))
        return AlertEvent(t_ms, confidence, (hits[0].start_ms, hits[-1].end_ms))


def feature_config_for(model: ModelArtifact, nominal_rate_hz: float) -> FeatureConfig:
    n_ceps = sum(1 for name in model.meta.get("schema", ()) if name.startswith("amag.cepstral_"))
    cfg = FeatureConfig(fs=nominal_rate_hz, n_cepstral=n_ceps)
    if FeatureSchema.for_config(cfg).hash != model.schema_hash:
        raise SchemaMismatch("model was not trained on the window feature schema")
    return cfg


class Detector:
    """Single-writer streaming detector; push samples in time order."""

    def __init__(self, model: ModelArtifact, config: DetectorConfig = DetectorConfig()) -> None:
        self.model = model
        self.config = config
        self.features = feature_config_for(model, config.nominal_rate_hz)
        self.period_ms = 1000.0 / config.nominal_rate_hz
        self.debouncer = Debouncer(config.m, config.n, config.refractory_ms)
        self.reset()

    def reset(self) -> Detector:
        L = self.config.window.length_samples
        self.buffer: deque[Sample] = deque(maxlen=L)
        self.segment_count = 0
        self.last_t: float | None = None
        self.pushed = 0
        self.decisions: list[WindowDecision] = []
        self.debouncer.reset()
        return self

    def _evaluate(self) -> WindowDecision:
        arr = np.array(self.buffer, dtype=np.float64)
        xyz = arr[:, 1:]
        vec = window_vector(xyz, magnitude_of(xyz), self.features)
        pred = predict_many(self.model, normalize_for(self.model, vec[None, :]))[0]
        positive = pred.label == self.model.positive_label
        return WindowDecision(float(arr[0, 0]), float(arr[-1, 0] + self.period_ms), pred.label, pred.score, positive)

    def push_sample(self, s: Sample) -> AlertEvent | None:
        self.pushed += 1
        s = Sample(*map(float, s))
        if self.last_t is not None:
            if s.t <= self.last_t:
                raise NonMonotonicTimestamp(self.pushed, f"t={s.t} after t={self.last_t}")
            if s.t - self.last_t > GAP_FACTOR * self.period_ms:
                self.buffer.clear()
                self.segment_count = 0
        self.last_t = s.t
        self.buffer.append(s)
        self.segment_count += 1
        L, hop = self.config.window.length_samples, self.config.window.hop
        if self.segment_count < L or (self.segment_count - L) % hop:
            return None
        decision = self._evaluate()
        self.decisions.append(decision)
        return self.debouncer.update(decision, s.t)

    def run(self, samples: Iterable[Sample]) -> Iterator[AlertEvent]:
        for s in samples:
            alert = self.push_sample(s)
            if alert is not None:
                yield alert


def batch_decisions(model: ModelArtifact, rec: RawRecording, config: DetectorConfig = DetectorConfig()) -> list[WindowDecision]:
    """Window-level decisions for a whole recording via the batch pipeline."""
    fc = feature_config_for(model, config.nominal_rate_hz)
    windows = make_windows(rec, config.window)
    ds = featurize(windows, fc)
    preds = predict_many(model, normalize_for(model, ds.X))
    return [
        WindowDecision(w.t_start, w.t_end, p.label, p.score, p.label == model.positive_label)
        for w, p in zip(windows, preds)
    ]


def read_live(lines: TextIO | Iterable[str]) -> Iterator[Sample]:
    """Parse ``t_ms x_g y_g z_g`` lines; blank lines are skipped."""
    for line_no, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            continue
        try:
            if len(parts) != 4:
                raise ValueError("expected 4 space-separated fields")
            vals = [float(p) for p in parts]
            if not all(np.isfinite(vals)):
                raise ValueError("non-finite value")
        except ValueError as e:
            raise RowParse(line_no, str(e)) from None
        yield Sample(*vals)
