"""Orientation-invariant magnitude, windowing and window labelling."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import RecordingMismatch, RecordingTooShort
from .ingest import AnnotationTrack, RawRecording

NEGATIVE = "negative"
SPIN = "spin"
# both spin directions count as one positive class
LABEL_MAP = {"spin_cw": SPIN, "spin_ccw": SPIN}

GAP_FACTOR = 2.0


@dataclass(frozen=True)
class WindowSpec:
    length_samples: int = 12
    overlap_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.length_samples < 1:
            raise ValueError("length_samples must be positive")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError("overlap_fraction must be in [0, 1)")
        if self.hop < 1:
            raise ValueError("window hop rounds to zero")

    @property
    def hop(self) -> int:
        return round(self.length_samples * (1.0 - self.overlap_fraction))


@dataclass(frozen=True, eq=False)
class LabeledWindow:
    recording_id: str
    start_index: int
    t_start: float
    t_end: float
    xyz: np.ndarray  # (L, 3)
    amag: np.ndarray  # (L,)
    label: str | None = None

    @property
    def x(self) -> np.ndarray:
        return self.xyz[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.xyz[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.xyz[:, 2]

    def __len__(self) -> int:
        return len(self.amag)

    def with_label(self, label: str) -> LabeledWindow:
        return LabeledWindow(
            self.recording_id, self.start_index, self.t_start, self.t_end, self.xyz, self.amag, label
        )


def magnitude_of(xyz: np.ndarray) -> np.ndarray:
    xyz = np.asarray(xyz, dtype=np.float64)
    return np.sqrt(np.sum(xyz * xyz, axis=-1))


def magnitude(rec: RawRecording) -> np.ndarray:
    """Per-sample (t, amag) pairs as an (n, 2) array."""
    return np.column_stack([rec.t, magnitude_of(rec.xyz)])


def segment_bounds(rec: RawRecording) -> list[tuple[int, int]]:
    """Half-open index ranges of gap-free runs.

    A gap is any step longer than twice the nominal sample period.
    """
    if len(rec) == 0:
        return []
    breaks = np.flatnonzero(np.diff(rec.t) > GAP_FACTOR * rec.period_ms) + 1
    edges = [0, *breaks.tolist(), len(rec)]
    return list(zip(edges[:-1], edges[1:]))


def window_starts(n: int, length: int, hop: int) -> range:
    if n < length:
        return range(0)
    return range(0, (n - length) // hop * hop + 1, hop)


def make_windows(
    rec: RawRecording, spec: WindowSpec = WindowSpec(), recording_id: str | None = None
) -> list[LabeledWindow]:
    """Slice a recording into overlapping windows, each segment independently.

    Trailing samples that do not fill a window are dropped.
    """
    rid = rec.device_id if recording_id is None else recording_id
    L, hop = spec.length_samples, spec.hop
    if len(rec) < L:
        raise RecordingTooShort(f"{len(rec)} samples, window needs {L}")
    amag = magnitude_of(rec.xyz)
    out = []
    for lo, hi in segment_bounds(rec):
        for s in window_starts(hi - lo, L, hop):
            i = lo + s
            out.append(
                LabeledWindow(
                    rid,
                    i,
                    float(rec.t[i]),
                    float(rec.t[i + L - 1] + rec.period_ms),
                    rec.xyz[i : i + L],
                    amag[i : i + L],
                )
            )
    if not out:
        raise RecordingTooShort(f"no gap-free run of {L} samples")
    return out


def label_windows(
    windows: Sequence[LabeledWindow],
    track: AnnotationTrack,
    min_overlap_fraction: float = 0.5,
    label_map: dict[str, str] = LABEL_MAP,
) -> list[LabeledWindow]:
    out = []
    for w in windows:
        if w.recording_id != track.recording_id:
            raise RecordingMismatch(f"window from {w.recording_id!r}, track for {track.recording_id!r}")
        span = w.t_end - w.t_start
        cover: dict[str, float] = defaultdict(float)
        first_start: dict[str, float] = {}
        for iv in track.intervals:
            ov = min(w.t_end, iv.end_ms) - max(w.t_start, iv.start_ms)
            if ov <= 0:
                continue
            lab = label_map.get(iv.label, iv.label)
            cover[lab] += ov
            first_start.setdefault(lab, iv.start_ms)
        best = NEGATIVE
        qualifying = [lab for lab, ov in cover.items() if ov >= min_overlap_fraction * span]
        if qualifying:
            best = min(qualifying, key=lambda lab: (-cover[lab], first_start[lab]))
        out.append(w.with_label(best))
    return out
