"""Synthetic collar recordings with known behaviour intervals.

Each synthetic dog wears its collar at a fixed random orientation. Its
recording alternates idle (gravity plus sensor noise), gait (a low-amplitude
bounce near 2 Hz) and spin bursts, where the lateral acceleration rotates in
the body frame at 2-4 Hz on top of a vertical bob.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import AnnotationTrack, LabeledInterval, RawRecording

RATE_HZ = 12.5
PERIOD_MS = 1000.0 / RATE_HZ


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed 3-D rotation matrix (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@dataclass(frozen=True)
class Dog:
    name: str
    orientation: np.ndarray
    gait_hz: float
    spin_amplitude: float
    noise_g: float = 0.02


def make_dog(name: str, rng: np.random.Generator) -> Dog:
    return Dog(name, random_rotation(rng), rng.uniform(1.5, 2.2), rng.uniform(0.8, 1.2))


def _segment(kind: str, n: int, dog: Dog, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / RATE_HZ
    body = np.zeros((n, 3))
    body[:, 2] = 1.0
    if kind == "gait":
        ph = rng.uniform(0, 2 * np.pi)
        f = dog.gait_hz
        body[:, 0] += 0.12 * np.sin(2 * np.pi * f * t + ph)
        body[:, 1] += 0.08 * np.sin(2 * np.pi * 2 * f * t + ph)
        body[:, 2] += 0.25 * np.sin(2 * np.pi * f * t)
    elif kind in ("spin_cw", "spin_ccw"):
        f = rng.uniform(2.0, 4.0)
        sign = 1.0 if kind == "spin_cw" else -1.0
        ph = rng.uniform(0, 2 * np.pi)
        a = dog.spin_amplitude
        body[:, 0] += a * np.cos(2 * np.pi * f * t + ph)
        body[:, 1] += sign * a * np.sin(2 * np.pi * f * t + ph)
        body[:, 2] += 0.3 * np.sin(2 * np.pi * 2 * f * t)
    body += rng.normal(0.0, dog.noise_g, body.shape)
    return body @ dog.orientation.T


def render(dog: Dog, timeline: list[tuple[str, float]], rng: np.random.Generator,
           t0_ms: float = 0.0, recording_id: str | None = None) -> tuple[RawRecording, AnnotationTrack]:
    """Render (behaviour, seconds) segments; spins and idle spans are annotated."""
    rid = dog.name if recording_id is None else recording_id
    parts, intervals = [], []
    i = 0
    for kind, seconds in timeline:
        n = max(1, int(round(seconds * RATE_HZ)))
        parts.append(_segment(kind, n, dog, rng))
        if kind != "gait":
            intervals.append(LabeledInterval(t0_ms + i * PERIOD_MS, t0_ms + (i + n) * PERIOD_MS, kind))
        i += n
    xyz = np.clip(np.vstack(parts), -15.9, 15.9)
    t = t0_ms + np.arange(len(xyz)) * PERIOD_MS
    return RawRecording(rid, RATE_HZ, t, xyz), AnnotationTrack(rid, tuple(intervals), "synthetic")


def random_timeline(rng: np.random.Generator, seconds: float, n_spins: int) -> list[tuple[str, float]]:
    """Background activity with ``n_spins`` spin bursts of 1.8-2.6 s spread through it."""
    gap = seconds / (n_spins + 1)
    out: list[tuple[str, float]] = []
    for _ in range(n_spins + 1):
        left = gap
        while left > 0.5:
            kind = "idle" if rng.random() < 0.5 else "gait"
            d = min(left, rng.uniform(2.0, 6.0))
            out.append((kind, d))
            left -= d
        out.append(("spin_cw" if rng.random() < 0.5 else "spin_ccw", rng.uniform(1.8, 2.6)))
    return out[:-1]


def corpus(n_dogs: int = 3, seconds: float = 45.0, spins_per_dog: int = 5,
           seed: int = 0) -> list[tuple[RawRecording, AnnotationTrack]]:
    rng = np.random.default_rng(seed)
    out = []
    for d in range(n_dogs):
        dog = make_dog(f"dog{d + 1}", rng)
        out.append(render(dog, random_timeline(rng, seconds, spins_per_dog), rng))
    return out


def burst_stream(seed: int = 0, idle_s: float = 60.0, spin_s: float = 2.0,
                 dog: Dog | None = None) -> tuple[RawRecording, tuple[float, float]]:
    """Idle, one spin burst, idle. Returns the recording and the burst span in ms."""
    rng = np.random.default_rng(seed)
    dog = dog or make_dog("stream", rng)
    rec, track = render(dog, [("idle", idle_s), ("spin_cw", spin_s), ("idle", idle_s)], rng)
    burst = next(iv for iv in track.intervals if iv.label == "spin_cw")
    return rec, (burst.start_ms, burst.end_ms)
