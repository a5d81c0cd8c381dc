"""Sensor log and annotation ingestion.

Binary log format (little-endian, a simplified unpacked-mode subset of the AX3
block layout)::

    header block, 1024 bytes
      0   2s    tag "MD"
      2   u16   payload length, always 1020
      4   16s   device id, ASCII, NUL padded
      20  f64   nominal sample rate in Hz
      28  ...   zero padding

    data block, 512 bytes, repeated
      0   2s    tag "AX"
      2   u16   payload length, always 508
      4   f64   timestamp of the first sample, ms since epoch
      12  u16   sample count n, 1..80
      14  6n    n triplets of i16 (x, y, z), 1/256 g per unit
      ..        zero padding
      510 u16   checksum: all 256 u16 words of the block sum to 0 mod 2**16

Sample k of a block is stamped ``block_t + k * 1000 / nominal_rate``.
"""

from __future__ import annotations

import csv
import io
import logging
import struct
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    BadHeader,
    EmptyRecording,
    InvertedInterval,
    MalformedHeader,
    MixedAnnotators,
    NonMonotonicTimestamp,
    OverlapWithinTrack,
    RecordingMismatch,
    RowParse,
    TooFewSamples,
    UnknownLabel,
)

log = logging.getLogger(__name__)

FULL_SCALE_G = 16.0
COUNTS_PER_G = 256
HEADER_SIZE = 1024
BLOCK_SIZE = 512
MAX_BLOCK_SAMPLES = 80
DEVICE_ID_BYTES = 16

LABELS = ("spin_cw", "spin_ccw", "stand", "jump", "sit", "rollover", "idle", "other")

SAMPLES_HEADER = ["t_ms", "x_g", "y_g", "z_g"]
ANNOTATIONS_HEADER = ["start_ms", "end_ms", "label", "annotator"]


class Sample(NamedTuple):
    t: float
    x: float
    y: float
    z: float


@dataclass(frozen=True, eq=False)
class RawRecording:
    """Timestamped triaxial acceleration in g.

    ``t`` has shape (n,), ``xyz`` has shape (n, 3). Decoder warnings (skipped
    blocks) are kept in ``warnings``.
    """

    device_id: str
    nominal_rate_hz: float
    t: np.ndarray
    xyz: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        t = np.ascontiguousarray(self.t, dtype=np.float64).reshape(-1)
        xyz = np.ascontiguousarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        if len(t) != len(xyz):
            raise ValueError("t and xyz lengths differ")
        if not self.nominal_rate_hz > 0:
            raise ValueError("nominal_rate_hz must be positive")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError("timestamps must be finite and non-negative")
        if np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(xyz)) or np.any(np.abs(xyz) > FULL_SCALE_G):
            raise ValueError(f"acceleration outside +/-{FULL_SCALE_G} g")
        t.flags.writeable = False
        xyz.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "xyz", xyz)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def period_ms(self) -> float:
        return 1000.0 / self.nominal_rate_hz

    @property
    def samples(self) -> list[Sample]:
        return [Sample(float(t), *map(float, v)) for t, v in zip(self.t, self.xyz)]

    @classmethod
    def from_samples(
        cls, samples: Sequence[Sample], device_id: str = "", nominal_rate_hz: float = 12.5
    ) -> RawRecording:
        arr = np.asarray(samples, dtype=np.float64).reshape(-1, 4)
        return cls(device_id, nominal_rate_hz, arr[:, 0], arr[:, 1:])

    def same_as(self, other: RawRecording) -> bool:
        return (
            self.device_id == other.device_id
            and self.nominal_rate_hz == other.nominal_rate_hz
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.xyz, other.xyz)
        )


@dataclass(frozen=True, order=True)
class LabeledInterval:
    start_ms: float
    end_ms: float
    label: str

    def __post_init__(self) -> None:
        if not self.start_ms < self.end_ms:
            raise ValueError("start_ms must precede end_ms")
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")

    @property
    def duration_ms(self) -> float:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class AnnotationTrack:
    recording_id: str
    intervals: tuple[LabeledInterval, ...]
    annotator: str

    def __post_init__(self) -> None:
        ivs = tuple(sorted(self.intervals))
        for prev, cur in zip(ivs, ivs[1:]):
            if cur.start_ms < prev.end_ms:
                raise ValueError("overlapping intervals within one track")
        object.__setattr__(self, "intervals", ivs)


@dataclass(frozen=True)
class RateReport:
    empirical_hz: float
    expected_hz: float
    rel_tol: float
    passed: bool


# ---------------------------------------------------------------------------
# binary log


def _checksum_ok(block: bytes) -> bool:
    return sum(struct.unpack("<256H", block)) & 0xFFFF == 0


def _seal(block: bytearray) -> bytes:
    struct.pack_into("<H", block, 510, 0)
    total = sum(struct.unpack("<256H", bytes(block))) & 0xFFFF
    struct.pack_into("<H", block, 510, (-total) & 0xFFFF)
    return bytes(block)


def parse_cwa(data: bytes) -> RawRecording:
    if len(data) < HEADER_SIZE or data[:2] != b"MD":
        raise MalformedHeader("missing 'MD' header block")
    (length,) = struct.unpack_from("<H", data, 2)
    if length != HEADER_SIZE - 4:
        raise MalformedHeader(f"header length field {length}, expected {HEADER_SIZE - 4}")
    device_id = data[4 : 4 + DEVICE_ID_BYTES].rstrip(b"\x00").decode("ascii", "replace")
    (rate,) = struct.unpack_from("<d", data, 20)
    if not (np.isfinite(rate) and rate > 0):
        raise MalformedHeader(f"bad nominal rate {rate!r}")
    period = 1000.0 / rate

    warnings: list[str] = []
    ts: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    last_t = -np.inf
    offset = HEADER_SIZE
    index = 0
    while offset < len(data):
        block = data[offset : offset + BLOCK_SIZE]
        where = f"block {index} at byte {offset}"
        offset += BLOCK_SIZE
        index += 1
        if len(block) < BLOCK_SIZE:
            warnings.append(f"{where}: truncated ({len(block)} bytes), skipped")
            continue
        if block[:2] != b"AX" or struct.unpack_from("<H", block, 2)[0] != BLOCK_SIZE - 4:
            warnings.append(f"{where}: not an AX data block, skipped")
            continue
        if not _checksum_ok(block):
            warnings.append(f"{where}: checksum mismatch, skipped")
            continue
        block_t, n = struct.unpack_from("<dH", block, 4)
        if not 1 <= n <= MAX_BLOCK_SAMPLES or not np.isfinite(block_t) or block_t < 0:
            warnings.append(f"{where}: bad timestamp or sample count {n}, skipped")
            continue
        t = block_t + np.arange(n) * period
        if t[0] <= last_t:
            warnings.append(f"{where}: timestamp goes backwards, skipped")
            continue
        raw = np.frombuffer(block, dtype="<i2", count=3 * n, offset=14)
        ts.append(t)
        vals.append(raw.reshape(n, 3) / COUNTS_PER_G)
        last_t = t[-1]

    for w in warnings:
        log.warning(w)
    if not ts:
        raise EmptyRecording("no decodable samples")
    return RawRecording(device_id, rate, np.concatenate(ts), np.vstack(vals), tuple(warnings))


def write_cwa(rec: RawRecording, samples_per_block: int = MAX_BLOCK_SAMPLES) -> bytes:
    """Fixture writer for :func:`parse_cwa`.

    Samples inside a block must sit on the nominal-rate grid relative to the
    block's first sample, otherwise the timestamps cannot be reproduced.
    """
    if not 1 <= samples_per_block <= MAX_BLOCK_SAMPLES:
        raise ValueError(f"samples_per_block must be in 1..{MAX_BLOCK_SAMPLES}")
    dev = rec.device_id.encode("ascii")
    if len(dev) > DEVICE_ID_BYTES:
        raise ValueError(f"device id longer than {DEVICE_ID_BYTES} bytes")
    header = bytearray(HEADER_SIZE)
    struct.pack_into("<2sH16sd", header, 0, b"MD", HEADER_SIZE - 4, dev, rec.nominal_rate_hz)
    out = [bytes(header)]

    counts = np.clip(np.rint(rec.xyz * COUNTS_PER_G), -32768, 32767).astype("<i2")
    for start in range(0, len(rec), samples_per_block):
        t = rec.t[start : start + samples_per_block]
        expected = t[0] + np.arange(len(t)) * rec.period_ms
        if not np.array_equal(t, expected):
            raise ValueError(f"samples from index {start} are not on the nominal-rate grid")
        block = bytearray(BLOCK_SIZE)
        struct.pack_into("<2sHdH", block, 0, b"AX", BLOCK_SIZE - 4, float(t[0]), len(t))
        payload = counts[start : start + samples_per_block].tobytes()
        block[14 : 14 + len(payload)] = payload
        out.append(_seal(block))
    return b"".join(out)


# ---------------------------------------------------------------------------
# CSV


def _rows(text: str) -> list[tuple[int, list[str]]]:
    reader = csv.reader(io.StringIO(text))
    return [(i, row) for i, row in enumerate(reader, start=1) if row]


def _number(s: str) -> float:
    v = float(s)
    if not np.isfinite(v):
        raise ValueError("non-finite value")
    return v


def parse_samples_csv(text: str, device_id: str = "", nominal_rate_hz: float = 12.5) -> RawRecording:
    rows = _rows(text)
    if not rows or [c.strip() for c in rows[0][1]] != SAMPLES_HEADER:
        raise BadHeader(f"expected header {','.join(SAMPLES_HEADER)}")
    data = np.empty((len(rows) - 1, 4))
    prev = -np.inf
    for k, (line_no, row) in enumerate(rows[1:]):
        try:
            if len(row) != 4:
                raise ValueError("expected 4 fields")
            vals = [_number(c) for c in row]
        except ValueError as e:
            raise RowParse(line_no, str(e)) from None
        if vals[0] < 0 or any(abs(v) > FULL_SCALE_G for v in vals[1:]):
            raise RowParse(line_no, "value out of range")
        if vals[0] <= prev:
            raise NonMonotonicTimestamp(line_no)
        prev = vals[0]
        data[k] = vals
    return RawRecording(device_id, nominal_rate_hz, data[:, 0], data[:, 1:])


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 2**53 else repr(v)


def write_samples_csv(rec: RawRecording) -> str:
    lines = [",".join(SAMPLES_HEADER)]
    for t, (x, y, z) in zip(rec.t, rec.xyz):
        lines.append(f"{_fmt(t)},{_fmt(x)},{_fmt(y)},{_fmt(z)}")
    return "\n".join(lines) + "\n"


def parse_annotations_csv(text: str, recording_id: str = "") -> AnnotationTrack:
    """Parse one annotator's interval labels; all rows must name the same annotator."""
    rows = _rows(text)
    if not rows or [c.strip() for c in rows[0][1]] != ANNOTATIONS_HEADER:
        raise BadHeader(f"expected header {','.join(ANNOTATIONS_HEADER)}")
    parsed: list[tuple[LabeledInterval, int]] = []
    annotator = None
    for line_no, row in rows[1:]:
        if len(row) != 4:
            raise RowParse(line_no, "expected 4 fields")
        try:
            start, end = _number(row[0]), _number(row[1])
        except ValueError as e:
            raise RowParse(line_no, str(e)) from None
        label, who = row[2].strip(), row[3].strip()
        if label not in LABELS:
            raise UnknownLabel(line_no, repr(label))
        if not start < end:
            raise InvertedInterval(line_no)
        if annotator is None:
            annotator = who
        elif who != annotator:
            raise MixedAnnotators(line_no, f"{who!r} vs {annotator!r}")
        parsed.append((LabeledInterval(start, end, label), line_no))

    parsed.sort()
    for (prev, _), (cur, line_no) in zip(parsed, parsed[1:]):
        if cur.start_ms < prev.end_ms:
            raise OverlapWithinTrack(line_no)
    return AnnotationTrack(recording_id, tuple(iv for iv, _ in parsed), annotator or "")


def write_annotations_csv(track: AnnotationTrack) -> str:
    lines = [",".join(ANNOTATIONS_HEADER)]
    for iv in track.intervals:
        lines.append(f"{_fmt(iv.start_ms)},{_fmt(iv.end_ms)},{iv.label},{track.annotator}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# transforms


def merge_annotations(a: AnnotationTrack, b: AnnotationTrack) -> AnnotationTrack:
    """Keep only what both annotators agree on: same-label intersections."""
    if a.recording_id != b.recording_id:
        raise RecordingMismatch(f"{a.recording_id!r} != {b.recording_id!r}")
    agreed = []
    for ia in a.intervals:
        for ib in b.intervals:
            if ia.label != ib.label:
                continue
            lo, hi = max(ia.start_ms, ib.start_ms), min(ia.end_ms, ib.end_ms)
            if lo < hi:
                agreed.append(LabeledInterval(lo, hi, ia.label))
    return AnnotationTrack(a.recording_id, tuple(agreed), "merged")


def trim_recording(rec: RawRecording, keep: Sequence[tuple[float, float]]) -> RawRecording:
    mask = np.zeros(len(rec), dtype=bool)
    for start, end in keep:
        mask |= (rec.t >= start) & (rec.t <= end)
    return RawRecording(rec.device_id, rec.nominal_rate_hz, rec.t[mask], rec.xyz[mask], rec.warnings)


def validate_rate(rec: RawRecording, expected_hz: float, rel_tol: float) -> RateReport:
    if len(rec) < 2:
        raise TooFewSamples(f"need at least 2 samples, got {len(rec)}")
    empirical = (len(rec) - 1) / ((rec.t[-1] - rec.t[0]) / 1000.0)
    passed = abs(empirical - expected_hz) <= rel_tol * expected_hz
    return RateReport(float(empirical), expected_hz, rel_tol, bool(passed))
