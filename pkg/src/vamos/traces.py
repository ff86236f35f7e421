"""Domain types for sensor streams, motion traces, samples and chunks, plus file I/O.

All containers are frozen dataclasses wrapping read-only numpy arrays.  Times are
seconds in double precision; accelerations are m/s^2.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np

GENUINE = "genuine"
FAKE = "fake"
TRANSITION = "transition"
LABELS = (GENUINE, FAKE)

DEFAULT_ACCEL_RATE_HZ = 16.67
DEFAULT_FPS = 30.0


class TraceValidationError(ValueError):
    """Raised when a stream or trace violates its invariants."""


class TraceParseError(ValueError):
    """Raised for malformed CSV input; carries the offending line number."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_times(t, what):
    if t.ndim != 1:
        raise TraceValidationError(f"{what}: timestamps must be 1-D")
    if not np.all(np.isfinite(t)):
        raise TraceValidationError(f"{what}: non-finite timestamp")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 1
        raise TraceValidationError(f"{what}: timestamps not strictly increasing at index {bad}")


# ---------------------------------------------------------------------------
# Streams and traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AccelStream:
    """Timestamped 3-axis accelerometer readings.

    Parameters
    ----------
    t : array of shape (n,)
        Strictly increasing timestamps in seconds.
    values : array of shape (n, 3)
        ax, ay, az in m/s^2.
    nominal_rate_hz : float
        Nominal sampling rate.
    """

    t: np.ndarray
    values: np.ndarray
    nominal_rate_hz: float = DEFAULT_ACCEL_RATE_HZ

    def __post_init__(self):
        t = _frozen(self.t)
        v = _frozen(self.values)
        if v.ndim != 2 or v.shape[1] != 3:
            raise TraceValidationError("AccelStream: values must have shape (n, 3)")
        if v.shape[0] != t.shape[0]:
            raise TraceValidationError("AccelStream: timestamps and values differ in length")
        if t.size < 2:
            raise TraceValidationError("AccelStream: need at least 2 readings")
        _check_times(t, "AccelStream")
        if not np.all(np.isfinite(v)):
            raise TraceValidationError("AccelStream: non-finite reading")
        if not (self.nominal_rate_hz > 0 and math.isfinite(self.nominal_rate_hz)):
            raise TraceValidationError("AccelStream: nominal rate must be positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.t.size

    def __eq__(self, other):
        if not isinstance(other, AccelStream):
            return NotImplemented
        return (np.array_equal(self.t, other.t) and np.array_equal(self.values, other.values)
                and self.nominal_rate_hz == other.nominal_rate_hz)

    __hash__ = None

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def window(self, start, end, eps=1e-9):
        """Readings with ``start <= t < end`` (half-open), or None if fewer than 2."""
        mask = (self.t >= start - eps) & (self.t < end - eps)
        if mask.sum() < 2:
            return None
        return AccelStream(self.t[mask], self.values[mask], self.nominal_rate_hz)

    def shifted(self, dt):
        return AccelStream(self.t + dt, self.values, self.nominal_rate_hz)


@dataclass(frozen=True, eq=False)
class MotionTrace:
    """Per-axis cumulative displacement series sharing one time base.

    ``values[:, k]`` is the cumulative shift on ``axes[k]``.  The first row is
    zero on every axis.  ``degenerate`` lists point indices whose increment came
    from a frame pair without usable texture.
    """

    t: np.ndarray
    values: np.ndarray
    axes: tuple = ("x", "y")
    source: str = "video"
    degenerate: tuple = ()

    def __post_init__(self):
        t = _frozen(self.t)
        v = _frozen(self.values)
        axes = tuple(self.axes)
        if not axes:
            raise TraceValidationError("MotionTrace: empty axis list")
        if v.ndim == 1 and len(axes) == 1:
            v = _frozen(v[:, None])
        if v.ndim != 2 or v.shape[1] != len(axes):
            raise TraceValidationError("MotionTrace: values must have one column per axis")
        if v.shape[0] != t.shape[0]:
            raise TraceValidationError("MotionTrace: timestamps and values differ in length")
        if t.size < 1:
            raise TraceValidationError("MotionTrace: empty trace")
        _check_times(t, "MotionTrace")
        if not np.all(np.isfinite(v)):
            raise TraceValidationError("MotionTrace: non-finite value")
        if np.any(v[0] != 0.0):
            raise TraceValidationError("MotionTrace: first cumulative shift must be 0 on every axis")
        if self.source not in ("video", "accel"):
            raise TraceValidationError(f"MotionTrace: unknown source {self.source!r}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "degenerate", tuple(int(i) for i in self.degenerate))

    def __len__(self):
        return self.t.size

    def __eq__(self, other):
        if not isinstance(other, MotionTrace):
            return NotImplemented
        return (self.axes == other.axes and self.source == other.source
                and np.array_equal(self.t, other.t) and np.array_equal(self.values, other.values))

    __hash__ = None

    def axis(self, name):
        return self.values[:, self.axes.index(name)]

    @classmethod
    def from_positions(cls, t, positions, axes=("x", "y"), source="video"):
        """Build a trace from absolute positions, rebasing so the first point is 0."""
        p = np.asarray(positions, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        return cls(t, p - p[0], axes, source)

    def window(self, start, end, eps=1e-9):
        """Points with ``start <= t < end``, rebased to zero; None if fewer than 2."""
        mask = (self.t >= start - eps) & (self.t < end - eps)
        if mask.sum() < 2:
            return None
        return MotionTrace.from_positions(self.t[mask], self.values[mask], self.axes, self.source)

    def shifted(self, dt):
        return replace(self, t=self.t + dt)


# ---------------------------------------------------------------------------
# Categories and annotations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MotionCategory:
    id: Union[int, str]
    distance: str
    user_motion: str
    camera_motion: str

    @property
    def label(self):
        return str(self.id)

    def __str__(self):
        return self.label


_TABLE = {}
for _i, (_d, _u, _c) in enumerate(
    ((d, u, c) for c in ("stationary", "scanning", "following")
     for u in ("standing", "walking") for d in ("close", "far")), start=1):
    _TABLE[_i] = MotionCategory(_i, _d, _u, _c)

MERGED_3_7 = MotionCategory("3&7", "close", "walking", "stationary|scanning")
CATEGORIES = dict(_TABLE)
CATEGORIES["3&7"] = MERGED_3_7


def category(key) -> MotionCategory:
    """Look up a category by id (1..12, "7", or the merged "3&7")."""
    if isinstance(key, MotionCategory):
        return key
    if isinstance(key, str):
        key = key.strip()
        if key.replace(" ", "") in ("3&7", "3\\&7"):
            return MERGED_3_7
        try:
            key = int(key)
        except ValueError:
            raise KeyError(f"unknown motion category {key!r}") from None
    if isinstance(key, (int, np.integer)) and int(key) in _TABLE:
        return _TABLE[int(key)]
    raise KeyError(f"unknown motion category {key!r}")


def category_for(distance, user_motion, camera_motion) -> MotionCategory:
    for cat in _TABLE.values():
        if (cat.distance, cat.user_motion, cat.camera_motion) == (distance, user_motion, camera_motion):
            return cat
    raise KeyError((distance, user_motion, camera_motion))


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    category: MotionCategory

    @property
    def length(self):
        return self.end - self.start


@dataclass(frozen=True)
class Annotation:
    segments: tuple = ()

    def __post_init__(self):
        segs = tuple(
            s if isinstance(s, Segment) else Segment(float(s[0]), float(s[1]), category(s[2]))
            for s in self.segments
        )
        prev_end = -math.inf
        for s in segs:
            if not s.start < s.end:
                raise TraceValidationError(f"annotation segment {s} has start >= end")
            if s.start < prev_end:
                raise TraceValidationError("annotation segments overlap or are out of order")
            prev_end = s.end
        object.__setattr__(self, "segments", segs)

    def category_of(self, start, end, eps=1e-9):
        """Category covering [start, end), or TRANSITION if it spans a boundary."""
        for s in self.segments:
            if s.start - eps <= start and end <= s.end + eps:
                return s.category
        return TRANSITION

    def to_list(self):
        return [[s.start, s.end, s.category.label] for s in self.segments]


# ---------------------------------------------------------------------------
# Samples and chunks
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Sample:
    """A (video-motion, accelerometer) recording of arbitrary length.

    ``fake_intervals`` marks the fabricated time ranges of a stitched sample;
    a fake sample with no intervals is fabricated over its whole length.
    """

    id: str
    video_motion: MotionTrace
    accel: AccelStream
    annotation: Annotation = field(default_factory=Annotation)
    label: str = GENUINE
    provenance: str = GENUINE
    fake_intervals: tuple = ()

    def __post_init__(self):
        if self.label not in LABELS:
            raise TraceValidationError(f"unknown label {self.label!r}")
        if (self.provenance == GENUINE) != (self.label == GENUINE):
            raise TraceValidationError("label inconsistent with provenance")
        if self.video_motion.t[0] >= self.accel.t[-1] or self.accel.t[0] >= self.video_motion.t[-1]:
            raise TraceValidationError("video and accel time ranges do not overlap")
        object.__setattr__(self, "fake_intervals",
                           tuple((float(a), float(b)) for a, b in self.fake_intervals))

    @property
    def start(self):
        return float(max(self.video_motion.t[0], self.accel.t[0]))

    @property
    def end(self):
        """End of the covered span (one nominal reading past the last timestamp)."""
        return float(min(self.video_motion.t[-1], self.accel.t[-1] + 1.0 / self.accel.nominal_rate_hz))

    @property
    def duration(self):
        return self.end - self.start

    def label_for(self, start, end):
        if self.label == GENUINE:
            return GENUINE
        if not self.fake_intervals:
            return FAKE
        for a, b in self.fake_intervals:
            if a < end - 1e-9 and start < b - 1e-9:
                return FAKE
        return GENUINE

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (self.id == other.id and self.video_motion == other.video_motion
                and self.accel == other.accel and self.annotation == other.annotation
                and self.label == other.label and self.provenance == other.provenance
                and self.fake_intervals == other.fake_intervals)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Chunk:
    """Fixed-length slice of a sample.

    ``accel`` is the raw accelerometer slice, or None when the accelerometer
    side was fabricated directly at trace level (mirror-family attacks).
    ``accel_motion`` is always present and is what feature extraction uses.
    """

    parent_sample_id: str
    start_s: float
    end_s: float
    video_motion: MotionTrace
    accel_motion: MotionTrace
    accel: AccelStream | None = None
    category: object = TRANSITION
    label: str = GENUINE
    provenance: str = GENUINE

    def __post_init__(self):
        if self.label not in LABELS:
            raise TraceValidationError(f"unknown label {self.label!r}")
        if not self.end_s > self.start_s:
            raise TraceValidationError("chunk end must exceed start")

    @property
    def id(self):
        return f"{self.parent_sample_id}@{self.start_s:g}"

    @property
    def key(self):
        return (self.parent_sample_id, round(self.start_s, 6))

    @property
    def length(self):
        return self.end_s - self.start_s

    @property
    def category_label(self):
        return self.category.label if isinstance(self.category, MotionCategory) else str(self.category)

    def __eq__(self, other):
        if not isinstance(other, Chunk):
            return NotImplemented
        return (self.key == other.key and self.end_s == other.end_s
                and self.video_motion == other.video_motion
                and self.accel_motion == other.accel_motion and self.accel == other.accel
                and self.category == other.category and self.label == other.label
                and self.provenance == other.provenance)

    __hash__ = None


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def _read_rows(path, expected_headers):
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceParseError(path, 1, "empty file") from None
        header = [h.strip() for h in header]
        if header not in expected_headers:
            raise TraceParseError(path, 1, f"unexpected header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise TraceParseError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise TraceParseError(path, lineno, str(exc)) from None
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def load_accel_csv(path, nominal_rate_hz=None) -> AccelStream:
    """Read an accelerometer CSV (``t,ax,ay,az``).

    The nominal rate is estimated as (n - 1) / (t_last - t_first) unless given.
    """
    _, data = _read_rows(path, [["t", "ax", "ay", "az"]])
    if data.shape[0] < 2:
        raise TraceValidationError(f"{path}: need at least 2 readings")
    t = data[:, 0]
    if nominal_rate_hz is None:
        span = t[-1] - t[0]
        nominal_rate_hz = (t.size - 1) / span if span > 0 else DEFAULT_ACCEL_RATE_HZ
    return AccelStream(t, data[:, 1:], float(nominal_rate_hz))


def save_accel_csv(stream: AccelStream, path):
    with open(path, "w", newline="") as fh:
        fh.write("t,ax,ay,az\n")
        for ti, row in zip(stream.t, stream.values):
            fh.write(",".join(_fmt(v) for v in (ti, *row)) + "\n")


def load_motion_csv(path, source=None) -> MotionTrace:
    """Read a motion-trace CSV (``t,x,y`` or ``t,x,y,z``).

    Two-axis files default to source "video", three-axis files to "accel".
    """
    header, data = _read_rows(path, [["t", "x", "y"], ["t", "x", "y", "z"], ["t", "x"]])
    if data.shape[0] < 1:
        raise TraceValidationError(f"{path}: empty trace")
    axes = tuple(header[1:])
    if source is None:
        source = "accel" if len(axes) == 3 else "video"
    return MotionTrace(data[:, 0], data[:, 1:], axes, source)


def save_motion_csv(trace: MotionTrace, path):
    """Write ``trace`` to ``path`` (or to an open text stream)."""
    if hasattr(path, "write"):
        _write_motion(trace, path)
        return
    with open(path, "w", newline="") as fh:
        _write_motion(trace, fh)


def _write_motion(trace, fh):
    fh.write(",".join(("t",) + trace.axes) + "\n")
    for ti, row in zip(trace.t, trace.values):
        fh.write(",".join(_fmt(v) for v in (ti, *row)) + "\n")


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def save_sample(sample: Sample, directory) -> Path:
    """Write ``<id>.json`` plus motion and accel CSVs into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    motion_name = f"{sample.id}_motion.csv"
    accel_name = f"{sample.id}_accel.csv"
    save_motion_csv(sample.video_motion, directory / motion_name)
    save_accel_csv(sample.accel, directory / accel_name)
    manifest = {
        "id": sample.id,
        "motion_path": motion_name,
        "accel_path": accel_name,
        "annotation": sample.annotation.to_list(),
        "label": sample.label,
        "provenance": sample.provenance,
    }
    if sample.fake_intervals:
        manifest["fake_intervals"] = [list(iv) for iv in sample.fake_intervals]
    manifest["accel_rate_hz"] = sample.accel.nominal_rate_hz
    path = directory / f"{sample.id}.json"
    path.write_text(json.dumps(manifest, indent=1))
    return path


def load_sample(path) -> Sample:
    path = Path(path)
    m = json.loads(path.read_text())
    base = path.parent
    for key in ("id", "motion_path", "accel_path", "label"):
        if key not in m:
            raise TraceValidationError(f"{path}: manifest missing {key!r}")
    return Sample(
        id=str(m["id"]),
        video_motion=load_motion_csv(base / m["motion_path"], source="video"),
        accel=load_accel_csv(base / m["accel_path"], m.get("accel_rate_hz")),
        annotation=Annotation(tuple(m.get("annotation", ()))),
        label=m["label"],
        provenance=m.get("provenance", m["label"]),
        fake_intervals=tuple(tuple(iv) for iv in m.get("fake_intervals", ())),
    )


def _manifests(directory):
    return sorted(p for p in Path(directory).glob("*.json"))


def load_samples(directory) -> list:
    return [load_sample(p) for p in _manifests(directory)
            if "motion_path" in json.loads(p.read_text())]


def save_chunk(chunk: Chunk, directory) -> Path:
    """Write a chunk manifest with its traces (and raw accel slice if present)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = _safe(chunk.id) + ("" if chunk.label == GENUINE else f"_{chunk.provenance}")
    save_motion_csv(chunk.video_motion, directory / f"{stem}_video.csv")
    save_motion_csv(chunk.accel_motion, directory / f"{stem}_accel_motion.csv")
    manifest = {
        "id": chunk.id,
        "parent_sample_id": chunk.parent_sample_id,
        "start_s": chunk.start_s,
        "end_s": chunk.end_s,
        "video_motion_path": f"{stem}_video.csv",
        "accel_motion_path": f"{stem}_accel_motion.csv",
        "accel_path": None,
        "category": chunk.category_label,
        "label": chunk.label,
        "provenance": chunk.provenance,
    }
    if chunk.accel is not None:
        save_accel_csv(chunk.accel, directory / f"{stem}_accel.csv")
        manifest["accel_path"] = f"{stem}_accel.csv"
        manifest["accel_rate_hz"] = chunk.accel.nominal_rate_hz
    path = directory / f"{stem}.json"
    path.write_text(json.dumps(manifest, indent=1))
    return path


def load_chunk(path) -> Chunk:
    path = Path(path)
    m = json.loads(path.read_text())
    base = path.parent
    cat = m.get("category", TRANSITION)
    return Chunk(
        parent_sample_id=m["parent_sample_id"],
        start_s=float(m["start_s"]),
        end_s=float(m["end_s"]),
        video_motion=load_motion_csv(base / m["video_motion_path"], source="video"),
        accel_motion=load_motion_csv(base / m["accel_motion_path"], source="accel"),
        accel=(load_accel_csv(base / m["accel_path"], m.get("accel_rate_hz"))
               if m.get("accel_path") else None),
        category=TRANSITION if cat == TRANSITION else category(cat),
        label=m["label"],
        provenance=m.get("provenance", m["label"]),
    )


def load_chunks(directory) -> list:
    return [load_chunk(p) for p in _manifests(directory)
            if "video_motion_path" in json.loads(p.read_text())]


def _safe(name):
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Grayscale frames (8-bit intensities) at a fixed frame rate."""

    frames: np.ndarray
    fps: float = DEFAULT_FPS

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 3:
            raise TraceValidationError("FrameSequence: frames must share dimensions (n, h, w)")
        if f.shape[0] < 2:
            raise TraceValidationError("FrameSequence: need at least 2 frames")
        if not self.fps > 0:
            raise TraceValidationError("FrameSequence: fps must be positive")
        object.__setattr__(self, "frames", _frozen(f, f.dtype))

    def __len__(self):
        return self.frames.shape[0]


def save_frames(seq: FrameSequence, directory):
    from PIL import Image

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        img = np.clip(np.rint(frame), 0, 255).astype(np.uint8)
        Image.fromarray(img, mode="L").save(directory / f"frame_{i:06d}.pgm")


def load_frames(directory, fps=DEFAULT_FPS) -> FrameSequence:
    from PIL import Image

    paths = sorted(Path(directory).glob("frame_*.pgm"))
    if len(paths) < 2:
        raise TraceValidationError(f"{directory}: need at least 2 frame_*.pgm files")
    frames = [np.asarray(Image.open(p).convert("L")) for p in paths]
    if len({f.shape for f in frames}) != 1:
        raise TraceValidationError(f"{directory}: frames differ in dimensions")
    return FrameSequence(np.stack(frames), fps)
