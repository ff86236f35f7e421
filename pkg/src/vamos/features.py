"""The 18-value DTW/shift descriptor of a chunk."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .dtw import DEFAULT_OVERLAP_FRACTION, dtw, overlap_epsilon, penalized_cost
from .traces import Chunk, MotionTrace

AXES = ("x", "y")
PER_AXIS = (
    "dtw_distance",
    "penalized_cost",
    "overlap_ratio",
    "match_move_ratio",
    "expansion_ratio",
    "contraction_ratio",
    "calibration_factor",
    "video_cumulative_shift",
    "accel_cumulative_shift",
)
FEATURE_NAMES = tuple(f"{axis}_{name}" for axis in AXES for name in PER_AXIS)


@dataclass(frozen=True)
class FeatureConfig:
    rate_hz: float = 10.0
    penalty: float = 2.0
    overlap_fraction: float = DEFAULT_OVERLAP_FRACTION


@dataclass(frozen=True)
class AxisFeatures:
    dtw_distance: float
    penalized_cost: float
    overlap_ratio: float
    match_move_ratio: float
    expansion_ratio: float
    contraction_ratio: float
    calibration_factor: float
    video_cumulative_shift: float
    accel_cumulative_shift: float


@dataclass(frozen=True)
class ChunkFeatures:
    x: AxisFeatures
    y: AxisFeatures

    def to_vector(self):
        return np.array([v for ax in (self.x, self.y) for v in asdict(ax).values()])

    def as_dict(self):
        return dict(zip(FEATURE_NAMES, self.to_vector().tolist()))

    @classmethod
    def from_vector(cls, vec):
        vec = list(map(float, vec))
        if len(vec) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {len(vec)}")
        k = len(PER_AXIS)
        return cls(AxisFeatures(*vec[:k]), AxisFeatures(*vec[k:]))


def resample(trace: MotionTrace, rate_hz) -> MotionTrace:
    """Linear interpolation of every axis onto a uniform grid over the trace span."""
    if not rate_hz > 0:
        raise ValueError("rate must be positive")
    if len(trace) < 2:
        raise ValueError("resampling needs at least 2 points")
    t0, t1 = trace.t[0], trace.t[-1]
    n = int(np.floor((t1 - t0) * rate_hz + 1e-9)) + 1
    grid = t0 + np.arange(n) / rate_hz
    values = np.column_stack([np.interp(grid, trace.t, trace.values[:, k])
                              for k in range(len(trace.axes))])
    values[0] = 0.0
    return MotionTrace(grid, values, trace.axes, trace.source)


def _rms(v):
    return float(np.sqrt(np.mean(np.square(v))))


def axis_features(video, accel, config=FeatureConfig()) -> AxisFeatures:
    """Features of one axis given resampled video and accel series."""
    eps = overlap_epsilon(video, accel, config.overlap_fraction)
    res = dtw(video, accel, overlap_eps=eps, keep_path=True)
    n = res.path_length
    video_rms = _rms(video)
    return AxisFeatures(
        dtw_distance=res.distance / n,
        penalized_cost=penalized_cost(video, accel, res.path, config.penalty) / n,
        overlap_ratio=res.overlap_points / n,
        match_move_ratio=res.match / n,
        expansion_ratio=res.expansion / n,
        contraction_ratio=res.contraction / n,
        calibration_factor=_rms(accel) / video_rms if video_rms > 0 else 1.0,
        video_cumulative_shift=float(video[-1] - video[0]),
        accel_cumulative_shift=float(accel[-1] - accel[0]),
    )


def trace_features(video: MotionTrace, accel: MotionTrace, config=FeatureConfig()) -> ChunkFeatures:
    v = resample(video, config.rate_hz)
    a = resample(accel, config.rate_hz)
    per_axis = []
    for name in AXES:
        f = axis_features(v.axis(name), a.axis(name), config)
        # cumulative shifts come from the unresampled traces
        f = AxisFeatures(**{**asdict(f),
                            "video_cumulative_shift": float(video.axis(name)[-1] - video.axis(name)[0]),
                            "accel_cumulative_shift": float(accel.axis(name)[-1] - accel.axis(name)[0])})
        per_axis.append(f)
    return ChunkFeatures(*per_axis)


def chunk_features(chunk: Chunk, config=FeatureConfig()) -> ChunkFeatures:
    return trace_features(chunk.video_motion, chunk.accel_motion, config)


# ---------------------------------------------------------------------------
# Feature tables
# ---------------------------------------------------------------------------

@dataclass
class FeatureTable:
    """Labelled feature rows, one per chunk, with grouping metadata."""

    X: np.ndarray
    y: np.ndarray
    ids: list
    categories: list
    provenance: list
    parents: list

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(-1, len(FEATURE_NAMES))
        self.y = np.asarray(self.y, dtype=int)
        n = self.X.shape[0]
        for f in fields(self)[2:]:
            if len(getattr(self, f.name)) != n:
                raise ValueError(f"column {f.name} has wrong length")

    def __len__(self):
        return self.X.shape[0]

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, len(FEATURE_NAMES))), np.zeros(0, int), [], [], [], [])

    @classmethod
    def from_chunks(cls, chunks, config=FeatureConfig()):
        rows = [chunk_features(c, config).to_vector() for c in chunks]
        return cls(
            np.array(rows).reshape(-1, len(FEATURE_NAMES)),
            np.array([c.label == "fake" for c in chunks], dtype=int),
            [c.id if c.label == "genuine" else f"{c.id}#{c.provenance}" for c in chunks],
            [c.category_label for c in chunks],
            [c.provenance for c in chunks],
            [c.parent_sample_id for c in chunks],
        )

    def subset(self, index):
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        pick = lambda col: [col[i] for i in index]
        return FeatureTable(self.X[index], self.y[index], pick(self.ids), pick(self.categories),
                            pick(self.provenance), pick(self.parents))

    @staticmethod
    def concat(tables):
        tables = [t for t in tables if len(t)]
        if not tables:
            return FeatureTable.empty()
        return FeatureTable(
            np.vstack([t.X for t in tables]),
            np.concatenate([t.y for t in tables]),
            *[sum((getattr(t, name) for t in tables), []) for name in
              ("ids", "categories", "provenance", "parents")],
        )

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["chunk_id", "category", "label", "provenance", "parent", *FEATURE_NAMES])
            for i in range(len(self)):
                w.writerow([self.ids[i], self.categories[i], "fake" if self.y[i] else "genuine",
                            self.provenance[i], self.parents[i], *map(repr, self.X[i].tolist())])

    @classmethod
    def load_csv(cls, path):
        with open(Path(path), newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if tuple(header[-len(FEATURE_NAMES):]) != FEATURE_NAMES:
                raise ValueError(f"{path}: feature columns do not match the chunk schema")
            rows = list(r)
        col = {name: k for k, name in enumerate(header)}
        get = lambda name, default: [row[col[name]] if name in col else default for row in rows]
        return cls(
            np.array([[float(v) for v in row[-len(FEATURE_NAMES):]] for row in rows]),
            np.array([lab == "fake" for lab in get("label", "genuine")], dtype=int),
            get("chunk_id", ""),
            get("category", "transition"),
            get("provenance", "genuine"),
            get("parent", ""),
        )
