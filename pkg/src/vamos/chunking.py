"""Splitting samples into fixed-length chunks."""
from __future__ import annotations

import logging
import math

import numpy as np

from .motion import ima
from .traces import GENUINE, Chunk, Sample, TRANSITION

log = logging.getLogger(__name__)

DEFAULT_CHUNK_S = 6.0
_EPS = 1e-6


class ChunkingError(ValueError):
    pass


class _Motion:
    """Accelerometer motion source for the chunks of one sample.

    With ``scope="sample"`` IMA runs once over the whole recording and chunks
    take windows of that trace, so filter and velocity state carry across
    chunk boundaries.  ``scope="chunk"`` integrates every slice on its own.
    """

    def __init__(self, sample, ima_params=None, scope="sample"):
        if scope not in ("sample", "chunk"):
            raise ValueError(f"unknown IMA scope {scope!r}")
        self.params = dict(ima_params or {})
        self.trace = ima(sample.accel, **self.params) if scope == "sample" else None

    def __call__(self, accel, start, end):
        if self.trace is None:
            return ima(accel, **self.params)
        return self.trace.window(start, end)


def make_chunk(sample: Sample, start, end, category=None, ima_params=None,
               ima_scope="sample", _motion=None) -> Chunk:
    """Slice ``sample`` over [start, end) and attach the accelerometer motion."""
    video = sample.video_motion.window(start, end)
    accel = sample.accel.window(start, end)
    if video is None or accel is None:
        raise ChunkingError(f"{sample.id}: too few readings in [{start}, {end})")
    motion = _motion or _Motion(sample, ima_params, ima_scope)
    accel_motion = motion(accel, start, end)
    if accel_motion is None:
        raise ChunkingError(f"{sample.id}: too few readings in [{start}, {end})")
    if category is None:
        category = sample.annotation.category_of(start, end)
    label = sample.label_for(start, end)
    return Chunk(
        parent_sample_id=sample.id,
        start_s=float(start),
        end_s=float(end),
        video_motion=video,
        accel_motion=accel_motion,
        accel=accel,
        category=category,
        label=label,
        provenance=GENUINE if label == GENUINE else sample.provenance,
    )


def _span_chunks(sample, begin, end, length, keep_remainder, motion, category=None):
    span = end - begin
    n = math.floor(span / length + _EPS)
    if keep_remainder:
        n = math.ceil(span / length - _EPS)
    out = []
    for k in range(n):
        s = begin + k * length
        e = s + length if s + length <= end + _EPS else end
        if e - s < length - _EPS:
            # a short trailing chunk is only kept when it still has data
            if sample.video_motion.window(s, e) is None or sample.accel.window(s, e) is None:
                continue
        out.append(make_chunk(sample, s, e, category, _motion=motion))
    return out


def sequential_chunks(sample: Sample, length=DEFAULT_CHUNK_S, keep_remainder=False,
                      ima_params=None, ima_scope="sample") -> list:
    """Back-to-back chunks from the start; a trailing remainder shorter than
    ``length`` is dropped unless ``keep_remainder`` is set."""
    begin, end = sample.start, sample.end
    if end - begin < length - _EPS:
        log.warning("%s: sample shorter than chunk length %.3gs", sample.id, length)
        return []
    motion = _Motion(sample, ima_params, ima_scope)
    return _span_chunks(sample, begin, end, length, keep_remainder, motion)


def segment_chunks(sample: Sample, length=DEFAULT_CHUNK_S, ima_params=None,
                   ima_scope="sample") -> list:
    """Sequential chunking inside each annotation segment at least ``length`` long.

    Never yields transition chunks.
    """
    out = []
    motion = None
    for seg in sample.annotation.segments:
        begin = max(seg.start, sample.start)
        end = min(seg.end, sample.end)
        if end - begin < length - _EPS:
            continue
        motion = motion or _Motion(sample, ima_params, ima_scope)
        out.extend(_span_chunks(sample, begin, end, length, False, motion, seg.category))
    return out


def random_indices(duration, length, k, rng, max_retries=100):
    """``k`` distinct whole-second indices in [0, duration] with i_s + length != i_t."""
    top = math.floor(duration + _EPS)
    if not 0 < k <= top:
        raise ChunkingError(f"k must satisfy 0 < k <= {top}")
    step = int(round(length))
    for _ in range(max_retries):
        chosen = set()
        candidates = list(range(top + 1))
        while len(chosen) < k:
            allowed = [c for c in candidates
                       if c not in chosen and c + step not in chosen and c - step not in chosen]
            if not allowed:
                break
            chosen.add(int(rng.choice(allowed)))
        if len(chosen) == k:
            return sorted(chosen)
    raise ChunkingError(f"could not place {k} indices under the i_s + l != i_t constraint")


def randomized_chunks(sample: Sample, length=DEFAULT_CHUNK_S, k=1, seed=0, max_retries=100,
                      ima_params=None, ima_scope="sample") -> list:
    """``k`` chunks at random whole-second offsets; chunks may overlap.

    An index ``i <= L - length`` yields [i, i + length), a later one yields
    [i - length, i).
    """
    duration = sample.duration
    if duration < length - _EPS:
        raise ChunkingError(f"{sample.id}: sample shorter than chunk length")
    rng = np.random.default_rng(seed)
    idx = random_indices(duration, length, k, rng, max_retries)
    motion = _Motion(sample, ima_params, ima_scope)
    out = []
    for i in idx:
        s = sample.start + (i if i <= duration - length + _EPS else i - length)
        s = min(s, sample.end - length)
        out.append(make_chunk(sample, s, s + length, _motion=motion))
    return out


def chunk_sample(sample, strategy="segment", length=DEFAULT_CHUNK_S, **kwargs):
    if strategy in ("seq", "sequential"):
        return sequential_chunks(sample, length, **kwargs)
    if strategy == "segment":
        return segment_chunks(sample, length, **kwargs)
    if strategy in ("random", "randomized"):
        return randomized_chunks(sample, length, **kwargs)
    raise ValueError(f"unknown chunking strategy {strategy!r}")


def is_transition(chunk):
    return chunk.category == TRANSITION
