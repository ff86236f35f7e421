"""Synthetic genuine (video-motion, accelerometer) samples per motion category.

A latent device displacement path is built on a fine time grid from the
category's ingredients (hand jitter, panning, target following, gait).  The
video trace samples that path at the VMA rate, scaled by a subject-distance
factor; the accelerometer is its second derivative passed through a
first-order lag (sensor inertia), plus tilted gravity and noise.

Video traces use the device-motion sign convention: a camera moving toward +x
yields an increasing x trace.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.signal import lfilter

from .traces import (
    GENUINE, AccelStream, Annotation, MotionCategory, MotionTrace, Sample, Segment,
    category, save_sample,
)

TABLE2_CHUNKS = {1: 26, 2: 50, "3&7": 82, 4: 18, 5: 44, 6: 42, 8: 28, 9: 26, 10: 35, 11: 28, 12: 22}


@dataclass(frozen=True)
class SynthParams:
    video_rate_hz: float = 6.0
    accel_dt: float = 0.06
    fine_rate_hz: float = 120.0
    jitter_rms: tuple = (0.01, 0.025)
    jitter_band: tuple = (0.5, 2.0)
    drift_speed: float = 0.003
    pan_speed: tuple = (0.05, 0.2)
    pan_modulation: float = 0.6
    pan_axis: str | None = None
    follow_speed: tuple = (0.05, 0.25)
    follow_hold_s: tuple = (0.5, 1.2)
    follow_stop_prob: float = 0.3
    gait_freq: tuple = (1.6, 2.0)
    gait_amp: tuple = (0.008, 0.02)
    scale_close: tuple = (0.7, 1.0)
    scale_far: tuple = (0.5, 0.7)
    video_noise: float = 0.0005
    accel_noise: float = 0.002
    inertia_tau: float = 0.15
    tilt_deg: tuple = (0.0, 10.0)
    gravity: float = 9.81
    rest_s: float = 1.0

    @classmethod
    def noiseless(cls, **kw):
        base = dict(jitter_rms=(0.0, 0.0), drift_speed=0.0, video_noise=0.0, accel_noise=0.0)
        base.update(kw)
        return cls(**base)


def _uniform(rng, bounds):
    lo, hi = bounds
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def band_noise(n, rate_hz, band, rms, rng):
    """Gaussian noise restricted to ``band`` (Hz) and scaled to ``rms``."""
    if rms == 0 or n < 2:
        return np.zeros(n)
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / rate_hz)
    spec[(freqs < band[0]) | (freqs > band[1])] = 0.0
    out = np.fft.irfft(spec, n)
    std = out.std()
    return out * (rms / std) if std > 0 else out


def _segment_path(cat: MotionCategory, t, p: SynthParams, rng):
    """Displacement (n, 3) over local times ``t`` for one category."""
    n = t.size
    rate = p.fine_rate_hz
    pos = np.zeros((n, 3))
    jitter = _uniform(rng, p.jitter_rms)
    for k, share in enumerate((1.0, 1.0, 0.5)):
        pos[:, k] += band_noise(n, rate, p.jitter_band, jitter * share, rng)

    camera = cat.camera_motion
    if camera.startswith("stationary") and "scanning" in camera:
        # merged 3&7: a walking user with a weak, slow pan
        camera = "scanning-weak"

    if camera == "stationary":
        if p.drift_speed:
            direction = rng.standard_normal(2)
            direction /= np.linalg.norm(direction)
            pos[:, :2] += np.outer(t, direction * p.drift_speed * rng.uniform(0.2, 1.0))
    elif camera.startswith("scanning"):
        axis = {"x": 0, "y": 1}.get(p.pan_axis, 0 if rng.random() < 0.8 else 1)
        speed = _uniform(rng, p.pan_speed) * (0.4 if camera == "scanning-weak" else 1.0)
        speed *= 1 if rng.random() < 0.5 else -1
        freq = rng.uniform(0.3, 0.8)
        phase = rng.uniform(0, 2 * np.pi)
        ramp = np.clip(t / 0.5, 0.0, 1.0)
        ramp = 0.5 - 0.5 * np.cos(np.pi * ramp)
        vel = speed * ramp * (1.0 + p.pan_modulation * np.sin(2 * np.pi * freq * t + phase))
        pos[:, axis] += np.cumsum(vel) / rate
    elif camera == "following":
        vel = np.zeros((n, 2))
        i = 0
        while i < n:
            hold = int(_uniform(rng, p.follow_hold_s) * rate)
            if rng.random() < p.follow_stop_prob:
                v = np.zeros(2)
            else:
                angle = rng.uniform(0, 2 * np.pi)
                v = _uniform(rng, p.follow_speed) * np.array([np.cos(angle), np.sin(angle)])
            vel[i:i + hold] = v
            i += hold
        vel = gaussian_filter1d(vel, sigma=0.15 * rate, axis=0, mode="nearest")
        pos[:, :2] += np.cumsum(vel, axis=0) / rate

    if cat.user_motion == "walking":
        f = _uniform(rng, p.gait_freq)
        amp = _uniform(rng, p.gait_amp)
        ph = rng.uniform(0, 2 * np.pi)
        pos[:, 1] += amp * np.sin(2 * np.pi * f * t + ph)
        pos[:, 0] += 0.5 * amp * np.sin(np.pi * f * t + ph / 2)
        pos[:, 2] += 0.3 * amp * np.sin(2 * np.pi * f * t + ph + 1.0)
    return pos


@dataclass(frozen=True)
class LatentPath:
    t: np.ndarray
    pos: np.ndarray


def latent_path(segments, p: SynthParams, rng) -> LatentPath:
    """Concatenate per-segment paths on the fine grid, continuous in position."""
    total = sum(d for _, d in segments)
    rate = p.fine_rate_hz
    n = int(math.ceil(total * rate)) + 3
    t = np.arange(n) / rate
    pos = np.zeros((n, 3))
    begin = 0.0
    offset = np.zeros(3)
    for k, (cat, dur) in enumerate(segments):
        mask = t >= begin - 1e-12
        if k < len(segments) - 1:
            mask &= t < begin + dur - 1e-12
        local = t[mask] - begin
        seg = _segment_path(cat, local, p, rng)
        seg = seg - seg[0] + offset
        pos[mask] = seg
        offset = seg[-1]
        begin += dur
    if len(segments) > 1:
        pos = gaussian_filter1d(pos, sigma=0.05 * rate, axis=0, mode="nearest")
    if p.rest_s > 0:
        # recordings start with the device at rest
        r = np.clip(t / p.rest_s, 0.0, 1.0)
        pos = (pos - pos[0]) * (r * r * (3.0 - 2.0 * r))[:, None]
    return LatentPath(t, pos)


def accel_from_path(path: LatentPath, times, p: SynthParams, rng, tilt=None):
    """Accelerometer readings (gravity-inclusive) sampled at ``times``."""
    rate = p.fine_rate_hz
    acc = np.gradient(np.gradient(path.pos, 1.0 / rate, axis=0), 1.0 / rate, axis=0)
    if p.inertia_tau > 0:
        k = (1.0 / rate) / (p.inertia_tau + 1.0 / rate)
        acc = lfilter([k], [1.0, -(1.0 - k)], acc, axis=0)
    out = np.column_stack([np.interp(times, path.t, acc[:, j]) for j in range(3)])
    if tilt is None:
        theta = np.deg2rad(_uniform(rng, p.tilt_deg))
        phi = rng.uniform(0, 2 * np.pi)
    else:
        theta, phi = tilt
    g = p.gravity * np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    out = out + g
    if p.accel_noise:
        out = out + rng.normal(0.0, p.accel_noise, out.shape)
    return out


def video_from_path(path: LatentPath, times, scale, p: SynthParams, rng):
    xy = np.column_stack([np.interp(times, path.t, path.pos[:, j]) for j in range(2)]) * scale
    if p.video_noise:
        steps = rng.normal(0.0, p.video_noise, xy.shape)
        steps[0] = 0.0
        xy = xy + np.cumsum(steps, axis=0)
    return xy - xy[0]


def sample_times(duration, p: SynthParams):
    nv = int(math.floor(duration * p.video_rate_hz + 1e-9)) + 1
    video_t = np.arange(nv) / p.video_rate_hz
    na = int(math.ceil(duration / p.accel_dt - 1e-9))
    accel_t = np.arange(na) * p.accel_dt
    return video_t, accel_t


def gen_segments_sample(segments, seed, params=SynthParams(), sample_id=None) -> Sample:
    """Genuine sample covering consecutive ``(category, duration_s)`` segments."""
    segs = [(category(c), float(d)) for c, d in segments]
    if not segs:
        raise ValueError("need at least one segment")
    rng = np.random.default_rng(seed)
    path = latent_path(segs, params, rng)
    duration = sum(d for _, d in segs)
    video_t, accel_t = sample_times(duration, params)
    close = segs[0][0].distance == "close"
    scale = _uniform(rng, params.scale_close if close else params.scale_far)
    video = video_from_path(path, video_t, scale, params, rng)
    accel = accel_from_path(path, accel_t, params, rng)
    ann, begin = [], 0.0
    for cat, dur in segs:
        ann.append(Segment(begin, begin + dur, cat))
        begin += dur
    return Sample(
        id=sample_id or f"synth-{seed}",
        video_motion=MotionTrace(video_t, video, ("x", "y"), "video"),
        accel=AccelStream(accel_t, accel, 1.0 / params.accel_dt),
        annotation=Annotation(tuple(ann)),
        label=GENUINE,
        provenance=GENUINE,
    )


def gen_sample(cat, duration_s, seed, params=SynthParams(), sample_id=None) -> Sample:
    """Single-category genuine sample of ``duration_s`` seconds."""
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    return gen_segments_sample([(category(cat), duration_s)], seed, params, sample_id)


# ---------------------------------------------------------------------------
# Corpora
# ---------------------------------------------------------------------------

@dataclass
class CorpusSpec:
    """Sample layouts: each entry is a list of (category, duration_s) segments."""

    samples: list = field(default_factory=list)

    @classmethod
    def from_counts(cls, counts):
        """``{category: {"count": n, "duration": seconds}}`` -> single-category samples."""
        layout = []
        for cat, entry in counts.items():
            if isinstance(entry, dict):
                n, dur = int(entry["count"]), float(entry["duration"])
            else:
                n, dur = int(entry[0]), float(entry[1])
            layout.extend([[(category(cat).id, dur)] for _ in range(n)])
        return cls(layout)

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (str, Path)):
            obj = json.loads(Path(obj).read_text())
        if "samples" in obj:
            return cls([[(category(c).id, float(d)) for c, d in s["segments"]] for s in obj["samples"]])
        return cls.from_counts(obj)

    def to_json(self):
        return {"samples": [{"segments": [[str(c), d] for c, d in s]} for s in self.samples]}


def table2_spec(seed=0, n_samples=160, multi_chunk_samples=113, empty_samples=4,
                chunk_s=6.0, counts=TABLE2_CHUNKS) -> CorpusSpec:
    """Layout reproducing the free-form dataset shape.

    Segment chunking of the generated corpus yields exactly ``sum(counts)``
    chunks (401 by default) distributed per ``counts``; ``multi_chunk_samples``
    samples have at least 2 chunks, ``empty_samples`` have none and the rest
    have exactly one.
    """
    rng = np.random.default_rng(seed)
    total = sum(counts.values())
    single = n_samples - multi_chunk_samples - empty_samples
    rest = total - single
    if single < 0 or rest < 2 * multi_chunk_samples:
        raise ValueError("inconsistent corpus shape")
    sizes = np.full(multi_chunk_samples, 2)
    for _ in range(rest - 2 * multi_chunk_samples):
        open_ = np.flatnonzero(sizes < 6)
        sizes[rng.choice(open_)] += 1
    sizes = [1] * single + sizes.tolist()
    order = rng.permutation(len(sizes))
    sizes = [sizes[i] for i in order]

    cats = [c for c, n in counts.items() for _ in range(n)]
    layout, pos = [], 0
    for size in sizes:
        run = cats[pos:pos + size]
        pos += size
        segs = []
        for c in run:
            if segs and segs[-1][0] == c:
                segs[-1][1] += 1
            else:
                segs.append([c, 1])
        layout.append([(c, n * chunk_s + float(rng.uniform(0.5, 5.0))) for c, n in segs])
    keys = list(counts)
    for _ in range(empty_samples):
        layout.append([(keys[rng.integers(len(keys))], float(rng.uniform(3.0, 5.5)))])
    perm = rng.permutation(len(layout))
    return CorpusSpec([layout[i] for i in perm])


def gen_corpus(spec, seed, params=SynthParams(), out_dir=None) -> list:
    """Generate every sample of ``spec`` deterministically from ``seed``."""
    if not isinstance(spec, CorpusSpec):
        spec = CorpusSpec.from_json(spec)
    seeds = np.random.SeedSequence(seed).spawn(len(spec.samples))
    samples = [
        gen_segments_sample(layout, s, params, sample_id=f"s{i:04d}")
        for i, (layout, s) in enumerate(zip(spec.samples, seeds))
    ]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for smp in samples:
            save_sample(smp, out)
    return samples

