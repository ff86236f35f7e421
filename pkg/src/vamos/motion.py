"""Frame-based (VMA) and accelerometer-based (IMA) motion traces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .traces import AccelStream, FrameSequence, MotionTrace, TraceValidationError

DEFAULT_STRIDE = 5
DEFAULT_ALPHA = 0.8
DEFAULT_STILL_THRESHOLD = 0.1
DEFAULT_STILL_WINDOW = 0.25


@dataclass(frozen=True)
class FrameShift:
    dx: float
    dy: float
    peak_response: float
    degenerate: bool = False


def _signed(idx, n):
    return idx - n if idx > n // 2 else idx


def _parabolic(lo, mid, hi):
    denom = lo - 2.0 * mid + hi
    if denom == 0.0:
        return 0.0
    off = 0.5 * (lo - hi) / denom
    # FFT round-off leaves ~1e-17 offsets on exact integer shifts
    return round(float(np.clip(off, -0.5, 0.5)), 9) + 0.0


def phase_correlate(frame_a, frame_b, subpixel=True, window=False) -> FrameShift:
    """Translation of ``frame_b`` relative to ``frame_a`` by phase correlation.

    A scene that moves right (``frame_b = roll(frame_a, +s, axis=1)``) gives a
    positive ``dx``; moving down gives a positive ``dy``.

    Parameters
    ----------
    frame_a, frame_b : 2-D arrays of equal shape, at least 8x8
    subpixel : bool
        Refine the integer peak with a parabola through its axis neighbours.
    window : bool
        Apply a Hann window before the transform (for non-wrapping content).
    """
    a = np.asarray(frame_a, dtype=float)
    b = np.asarray(frame_b, dtype=float)
    if a.ndim != 2 or a.shape != b.shape:
        raise ValueError(f"frames must be 2-D with equal shape, got {a.shape} and {b.shape}")
    h, w = a.shape
    if h < 8 or w < 8:
        raise ValueError("frames must be at least 8x8")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return FrameShift(0.0, 0.0, 0.0, degenerate=True)

    a = a - a.mean()
    b = b - b.mean()
    if window:
        win = np.outer(np.hanning(h), np.hanning(w))
        a = a * win
        b = b * win
    cross = np.fft.fft2(b) * np.conj(np.fft.fft2(a))
    mag = np.abs(cross)
    eps = 1e-12 * mag.max()
    cross = np.where(mag > eps, cross / np.maximum(mag, eps), 0.0)
    corr = np.fft.ifft2(cross).real

    iy, ix = np.unravel_index(int(np.argmax(corr)), corr.shape)
    peak = float(corr[iy, ix])
    dy, dx = float(_signed(iy, h)), float(_signed(ix, w))
    if subpixel:
        dy += _parabolic(corr[(iy - 1) % h, ix], corr[iy, ix], corr[(iy + 1) % h, ix])
        dx += _parabolic(corr[iy, (ix - 1) % w], corr[iy, ix], corr[iy, (ix + 1) % w])
    return FrameShift(dx, dy, max(peak, 0.0))


def accumulate_shifts(shifts, dt, t0=0.0) -> MotionTrace:
    """Prefix-sum per-pair (dx, dy) shifts into a 2-axis video trace."""
    d = np.array([[s.dx, s.dy] if isinstance(s, FrameShift) else s for s in shifts],
                 dtype=float).reshape(-1, 2)
    values = np.vstack([np.zeros((1, 2)), np.cumsum(d, axis=0)])
    t = t0 + dt * np.arange(values.shape[0])
    degenerate = [k + 1 for k, s in enumerate(shifts)
                  if isinstance(s, FrameShift) and s.degenerate]
    return MotionTrace(t, values, ("x", "y"), "video", degenerate)


def vma(frames: FrameSequence, stride=DEFAULT_STRIDE, subpixel=True, window=False) -> MotionTrace:
    """Cumulative x/y shift of a frame sequence, one point every ``stride`` frames."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n = len(frames)
    if n < stride + 1:
        raise TraceValidationError(f"need at least {stride + 1} frames for stride {stride}")
    idx = np.arange(0, n, stride)
    shifts = [phase_correlate(frames.frames[i], frames.frames[j], subpixel, window)
              for i, j in zip(idx[:-1], idx[1:])]
    return accumulate_shifts(shifts, stride / frames.fps)


def gravity_filter(accel: AccelStream, alpha=DEFAULT_ALPHA) -> AccelStream:
    """High-pass residual after an exponential gravity estimate.

    Per axis: g_k = alpha*g_{k-1} + (1-alpha)*a_k with g_0 = a_0; the output
    reading is a_k - g_k.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    a = accel.values
    gravity = lfilter([1.0 - alpha], [1.0, -alpha], a, axis=0, zi=alpha * a[:1])[0]
    return AccelStream(accel.t, a - gravity, accel.nominal_rate_hz)


def ima(accel: AccelStream, alpha=DEFAULT_ALPHA, still_threshold=DEFAULT_STILL_THRESHOLD,
        still_window=DEFAULT_STILL_WINDOW, remove_gravity=True) -> MotionTrace:
    """Displacement trace (x, y, z) from accelerometer readings.

    Gravity is removed with :func:`gravity_filter`, then each axis is integrated
    twice with the trapezoid rule.  Velocity is clamped to zero while the
    filtered acceleration magnitude has stayed below ``still_threshold`` for at
    least ``still_window`` seconds.
    """
    lin = gravity_filter(accel, alpha).values if remove_gravity else accel.values
    t = accel.t
    n = t.size
    mag = np.linalg.norm(lin, axis=1)
    vel = np.zeros((n, 3))
    pos = np.zeros((n, 3))
    still_since = t[0] if mag[0] < still_threshold else None
    for k in range(1, n):
        dt = t[k] - t[k - 1]
        if mag[k] < still_threshold:
            if still_since is None:
                still_since = t[k]
        else:
            still_since = None
        if still_since is not None and t[k] - still_since >= still_window - 1e-9:
            vel[k] = 0.0
        else:
            vel[k] = vel[k - 1] + 0.5 * (lin[k] + lin[k - 1]) * dt
        pos[k] = pos[k - 1] + 0.5 * (vel[k] + vel[k - 1]) * dt
    return MotionTrace(t, pos, ("x", "y", "z"), "accel")
