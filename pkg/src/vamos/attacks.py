"""Fabricated (video, accelerometer) pairs for every attack family.

Trace-level attacks (mirror, ipc, PFA) build ``accel_motion`` directly from
the video trace and leave the raw ``accel`` stream empty.  Stream-level
attacks (cluster, sandwich) produce raw accelerometer data.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.cluster.vq import ClusterError, kmeans2
from scipy.ndimage import gaussian_filter1d

from .chunking import DEFAULT_CHUNK_S, segment_chunks
from .dtw import dtw
from .synth import LatentPath, SynthParams, accel_from_path, band_noise
from .traces import FAKE, GENUINE, AccelStream, Chunk, MotionTrace, Sample

log = logging.getLogger(__name__)

CLUSTER = "cluster"
MIRROR = "mirror"
IPC = "ipc"
PFA = "pfa"
SANDWICH = "sandwich"
ATTACKS = (CLUSTER, SANDWICH, MIRROR, IPC, PFA)


class AttackError(ValueError):
    pass


def _rngs(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _fake(target: Chunk, accel_motion, accel, provenance) -> Chunk:
    return replace(target, accel_motion=accel_motion, accel=accel, label=FAKE,
                   provenance=provenance)


# ---------------------------------------------------------------------------
# Cluster attack
# ---------------------------------------------------------------------------

def motion_descriptor(chunk: Chunk):
    """Per-axis (mean, std, total displacement, direction sign) of the video trace."""
    v = chunk.video_motion.values
    total = v[-1] - v[0]
    return np.concatenate([v.mean(axis=0), v.std(axis=0), total, np.sign(total)])


def kmeans(X, k, seed=0, retries=20):
    """k-means++ seeded Lloyd iterations; reseeds when a cluster comes out empty.

    Returns
    -------
    centroids : (k, d) array
    labels : (n,) int array
    """
    X = np.asarray(X, dtype=float)
    if k < 1 or k > X.shape[0]:
        raise AttackError(f"need 1 <= K <= {X.shape[0]}, got {k}")
    if k == 1:
        return X.mean(axis=0, keepdims=True), np.zeros(X.shape[0], dtype=int)
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        try:
            return kmeans2(X, k, minit="++", missing="raise", seed=rng)
        except ClusterError:
            continue
    raise AttackError(f"k-means left an empty cluster after {retries} reseeds")


@dataclass
class ClusterModel:
    """Pool descriptors, their standardization and the fitted clusters."""

    mean: np.ndarray
    scale: np.ndarray
    centroids: np.ndarray
    labels: np.ndarray

    @classmethod
    def fit(cls, pool, k=6, seed=0):
        D = np.array([motion_descriptor(c) for c in pool])
        mean = D.mean(axis=0)
        scale = D.std(axis=0)
        scale[scale == 0] = 1.0
        centroids, labels = kmeans((D - mean) / scale, k, seed)
        return cls(mean, scale, centroids, labels)

    def ranked_clusters(self, chunk):
        z = (motion_descriptor(chunk) - self.mean) / self.scale
        return np.argsort(np.linalg.norm(self.centroids - z, axis=1), kind="stable")


def retime(donor: Chunk, start_s):
    """Donor accelerometer data moved onto a chunk starting at ``start_s``."""
    dt = start_s - donor.start_s
    accel = donor.accel.shifted(dt) if donor.accel is not None else None
    return donor.accel_motion.shifted(dt), accel


def cluster_attack(targets, pool, k=6, seed=0) -> list:
    """Pair each target's video with the accelerometer data of a look-alike.

    The donor is drawn uniformly from the pool members of the target's
    nearest cluster (the target itself excluded); if that cluster holds no
    other chunk the next nearest cluster is used.
    """
    pool = list(pool)
    if len(pool) < max(k, 2):
        raise AttackError("pool must hold at least max(K, 2) chunks")
    model = ClusterModel.fit(pool, k, seed)
    members = [np.flatnonzero(model.labels == j) for j in range(len(model.centroids))]
    out = []
    for target, rng in zip(targets, _rngs(seed, len(targets))):
        donor = None
        for j in model.ranked_clusters(target):
            cand = [i for i in members[j] if pool[i].key != target.key]
            if cand:
                donor = pool[cand[rng.integers(len(cand))]]
                break
        motion, accel = retime(donor, target.start_s)
        out.append(_fake(target, motion, accel, CLUSTER))
    return out


# ---------------------------------------------------------------------------
# Mirror family
# ---------------------------------------------------------------------------

def mirror_trace(video: MotionTrace) -> MotionTrace:
    """Video trace copied into an accelerometer trace (x->x, y->y, z=0)."""
    vals = np.column_stack([video.axis("x"), video.axis("y"), np.zeros(len(video))])
    return MotionTrace(video.t, vals, ("x", "y", "z"), "accel")


def perfect_mirror(target: Chunk) -> Chunk:
    return _fake(target, mirror_trace(target.video_motion), None, MIRROR)


def insert_means(t, values, i):
    """Insert ``i`` points between each consecutive pair.

    Inserted values equal the mean of the two original neighbours; their
    timestamps split the gap evenly.  Length becomes n + i*(n-1).
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if i == 0 or t.size < 2:
        return t.copy(), values.copy()
    frac = np.arange(i + 1) / (i + 1)
    tt = (t[:-1, None] + np.diff(t)[:, None] * frac).ravel()
    mid = 0.5 * (values[:-1] + values[1:])
    vv = np.repeat(values[:-1], i + 1, axis=0)
    is_new = np.tile(frac > 0, t.size - 1)
    vv[is_new] = np.repeat(mid, i, axis=0)
    return np.append(tt, t[-1]), np.vstack([vv, values[-1:]])


@dataclass(frozen=True)
class IpcParams:
    p: float = 0.1
    c_range: tuple = (1.0, 2.0)
    i_choices: tuple = (2, 3)

    def draw(self, rng):
        i = int(rng.choice(self.i_choices))
        lo, hi = self.c_range
        c = float(lo) if lo == hi else float(rng.uniform(lo, hi))
        return i, c


def _perturb(values, p, c, rng, rows=None):
    """Scale values by independent factors in c*[1-p, 1+p]; only ``rows`` if given."""
    factor = c * (rng.uniform(1.0 - p, 1.0 + p, values.shape) if p > 0 else np.ones(values.shape))
    if rows is not None:
        factor[~rows] = 1.0
    return values * factor


def ipc_mirror(target: Chunk, params=IpcParams(), seed=0) -> Chunk:
    """Mirror, insert ``i`` mean points per gap, jitter each value by a factor
    in [1-p, 1+p], then scale everything by ``c``."""
    rng = np.random.default_rng(seed)
    i, c = params.draw(rng)
    base = mirror_trace(target.video_motion)
    t, v = insert_means(base.t, base.values, i)
    v = _perturb(v, params.p, c, rng)
    return _fake(target, MotionTrace(t, v, base.axes, "accel"), None, IPC)


# ---------------------------------------------------------------------------
# Perturbed-feature attack (PFA)
# ---------------------------------------------------------------------------

SNIPPET_S = 0.5
SNIPPET_RATE_HZ = 60.0
N_BUCKETS = 10


def _grid(start, length, rate):
    return start + np.arange(int(round(length * rate))) / rate


def _on_grid(trace: MotionTrace, grid, axes=("x", "y")):
    """Trace values on ``grid`` (edge values held), rebased to the first grid point."""
    vals = np.column_stack([np.interp(grid, trace.t, trace.axis(a)) for a in axes])
    return vals - vals[0]


def match_percentage(a, b):
    """Share of diagonal moves (in %) pooled over the axes of two point sets."""
    match = total = 0
    for k in range(a.shape[1]):
        r = dtw(a[:, k], b[:, k])
        match += r.match
        total += r.path_length
    return 100.0 * match / total


def bucket_of(pct):
    return min(int(pct // 10), N_BUCKETS - 1)


@dataclass(frozen=True)
class Snippet:
    video: np.ndarray
    accel: np.ndarray
    match_pct: float
    source: str

    @property
    def bucket(self):
        return bucket_of(self.match_pct)


@dataclass
class SnippetDictionary:
    """Genuine snippets grouped into match-percentage deciles.

    Bucket ``b`` covers [10b, 10b+10), the last bucket is closed at 100.
    """

    buckets: list = field(default_factory=lambda: [[] for _ in range(N_BUCKETS)])
    length_s: float = SNIPPET_S
    rate_hz: float = SNIPPET_RATE_HZ

    def __len__(self):
        return sum(len(b) for b in self.buckets)

    def add(self, snip: Snippet):
        self.buckets[snip.bucket].append(snip)

    def snippets(self):
        return [s for b in self.buckets for s in b]

    def _index(self):
        snips = self.snippets()
        if not snips:
            raise AttackError("empty PFA dictionary")
        return snips, np.array([s.video.ravel() for s in snips])

    def nearest(self, video_points):
        """Dictionary snippet whose video points are closest in Euclidean distance."""
        snips, mat = self._index()
        d = np.linalg.norm(mat - np.ravel(video_points), axis=1)
        return snips[int(np.argmin(d))]


def chunk_snippets(chunk: Chunk, length_s=SNIPPET_S, rate_hz=SNIPPET_RATE_HZ):
    """(video, accel) point sets of consecutive ``length_s`` windows of a chunk."""
    n = int(np.floor(chunk.length / length_s + 1e-6))
    out = []
    for k in range(n):
        grid = _grid(chunk.start_s + k * length_s, length_s, rate_hz)
        out.append((_on_grid(chunk.video_motion, grid), _on_grid(chunk.accel_motion, grid)))
    return out


def build_pfa_dictionary(chunks, length_s=SNIPPET_S, rate_hz=SNIPPET_RATE_HZ) -> SnippetDictionary:
    """Split genuine chunks into snippets and bucket them by match percentage."""
    chunks = list(chunks)
    if not chunks:
        raise AttackError("PFA dictionary needs at least one chunk")
    d = SnippetDictionary(length_s=length_s, rate_hz=rate_hz)
    for c in chunks:
        for video, accel in chunk_snippets(c, length_s, rate_hz):
            d.add(Snippet(video, accel, match_percentage(video, accel), c.id))
    return d


def split_pfa_dataset(chunks, seed=0, dictionary_fraction=0.1):
    """Partition chunks into (dictionary, fake targets, genuine) subsets.

    401 chunks give 40 / 180 / 181.
    """
    chunks = list(chunks)
    order = np.random.default_rng(seed).permutation(len(chunks))
    n_dict = int(np.floor(dictionary_fraction * len(chunks) + 1e-9))
    rest = order[n_dict:]
    n_fake = rest.size // 2
    pick = lambda idx: [chunks[i] for i in idx]
    return pick(order[:n_dict]), pick(rest[:n_fake]), pick(rest[n_fake:])


def pfa_snippet(mirror_points, x_pct, params, rng):
    """Keep ``x_pct`` percent of the points, ipc-perturb the rest.

    Each perturbed point is scaled by a factor in c*[1-p, 1+p] and followed
    by ``i`` inserted points equal to the mean of it and its successor.
    Returns the new point array (inserted points included).
    """
    n = mirror_points.shape[0]
    i, c = params.draw(rng)
    n_keep = int(round(n * x_pct / 100.0))
    changed = np.zeros(n, dtype=bool)
    changed[rng.permutation(n)[:n - n_keep]] = True
    vals = _perturb(mirror_points, params.p, c, rng, changed)
    rows = []
    for k in range(n):
        rows.append(vals[k])
        if changed[k] and k + 1 < n:
            mid = 0.5 * (vals[k] + vals[k + 1])
            rows.extend([mid] * i)
    return np.array(rows)


def pfa_attack(target: Chunk, dictionary: SnippetDictionary, params=IpcParams(), seed=0) -> Chunk:
    """Mirror the target and perturb every snippet as much as its nearest genuine
    neighbour disagrees with its own accelerometer data."""
    if len(dictionary) == 0:
        raise AttackError("empty PFA dictionary")
    rng = np.random.default_rng(seed)
    L, rate = dictionary.length_s, dictionary.rate_hz
    n = int(np.floor(target.length / L + 1e-6))
    mirror = mirror_trace(target.video_motion)
    times, values = [], []
    for k in range(n):
        s = target.start_s + k * L
        grid = _grid(s, L, rate)
        video = _on_grid(target.video_motion, grid)
        b = dictionary.nearest(video).bucket
        x = rng.uniform(10.0 * b, 10.0 * (b + 1))
        pts = pfa_snippet(video, x, params, rng)
        # snippets are rebased, so restore their absolute level
        base = [np.interp(s, mirror.t, mirror.axis(a)) for a in ("x", "y")]
        times.append(s + np.arange(pts.shape[0]) * (L / pts.shape[0]))
        values.append(pts + base)
    t = np.concatenate(times)
    v = np.vstack(values)
    v = np.column_stack([v - v[0], np.zeros(t.size)])
    return _fake(target, MotionTrace(t, v, ("x", "y", "z"), "accel"), None, PFA)


# ---------------------------------------------------------------------------
# Sandwich attack (emulated human imitation)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SandwichParams:
    """A person watching the target video and moving a sensor-only device to match."""

    lag_s: tuple = (0.2, 0.5)
    smoothing_s: float = 0.25
    gain: tuple = (0.6, 1.6)
    wobble_rms: tuple = (0.002, 0.006)
    wobble_band: tuple = (0.3, 2.0)
    synth: SynthParams = SynthParams()


def imitation_path(video: MotionTrace, duration, params: SandwichParams, rng) -> LatentPath:
    """Device path of someone copying the on-screen motion with delay and error."""
    p = params.synth
    rate = p.fine_rate_hz
    t = np.arange(int(np.ceil(duration * rate)) + 3) / rate
    lag = rng.uniform(*params.lag_s)
    gain = rng.uniform(*params.gain, size=2)
    pos = np.zeros((t.size, 3))
    for k, name in enumerate(("x", "y")):
        v = np.interp(t - lag, video.t - video.t[0], video.axis(name), left=0.0)
        pos[:, k] = gain[k] * gaussian_filter1d(v, params.smoothing_s * rate, mode="nearest")
    wobble = rng.uniform(*params.wobble_rms)
    for k, share in enumerate((1.0, 1.0, 0.5)):
        pos[:, k] += band_noise(t.size, rate, params.wobble_band, wobble * share, rng)
    if p.rest_s > 0:
        r = np.clip(t / p.rest_s, 0.0, 1.0)
        pos = (pos - pos[0]) * (r * r * (3.0 - 2.0 * r))[:, None]
    return LatentPath(t, pos)


def sandwich_attack(sample: Sample, params=SandwichParams(), seed=0) -> Sample:
    """Replace the sample's accelerometer stream with an emulated imitation."""
    rng = np.random.default_rng(seed)
    t0 = sample.accel.t[0]
    path = imitation_path(sample.video_motion, sample.duration + 1.0, params, rng)
    readings = accel_from_path(path, sample.accel.t - t0, params.synth, rng)
    accel = AccelStream(sample.accel.t, readings, sample.accel.nominal_rate_hz)
    return replace(sample, id=f"{sample.id}~{SANDWICH}", accel=accel, label=FAKE,
                   provenance=SANDWICH, fake_intervals=())


def sandwich_chunks(sample: Sample, params=SandwichParams(), seed=0, length=DEFAULT_CHUNK_S):
    """Segment chunks of a sandwich forgery, keyed like the genuine sample's chunks."""
    fake = sandwich_attack(sample, params, seed)
    return [replace(c, parent_sample_id=sample.id) for c in segment_chunks(fake, length)]


# ---------------------------------------------------------------------------
# Stitch attack
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChunkedSample:
    """A sample seen through its ordered chunks."""

    id: str
    chunks: tuple
    label: str = GENUINE
    provenance: str = GENUINE
    parent: str = ""

    @property
    def fake_positions(self):
        return tuple(k for k, c in enumerate(self.chunks) if c.label == FAKE)

    @property
    def parent_sample_id(self):
        if self.parent:
            return self.parent
        return self.chunks[0].parent_sample_id if self.chunks else ""


def stitch_patterns(n, count=3, rng=None):
    """Fake-position sets for ``count`` stitched samples built from ``n`` chunks."""
    if n < 2:
        raise AttackError("stitching needs a sample with at least 2 chunks")
    if n == 2:
        base = [(0,), (1,), (0, 1)]
        return [base[j % 3] for j in range(count)]
    rng = rng or np.random.default_rng(0)
    out = []
    for j in range(1, count + 1):
        m = min(j, n)
        out.append(tuple(sorted(int(x) for x in rng.choice(n, size=m, replace=False))))
    return out


def _pool_index(pool):
    if isinstance(pool, dict):
        return pool
    return {c.key: c for c in pool}


def stitch_attack(chunks, fake_pool, count=3, seed=0, provenance=None) -> list:
    """``count`` fake samples mixing a genuine sample's chunks with fakes.

    ``chunks`` are the genuine sample's chunks in time order; the fake for
    position k is looked up in ``fake_pool`` by chunk key, so it shares the
    genuine chunk's video window.
    """
    chunks = list(chunks)
    pool = _pool_index(fake_pool)
    rng = np.random.default_rng(seed)
    out = []
    for j, positions in enumerate(stitch_patterns(len(chunks), count, rng)):
        new = list(chunks)
        for k in positions:
            try:
                new[k] = pool[chunks[k].key]
            except KeyError:
                raise AttackError(f"no fake chunk for {chunks[k].id}") from None
        prov = provenance or f"stitch-{new[positions[0]].provenance}"
        parent = chunks[0].parent_sample_id
        out.append(ChunkedSample(f"{parent}#stitch{j}", tuple(new), FAKE, prov, parent))
    return out


def stitch_sample(sample: Sample, fake_chunks, name="stitch") -> Sample:
    """Raw-stream stitch: accelerometer readings inside each fake chunk window
    are replaced with the fake chunk's (retimed) readings."""
    t = sample.accel.t
    keep = np.ones(t.size, dtype=bool)
    parts_t, parts_v, intervals = [], [], []
    for c in fake_chunks:
        if c.accel is None:
            raise AttackError(f"{c.id}: trace-level fake has no raw accelerometer data")
        keep &= ~((t >= c.start_s - 1e-9) & (t < c.end_s - 1e-9))
        w = (c.accel.t >= c.start_s - 1e-9) & (c.accel.t < c.end_s - 1e-9)
        parts_t.append(c.accel.t[w])
        parts_v.append(c.accel.values[w])
        intervals.append((c.start_s, c.end_s))
    tt = np.concatenate([t[keep], *parts_t])
    vv = np.vstack([sample.accel.values[keep], *parts_v])
    order = np.argsort(tt, kind="stable")
    accel = AccelStream(tt[order], vv[order], sample.accel.nominal_rate_hz)
    return replace(sample, id=f"{sample.id}#{name}", accel=accel, label=FAKE,
                   provenance=name, fake_intervals=tuple(sorted(intervals)))


# ---------------------------------------------------------------------------
# Dataset helpers
# ---------------------------------------------------------------------------

def mirror_dataset(chunks):
    return [perfect_mirror(c) for c in chunks]


def ipc_dataset(chunks, params=IpcParams(), seed=0):
    seeds = np.random.SeedSequence(seed).spawn(len(chunks))
    return [ipc_mirror(c, params, s) for c, s in zip(chunks, seeds)]


def pfa_dataset(chunks, params=IpcParams(), seed=0, dictionary_fraction=0.1):
    """Returns (fakes, genuine, dictionary)."""
    dict_chunks, targets, genuine = split_pfa_dataset(chunks, seed, dictionary_fraction)
    d = build_pfa_dictionary(dict_chunks)
    seeds = np.random.SeedSequence([seed, 1]).spawn(len(targets))
    return [pfa_attack(c, d, params, s) for c, s in zip(targets, seeds)], genuine, d
