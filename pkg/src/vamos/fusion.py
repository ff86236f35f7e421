"""Sample-level verdicts from per-chunk classifications."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FEATURE_NAMES
from .learning import ConfusionRates

MAX_CHUNKS = 32
PAD = -1
AGGREGATES = ("min", "max", "mean", "std")
SAMPLE_FEATURE_NAMES = (
    ("f", "g", "p_fake")
    + tuple(f"label_{k}" for k in range(MAX_CHUNKS))
    + tuple(f"{name}_{agg}" for name in FEATURE_NAMES for agg in AGGREGATES)
)


class DegenerateRates(ValueError):
    pass


@dataclass(frozen=True)
class PriorRates:
    """Chunk-level priors and classifier rates measured on training data."""

    p_fake_prior: float
    p_genuine_prior: float
    tpr: float
    fpr: float
    tnr: float
    fnr: float

    def __post_init__(self):
        if abs(self.p_fake_prior + self.p_genuine_prior - 1.0) > 1e-9:
            raise ValueError("priors must sum to 1")
        for name in ("p_fake_prior", "p_genuine_prior", "tpr", "fpr", "tnr", "fnr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @classmethod
    def from_counts(cls, n_fake, n_genuine, rates: ConfusionRates):
        total = n_fake + n_genuine
        if total == 0:
            raise ValueError("no training chunks")

        def safe(v):
            return 0.0 if np.isnan(v) else float(v)

        return cls(n_fake / total, n_genuine / total,
                   safe(rates.tpr), safe(rates.fpr), safe(rates.tnr), safe(rates.fnr))


def alpha_beta(priors: PriorRates):
    """Posterior probabilities that a chunk is genuine given each verdict.

    alpha = P(genuine | classified genuine), beta = P(genuine | classified fake).
    """
    pg, pf = priors.p_genuine_prior, priors.p_fake_prior
    da = priors.tnr * pg + priors.fnr * pf
    db = priors.fpr * pg + priors.tpr * pf
    if da <= 0:
        raise DegenerateRates("no chunk can be classified genuine (tnr*P(gen) + fnr*P(fake) = 0)")
    if db <= 0:
        raise DegenerateRates("no chunk can be classified fake (fpr*P(gen) + tpr*P(fake) = 0)")
    return priors.tnr * pg / da, priors.fpr * pg / db


def p_sample_fake(f, g, alpha, beta):
    """1 - alpha^g * beta^f: the chance that at least one chunk is fake."""
    if f < 0 or g < 0:
        raise ValueError("chunk counts must be non-negative")
    p = 1.0 - (alpha ** g) * (beta ** f)
    return float(min(1.0, max(0.0, p)))


def majority_vote(f, g, thr=0.5):
    if f + g < 1:
        raise ValueError("need at least one chunk")
    return "fake" if f / (f + g) > thr else "genuine"


def _counts(verdicts):
    v = np.array([x in (1, True, "fake") for x in verdicts], dtype=bool)
    return int(v.sum()), int((~v).sum())


def probabilistic_verdict(verdicts, priors: PriorRates, thr=0.7):
    f, g = _counts(verdicts)
    a, b = alpha_beta(priors)
    return "fake" if p_sample_fake(f, g, a, b) > thr else "genuine"


@dataclass(frozen=True)
class SampleFeatures:
    f: int
    g: int
    chunk_labels: tuple
    p_fake: float
    aggregates: np.ndarray

    def to_vector(self):
        return np.concatenate([[self.f, self.g, self.p_fake], self.chunk_labels, self.aggregates])


def aggregate(X):
    """(min, max, mean, std) per column, interleaved per feature."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    stats = np.stack([X.min(axis=0), X.max(axis=0), X.mean(axis=0), X.std(axis=0)], axis=1)
    return stats.ravel()


def sample_features(chunk_X, verdicts, priors: PriorRates) -> SampleFeatures:
    """Fixed-width description of a sample from its chunks' features and verdicts."""
    chunk_X = np.atleast_2d(np.asarray(chunk_X, dtype=float))
    if chunk_X.shape[0] < 1:
        raise ValueError("need at least one chunk")
    f, g = _counts(verdicts)
    a, b = alpha_beta(priors)
    labels = [1 if v in (1, True, "fake") else 0 for v in verdicts][:MAX_CHUNKS]
    labels += [PAD] * (MAX_CHUNKS - len(labels))
    return SampleFeatures(f, g, tuple(labels), p_sample_fake(f, g, a, b), aggregate(chunk_X))


def classify_sample(model, features):
    """(verdict, score) for a SampleFeatures or a raw sample feature vector."""
    vec = features.to_vector() if hasattr(features, "to_vector") else np.asarray(features, float)
    s = float(model.score(vec[None, :])[0])
    return ("fake" if s > 0.5 else "genuine"), s
