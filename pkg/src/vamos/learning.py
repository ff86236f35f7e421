"""Decision trees, random forests and bagging for binary genuine/fake labels.

Labels are 0 (genuine) and 1 (fake); fake is the positive class throughout.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import xlogy

log = logging.getLogger(__name__)
_LN2 = math.log(2.0)

MODEL_FORMAT = "vamos-ensemble"
MODEL_VERSION = 1


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Single tree
# ---------------------------------------------------------------------------

def _entropy(p):
    """Binary entropy (bits) of positive fractions ``p``; 0 log 0 = 0."""
    q = 1.0 - p
    return -(xlogy(p, p) + xlogy(q, q)) / _LN2


def best_splits(Xn, y, min_leaf=1):
    """Best information-gain threshold for every column of ``Xn``.

    Returns ``(gain, threshold)`` arrays; columns without a split leaving at
    least ``min_leaf`` rows per side get gain ``-inf``.  The threshold is the
    midpoint between neighbouring distinct values; ``x <= threshold`` goes left.
    """
    n, d = Xn.shape
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = Xn[order, np.arange(d)]
    ys = y[order]
    pos_left = np.cumsum(ys, axis=0)[:-1]
    n_left = np.arange(1, n)[:, None]
    n_right = n - n_left
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    total_pos = pos_left[-1] + ys[-1] if n > 1 else ys.sum(axis=0)
    h_parent = _entropy(total_pos / n)
    h_children = (n_left * _entropy(pos_left / n_left)
                  + n_right * _entropy((total_pos - pos_left) / n_right)) / n
    gain = np.where(valid, h_parent - h_children, -np.inf)
    k = np.argmax(gain, axis=0)
    cols = np.arange(d)
    lo, hi = xs[k, cols], xs[np.minimum(k + 1, n - 1), cols]
    thr = 0.5 * (lo + hi)
    thr = np.where(thr >= hi, lo, thr)  # midpoint rounding between adjacent floats
    return gain[k, cols], thr


def best_split(x, y, min_leaf=1):
    """Single-feature form of :func:`best_splits`; None when no valid split."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return None
    gain, thr = best_splits(x[:, None], np.asarray(y), min_leaf)
    if not np.isfinite(gain[0]):
        return None
    return float(gain[0]), float(thr[0])


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_leaf: int = 2
    max_features: object = None  # None (all), "sqrt", or an int


def _n_features(spec, d):
    if spec is None:
        return d
    if spec == "sqrt":
        return max(1, int(math.sqrt(d)))
    return max(1, min(d, int(spec)))


class Tree:
    """Binary tree stored in flat arrays; leaves have ``feature == -1``.

    ``value`` holds the fraction of fake rows reaching each node.
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=int)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=int)
        self.right = np.asarray(right, dtype=int)
        self.value = np.asarray(value, dtype=float)

    @property
    def n_nodes(self):
        return self.feature.size

    @property
    def depth(self):
        depth = np.zeros(self.n_nodes, dtype=int)
        for k in range(self.n_nodes):
            if self.feature[k] >= 0:
                depth[self.left[k]] = depth[self.right[k]] = depth[k] + 1
        return int(depth.max())

    @classmethod
    def fit(cls, X, y, params=TreeParams(), rng=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        rng = rng or np.random.default_rng(0)
        d = X.shape[1]
        k_feat = _n_features(params.max_features, d)
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(idx):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(y[idx].mean()) if idx.size else 0.0)
            return len(feature) - 1

        stack = [(new_node(np.arange(y.size)), np.arange(y.size), 0)]
        while stack:
            node, idx, depth = stack.pop()
            yy = y[idx]
            pure = yy.min() == yy.max()
            if pure or idx.size < 2 * params.min_leaf or (
                    params.max_depth is not None and depth >= params.max_depth):
                continue
            feats = rng.permutation(d)[:k_feat] if k_feat < d else np.arange(d)
            gain, thr = best_splits(X[np.ix_(idx, feats)], yy, params.min_leaf)
            j = int(np.argmax(gain))
            # zero-gain splits are kept for impure nodes (XOR-like data)
            if not np.isfinite(gain[j]):
                continue
            f, thr = int(feats[j]), float(thr[j])
            go_left = X[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            feature[node], threshold[node] = int(f), thr
            left[node] = new_node(li)
            right[node] = new_node(ri)
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))
        return cls(feature, threshold, left, right, value)

    def leaf_values(self, X):
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            n = node[rows]
            go_left = X[rows, self.feature[n]] <= self.threshold[n]
            node[rows] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return self.value[node]

    def predict(self, X):
        return (self.leaf_values(X) > 0.5).astype(int)

    def to_dict(self):
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def train_tree(X, y, params=TreeParams(), seed=0) -> "Ensemble":
    """A single fully deterministic tree wrapped as a one-member ensemble."""
    return train_ensemble(X, y, kind="tree", n_trees=1, seed=seed, params=params)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

KINDS = ("random_forest", "bagging", "tree")


def bootstrap_probabilities(y, class_weights=None):
    """Per-row draw probabilities so each class's share is proportional to its weight
    times its count."""
    y = np.asarray(y, dtype=int)
    if class_weights is None:
        return np.full(y.size, 1.0 / y.size)
    w = np.array([float(class_weights.get(c, class_weights.get(str(c), 1.0))) for c in y])
    if w.sum() <= 0:
        raise ValueError("class weights must not all be zero")
    return w / w.sum()


class Ensemble:
    """Majority-vote tree ensemble; ``score`` is the fraction of trees voting fake."""

    def __init__(self, trees, kind, feature_names=None, params=None, seed=0,
                 class_weights=None, oob_score=None):
        self.trees = list(trees)
        self.kind = kind
        self.feature_names = tuple(feature_names) if feature_names is not None else None
        self.params = params or TreeParams()
        self.seed = seed
        self.class_weights = class_weights
        self.oob_score = oob_score

    def __len__(self):
        return len(self.trees)

    def _check(self, X, feature_names):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if feature_names is not None and self.feature_names is not None:
            if tuple(feature_names) != self.feature_names:
                raise SchemaError("feature names differ from the training schema")
        width = len(self.feature_names) if self.feature_names else None
        if width is not None and X.shape[1] != width:
            raise SchemaError(f"expected {width} features, got {X.shape[1]}")
        return X

    def score(self, X, feature_names=None):
        X = self._check(X, feature_names)
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += tree.predict(X)
        return votes / len(self.trees)

    def predict(self, X, feature_names=None):
        return (self.score(X, feature_names) > 0.5).astype(int)

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "feature_names": list(self.feature_names) if self.feature_names else None,
            "params": asdict(self.params),
            "seed": self.seed,
            "class_weights": ({str(k): v for k, v in self.class_weights.items()}
                              if self.class_weights else None),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT:
            raise SchemaError("not a vamos model file")
        if d.get("version") != MODEL_VERSION:
            raise SchemaError(f"unsupported model version {d.get('version')}")
        weights = d.get("class_weights")
        return cls([Tree.from_dict(t) for t in d["trees"]], d["kind"], d.get("feature_names"),
                   TreeParams(**d["params"]), d.get("seed", 0),
                   {int(k): v for k, v in weights.items()} if weights else None)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_ensemble(X, y, kind="random_forest", n_trees=100, seed=0, params=None,
                   class_weights=None, feature_names=None) -> Ensemble:
    """Bootstrap tree ensemble.

    Parameters
    ----------
    kind : {"random_forest", "bagging", "tree"}
        Random forests draw ``sqrt(d)`` candidate features per split; bagging
        uses all features; "tree" is one tree on the unresampled data.
    class_weights : dict, optional
        ``{0: w_genuine, 1: w_fake}``; bootstrap rows are drawn with
        probability proportional to their class weight.

    Notes
    -----
    ``oob_score`` holds each training row's fake-vote fraction over the trees
    that did not draw it (NaN if every tree drew it).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown ensemble kind {kind!r}")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.size or y.size == 0:
        raise ValueError("X must be (n, d) with one label per row")
    if params is None:
        params = TreeParams(max_features="sqrt" if kind == "random_forest" else None)
    if kind == "random_forest" and params.max_features is None:
        params = TreeParams(params.max_depth, params.min_leaf, "sqrt")
    if np.unique(y).size < 2:
        log.warning("single-class training data; model is constant")

    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_trees)]
    probs = bootstrap_probabilities(y, class_weights)
    n = y.size
    trees = []
    oob_votes = np.zeros(n)
    oob_count = np.zeros(n)
    for rng in rngs:
        if kind == "tree":
            idx = np.arange(n)
        else:
            idx = rng.choice(n, size=n, replace=True, p=probs)
        tree = Tree.fit(X[idx], y[idx], params, rng)
        trees.append(tree)
        if kind != "tree":
            out = np.ones(n, dtype=bool)
            out[idx] = False
            if out.any():
                oob_votes[out] += tree.predict(X[out])
                oob_count[out] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        oob = np.where(oob_count > 0, oob_votes / np.maximum(oob_count, 1), np.nan)
    return Ensemble(trees, kind, feature_names, params, seed, class_weights,
                    oob if kind != "tree" else None)


def classify_chunk(model: Ensemble, features, feature_names=None):
    """(label, score) for one feature vector (or ChunkFeatures)."""
    vec = features.to_vector() if hasattr(features, "to_vector") else np.asarray(features, float)
    s = float(model.score(vec[None, :], feature_names)[0])
    return ("fake" if s > 0.5 else "genuine"), s


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionRates:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    def _ratio(self, a, b):
        return a / b if b else float("nan")

    @property
    def tpr(self):
        return self._ratio(self.tp, self.tp + self.fn)

    @property
    def fnr(self):
        return self._ratio(self.fn, self.tp + self.fn)

    @property
    def fpr(self):
        return self._ratio(self.fp, self.fp + self.tn)

    @property
    def tnr(self):
        return self._ratio(self.tn, self.fp + self.tn)

    @property
    def accuracy(self):
        return self._ratio(self.tp + self.tn, self.total)

    def __add__(self, other):
        return ConfusionRates(self.tp + other.tp, self.fp + other.fp,
                              self.fn + other.fn, self.tn + other.tn)

    def as_dict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "tpr": self.tpr, "fpr": self.fpr, "fnr": self.fnr, "tnr": self.tnr,
                "accuracy": self.accuracy}


def _binary(v):
    v = list(v)
    return np.array([x in (1, True, "fake") for x in v], dtype=bool)


def evaluate(predictions, truths) -> ConfusionRates:
    """Confusion counts with fake as the positive class.

    Accepts 0/1, booleans or "genuine"/"fake" strings.
    """
    p = _binary(predictions)
    t = _binary(truths)
    if p.size != t.size:
        raise ValueError("predictions and truths differ in length")
    if p.size == 0:
        raise ValueError("cannot evaluate an empty prediction set")
    return ConfusionRates(int(np.sum(p & t)), int(np.sum(p & ~t)),
                          int(np.sum(~p & t)), int(np.sum(~p & ~t)))
