"""Experiment designs over chunk feature tables and stitched samples."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import attacks as atk
from .chunking import DEFAULT_CHUNK_S, segment_chunks
from .features import FEATURE_NAMES, FeatureConfig, FeatureTable
from .fusion import (DegenerateRates, PriorRates, SAMPLE_FEATURE_NAMES, majority_vote,
                     sample_features)
from .learning import ConfusionRates, TreeParams, evaluate, train_ensemble

log = logging.getLogger(__name__)

VOTE_THRESHOLDS = (0.1, 0.3, 0.5, 0.7)
PROB_THRESHOLDS = (0.6, 0.7, 0.8)
MIX_WEIGHTS = {1: 1 / 8, 0: 7 / 8}
EXPERIMENTS = ("cat", "mixed", "novelty", "mixattack", "newattack", "sample")
ALGO_NAMES = {"random_forest": "RandomForest", "bagging": "Bagging", "tree": "Tree"}


class ExperimentError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Classifier and protocol settings shared by every experiment."""

    kind: str = "random_forest"
    n_trees: int = 100
    min_leaf: int = 2
    max_depth: int | None = None
    folds: int = 10
    train_frac: float = 0.8
    mix_holdout: float = 0.1
    min_per_label: int = 5
    mix_weights: dict | None = field(default_factory=lambda: dict(MIX_WEIGHTS))
    new_attack_weights: dict | None = None
    vote_thresholds: tuple = VOTE_THRESHOLDS
    prob_thresholds: tuple = PROB_THRESHOLDS
    sample_kind: str = "bagging"
    sample_n_trees: int = 100
    chunk_s: float = DEFAULT_CHUNK_S
    cluster_k: int = 6
    stitch_count: int = 3

    def tree_params(self):
        return TreeParams(self.max_depth, self.min_leaf,
                          "sqrt" if self.kind == "random_forest" else None)

    def to_json(self):
        d = asdict(self)
        for name in ("mix_weights", "new_attack_weights"):
            if d[name] is not None:
                d[name] = {str(k): v for k, v in d[name].items()}
        d["vote_thresholds"] = list(self.vote_thresholds)
        d["prob_thresholds"] = list(self.prob_thresholds)
        return d

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (str, Path)):
            obj = json.loads(Path(obj).read_text())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ExperimentError(f"unknown config keys: {sorted(unknown)}")
        d = dict(obj)
        for name in ("mix_weights", "new_attack_weights"):
            if d.get(name) is not None:
                d[name] = {int(k): float(v) for k, v in d[name].items()}
        for name in ("vote_thresholds", "prob_thresholds"):
            if name in d:
                d[name] = tuple(float(v) for v in d[name])
        return cls(**d)


def _seed(seed, *tags):
    return np.random.SeedSequence([int(seed), *tags])


def _int_seed(seed, *tags):
    return int(_seed(seed, *tags).generate_state(1)[0])


def _rng(seed, *tags):
    return np.random.default_rng(_seed(seed, *tags))


def _train(table: FeatureTable, cfg: ExperimentConfig, seed, class_weights=None):
    return train_ensemble(table.X, table.y, cfg.kind, cfg.n_trees, seed, cfg.tree_params(),
                          class_weights, FEATURE_NAMES)


def _test(model, table: FeatureTable) -> ConfusionRates:
    if len(table) == 0:
        return ConfusionRates(0, 0, 0, 0)
    return evaluate(model.predict(table.X), table.y)


def _split(n, frac, rng):
    """Random (train, test) index arrays with round(frac * n) training rows."""
    perm = rng.permutation(n)
    k = int(round(frac * n))
    return np.sort(perm[:k]), np.sort(perm[k:])


def _eligible(table: FeatureTable, cfg):
    cats = np.array(table.categories)
    out = []
    for c in sorted(set(table.categories)):
        y = table.y[cats == c]
        n_fake, n_gen = int(y.sum()), int((y == 0).sum())
        if min(n_fake, n_gen) < cfg.min_per_label:
            log.warning("category %s skipped: %d genuine / %d fake chunks (need %d of each)",
                        c, n_gen, n_fake, cfg.min_per_label)
            continue
        out.append(c)
    return out


def _ids(table, index):
    return frozenset(table.ids[i] for i in index)


# ---------------------------------------------------------------------------
# Category experiments
# ---------------------------------------------------------------------------

def experiment_category_centric(dataset: FeatureTable, seed=0, cfg=None) -> "ResultTable":
    """Per category: stratified 80/20 split of that category's chunks only."""
    cfg = cfg or ExperimentConfig()
    cats = np.array(dataset.categories)
    result = ResultTable("Category", title="category centric")
    for ci, c in enumerate(_eligible(dataset, cfg)):
        rng = _rng(seed, 1, ci)
        train, test = [], []
        for lab in (0, 1):
            idx = np.flatnonzero((cats == c) & (dataset.y == lab))
            a, b = _split(idx.size, cfg.train_frac, rng)
            train.extend(idx[a])
            test.extend(idx[b])
        model = _train(dataset.subset(train), cfg, _int_seed(seed, 2, ci))
        result.add(c, _test(model, dataset.subset(test)))
        result.splits.append((c, _ids(dataset, train), _ids(dataset, test)))
    return result


def mixed_folds(dataset: FeatureTable, folds, seed):
    """Fold id per row, stratified by (category, label)."""
    rng = _rng(seed, 3)
    cats = np.array(dataset.categories)
    fold = np.full(len(dataset), -1)
    for c in sorted(set(dataset.categories)):
        for lab in (0, 1):
            idx = np.flatnonzero((cats == c) & (dataset.y == lab))
            fold[idx[rng.permutation(idx.size)]] = np.arange(idx.size) % folds
    return fold


def experiment_mixed(dataset: FeatureTable, seed=0, cfg=None) -> "ResultTable":
    """Train on 9 folds of every category, test on the held-out fold of each."""
    cfg = cfg or ExperimentConfig()
    cats = np.array(dataset.categories)
    eligible = _eligible(dataset, cfg)
    fold = mixed_folds(dataset, cfg.folds, seed)
    totals = {c: ConfusionRates(0, 0, 0, 0) for c in eligible}
    result = ResultTable("Category", title="mixed data")
    for f in range(cfg.folds):
        train = np.flatnonzero(fold != f)
        test = np.flatnonzero(fold == f)
        if test.size == 0:
            continue
        model = _train(dataset.subset(train), cfg, _int_seed(seed, 4, f))
        pred = model.predict(dataset.X[test])
        for c in eligible:
            m = cats[test] == c
            if m.any():
                totals[c] = totals[c] + evaluate(pred[m], dataset.y[test][m])
        result.splits.append((f, _ids(dataset, train), _ids(dataset, test)))
    for c in eligible:
        result.add(c, totals[c])
    return result


def experiment_novelty(dataset: FeatureTable, seed=0, cfg=None) -> "ResultTable":
    """Leave one category out: train on the others, test on all of it."""
    cfg = cfg or ExperimentConfig()
    cats = np.array(dataset.categories)
    result = ResultTable("Category", title="novelty")
    for ci, c in enumerate(_eligible(dataset, cfg)):
        train = np.flatnonzero(cats != c)
        test = np.flatnonzero(cats == c)
        model = _train(dataset.subset(train), cfg, _int_seed(seed, 5, ci))
        result.add(c, _test(model, dataset.subset(test)))
        result.splits.append((c, _ids(dataset, train), _ids(dataset, test)))
    return result


# ---------------------------------------------------------------------------
# Attack experiments
# ---------------------------------------------------------------------------

def _check_attacks(genuine: FeatureTable, fakes: dict):
    if len(genuine) == 0 or genuine.y.any():
        raise ExperimentError("genuine table must be non-empty and contain only genuine rows")
    for name, t in fakes.items():
        if len(t) == 0 or not t.y.all():
            raise ExperimentError(f"attack table {name!r} must be non-empty and all fake")


def experiment_mixed_attack(genuine: FeatureTable, fakes: dict, seed=0, cfg=None) -> "ResultTable":
    """Train on 90% of every attack and of the genuine chunks; test each attack's
    held-out 10% together with the held-out genuine chunks."""
    cfg = cfg or ExperimentConfig()
    _check_attacks(genuine, fakes)
    g_train, g_test = _split(len(genuine), 1 - cfg.mix_holdout, _rng(seed, 6))
    parts, held = [genuine.subset(g_train)], {}
    for ai, (name, t) in enumerate(fakes.items()):
        a, b = _split(len(t), 1 - cfg.mix_holdout, _rng(seed, 7, ai))
        parts.append(t.subset(a))
        held[name] = t.subset(b)
    train = FeatureTable.concat(parts)
    model = _train(train, cfg, _int_seed(seed, 8), cfg.mix_weights)
    g_held = genuine.subset(g_test)
    result = ResultTable("Attack", title="mixed attack")
    for name, t in held.items():
        test = FeatureTable.concat([t, g_held])
        result.add(name, _test(model, test))
        result.splits.append((name, frozenset(train.ids), frozenset(test.ids)))
    return result


def experiment_new_attack(genuine: FeatureTable, fakes: dict, seed=0, cfg=None) -> "ResultTable":
    """Leave one attack out: train on every other attack plus 80% of the genuine
    chunks, test on all of the left-out attack plus the other 20%."""
    cfg = cfg or ExperimentConfig()
    _check_attacks(genuine, fakes)
    if len(fakes) < 2:
        raise ExperimentError("need at least two attacks to leave one out")
    g_train, g_test = _split(len(genuine), cfg.train_frac, _rng(seed, 9))
    g_tr, g_te = genuine.subset(g_train), genuine.subset(g_test)
    result = ResultTable("Attack", title="new attack")
    for ai, name in enumerate(fakes):
        train = FeatureTable.concat([g_tr] + [t for other, t in fakes.items() if other != name])
        model = _train(train, cfg, _int_seed(seed, 10, ai), cfg.new_attack_weights)
        test = FeatureTable.concat([fakes[name], g_te])
        result.add(name, _test(model, test))
        result.splits.append((name, frozenset(train.ids), frozenset(test.ids)))
    return result


# ---------------------------------------------------------------------------
# Sample-level experiment
# ---------------------------------------------------------------------------

def chunk_uid(chunk):
    return chunk.id if chunk.label == atk.GENUINE else f"{chunk.id}#{chunk.provenance}"


def feature_index(samples, config=FeatureConfig()):
    """Feature vector per distinct chunk of ``samples``, keyed by chunk uid."""
    seen = {}
    for s in samples:
        for c in s.chunks:
            seen.setdefault(chunk_uid(c), c)
    table = FeatureTable.from_chunks(list(seen.values()), config)
    return dict(zip(table.ids, table.X))


def sample_folds(genuine, stitched, k, seed):
    """Fold id per genuine sample and, through the parent, per stitched sample."""
    if len(genuine) < k:
        raise ExperimentError(f"need at least {k} genuine samples for {k} folds")
    order = _rng(seed, 11).permutation(len(genuine))
    gfold = {}
    for pos, i in enumerate(order):
        gfold[genuine[i].id] = pos % k
    by_id = {g.id: g for g in genuine}
    sfold = []
    for s in stitched:
        parent = by_id.get(s.parent_sample_id)
        if parent is None:
            raise ExperimentError(f"fold pairing violation: {s.id} has no genuine parent in the set")
        keys = [c.key for c in s.chunks]
        if keys != [c.key for c in parent.chunks]:
            raise ExperimentError(f"fold pairing violation: {s.id} does not cover its parent's chunks")
        sfold.append(gfold[parent.id])
    return [gfold[g.id] for g in genuine], sfold


def _verdict_bits(model, X):
    return model.predict(X)


def _oob_bits(model, X):
    oob = model.oob_score
    if oob is None:
        return model.predict(X)
    fallback = model.score(X)
    return (np.where(np.isnan(oob), fallback, oob) > 0.5).astype(int)


def experiment_sample_level(genuine, stitched, seed=0, cfg=None, features=None) -> "ResultTable":
    """Paired-fold sample verdicts.

    ``genuine`` are ChunkedSamples with at least 2 chunks; ``stitched`` are
    stitch fakes derived from them.  For each fold the chunk model is trained
    on the distinct chunks of the other folds' samples.  Priors, chunk rates
    and the sample classifier's training features use out-of-bag verdicts on
    those training chunks, so nothing is estimated from resubstitution.
    """
    cfg = cfg or ExperimentConfig()
    k = cfg.folds
    samples = list(genuine) + list(stitched)
    gfold, sfold = sample_folds(list(genuine), list(stitched), k, seed)
    fold = np.array(gfold + sfold)
    truth = np.array([0] * len(genuine) + [1] * len(stitched))
    feats = features if features is not None else feature_index(samples)

    methods = ([("Maj. Vote", t) for t in cfg.vote_thresholds]
               + [("Prob", t) for t in cfg.prob_thresholds]
               + [(ALGO_NAMES.get(cfg.sample_kind, cfg.sample_kind), None)])
    totals = {m: ConfusionRates(0, 0, 0, 0) for m in methods}
    result = ResultTable("Algo", title="sample level")

    for f in range(k):
        train_s = [samples[i] for i in np.flatnonzero(fold != f)]
        test_s = [samples[i] for i in np.flatnonzero(fold == f)]
        if not test_s:
            continue
        uids, labels = [], []
        seen = set()
        for s in train_s:
            for c in s.chunks:
                u = chunk_uid(c)
                if u not in seen:
                    seen.add(u)
                    uids.append(u)
                    labels.append(int(c.label == atk.FAKE))
        X = np.array([feats[u] for u in uids])
        y = np.array(labels)
        model = train_ensemble(X, y, cfg.kind, cfg.n_trees, _int_seed(seed, 12, f),
                               cfg.tree_params(), None, FEATURE_NAMES)
        oob = dict(zip(uids, _oob_bits(model, X)))
        priors = PriorRates.from_counts(int(y.sum()), int((y == 0).sum()),
                                        evaluate(list(oob.values()), y))

        test_uids = sorted({chunk_uid(c) for s in test_s for c in s.chunks})
        leak = seen.intersection(test_uids)
        if leak:
            raise ExperimentError(f"chunks shared between train and test: {sorted(leak)[:3]}")
        tv = dict(zip(test_uids, _verdict_bits(model, np.array([feats[u] for u in test_uids]))))

        def describe(s, verdicts):
            return sample_features(np.array([feats[chunk_uid(c)] for c in s.chunks]),
                                   [verdicts[chunk_uid(c)] for c in s.chunks], priors)

        try:
            S_train = np.array([describe(s, oob).to_vector() for s in train_s])
            S_test = [describe(s, tv) for s in test_s]
        except DegenerateRates as e:
            raise ExperimentError(f"fold {f}: {e}") from None
        y_train = np.array([int(s.label == atk.FAKE) for s in train_s])
        smodel = train_ensemble(S_train, y_train, cfg.sample_kind, cfg.sample_n_trees,
                                _int_seed(seed, 13, f), None, None, SAMPLE_FEATURE_NAMES)
        s_pred = smodel.predict(np.array([sf.to_vector() for sf in S_test]))
        y_test = truth[fold == f]

        for name, thr in methods:
            if name == "Maj. Vote":
                pred = [majority_vote(sf.f, sf.g, thr) for sf in S_test]
            elif name == "Prob":
                pred = ["fake" if sf.p_fake > thr else "genuine" for sf in S_test]
            else:
                pred = s_pred
            totals[(name, thr)] = totals[(name, thr)] + evaluate(pred, y_test)
        result.splits.append((f, frozenset(seen), frozenset(test_uids)))

    for name, thr in methods:
        result.add(name, totals[(name, thr)], thr)
    return result


def predict_weighted_accuracy(per_category_acc: dict, category_weights: dict, tol=1e-6):
    """Sum of per-category accuracy weighted by how often each category occurs."""
    if set(per_category_acc) != set(category_weights):
        missing = set(category_weights) ^ set(per_category_acc)
        raise ExperimentError(f"weights and accuracies cover different categories: {sorted(missing)}")
    w = np.array([category_weights[c] for c in per_category_acc], dtype=float)
    if (w < 0).any() or abs(w.sum() - 1.0) > tol:
        raise ExperimentError("category weights must be non-negative and sum to 1")
    acc = np.array([per_category_acc[c] for c in per_category_acc], dtype=float)
    return float(w @ acc)


# ---------------------------------------------------------------------------
# Corpus assembly
# ---------------------------------------------------------------------------

@dataclass
class AttackCorpus:
    """Genuine chunks of a corpus and the fake chunks of each attack."""

    samples: list
    genuine: list
    fakes: dict
    pfa_genuine: list = field(default_factory=list)

    def chunked_samples(self, min_chunks=2):
        by_parent = {}
        for c in self.genuine:
            by_parent.setdefault(c.parent_sample_id, []).append(c)
        out = []
        for s in self.samples:
            chunks = by_parent.get(s.id, [])
            if len(chunks) >= min_chunks:
                out.append(atk.ChunkedSample(s.id, tuple(chunks), parent=s.id))
        return out

    def stitched(self, attack, seed=0, count=3):
        """Stitch fakes of every multi-chunk sample from the ``attack`` fake pool."""
        pool = {c.key: c for c in self.fakes[attack]}
        out = []
        for j, g in enumerate(self.chunked_samples()):
            out.extend(atk.stitch_attack(g.chunks, pool, count, _int_seed(seed, 14, j)))
        return out

    def tables(self, config=FeatureConfig()):
        genuine = FeatureTable.from_chunks(self.genuine, config)
        return genuine, {a: FeatureTable.from_chunks(f, config) for a, f in self.fakes.items()}


def build_corpus(samples, attacks=atk.ATTACKS, seed=0, cfg=None) -> AttackCorpus:
    """Segment-chunk ``samples`` and fabricate fake chunks for each requested attack."""
    cfg = cfg or ExperimentConfig()
    genuine = [c for s in samples for c in segment_chunks(s, cfg.chunk_s)]
    fakes, pfa_genuine = {}, []
    for name in attacks:
        tag = atk.ATTACKS.index(name)
        if name == atk.CLUSTER:
            fakes[name] = atk.cluster_attack(genuine, genuine, cfg.cluster_k, _int_seed(seed, 15, tag))
        elif name == atk.SANDWICH:
            seeds = [int(x) for x in _seed(seed, 15, tag).generate_state(len(samples))]
            fakes[name] = [c for s, sd in zip(samples, seeds)
                           for c in atk.sandwich_chunks(s, seed=sd, length=cfg.chunk_s)]
        elif name == atk.MIRROR:
            fakes[name] = atk.mirror_dataset(genuine)
        elif name == atk.IPC:
            fakes[name] = atk.ipc_dataset(genuine, seed=_int_seed(seed, 15, tag))
        elif name == atk.PFA:
            fakes[name], pfa_genuine, _ = atk.pfa_dataset(genuine, seed=_int_seed(seed, 15, tag))
        else:
            raise ExperimentError(f"unknown attack {name!r}")
    return AttackCorpus(list(samples), genuine, fakes, pfa_genuine)


def attack_table(genuine: FeatureTable, fakes: FeatureTable) -> FeatureTable:
    return FeatureTable.concat([genuine, fakes])


# ---------------------------------------------------------------------------
# Result tables
# ---------------------------------------------------------------------------

RATE_COLUMNS = ("TPR(%)", "FPR(%)", "FNR(%)", "Acc(%)")
COUNT_COLUMNS = ("tp", "fp", "fn", "tn")


def _pct(v):
    return "nan" if math.isnan(v) else f"{100 * v:.2f}"


@dataclass(frozen=True)
class ResultRow:
    name: str
    rates: ConfusionRates
    thr: float | None = None

    def cells(self):
        r = self.rates
        return [_pct(r.tpr), _pct(r.fpr), _pct(r.fnr), _pct(r.accuracy)]


@dataclass
class ResultTable:
    """Rows of confusion counts with the rate columns derived from them.

    ``splits`` records (tag, train ids, test ids) per model fit for leakage
    checks; it is not serialized.
    """

    key: str
    rows: list = field(default_factory=list)
    title: str = ""
    splits: list = field(default_factory=list, compare=False, repr=False)

    def add(self, name, rates, thr=None):
        self.rows.append(ResultRow(str(name), rates, None if thr is None else float(thr)))

    def get(self, name, thr=None) -> ConfusionRates:
        for row in self.rows:
            if row.name == name and (thr is None or row.thr == thr):
                return row.rates
        raise KeyError((name, thr))

    def accuracies(self):
        return {r.name if r.thr is None else (r.name, r.thr): r.rates.accuracy for r in self.rows}

    @property
    def has_thr(self):
        return any(r.thr is not None for r in self.rows)

    def header(self):
        return [self.key, "Thr", *RATE_COLUMNS, *COUNT_COLUMNS]

    def _records(self):
        for r in self.rows:
            c = r.rates
            yield [r.name, "" if r.thr is None else repr(r.thr), *r.cells(), c.tp, c.fp, c.fn, c.tn]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        w.writerows(self._records())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, title=""):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty CSV")
        header = rows[0]
        if header[1:] != ["Thr", *RATE_COLUMNS, *COUNT_COLUMNS]:
            raise ValueError(f"unexpected result columns {header}")
        table = cls(header[0], title=title)
        for rec in rows[1:]:
            rates = ConfusionRates(*(int(v) for v in rec[6:10]))
            table.add(rec[0], rates, float(rec[1]) if rec[1] else None)
            if table.rows[-1].cells() != rec[2:6]:
                raise ValueError(f"rates of row {rec[0]!r} disagree with its counts")
        return table

    def to_json(self) -> str:
        return json.dumps({
            "key": self.key,
            "title": self.title,
            "rows": [dict(zip(self.header(), rec)) for rec in self._records()],
        }, indent=2)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        table = cls(d["key"], title=d.get("title", ""))
        for rec in d["rows"]:
            rates = ConfusionRates(*(int(rec[c]) for c in COUNT_COLUMNS))
            table.add(rec[d["key"]], rates, float(rec["Thr"]) if rec["Thr"] else None)
            if table.rows[-1].cells() != [rec[c] for c in RATE_COLUMNS]:
                raise ValueError(f"rates of row {rec[d['key']]!r} disagree with its counts")
        return table

    def to_text(self) -> str:
        cols = [self.key] + (["Thr"] if self.has_thr else []) + list(RATE_COLUMNS)
        body = []
        for r in self.rows:
            cells = [r.name] + ([("" if r.thr is None else f"{r.thr:g}")] if self.has_thr else [])
            body.append(cells + r.cells())
        widths = [max([len(c)] + [len(row[k]) for row in body]) for k, c in enumerate(cols)]
        fmt = lambda row: "  ".join(v.ljust(w) if k == 0 else v.rjust(w)
                                    for k, (v, w) in enumerate(zip(row, widths)))
        lines = ([self.title] if self.title else []) + [fmt(cols), "  ".join("-" * w for w in widths)]
        lines += [fmt(row) for row in body]
        return "\n".join(lines)


def report(results, out_dir=None) -> str:
    """Text rendering of one or more result tables; with ``out_dir`` each table
    is also written as ``<name>.txt``, ``.csv`` and ``.json``."""
    if isinstance(results, ResultTable):
        results = {results.title or "results": results}
    elif not isinstance(results, dict):
        results = {t.title or f"results{i}": t for i, t in enumerate(results)}
    text = "\n\n".join(t.to_text() for t in results.values())
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, t in results.items():
            stem = name.replace(" ", "_")
            (out / f"{stem}.txt").write_text(t.to_text() + "\n")
            (out / f"{stem}.csv").write_text(t.to_csv())
            (out / f"{stem}.json").write_text(t.to_json() + "\n")
    return text


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------

def run_experiment(name, corpus: AttackCorpus, attack=atk.CLUSTER, seed=0, cfg=None,
                   config=FeatureConfig()) -> ResultTable:
    """Run one named experiment on a prepared corpus."""
    cfg = cfg or ExperimentConfig()
    if name not in EXPERIMENTS:
        raise ExperimentError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    if name == "sample":
        stitched = corpus.stitched(attack, seed, cfg.stitch_count)
        return experiment_sample_level(corpus.chunked_samples(), stitched, seed, cfg)
    genuine, fakes = corpus.tables(config)
    if name in ("mixattack", "newattack"):
        fn = experiment_mixed_attack if name == "mixattack" else experiment_new_attack
        return fn(genuine, fakes, seed, cfg)
    if attack not in fakes:
        raise ExperimentError(f"attack {attack!r} not in the corpus")
    table = attack_table(genuine, fakes[attack])
    fn = {"cat": experiment_category_centric, "mixed": experiment_mixed,
          "novelty": experiment_novelty}[name]
    return fn(table, seed, cfg)
