import json
from dataclasses import replace

import numpy as np
import pytest

from vamos import attacks as atk
from vamos.experiments import (
    ExperimentConfig, ExperimentError, ResultTable, attack_table, build_corpus,
    experiment_category_centric, experiment_mixed, experiment_mixed_attack,
    experiment_new_attack, experiment_novelty, experiment_sample_level, feature_index,
    mixed_folds, predict_weighted_accuracy, report, run_experiment, sample_folds,
)
from vamos.features import FeatureTable
from vamos.learning import ConfusionRates
from vamos.synth import CorpusSpec, gen_corpus

CFG = ExperimentConfig(n_trees=15, sample_n_trees=15, cluster_k=3)


@pytest.fixture(scope="module")
def corpus():
    # six categories, six 13-20 s samples each -> 12-18 genuine chunks per category
    rng = np.random.default_rng(0)
    layout = [[(c, float(rng.uniform(13.0, 20.0)))] for c in (1, 2, 5, 6, 9, 12) for _ in range(6)]
    samples = gen_corpus(CorpusSpec(layout), 11)
    return build_corpus(samples, seed=0, cfg=CFG)


@pytest.fixture(scope="module")
def tables(corpus):
    return corpus.tables()


@pytest.fixture(scope="module")
def mirror_table(tables):
    genuine, fakes = tables
    return attack_table(genuine, fakes[atk.MIRROR])


def _ids_partition(result, all_ids):
    tests = [test for _, _, test in result.splits]
    union = frozenset().union(*tests)
    assert union == frozenset(all_ids)
    assert sum(len(t) for t in tests) == len(union)


def _overall(result):
    total = ConfusionRates(0, 0, 0, 0)
    for row in result.rows:
        total = total + row.rates
    return total.accuracy


# -- category experiments -----------------------------------------------------

def test_mixed_folds_partition(mirror_table):
    fold = mixed_folds(mirror_table, 10, seed=3)
    assert fold.min() == 0 and fold.max() == 9
    cats = np.array(mirror_table.categories)
    for c in set(mirror_table.categories):
        for lab in (0, 1):
            counts = np.bincount(fold[(cats == c) & (mirror_table.y == lab)], minlength=10)
            assert counts.max() - counts.min() <= 1


def test_mixed_on_mirror(mirror_table):
    r = experiment_mixed(mirror_table, seed=0, cfg=CFG)
    _ids_partition(r, mirror_table.ids)
    for _, train, test in r.splits:
        assert not train & test
    assert all(acc >= 0.95 for acc in r.accuracies().values())


def test_category_centric_on_mirror(mirror_table):
    r = experiment_category_centric(mirror_table, seed=0, cfg=CFG)
    assert len(r.rows) == 6
    for c, train, test in r.splits:
        assert not train & test
        cats = {mirror_table.categories[mirror_table.ids.index(i)] for i in train | test}
        assert cats == {c}
    assert all(acc >= 0.95 for acc in r.accuracies().values())


def test_novelty_on_mirror(mirror_table):
    r = experiment_novelty(mirror_table, seed=0, cfg=CFG)
    for c, train, test in r.splits:
        train_cats = {mirror_table.categories[mirror_table.ids.index(i)] for i in train}
        assert c not in train_cats
    assert all(acc >= 0.95 for acc in r.accuracies().values())


def test_shuffled_labels_near_chance(tables):
    genuine, fakes = tables
    t = attack_table(genuine, fakes[atk.CLUSTER])
    t = FeatureTable(t.X, np.random.default_rng(5).permutation(t.y), t.ids, t.categories,
                     t.provenance, t.parents)
    for fn in (experiment_mixed, experiment_category_centric, experiment_novelty):
        assert _overall(fn(t, seed=1, cfg=CFG)) == pytest.approx(0.5, abs=0.1)


def test_undersized_category_skipped(mirror_table, caplog):
    keep = [i for i, c in enumerate(mirror_table.categories)
            if c != mirror_table.categories[0] or mirror_table.y[i] == 0]
    r = experiment_category_centric(mirror_table.subset(keep), seed=0, cfg=CFG)
    assert len(r.rows) == 5
    assert "skipped" in caplog.text


def test_category_experiments_deterministic(mirror_table):
    for fn in (experiment_mixed, experiment_category_centric, experiment_novelty):
        assert fn(mirror_table, seed=4, cfg=CFG) == fn(mirror_table, seed=4, cfg=CFG)


# -- attack experiments -------------------------------------------------------

def test_mixed_attack_splits(tables):
    genuine, fakes = tables
    r = experiment_mixed_attack(genuine, fakes, seed=0, cfg=CFG)
    assert [row.name for row in r.rows] == list(fakes)
    n_g_test = len(genuine) - round(0.9 * len(genuine))
    for name, train, test in r.splits:
        n_held = len(fakes[name]) - round(0.9 * len(fakes[name]))
        assert len(test) == n_held + n_g_test
        assert not train & test
    assert r.get(atk.MIRROR).tpr == pytest.approx(1.0)


def test_mixed_attack_weights_matter(tables):
    genuine, fakes = tables
    w = experiment_mixed_attack(genuine, fakes, seed=0, cfg=CFG)
    u = experiment_mixed_attack(genuine, fakes, seed=0, cfg=replace(CFG, mix_weights=None))
    flagged = lambda r: sum(row.rates.tp + row.rates.fp for row in r.rows)
    assert flagged(w) != flagged(u)


def test_new_attack_excludes_attack(tables):
    genuine, fakes = tables
    r = experiment_new_attack(genuine, fakes, seed=0, cfg=CFG)
    for name, train, test in r.splits:
        assert not any(i.endswith(f"#{name}") for i in train)
        assert frozenset(fakes[name].ids) <= test
        assert not train & test
    assert r == experiment_new_attack(genuine, fakes, seed=0, cfg=CFG)


def test_attack_input_checks(tables):
    genuine, fakes = tables
    with pytest.raises(ExperimentError):
        experiment_mixed_attack(attack_table(genuine, fakes[atk.MIRROR]), fakes)
    with pytest.raises(ExperimentError):
        experiment_new_attack(genuine, {atk.MIRROR: fakes[atk.MIRROR]})
    with pytest.raises(ExperimentError):
        experiment_mixed_attack(genuine, {"bad": genuine})


# -- sample level -------------------------------------------------------------

def test_sample_level_no_leakage(corpus):
    genuine = corpus.chunked_samples()
    stitched = corpus.stitched(atk.CLUSTER, seed=0)
    assert len(stitched) == 3 * len(genuine)
    cfg = replace(CFG, folds=5)
    r = experiment_sample_level(genuine, stitched, seed=0, cfg=cfg)
    assert len(r.rows) == 4 + 3 + 1
    for _, train, test in r.splits:
        assert not train & test
    total = len(genuine) + len(stitched)
    assert all(row.rates.total == total for row in r.rows)
    tprs = [r.get("Maj. Vote", t).tpr for t in cfg.vote_thresholds]
    assert all(a >= b for a, b in zip(tprs, tprs[1:]))
    tprs = [r.get("Prob", t).tpr for t in cfg.prob_thresholds]
    assert all(a >= b for a, b in zip(tprs, tprs[1:]))


def test_sample_folds_pairing(corpus):
    genuine = corpus.chunked_samples()
    stitched = corpus.stitched(atk.MIRROR, seed=0)
    gf, sf = sample_folds(genuine, stitched, 5, seed=0)
    fold_of = {g.id: f for g, f in zip(genuine, gf)}
    assert all(fold_of[s.parent_sample_id] == f for s, f in zip(stitched, sf))
    with pytest.raises(ExperimentError, match="pairing"):
        sample_folds(genuine[1:], stitched, 5, seed=0)
    orphan = atk.ChunkedSample("x", stitched[0].chunks[:1], atk.FAKE, "stitch", genuine[0].id)
    with pytest.raises(ExperimentError, match="pairing"):
        sample_folds(genuine, [orphan], 5, seed=0)


def test_feature_index_dedups(corpus):
    genuine = corpus.chunked_samples()
    stitched = corpus.stitched(atk.MIRROR, seed=0)
    idx = feature_index(genuine + stitched)
    n_genuine = sum(len(g.chunks) for g in genuine)
    fakes = {c.id for s in stitched for c in s.chunks if c.label == atk.FAKE}
    assert len(idx) == n_genuine + len(fakes)


def test_run_experiment_dispatch(corpus):
    r = run_experiment("novelty", corpus, atk.MIRROR, seed=0, cfg=CFG)
    assert r.title == "novelty"
    with pytest.raises(ExperimentError):
        run_experiment("bogus", corpus)


# -- weighted accuracy --------------------------------------------------------

def test_predict_weighted_accuracy():
    acc = {1: 0.6, 2: 0.8, "3&7": 0.9}
    assert predict_weighted_accuracy(acc, {k: 1 / 3 for k in acc}) == pytest.approx(np.mean(list(acc.values())))
    assert predict_weighted_accuracy(acc, {1: 0.0, 2: 1.0, "3&7": 0.0}) == pytest.approx(0.8)
    rng = np.random.default_rng(0)
    for _ in range(50):
        w = rng.dirichlet(np.ones(3))
        v = predict_weighted_accuracy(acc, dict(zip(acc, w)))
        assert min(acc.values()) - 1e-12 <= v <= max(acc.values()) + 1e-12
    with pytest.raises(ExperimentError):
        predict_weighted_accuracy(acc, {1: 0.5, 2: 0.5})
    with pytest.raises(ExperimentError):
        predict_weighted_accuracy(acc, {1: 0.5, 2: 0.4, "3&7": 0.0})


# -- reports and config -------------------------------------------------------

def test_empty_result_csv_is_header_only():
    t = ResultTable("Attack")
    assert t.to_csv() == "Attack,Thr,TPR(%),FPR(%),FNR(%),Acc(%),tp,fp,fn,tn\n"
    assert ResultTable.from_csv(t.to_csv()) == t


def test_result_round_trips(tmp_path):
    t = ResultTable("Algo", title="sample level")
    t.add("Maj. Vote", ConfusionRates(7, 1, 2, 3), 0.1)
    t.add("Bagging", ConfusionRates(1, 0, 0, 2))
    rows = t.to_csv().splitlines()
    assert rows[1] == "Maj. Vote,0.1,77.78,25.00,22.22,76.92,7,1,2,3"
    assert ResultTable.from_csv(t.to_csv(), title="sample level") == t
    assert ResultTable.from_json(t.to_json()) == t
    assert ResultTable.from_csv(ResultTable.from_json(t.to_json()).to_csv()).to_csv() == t.to_csv()
    text = report({"sample level": t}, tmp_path)
    assert "Maj. Vote" in text
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "sample_level.csv", "sample_level.json", "sample_level.txt"]
    bad = t.to_csv().replace("77.78", "70.00")
    with pytest.raises(ValueError):
        ResultTable.from_csv(bad)


def test_config_json_round_trip():
    cfg = replace(CFG, new_attack_weights={0: 0.5, 1: 0.5})
    again = ExperimentConfig.from_json(json.loads(json.dumps(cfg.to_json())))
    assert again == cfg
    with pytest.raises(ExperimentError):
        ExperimentConfig.from_json({"n_tree": 3})
