"""Acceptance criteria 1-10; the terminal summary prints one PASS/FAIL line each."""
import filecmp
import time

import numpy as np
import pytest
from scipy.stats import binomtest

from oracles import brute_force_dtw, monte_carlo_sample_fake
from vamos import attacks as atk
from vamos.chunking import segment_chunks
from vamos.cli import main
from vamos.dtw import dtw
from vamos.experiments import (VOTE_THRESHOLDS, PROB_THRESHOLDS, attack_table, build_corpus,
                               experiment_category_centric, experiment_mixed,
                               experiment_mixed_attack, experiment_new_attack,
                               experiment_sample_level)
from vamos.features import chunk_features
from vamos.fusion import PriorRates, alpha_beta, p_sample_fake
from vamos.motion import phase_correlate
from vamos.synth import gen_corpus, table2_spec

SEEDS = (0, 1, 2, 3, 4)
ALPHA = 0.05
FUSION_FLOOR = 0.85


@pytest.fixture(scope="module")
def table2():
    samples = gen_corpus(table2_spec(0), 0)
    return samples, [c for s in samples for c in segment_chunks(s)]


# -- 1 ------------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_phase_correlation_100_shifts():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    exact = 0
    for _ in range(100):
        f = rng.uniform(0, 255, (64, 64))
        sx, sy = rng.integers(-16, 17, 2)
        r = phase_correlate(f, np.roll(f, (sy, sx), axis=(0, 1)))
        exact += (r.dx, r.dy) == (float(sx), float(sy))
    elapsed = time.perf_counter() - start
    assert exact == 100
    assert elapsed < 5.0


# -- 2 ------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_dtw_matches_exhaustive_minimum():
    rng = np.random.default_rng(7)
    for _ in range(500):
        a = rng.integers(-20, 21, rng.integers(1, 7))
        b = rng.integers(-20, 21, rng.integers(1, 7))
        assert dtw(a, b).distance == brute_force_dtw(a.tolist(), b.tolist())


# -- 3 ------------------------------------------------------------------------

@pytest.mark.criterion(3)
def test_perfect_mirror_mixed_accuracy():
    start = time.perf_counter()
    samples = gen_corpus(table2_spec(0), 0)
    corpus = build_corpus(samples, (atk.MIRROR,), seed=0)
    genuine, fakes = corpus.tables()
    assert len(genuine) == len(fakes[atk.MIRROR]) == 401
    result = experiment_mixed(attack_table(genuine, fakes[atk.MIRROR]), seed=0)
    elapsed = time.perf_counter() - start
    assert sum(r.rates.total for r in result.rows) == 802
    assert all(acc == 1.0 for acc in result.accuracies().values()), result.to_text()
    assert elapsed < 120


# -- 4 ------------------------------------------------------------------------

@pytest.mark.criterion(4)
def test_bayes_fusion_monte_carlo():
    rng = np.random.default_rng(11)
    for k in range(10):
        pf = rng.uniform(0.2, 0.8)
        tpr, fpr = rng.uniform(0.55, 0.95), rng.uniform(0.05, 0.45)
        f, g = int(rng.integers(0, 3)), int(rng.integers(1, 5))
        a, b = alpha_beta(PriorRates(pf, 1 - pf, tpr, fpr, 1 - fpr, 1 - tpr))
        est, hits = monte_carlo_sample_fake(pf, tpr, fpr, f, g, trials=100_000, seed=k)
        assert hits > 1000
        assert abs(est - p_sample_fake(f, g, a, b)) <= 0.02, (k, pf, tpr, fpr, f, g)


# -- 5 ------------------------------------------------------------------------

@pytest.mark.criterion(5)
def test_stitch_construction(table2):
    samples, chunks = table2
    by_parent = {}
    for c in chunks:
        by_parent.setdefault(c.parent_sample_id, []).append(c)
    multi = [v for v in by_parent.values() if len(v) >= 2]
    assert len(multi) == 113
    pool = {c.key: c for c in atk.mirror_dataset(chunks)}
    fakes = [s for j, cs in enumerate(multi) for s in atk.stitch_attack(cs, pool, seed=j)]
    assert len(fakes) == 339
    two = next(cs for cs in multi if len(cs) == 2)
    patterns = [tuple(c.label for c in s.chunks) for s in atk.stitch_attack(two, pool)]
    assert patterns == [("fake", "genuine"), ("genuine", "fake"), ("fake", "fake")]
    single = next(v for v in by_parent.values() if len(v) == 1)
    with pytest.raises(atk.AttackError):
        atk.stitch_attack(single, pool)


# -- 6 ------------------------------------------------------------------------

@pytest.mark.criterion(6)
def test_pfa_dictionary(table2):
    _, chunks = table2
    dict_chunks, targets, genuine = atk.split_pfa_dataset(chunks, seed=0)
    assert (len(dict_chunks), len(targets), len(genuine)) == (40, 180, 181)
    d = atk.build_pfa_dictionary(dict_chunks)
    assert len(d) == 480
    for b, snips in enumerate(d.buckets):
        for s in snips:
            assert 10 * b <= s.match_pct
            assert s.match_pct < 10 * (b + 1) or (b == 9 and s.match_pct <= 100)


# -- 7 ------------------------------------------------------------------------

@pytest.mark.criterion(7)
def test_ipc_mirror(table2):
    _, chunks = table2
    params = atk.IpcParams()
    for seed in range(200):
        c = chunks[seed % len(chunks)]
        i, _ = params.draw(np.random.default_rng(seed))
        n = len(c.video_motion)
        assert len(atk.ipc_mirror(c, params, seed).accel_motion) == n + i * (n - 1)
    null = atk.IpcParams(p=0.0, c_range=(1.0, 1.0), i_choices=(0,))
    for k, c in enumerate(chunks):
        got = chunk_features(atk.ipc_mirror(c, null, k)).to_vector()
        want = chunk_features(atk.perfect_mirror(c)).to_vector()
        assert np.array_equal(got, want)


# -- 8 and 9 ------------------------------------------------------------------

def directional_run(seed):
    """Every experiment the directional checks compare, on one generated corpus."""
    samples = gen_corpus(table2_spec(seed), seed)
    corpus = build_corpus(samples, seed=seed)
    genuine, fakes = corpus.tables()
    cluster = attack_table(genuine, fakes[atk.CLUSTER])
    out = {
        "cat": experiment_category_centric(cluster, seed).accuracies(),
        "mixed": experiment_mixed(cluster, seed).accuracies(),
        "mixattack": experiment_mixed_attack(genuine, fakes, seed).accuracies(),
        "newattack": experiment_new_attack(genuine, fakes, seed).accuracies(),
    }
    features = {}
    for t in (genuine, *fakes.values()):
        features.update(zip(t.ids, t.X))
    chunked = corpus.chunked_samples()
    for attack in (atk.CLUSTER, atk.SANDWICH):
        out[attack] = experiment_sample_level(chunked, corpus.stitched(attack, seed), seed,
                                              features=features)
    return out


@pytest.fixture(scope="module")
def directional():
    return {seed: directional_run(seed) for seed in SEEDS}


def sign_test(pairs):
    """One-sided sign test that the first member of each pair tends to be larger."""
    wins = sum(a > b for a, b in pairs)
    losses = sum(a < b for a, b in pairs)
    if wins + losses == 0:
        return wins, losses, 1.0
    return wins, losses, binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue


@pytest.mark.slow
@pytest.mark.criterion(8)
@pytest.mark.parametrize("attack", [atk.CLUSTER, atk.SANDWICH])
def test_threshold_monotonicity(directional, attack):
    for seed, run in directional.items():
        table = run[attack]
        for name, grid in (("Maj. Vote", VOTE_THRESHOLDS), ("Prob", PROB_THRESHOLDS)):
            tpr = [table.get(name, t).tpr for t in grid]
            assert all(a >= b for a, b in zip(tpr, tpr[1:])), (seed, name, tpr)


@pytest.mark.slow
@pytest.mark.criterion(9)
def test_mixed_beats_category_centric(directional):
    pairs = [(run["mixed"][c], run["cat"][c]) for run in directional.values() for c in run["cat"]]
    wins, losses, p = sign_test(pairs)
    assert p < ALPHA, f"mixed > category-centric in {wins}, < in {losses}; p = {p:.4f}"


@pytest.mark.slow
@pytest.mark.criterion(9)
def test_new_attack_below_mixed_attack(directional):
    pairs = [(run["mixattack"][a], run["newattack"][a])
             for run in directional.values() for a in run["mixattack"]]
    wins, losses, p = sign_test(pairs)
    assert p < ALPHA, f"mixed-attack > new-attack in {wins}, < in {losses}; p = {p:.4f}"


def _fusion_vs_best(table):
    fusion = table.get("Bagging").accuracy
    best = max(r.rates.accuracy for r in table.rows if r.name != "Bagging")
    return fusion, best


@pytest.mark.slow
@pytest.mark.criterion(9)
@pytest.mark.parametrize("attack", [atk.CLUSTER, atk.SANDWICH])
def test_fusion_beats_vote_and_prob(directional, attack):
    pairs = [_fusion_vs_best(run[attack]) for run in directional.values()]
    wins, losses, p = sign_test(pairs)
    assert p < ALPHA, f"{attack}-stitch fusion vs best vote/prob: {pairs}; p = {p:.4f}"


@pytest.mark.slow
@pytest.mark.criterion(9)
def test_fusion_accuracy_floor(directional):
    accs = {seed: _fusion_vs_best(run[atk.CLUSTER])[0] for seed, run in directional.items()}
    assert min(accs.values()) >= FUSION_FLOOR, f"cluster-stitch fusion accuracy per seed: {accs}"


# -- 10 -----------------------------------------------------------------------

def _pipeline(root, seed=0):
    run = lambda *a: main([str(x) for x in a])
    run("synth", "--seed", seed, "--out", root / "samples")
    run("chunk", "--samples", root / "samples", "--out", root / "chunks")
    run("attack", "--type", "cluster", "--input", root / "chunks", "--seed", seed,
        "--out", root / "fakes")
    run("features", "--chunks", root / "chunks", root / "fakes", "--out", root / "features.csv")
    run("train", "--features", root / "features.csv", "--seed", seed, "--out", root / "model.json")
    run("eval", "--experiment", "mixed", "--attack", "cluster", "--seed", seed,
        "--samples", root / "samples", "--out", root / "report")


@pytest.mark.slow
@pytest.mark.criterion(10)
def test_end_to_end_deterministic(tmp_path):
    start = time.perf_counter()
    _pipeline(tmp_path / "a")
    elapsed = time.perf_counter() - start
    assert elapsed < 600
    _pipeline(tmp_path / "b")
    assert len(list((tmp_path / "a" / "samples").glob("*.json"))) == 160
    for rel in ("features.csv", "model.json", "model.priors.json",
                "report/mixed_cluster.csv", "report/mixed_cluster.json"):
        assert filecmp.cmp(tmp_path / "a" / rel, tmp_path / "b" / rel, shallow=False), rel
