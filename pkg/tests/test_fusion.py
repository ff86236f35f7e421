import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import monte_carlo_sample_fake
from vamos.fusion import (AGGREGATES, MAX_CHUNKS, PAD, SAMPLE_FEATURE_NAMES, DegenerateRates,
                          PriorRates, aggregate, alpha_beta, classify_sample, majority_vote,
                          p_sample_fake, probabilistic_verdict, sample_features)
from vamos.learning import ConfusionRates, train_ensemble, train_tree


def _priors(tnr, fnr, fpr, tpr, pf=0.5):
    return PriorRates(pf, 1 - pf, tpr, fpr, tnr, fnr)


PERFECT = _priors(1.0, 0.0, 0.0, 1.0)


# -- alpha / beta -------------------------------------------------------------

def test_perfect_classifier():
    assert alpha_beta(PERFECT) == (1.0, 0.0)


def test_uninformative_classifier():
    assert alpha_beta(_priors(0.5, 0.5, 0.5, 0.5)) == (0.5, 0.5)


def test_worked_rates():
    a, b = alpha_beta(_priors(0.9, 0.1, 0.2, 0.8))
    assert (a, b) == pytest.approx((0.9, 0.2))


def test_degenerate_rates_named():
    with pytest.raises(DegenerateRates, match="classified genuine"):
        alpha_beta(_priors(0.0, 0.0, 1.0, 1.0))
    with pytest.raises(DegenerateRates, match="classified fake"):
        alpha_beta(_priors(1.0, 1.0, 0.0, 0.0))


def test_prior_validation():
    with pytest.raises(ValueError):
        PriorRates(0.6, 0.6, 1, 0, 1, 0)
    with pytest.raises(ValueError):
        PriorRates(0.5, 0.5, 1.2, 0, 1, 0)
    p = PriorRates.from_counts(3, 1, ConfusionRates(2, 0, 1, 1))
    assert (p.p_fake_prior, p.tpr, p.tnr) == (0.75, pytest.approx(2 / 3), 1.0)
    assert PriorRates.from_counts(0, 4, ConfusionRates(0, 1, 0, 3)).tpr == 0.0


# -- p_sample_fake ------------------------------------------------------------

def test_p_sample_fake_examples():
    assert p_sample_fake(0, 0, 0.9, 0.2) == 0.0
    assert p_sample_fake(1, 5, 0.7, 0.0) == 1.0
    assert p_sample_fake(1, 3, 0.9, 0.2) == pytest.approx(1 - 0.9 ** 3 * 0.2)
    assert p_sample_fake(1, 3, 0.9, 0.2) == pytest.approx(0.8542)
    with pytest.raises(ValueError):
        p_sample_fake(-1, 0, 0.5, 0.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 20), st.integers(0, 20), st.floats(0, 0.999), st.floats(0, 0.999))
def test_monotone_in_counts(f, g, a, b):
    p = p_sample_fake(f, g, a, b)
    assert 0.0 <= p <= 1.0
    assert p_sample_fake(f + 1, g, a, b) >= p - 1e-15
    assert p_sample_fake(f, g + 1, a, b) >= p - 1e-15


SETTINGS = [
    # (p_fake, tpr, fpr, f, g)
    (0.5, 0.8, 0.1, 0, 3),
    (0.3, 0.9, 0.2, 1, 2),
    (0.7, 0.6, 0.3, 0, 2),
]


@pytest.mark.parametrize("pf, tpr, fpr, f, g", SETTINGS)
def test_monte_carlo_posterior(pf, tpr, fpr, f, g):
    priors = PriorRates(pf, 1 - pf, tpr, fpr, 1 - fpr, 1 - tpr)
    a, b = alpha_beta(priors)
    est, n = monte_carlo_sample_fake(pf, tpr, fpr, f, g, trials=100_000, seed=f * 10 + g)
    assert n > 5_000
    assert est == pytest.approx(p_sample_fake(f, g, a, b), abs=0.02)


# -- verdicts -----------------------------------------------------------------

def test_majority_vote_strict():
    assert majority_vote(1, 9, 0.1) == "genuine"
    assert majority_vote(2, 8, 0.1) == "fake"
    with pytest.raises(ValueError):
        majority_vote(0, 0)


def test_probabilistic_with_perfect_classifier():
    assert probabilistic_verdict(["genuine"] * 4, PERFECT) == "genuine"
    assert probabilistic_verdict(["genuine", "fake", "genuine"], PERFECT) == "fake"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=12), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_limiting_thresholds_agree(verdicts, tpr, fpr):
    priors = PriorRates(0.5, 0.5, tpr, fpr, 1 - fpr, 1 - tpr)
    f = sum(verdicts)
    g = len(verdicts) - f
    any_fake = "fake" if f else "genuine"
    assert majority_vote(f, g, 0.0) == any_fake
    assert majority_vote(f, g, 1.0) == "genuine"
    assert probabilistic_verdict(verdicts, priors, 1.0) == "genuine"
    a, b = alpha_beta(priors)
    if f and 0 < a < 1 and 0 < b < 1:
        assert probabilistic_verdict(verdicts, priors, 0.0) == "fake"


# -- sample features ----------------------------------------------------------

def test_layout():
    assert len(SAMPLE_FEATURE_NAMES) == 3 + MAX_CHUNKS + 18 * len(AGGREGATES) == 107
    sf = sample_features(np.ones((2, 18)), ["fake", "genuine"], PERFECT)
    vec = sf.to_vector()
    assert vec.shape == (107,)
    assert vec[:5].tolist() == [1, 1, 1.0, 1, 0]
    assert np.all(vec[5:3 + MAX_CHUNKS] == PAD)


def test_single_chunk_aggregates():
    x = np.arange(18.0)
    agg = aggregate(x).reshape(18, 4)
    assert np.array_equal(agg[:, 0], x) and np.array_equal(agg[:, 1], x)
    assert np.array_equal(agg[:, 2], x) and np.all(agg[:, 3] == 0)


def test_symmetric_chunks_mean_zero():
    v = np.random.default_rng(0).normal(size=18)
    agg = aggregate(np.vstack([v, -v])).reshape(18, 4)
    assert np.allclose(agg[:, 2], 0)
    assert np.all(agg[:, 0] <= agg[:, 2]) and np.all(agg[:, 2] <= agg[:, 1])


def test_p_fake_field_consistent():
    priors = _priors(0.9, 0.1, 0.2, 0.8)
    verdicts = [1, 0, 0, 0]
    sf = sample_features(np.zeros((4, 18)), verdicts, priors)
    assert sf.p_fake == pytest.approx(p_sample_fake(1, 3, *alpha_beta(priors)))
    assert sf.f + sf.g == 4


def test_labels_truncated_at_max():
    sf = sample_features(np.zeros((40, 18)), [1] * 40, PERFECT)
    assert sf.chunk_labels == (1,) * MAX_CHUNKS
    assert sf.f == 40


# -- classify_sample ----------------------------------------------------------

def _stitch_like(n, rng, priors):
    """Samples of 2-6 chunks; fakes hold at least one far-off chunk."""
    vecs, labels = [], []
    for k in range(n):
        m = int(rng.integers(2, 7))
        fake = k % 2 == 1
        X = rng.normal(size=(m, 18))
        verdicts = [0] * m
        if fake:
            pos = rng.choice(m, size=int(rng.integers(1, m + 1)), replace=False)
            X[pos] += 3.0
            for p in pos:
                verdicts[p] = int(rng.random() < 0.8)
        vecs.append(sample_features(X, verdicts, priors).to_vector())
        labels.append(int(fake))
    return np.array(vecs), np.array(labels)


def test_classifier_on_separable_samples():
    rng = np.random.default_rng(1)
    priors = _priors(0.9, 0.2, 0.1, 0.8)
    X, y = _stitch_like(300, rng, priors)
    model = train_ensemble(X[:200], y[:200], kind="bagging", n_trees=25,
                           feature_names=SAMPLE_FEATURE_NAMES)
    correct = [classify_sample(model, x)[0] == ("fake" if t else "genuine") for x, t in zip(X[200:], y[200:])]
    assert np.mean(correct) >= 0.9


def test_overfit_tree_replays_genuine():
    rng = np.random.default_rng(2)
    X, y = _stitch_like(60, rng, PERFECT)
    model = train_tree(X, y)
    for x, t in zip(X, y):
        if t == 0:
            assert classify_sample(model, x)[0] == "genuine"


def test_aggregate_only_model_ignores_chunk_order():
    rng = np.random.default_rng(3)
    X, y = _stitch_like(120, rng, PERFECT)
    agg_cols = slice(3 + MAX_CHUNKS, None)
    model = train_ensemble(X[:, agg_cols], y, kind="bagging", n_trees=10)
    chunks = rng.normal(size=(5, 18))
    a = sample_features(chunks, [1, 0, 0, 1, 0], PERFECT)
    perm = [4, 2, 0, 3, 1]
    b = sample_features(chunks[perm], [0, 0, 1, 1, 1], PERFECT)
    assert classify_sample(model, a.aggregates) == classify_sample(model, b.aggregates)
    assert np.allclose(a.aggregates, b.aggregates)
