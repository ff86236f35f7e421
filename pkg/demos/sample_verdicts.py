"""From chunk classifier to sample verdicts on stitched fakes.

Trains a random forest on genuine vs cluster-attack chunks, then judges
genuine samples and their stitched counterparts with majority vote and the
probabilistic rule.  Takes under a minute.

    python demos/sample_verdicts.py
"""
import numpy as np

from vamos import attacks as atk
from vamos.chunking import segment_chunks
from vamos.features import FeatureTable
from vamos.fusion import PriorRates, majority_vote, probabilistic_verdict
from vamos.learning import evaluate, train_ensemble
from vamos.synth import CorpusSpec, gen_corpus

SEED = 1
rng = np.random.default_rng(SEED)
layout = [[(c, float(rng.uniform(12, 30)))] for c in (1, 2, 5, 6, 9, 12) for _ in range(8)]
samples = gen_corpus(CorpusSpec(layout), SEED)
train_s, test_s = samples[::2], samples[1::2]


def chunks_of(ss):
    return [c for s in ss for c in segment_chunks(s)]


train_g = chunks_of(train_s)
train_f = atk.cluster_attack(train_g, train_g, k=4, seed=SEED)
table = FeatureTable.from_chunks(train_g + train_f)
model = train_ensemble(table.X, table.y, n_trees=50, seed=SEED)

# priors from out-of-bag verdicts so the rates are not resubstitution estimates
oob = np.where(np.isnan(model.oob_score), model.score(table.X), model.oob_score) > 0.5
priors = PriorRates.from_counts(len(train_f), len(train_g), evaluate(oob, table.y))
print(f"chunk priors: tpr={priors.tpr:.2f} fpr={priors.fpr:.2f}")

test_g = chunks_of(test_s)
pool = {c.key: c for c in atk.cluster_attack(test_g, train_g, k=4, seed=SEED + 1)}
by_parent = {}
for c in test_g:
    by_parent.setdefault(c.parent_sample_id, []).append(c)

rows = []
for j, cs in enumerate(v for v in by_parent.values() if len(v) >= 2):
    cases = [("genuine", cs)] + [("fake", s.chunks) for s in atk.stitch_attack(cs, pool, seed=j)]
    for truth, group in cases:
        verdicts = model.predict(FeatureTable.from_chunks(group).X).tolist()
        f = sum(verdicts)
        rows.append((truth, majority_vote(f, len(verdicts) - f, 0.1),
                     probabilistic_verdict(verdicts, priors, 0.7)))

for k, name in ((1, "majority vote (0.1)"), (2, "probabilistic (0.7)")):
    acc = np.mean([r[0] == r[k] for r in rows])
    print(f"{name:<22} accuracy {acc:.3f} over {len(rows)} samples")
