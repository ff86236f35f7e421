"""How far each attack family sits from genuine chunks in feature space.

Generates a small corpus, fabricates fakes with every chunk-level attack and
prints a few per-axis feature means for each source.  Runs in a few seconds.

    python demos/attack_gallery.py
"""
import numpy as np

from vamos import attacks as atk
from vamos.chunking import segment_chunks
from vamos.features import FEATURE_NAMES, FeatureTable
from vamos.synth import CorpusSpec, gen_corpus

SEED = 0

layout = [[(c, 18.0)] for c in (1, 2, 5, 6, 9, 12) for _ in range(4)]
samples = gen_corpus(CorpusSpec(layout), SEED)
chunks = [c for s in samples for c in segment_chunks(s)]
print(f"{len(samples)} samples -> {len(chunks)} genuine chunks")

fakes = {
    "mirror": atk.mirror_dataset(chunks),
    "ipc": atk.ipc_dataset(chunks, seed=SEED),
    "cluster": atk.cluster_attack(chunks, chunks, k=4, seed=SEED),
    "sandwich": [c for s in samples for c in atk.sandwich_chunks(s, seed=SEED)],
}
pfa, _, _ = atk.pfa_dataset(chunks, seed=SEED, dictionary_fraction=0.25)
fakes["pfa"] = pfa

cols = [FEATURE_NAMES.index(n) for n in ("x_dtw_distance", "x_overlap_ratio", "x_match_move_ratio",
                                            "y_dtw_distance")]
print(f"\n{'source':<10}{'n':>5}" + "".join(f"{FEATURE_NAMES[i]:>20}" for i in cols))
for name, cs in {"genuine": chunks, **fakes}.items():
    X = FeatureTable.from_chunks(cs).X[:, cols]
    print(f"{name:<10}{len(cs):>5}" + "".join(f"{v:>20.3f}" for v in np.nanmean(X, axis=0)))
