"""Video liveness verification from paired video motion and accelerometer traces.

A recording is split into chunks; each chunk's video displacement (phase
correlation) is compared with its accelerometer displacement (filtered double
integration) through dynamic time warping, a tree ensemble classifies the
chunk, and chunk verdicts are fused into a sample verdict.
"""
from .traces import (AccelStream, Annotation, Chunk, FrameSequence, MotionTrace, Sample,
                     Segment, category, category_for, load_chunks, load_samples, save_chunk,
                     save_sample)
from .motion import gravity_filter, ima, phase_correlate, vma
from .dtw import dtw
from .features import FEATURE_NAMES, FeatureTable, chunk_features
from .chunking import randomized_chunks, segment_chunks, sequential_chunks
from .learning import ConfusionRates, Ensemble, classify_chunk, evaluate, train_ensemble
from .fusion import (PriorRates, alpha_beta, classify_sample, majority_vote, p_sample_fake,
                     probabilistic_verdict, sample_features)

__version__ = "0.1.0"
