"""``vamos`` command line: synthetic data, chunking, features, attacks, models, verdicts."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import attacks as atk
from .chunking import chunk_sample
from .experiments import (EXPERIMENTS, ExperimentConfig, build_corpus, report, run_experiment)
from .features import FEATURE_NAMES, FeatureTable, chunk_features
from .fusion import PriorRates, SAMPLE_FEATURE_NAMES, classify_sample, majority_vote, sample_features
from .learning import Ensemble, KINDS, evaluate, train_ensemble
from .motion import DEFAULT_ALPHA, DEFAULT_STRIDE, ima, vma
from .synth import CorpusSpec, gen_corpus, table2_spec
from .traces import (DEFAULT_FPS, FAKE, GENUINE, load_accel_csv, load_chunks, load_frames,
                     load_samples, save_chunk, save_motion_csv, save_sample)

log = logging.getLogger("vamos")


def _emit_trace(trace, out):
    save_motion_csv(trace, out or sys.stdout)


def _sorted_chunks(directory):
    return sorted(load_chunks(directory), key=lambda c: (c.parent_sample_id, c.start_s))


def _weights(text):
    if not text:
        return None
    out = {}
    for part in text.split(","):
        k, v = part.split(":")
        out[int(k)] = float(v)
    return out


def _priors_path(model_path):
    p = Path(model_path)
    return p.with_name(p.stem + ".priors.json")


def _load_priors(path):
    return PriorRates(**json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_extract_vma(args):
    frames = load_frames(args.frames, args.fps)
    _emit_trace(vma(frames, args.stride), args.out)


def cmd_extract_ima(args):
    accel = load_accel_csv(args.accel)
    _emit_trace(ima(accel, alpha=args.alpha), args.out)


def cmd_synth(args):
    spec = CorpusSpec.from_json(args.spec) if args.spec else table2_spec(args.seed)
    samples = gen_corpus(spec, args.seed, out_dir=args.out)
    print(f"wrote {len(samples)} samples to {args.out}")


def cmd_chunk(args):
    kwargs = {}
    if args.strategy == "random":
        kwargs = dict(k=args.k, seed=args.seed)
    elif args.strategy == "seq":
        kwargs = dict(keep_remainder=args.keep_remainder)
    n = 0
    for s in load_samples(args.samples):
        for c in chunk_sample(s, args.strategy, args.len, **kwargs):
            save_chunk(c, args.out)
            n += 1
    print(f"wrote {n} chunks to {args.out}")


def cmd_features(args):
    table = FeatureTable.concat([FeatureTable.from_chunks(_sorted_chunks(d)) for d in args.chunks])
    table.save_csv(args.out)
    print(f"wrote {len(table)} feature rows to {args.out}")


def cmd_attack(args):
    out = Path(args.out)
    kind = args.type
    if kind == atk.SANDWICH:
        samples = load_samples(args.input)
        seeds = np.random.SeedSequence(args.seed).generate_state(len(samples))
        for s, sd in zip(samples, seeds):
            save_sample(atk.sandwich_attack(s, seed=int(sd)), out)
        print(f"wrote {len(samples)} sandwich samples to {out}")
        return
    if kind == "stitch":
        if not args.fakes:
            raise SystemExit("stitch needs --fakes DIR with fake chunks")
        pool = {c.key: c for c in load_chunks(args.fakes)}
        n = 0
        for i, s in enumerate(load_samples(args.input)):
            chunks = chunk_sample(s, "segment", args.len)
            if len(chunks) < 2:
                continue
            rng = np.random.default_rng([args.seed, i])
            for j, positions in enumerate(atk.stitch_patterns(len(chunks), args.count, rng)):
                try:
                    fakes = [pool[chunks[k].key] for k in positions]
                except KeyError as e:
                    raise SystemExit(f"no fake chunk for {e.args[0]}") from None
                save_sample(atk.stitch_sample(s, fakes, f"stitch{j}"), out)
                n += 1
        print(f"wrote {n} stitched samples to {out}")
        return

    chunks = _sorted_chunks(args.input)
    if kind == atk.CLUSTER:
        pool = _sorted_chunks(args.pool) if args.pool else chunks
        fakes = atk.cluster_attack(chunks, pool, args.k, args.seed)
    elif kind == atk.MIRROR:
        fakes = atk.mirror_dataset(chunks)
    elif kind == atk.IPC:
        fakes = atk.ipc_dataset(chunks, seed=args.seed)
    elif kind == atk.PFA:
        fakes, genuine, _ = atk.pfa_dataset(chunks, seed=args.seed)
        for c in genuine:
            save_chunk(c, out / "genuine")
    else:
        raise SystemExit(f"unknown attack {kind!r}")
    for c in fakes:
        save_chunk(c, out)
    print(f"wrote {len(fakes)} {kind} chunks to {out}")


def cmd_train(args):
    if args.level == "sample":
        return _train_sample_model(args)
    table = FeatureTable.concat([FeatureTable.load_csv(p) for p in args.features])
    model = train_ensemble(table.X, table.y, args.kind, args.trees, args.seed,
                           class_weights=_weights(args.weights), feature_names=FEATURE_NAMES)
    model.save(args.out)
    if model.oob_score is not None:
        oob = np.where(np.isnan(model.oob_score), model.score(table.X), model.oob_score) > 0.5
        rates = evaluate(oob.astype(int), table.y)
        priors = PriorRates.from_counts(int(table.y.sum()), int((table.y == 0).sum()), rates)
        _priors_path(args.out).write_text(json.dumps(priors.__dict__, indent=1))
        print(f"out-of-bag accuracy {rates.accuracy:.4f}")
    print(f"wrote {args.kind} model ({len(model)} trees) to {args.out}")


def _sample_rows(samples, chunk_model, priors, length):
    rows, labels, ids = [], [], []
    for s in samples:
        chunks = chunk_sample(s, "segment", length)
        if not chunks:
            log.warning("%s: no chunks, skipped", s.id)
            continue
        X = np.array([chunk_features(c).to_vector() for c in chunks])
        verdicts = chunk_model.predict(X)
        rows.append(sample_features(X, verdicts, priors))
        labels.append(int(s.label == FAKE))
        ids.append(s.id)
    return rows, labels, ids


def _train_sample_model(args):
    chunk_model = Ensemble.load(args.chunk_model)
    priors = _load_priors(args.priors or _priors_path(args.chunk_model))
    samples = [s for d in args.samples for s in load_samples(d)]
    rows, labels, _ = _sample_rows(samples, chunk_model, priors, args.len)
    X = np.array([r.to_vector() for r in rows])
    model = train_ensemble(X, np.array(labels), args.kind, args.trees, args.seed,
                           feature_names=SAMPLE_FEATURE_NAMES)
    model.save(args.out)
    print(f"wrote sample-level {args.kind} model to {args.out}")


def cmd_predict(args):
    model = Ensemble.load(args.model)
    table = FeatureTable.load_csv(args.features)
    scores = model.score(table.X, FEATURE_NAMES)
    pred = (scores > 0.5).astype(int)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["chunk_id", "verdict", "score", "label"])
        for i in range(len(table)):
            w.writerow([table.ids[i], FAKE if pred[i] else GENUINE, f"{scores[i]:.4f}",
                        FAKE if table.y[i] else GENUINE])
    rates = evaluate(pred, table.y)
    print(json.dumps(rates.as_dict(), indent=1))


def cmd_verdict(args):
    chunk_model = Ensemble.load(args.model)
    need_priors = args.method in ("prob", "model")
    if need_priors:
        priors = _load_priors(args.priors or _priors_path(args.model))
    else:
        priors = PriorRates(0.5, 0.5, 0.5, 0.5, 0.5, 0.5)  # p_fake is not used by voting
    sample_model = Ensemble.load(args.sample_model) if args.method == "model" else None
    if args.method == "model" and sample_model is None:
        raise SystemExit("--method model needs --sample-model")
    samples = [s for d in args.samples for s in load_samples(d)]
    rows, labels, ids = _sample_rows(samples, chunk_model, priors, args.len)
    verdicts = []
    for sf in rows:
        if args.method == "vote":
            v = majority_vote(sf.f, sf.g, args.thr)
        elif args.method == "prob":
            v = FAKE if sf.p_fake > args.thr else GENUINE
        else:
            v = classify_sample(sample_model, sf)[0]
        verdicts.append(v)
    out = {
        "method": args.method,
        "thr": args.thr if args.method != "model" else None,
        "samples": [{"id": i, "verdict": v, "f": sf.f, "g": sf.g, "p_fake": sf.p_fake,
                     "label": FAKE if y else GENUINE}
                    for i, v, sf, y in zip(ids, verdicts, rows, labels)],
        "rates": evaluate(verdicts, labels).as_dict() if rows else None,
    }
    text = json.dumps(out, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)


def cmd_eval(args):
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    if args.samples:
        samples = load_samples(args.samples)
    else:
        spec = CorpusSpec.from_json(args.spec) if args.spec else table2_spec(args.seed)
        samples = gen_corpus(spec, args.seed)
    needed = atk.ATTACKS if args.experiment in ("mixattack", "newattack") else (args.attack,)
    corpus = build_corpus(samples, needed, args.seed, cfg)
    table = run_experiment(args.experiment, corpus, args.attack, args.seed, cfg)
    name = args.experiment if args.experiment in ("mixattack", "newattack") \
        else f"{args.experiment}_{args.attack}"
    print(report({name: table}, args.out))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="vamos", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("extract-vma", help="video motion trace from a frame directory")
    s.add_argument("--frames", required=True)
    s.add_argument("--stride", type=int, default=DEFAULT_STRIDE)
    s.add_argument("--fps", type=float, default=DEFAULT_FPS)
    s.add_argument("--out")
    s.set_defaults(func=cmd_extract_vma)

    s = sub.add_parser("extract-ima", help="displacement trace from an accelerometer CSV")
    s.add_argument("--accel", required=True)
    s.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    s.add_argument("--out")
    s.set_defaults(func=cmd_extract_ima)

    s = sub.add_parser("synth", help="generate a synthetic sample corpus")
    s.add_argument("--spec", help="JSON corpus spec; default is the 160-sample free-form layout")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("chunk", help="split sample manifests into chunk manifests")
    s.add_argument("--samples", required=True)
    s.add_argument("--strategy", choices=("seq", "segment", "random"), default="segment")
    s.add_argument("--len", type=float, default=6.0)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--keep-remainder", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_chunk)

    s = sub.add_parser("features", help="feature CSV from chunk directories")
    s.add_argument("--chunks", required=True, nargs="+")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("attack", help="fabricate fake chunks or samples")
    s.add_argument("--type", required=True, choices=(*atk.ATTACKS, "stitch"))
    s.add_argument("--input", required=True, help="chunk directory, or sample directory "
                                                  "for sandwich/stitch")
    s.add_argument("--pool", help="cluster donor chunk directory (default: --input)")
    s.add_argument("--fakes", help="fake chunk directory for stitch")
    s.add_argument("--k", type=int, default=6)
    s.add_argument("--count", type=int, default=3)
    s.add_argument("--len", type=float, default=6.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("train", help="train a chunk (or sample) classifier")
    s.add_argument("--level", choices=("chunk", "sample"), default="chunk")
    s.add_argument("--features", nargs="+", help="feature CSVs (chunk level)")
    s.add_argument("--samples", nargs="+", help="sample directories (sample level)")
    s.add_argument("--chunk-model", help="chunk model for sample-level training")
    s.add_argument("--priors")
    s.add_argument("--kind", choices=KINDS, default="random_forest")
    s.add_argument("--trees", type=int, default=100)
    s.add_argument("--weights", help="class weights, e.g. 1:0.125,0:0.875")
    s.add_argument("--len", type=float, default=6.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="classify chunk feature rows")
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("verdict", help="sample-level verdicts over sample manifests")
    s.add_argument("--samples", required=True, nargs="+")
    s.add_argument("--model", required=True, help="chunk model")
    s.add_argument("--method", choices=("vote", "prob", "model"), default="vote")
    s.add_argument("--thr", type=float, default=0.5)
    s.add_argument("--priors")
    s.add_argument("--sample-model")
    s.add_argument("--len", type=float, default=6.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verdict)

    s = sub.add_parser("eval", help="run an experiment and write result tables")
    s.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    s.add_argument("--attack", default=atk.CLUSTER, choices=atk.ATTACKS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", help="sample directory (default: generate a synthetic corpus)")
    s.add_argument("--spec", help="corpus spec JSON for the generated corpus")
    s.add_argument("--config", help="experiment config JSON")
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
