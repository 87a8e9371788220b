"""Command-line entry points for the full pipeline.

Exit codes: 0 success, 1 runtime error, 2 usage error. EVOKE_SEED
overrides the default seed wherever --seed is not given explicitly.
"""

from __future__ import annotations

import argparse
import json
import os
import signal
import sys

import numpy as np
from scipy.special import expit

from . import bench as bench_mod
from . import dataset as dataset_mod
from . import distill as distill_mod
from .emotions import AvatarManifest, EmotionTable, bits_to_emotion, emotion_to_avatar
from .metrics import binarize_predictions, format_metric_table, multilabel_metrics
from .models import load_checkpoint
from .preprocess import ValidationError
from .server import InferenceServer
from .synth import synth_dataset
from .tensor import Prng


def _resolve_seed(value, default=0):
    if value is not None:
        return value
    env = os.environ.get("EVOKE_SEED")
    if env is not None:
        return int(env)
    return default


def _train_config(args):
    return distill_mod.DistillConfig(
        T=getattr(args, "T", 1.25),
        alpha=getattr(args, "alpha", 0.25),
        lr=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        folds=args.folds,
        seed=_resolve_seed(args.seed),
    )


def _write_checkpoint_blob(blob, path):
    with open(path, "wb") as fh:
        fh.write(blob)


def cmd_synth(args):
    seed = _resolve_seed(args.seed)
    manifest = synth_dataset(
        Prng(seed),
        n_subjects=args.subjects,
        n_trials=args.trials,
        out_dir=args.out,
        trial_secs=args.trial_secs,
        baseline_secs=args.baseline_secs,
    )
    print(f"wrote {len(manifest.trials)} trials to {args.out}")
    return 0


def cmd_preprocess(args):
    manifest = dataset_mod.write_feature_dataset(
        args.infile, args.out, window_secs=args.window_secs, baseline_secs=args.baseline_secs
    )
    print(f"wrote {len(manifest.trials)} feature files to {args.out}")
    return 0


def cmd_train_teacher(args):
    cfg = _train_config(args)
    data = dataset_mod.load_windows(args.data)
    blob, reports = distill_mod.train_teacher(data, cfg)
    _write_checkpoint_blob(blob, args.out)
    report_path = args.report or args.out + ".reports.json"
    distill_mod.save_fold_reports(reports, report_path)
    agg = distill_mod.aggregate_folds([r.metrics for r in reports])
    print(f"teacher: mean accuracy {agg.mean_accuracy:.4f}, macro F1 {agg.macro_f1:.4f}")
    print(f"checkpoint: {args.out}\nreports: {report_path}")
    return 0


def cmd_distill(args):
    cfg = _train_config(args)
    data = dataset_mod.load_windows(args.data)
    blob, reports = distill_mod.distill_student(args.teacher, data, cfg)
    _write_checkpoint_blob(blob, args.out)
    report_path = args.report or args.out + ".reports.json"
    distill_mod.save_fold_reports(reports, report_path)
    agg = distill_mod.aggregate_folds([r.metrics for r in reports])
    print(f"student: mean accuracy {agg.mean_accuracy:.4f}, macro F1 {agg.macro_f1:.4f}")
    print(f"checkpoint: {args.out}\nreports: {report_path}")
    return 0


def cmd_sweep(args):
    # --T/--alpha are grid lists here; the per-point values land via replace()
    cfg = distill_mod.DistillConfig(
        lr=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        folds=args.folds,
        seed=_resolve_seed(args.seed),
    )
    data = dataset_mod.load_windows(args.data)
    t_list = [float(x) for x in args.T.split(",") if x]
    a_list = [float(x) for x in args.alpha.split(",") if x]
    result = distill_mod.sweep(args.teacher, data, t_list, a_list, cfg)
    if args.out_json:
        result.to_json(args.out_json)
    if args.out_csv:
        result.to_csv(args.out_csv)
    print(result.to_csv().rstrip())
    return 0


def cmd_eval(args):
    model = load_checkpoint(args.model)
    data = dataset_mod.load_windows(args.data)
    if args.use_meta_split:
        val_ids = model.meta.get("val_trial_ids")
        if not val_ids:
            raise ValidationError("checkpoint meta holds no validation split")
        indices = [data.trial_ids.index(t) for t in val_ids]
        keep = data.windows_of_trials(indices)
        features, labels = data.features[keep], data.labels[keep]
    else:
        features, labels = data.features, data.labels
    logits = distill_mod.teacher_logits(model, features)
    report = multilabel_metrics(binarize_predictions(expit(logits)), labels.astype(np.int64))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    print(format_metric_table(report))
    return 0


def cmd_bench(args):
    prng = Prng(_resolve_seed(args.seed))
    reports = []
    for path in args.model:
        model = load_checkpoint(path)
        reports.append(bench_mod.measure(model, args.batch, args.iters, args.warmup, prng))
    payload = [r.to_dict() for r in reports]
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(json.dumps(payload, indent=2, sort_keys=True))
    if len(reports) >= 2:
        print(bench_mod.format_table(bench_mod.compare(reports)))
    return 0


def _load_mapping(args):
    table = EmotionTable.from_json(args.table) if args.table else EmotionTable.default()
    manifest = AvatarManifest.from_json(args.manifest) if args.manifest else AvatarManifest.default(table)
    manifest.check_covers(table)
    return table, manifest


def cmd_map(args):
    table, manifest = _load_mapping(args)
    bits = tuple(int(b) for b in args.bits.split(","))
    if len(bits) != 3 or any(b not in (0, 1) for b in bits):
        raise ValidationError(f"--bits must be three 0/1 values, got {args.bits!r}")
    emotion = bits_to_emotion(bits, table)
    if args.show_avatar:
        print(f"{emotion}\t{emotion_to_avatar(emotion, manifest)}")
    else:
        print(emotion)
    return 0


def cmd_serve(args):
    table, manifest = _load_mapping(args)
    model = load_checkpoint(args.model)
    host, _, port = args.listen.rpartition(":")
    server = InferenceServer(model, table, manifest, host=host or "127.0.0.1", port=int(port))

    def _shutdown(signum, frame):
        server.shutdown()

    signal.signal(signal.SIGINT, _shutdown)
    signal.signal(signal.SIGTERM, _shutdown)
    server.start()
    host, port = server.address
    print(f"listening on {host}:{port}", flush=True)
    server.wait()
    return 0


def _add_train_flags(p, epochs=100):
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--report", default=None, help="fold report JSON path")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evoke",
        description="EEG emotion pipeline: features, distillation, benchmarking, avatar mapping",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int, required=True, help="trials per subject")
    p.add_argument("--subjects", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trial-secs", type=float, default=4.0)
    p.add_argument("--baseline-secs", type=float, default=3.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="featurize a signals manifest")
    p.add_argument("--in", dest="infile", required=True, help="signals manifest file or directory")
    p.add_argument("--out", required=True)
    p.add_argument("--window-secs", type=float, default=1.0)
    p.add_argument("--baseline-secs", type=float, default=3.0)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train-teacher", help="pretrain the teacher with k-fold CV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train_teacher)

    p = sub.add_parser("distill", help="distill the student from a teacher checkpoint")
    p.add_argument("--teacher", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--T", type=float, default=1.25)
    p.add_argument("--alpha", type=float, default=0.25)
    _add_train_flags(p)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("sweep", help="grid of distillation runs over T and alpha")
    p.add_argument("--teacher", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--T", default="1.0,1.25,2.0", help="comma-separated temperatures")
    p.add_argument("--alpha", default="0.1,0.25,0.5", help="comma-separated weights")
    p.add_argument("--out-json", default=None)
    p.add_argument("--out-csv", default=None)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="metrics of a checkpoint on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--use-meta-split", action="store_true",
                   help="evaluate on the validation trials recorded in the checkpoint")
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="latency/throughput of checkpoints")
    p.add_argument("--model", nargs="+", required=True)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--warmup", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("map", help="map VAD bits to an emotion")
    p.add_argument("--bits", required=True, help="v,a,d bits, e.g. 1,0,1")
    p.add_argument("--table", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--show-avatar", action="store_true")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("serve", help="NDJSON streaming inference service")
    p.add_argument("--model", required=True)
    p.add_argument("--table", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--listen", default="127.0.0.1:7860")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args) or 0
    except Exception as exc:  # runtime failures map to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
