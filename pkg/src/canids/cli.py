"""Command line entry point: ``canids {train,eval,tune,detect,gen,bench}``."""
import argparse
import sys
from dataclasses import replace

import numpy as np

from . import bench, dataset, kernels, metrics, modelfile, rtdetect, tuner
from .nncore import allocate_layers
from .trainer import TrainConfig, evaluate, train


def _is_spec_file(path) -> bool:
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                return line.startswith("class ")
    return False


def load_data(args) -> dataset.Dataset:
    paths = args.data or []
    if args.schema == "synthetic":
        if not paths:
            return dataset.gen_synthetic(dataset.default_synthetic_spec(args.per_class), args.seed)
        parts = []
        for p in paths:
            if _is_spec_file(p):
                with open(p, encoding="utf-8") as fh:
                    parts.append(dataset.gen_synthetic(dataset.parse_synthetic_spec(fh.read()), args.seed))
            else:
                parts.append(dataset.load_csv(p, "synthetic"))
        return dataset.concat(parts)
    if not paths:
        raise ValueError(f"--data is required for schema {args.schema}")
    return dataset.concat([dataset.load_csv(p, args.schema) for p in paths])


def _config(args) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, num_batches=args.num_batches, learning_rate=args.lr,
                       l2_lambda=args.l2, seed=args.seed)


def _write(text, path=None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _class_report(cm, names) -> str:
    return metrics.format_table(names, metrics.all_classes(cm)) + "\n" + metrics.format_confusion(cm, names)


def cmd_train(args):
    ds = load_data(args)
    cfg = _config(args)
    print(f"# {len(ds)} samples, classes {dict(zip(ds.class_names, ds.class_counts().tolist()))}")
    if args.folds:
        cv = tuner.cross_validate(ds, args.hidden, cfg, k=args.folds, seed=args.seed)
        _write(cv.summary(), args.out)
        return 0
    train_set, test_set = dataset.split(ds, args.train_fraction, args.seed)
    arch = allocate_layers(args.hidden, ds.num_classes, ds.X.shape[1])
    print(f"# architecture {arch.input_dim} -> {list(arch.layer_widths)}, {arch.num_params} parameters,"
          f" backend {kernels.BACKEND}")
    model, report = train(arch, train_set, cfg)
    sys.stdout.write(report.as_table())
    print(f"# training time {report.seconds:.3f} s")
    if args.out:
        modelfile.save_model(model, args.out)
        print(f"# model written to {args.out}")
    if len(test_set):
        cm, _ = evaluate(model, test_set, timed=False)
        print(f"# held-out {len(test_set)} samples, accuracy {cm.overall_accuracy():.6f}")
        sys.stdout.write(_class_report(cm, ds.class_names))
    return 0


def cmd_eval(args):
    model = modelfile.load_model(args.model)
    ds = load_data(args)
    if ds.class_names != model.class_names:
        raise ValueError(f"data classes {ds.class_names} differ from model classes {model.class_names}")
    cm, lat = evaluate(model, ds, timed=True)
    print(f"# {len(ds)} samples, accuracy {cm.overall_accuracy():.6f}")
    sys.stdout.write(_class_report(cm, ds.class_names))
    sys.stdout.write(rtdetect.latency_report(rtdetect.LatencyStats.from_samples(np.asarray(lat) * 1e6)))
    if args.out:
        _write(metrics.format_table(ds.class_names, metrics.all_classes(cm), fmt="csv"), args.out)
    return 0


def cmd_tune(args):
    ds = load_data(args)
    if args.subsample < 1.0:
        ds = dataset.subsample_per_class(ds, args.subsample, args.seed)
    space = tuner.SearchSpace(tuple(args.hidden_range), tuple(args.batches_range), tuple(args.epochs_range))
    print(f"# tuning on {len(ds)} samples, {args.trials} trials x {args.folds} folds")
    print("trial\thidden\tbatches\tepochs\tfold_accuracy\tmean\tseconds_per_fold")
    lines = []

    def log(row):
        lines.append(row)
        print(row, flush=True)

    best, _ = tuner.random_search(space, ds, trials=args.trials, k=args.folds, seed=args.seed,
                                  base=_config(args), log=log)
    summary = f"# best: {best.row()}\n"
    sys.stdout.write(summary)
    if args.out:
        _write("\n".join(lines) + "\n" + summary, args.out)
    return 0


def cmd_detect(args):
    model = modelfile.load_model(args.model)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout

    def sink(event):
        out.write(event.format() + "\n")

    src = sys.stdin if args.data in (None, ["-"]) else open(args.data[0], encoding="ascii", errors="replace")
    try:
        det = rtdetect.Detector(model)
        stats = det.run(src, sink)
    finally:
        if src is not sys.stdin:
            src.close()
        if out is not sys.stdout:
            out.close()
    sys.stderr.write(rtdetect.latency_report(stats))
    sys.stderr.write(rtdetect.latency_report(det.parse_stats(), "parse time (not included above)"))
    return 0


def cmd_gen(args):
    if args.data:
        with open(args.data[0], encoding="utf-8") as fh:
            spec = dataset.parse_synthetic_spec(fh.read())
    else:
        spec = dataset.default_synthetic_spec(args.per_class)
    if args.format == "log":
        rng = np.random.default_rng(args.seed)
        frames = [f for rule in spec.classes for f in dataset.generate_frames(rule, rng)]
        order = rng.permutation(len(frames))
        text = "".join(rtdetect.format_log_line(dataset.canio.RawCanFrame(frames[j].arbitration_id, frames[j].data,
                                                                          i * 0.0005)) + "\n"
                       for i, j in enumerate(order))
        _write(text, args.out)
        return 0
    if not args.out:
        raise ValueError("gen --format csv needs --out")
    ds = dataset.gen_synthetic(spec, args.seed)
    dataset.write_synthetic_csv(ds, args.out)
    print(f"# wrote {len(ds)} samples to {args.out}")
    return 0


def cmd_bench(args):
    if args.backends:
        _write(bench.format_backends(bench.compare_backends(seed=args.seed)), args.out)
        return 0
    ds = load_data(args)
    rows = bench.compare_allocations(ds, args.hidden, tuple(args.widths), _config(args),
                                     args.train_fraction, args.seed)
    _write(bench.format_rows(rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="canids", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, training=True):
        if data:
            p.add_argument("--data", nargs="+", help="input file(s)")
            p.add_argument("--schema", choices=dataset.SCHEMAS, default="synthetic")
            p.add_argument("--per-class", type=int, default=1000,
                           help="samples per class for the built-in synthetic set")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        if training:
            p.add_argument("--hidden", type=int, default=3)
            p.add_argument("--epochs", type=int, default=100)
            p.add_argument("--num-batches", type=int, default=300)
            p.add_argument("--lr", type=float, default=0.001)
            p.add_argument("--l2", type=float, default=1e-4)
            p.add_argument("--train-fraction", type=float, default=0.8)

    p = sub.add_parser("train", help="train a model (or cross-validate with --folds)")
    common(p)
    p.add_argument("--folds", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset")
    common(p, training=False)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tune", help="random hyperparameter search with k-fold CV")
    common(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--subsample", type=float, default=0.5, help="per-class fraction used for tuning")
    p.add_argument("--hidden-range", type=int, nargs=2, default=(1, 5))
    p.add_argument("--batches-range", type=int, nargs=2, default=(100, 500))
    p.add_argument("--epochs-range", type=int, nargs=2, default=(100, 500))
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("detect", help="classify a CAN log stream")
    p.add_argument("--model", required=True)
    p.add_argument("--data", nargs=1, help="log file, or - for stdin (default)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("gen", help="generate synthetic traffic")
    common(p, data=False, training=False)
    p.add_argument("--data", nargs=1, help="synthetic spec file (default: built-in five-class set)")
    p.add_argument("--per-class", type=int, default=1000)
    p.add_argument("--format", choices=("csv", "log"), default="csv")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="allocation rule vs fixed widths, or kernel backends")
    common(p)
    p.add_argument("--widths", type=int, nargs="+", default=list(bench.DEFAULT_FIXED_WIDTHS))
    p.add_argument("--backends", action="store_true", help="time numba vs numpy kernels instead")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"canids {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
