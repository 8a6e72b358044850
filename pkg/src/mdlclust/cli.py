"""Command line entry point.

Exit codes: 0 success, 1 config error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import bench
from .bench import ConfigError, ExperimentConfig
from .dataio import DataError, load_builtin, load_dataset, normalize
from .validation import METRICS

EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 1, 2, 3


def _read_labels(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            cells = [row[0].strip() for row in csv.reader(fh) if row and row[0].strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if cells and not _is_number(cells[0]) and len(cells) > 1 and _is_number(cells[1]):
        cells = cells[1:]
    return cells


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def cmd_run(args):
    cfg = ExperimentConfig.from_file(args.config)
    if args.jobs is not None:
        cfg.jobs = args.jobs
    base = Path(args.config).resolve().parent
    bundle = bench.run_experiment(cfg, base_dir=base, output_dir=args.output)
    for row in bundle.summary_rows():
        print(f"{row['dataset']:>12} {row['metric']:>9} {row['method']:>12} {row['mean']:7.2f} ± {row['std']:.2f}")
    return 0


def cmd_cluster(args):
    if args.data.startswith("builtin:"):
        d = load_builtin(args.data.split(":", 1)[1])
    else:
        d = load_dataset(args.data, args.label_column, args.header)
    x = normalize(d)
    method = {"name": args.method}
    if args.method not in bench.BASELINES + bench.STAGES + ("GAMO",):
        raise ConfigError(f"unknown method {args.method!r}")
    labels, _ = bench.cluster_with(method, x, args.k, args.seed)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["label"])
    for v in labels:
        out.writerow([int(v)])
    return 0


def cmd_metrics(args):
    pred = _read_labels(args.pred)
    truth = _read_labels(args.truth)
    if len(pred) != len(truth):
        raise DataError(f"pred has {len(pred)} labels, truth has {len(truth)}")
    report = {name: fn(pred, truth) for name, fn in METRICS.items()}
    print(json.dumps(report, indent=1))
    return 0


def cmd_rank(args):
    rows, metrics = bench.read_raw_scores(args.scores)
    if args.metric:
        metrics = [args.metric]
    out = csv.writer(sys.stdout, lineterminator="\n")
    print(f"# {bench.RANKING_NOTE}")
    out.writerow(["dataset", "metric", "method", "score"])
    for r in bench.rank_raw_scores(rows, metrics):
        out.writerow([r["dataset"], r["metric"], r["method"], r["score"]])
    return 0


def cmd_describe(args):
    d = load_dataset(args.data, args.label_column, args.header)
    print(d.summary_json())
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="mdlclust", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a full experiment grid")
    r.add_argument("--config", required=True)
    r.add_argument("--output", help=f"output directory (overrides ${bench.OUTPUT_ENV} and the config)")
    r.add_argument("--jobs", type=int)
    r.set_defaults(func=cmd_run)

    def data_opts(sp):
        sp.add_argument("--label-column", default=None)
        sp.add_argument("--header", action=argparse.BooleanOptionalAction, default=None)

    c = sub.add_parser("cluster", help="cluster one CSV and print labels")
    c.add_argument("--data", required=True, help="CSV path or builtin:<name>")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--method", default="GAMO")
    c.add_argument("--seed", type=int, default=0)
    data_opts(c)
    c.set_defaults(func=cmd_cluster)

    m = sub.add_parser("metrics", help="compare a predicted labeling with ground truth")
    m.add_argument("--pred", required=True)
    m.add_argument("--truth", required=True)
    m.set_defaults(func=cmd_metrics)

    k = sub.add_parser("rank", help="rank methods from a raw score CSV")
    k.add_argument("--scores", required=True)
    k.add_argument("--metric")
    k.set_defaults(func=cmd_rank)

    d = sub.add_parser("describe", help="print a dataset summary as JSON")
    d.add_argument("--data", required=True)
    data_opts(d)
    d.set_defaults(func=cmd_describe)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
