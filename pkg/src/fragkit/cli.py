"""``fragkit`` command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 malformed file,
3 incompatible artifacts, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset import (
    SCALING_METHODS,
    WEIGHTING_METHODS,
    DATASET_MAGIC,
    SplitSpec,
    build_dataset,
    dataset_for_machine,
    expand_dataset,
    load_dataset,
    merge_labels,
    permute_dataset,
    read_dataset_header,
    save_dataset,
    sub_dataset,
)
from .errors import FormatError, FragkitError, ParameterError
from .features.config import EXAMPLE_566, FeatureConfig
from .fragstore import MAGIC as ARCHIVE_MAGIC
from .fragstore import ExtractionParams, decode_archive, import_raw, read_archive, scan_corpus, write_archive
from .learn.machine import MACHINE_MAGIC, MODEL_KINDS, load_machine, read_machine_header, save_machine
from .learn.pipeline import (
    RESULTS_MAGIC,
    cross_validate,
    load_results,
    save_results,
    test_machine,
    train_machine,
)
from .plots import emit_histogram, emit_scatter
from .select import embedded_tree_selection, wrapper_sfs_lda

log = logging.getLogger("fragkit")

BUILTIN_CONFIGS = {"example566": EXAMPLE_566}


class UsageError(FragkitError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _floats(text, n=None, what="values"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ParameterError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ParameterError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    return vals


def _ints(text, what="values"):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ParameterError(f"{what} must be comma-separated integers, got {text!r}") from None


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _maybe_int(v):
    return int(v) if v.lstrip("-").isdigit() else v


def _emit(args, report):
    print(report.format())
    if getattr(args, "results", None):
        save_results(report.to_dict(), args.results)
        log.info("results written to %s", args.results)


# ---------------------------------------------------------------- commands


def cmd_fragment(args):
    params = ExtractionParams(tuple(_ints(args.sizes, "--sizes")), args.head_discard, args.tail_discard,
                              args.max_per_file, args.seed)
    out = Path(args.out)
    archives = scan_corpus(args.input, params, out)
    out.mkdir(parents=True, exist_ok=True)
    for arch in archives:
        path = out / f"{arch.class_name}.frag"
        write_archive(arch, path)
        print(f"{path}: {len(arch)} fragments")


def cmd_import_raw(args):
    arch = import_raw(args.input, args.fragment_size, args.class_name, args.file_id)
    write_archive(arch, args.out)
    print(f"{args.out}: {len(arch)} fragments of class {arch.class_name}")


def _load_config(spec):
    if spec in BUILTIN_CONFIGS:
        return FeatureConfig(BUILTIN_CONFIGS[spec])
    try:
        return FeatureConfig.from_json(Path(spec).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"feature configuration {spec} is not valid JSON: {exc}") from None


def cmd_extract(args):
    archives = [read_archive(p) for p in args.archives]
    names = _names(args.class_names) if args.class_names else None
    if names is not None and len(names) != len(archives):
        raise ParameterError("--class-names needs one name per archive")
    if args.machine:
        ds = dataset_for_machine(archives, load_machine(args.machine), names)
    elif args.config:
        ds = build_dataset(archives, _load_config(args.config), names)
    else:
        raise ParameterError("extract needs --config or --machine")
    save_dataset(ds, args.out)
    print(f"{args.out}: {ds.n_samples} samples, {ds.n_features} features, {ds.n_classes} classes")


def cmd_dataset(args):
    if args.op == "permute":
        ds = permute_dataset(load_dataset(args.dataset), args.seed)
    elif args.op == "expand":
        ds = expand_dataset(load_dataset(args.dataset), load_dataset(args.other))
    elif args.op == "merge-labels":
        groups = [[_maybe_int(c) for c in _names(g)] for g in args.group]
        names = _names(args.names)
        ds = merge_labels(load_dataset(args.dataset), groups, names)
    else:
        ds = load_dataset(args.dataset)
        classes = [_maybe_int(c) for c in _names(args.classes)] if args.classes else None
        feats = None
        if args.features:
            feats = [_maybe_int(f) for f in _names(args.features)]
        elif args.features_file:
            feats = [ln.strip() for ln in Path(args.features_file).read_text().splitlines() if ln.strip()]
        ds = sub_dataset(ds, classes, feats)
    save_dataset(ds, args.out)
    print(f"{args.out}: {ds.n_samples} samples, {ds.n_features} features, {ds.n_classes} classes")


def _model_params(args):
    kind = args.model
    if kind == "tree":
        return {"min_leaf_fraction": args.min_leaf}
    if kind == "forest":
        return {"n_trees": args.trees, "min_leaf_fraction": args.min_leaf, "n_split_features": args.split_features}
    if kind == "svm":
        return {"kernel": args.kernel, "scale": args.kernel_scale, "order": args.order, "box": args.box}
    if kind == "knn":
        return {"n_features": args.knn_features, "n_learners": args.learners, "k": args.k_neighbors}
    if kind == "nn":
        return {"hidden": args.hidden}
    return {}


def _scaling(args):
    return None if args.scaling == "none" else args.scaling


def cmd_train(args):
    ds = load_dataset(args.dataset)
    start, end = _floats(args.split, 2, "--split")
    tp, vp = _floats(args.percents, 2, "--percents")
    machine, report = train_machine(ds, args.model, _model_params(args), SplitSpec(start, end, tp, vp),
                                    args.weighting, _scaling(args), args.seed)
    save_machine(machine, args.out)
    _emit(args, report)


def cmd_test(args):
    machine = load_machine(args.model)
    ds = load_dataset(args.dataset)
    start, end = _floats(args.range, 2, "--range")
    _emit(args, test_machine(machine, ds, start, end, args.weighting))


def cmd_crossval(args):
    ds = load_dataset(args.dataset)
    report = cross_validate(ds, args.model, _model_params(args), args.k, args.weighting, _scaling(args), args.seed)
    _emit(args, report)


def cmd_select(args):
    ds = load_dataset(args.dataset)
    if args.method == "embedded":
        tp, vp = _floats(args.percents, 2, "--percents")
        report = embedded_tree_selection(ds, SplitSpec(0.0, 1.0, tp, vp), args.min_leaf, args.weighting,
                                         args.threshold)
        if args.threshold is None:
            report.selected = _pick_interactively(report, args.count)
    else:
        report = wrapper_sfs_lda(ds, args.k, args.max_features)
    _emit(args, report)
    if args.out:
        if not report.selected:
            raise ParameterError("no features selected; nothing to write")
        sub = sub_dataset(ds, None, report.selected)
        save_dataset(sub, args.out)
        print(f"{args.out}: {sub.n_features} features")


def _pick_interactively(report, count):
    names = [n for n, _ in report.ranking]
    if count is not None:
        return names[:count]
    if not sys.stdin.isatty():
        raise ParameterError("embedded selection needs --threshold or --count when no terminal is attached")
    print(report.format())
    reply = input("number of top-ranked features to keep: ").strip()
    try:
        return names[:int(reply)]
    except ValueError:
        raise ParameterError(f"expected a number, got {reply!r}") from None


def cmd_plot(args):
    ds = load_dataset(args.dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "histogram":
        classes = _names(args.classes) if args.classes else None
        plots = emit_histogram(ds, [_maybe_int(f) for f in _names(args.features)], classes, args.bins)
        for p in plots:
            tsv, svg = p.write(out / f"hist_{p.axis_labels[0]}")
            print(tsv)
            print(svg)
    else:
        groups = [_names(g) for g in args.group] if args.group else None
        p = emit_scatter(ds, [_maybe_int(f) for f in _names(args.features)], groups)
        tsv, svg = p.write(out / ("scatter_" + "_".join(p.axis_labels)))
        print(tsv)
        print(svg)


def _describe_config(cfg):
    if not cfg:
        return "none"
    return ", ".join(e["type"] for e in cfg)


def cmd_show(args):
    path = Path(args.file)
    buf = path.read_bytes()
    # the archive magic is a prefix of the others, so it is tested last
    if buf.startswith(DATASET_MAGIC):
        h, _ = read_dataset_header(buf)
        print(f"dataset: {path}\nversion: {h['version']}\nclasses ({len(h['class_names'])}): "
              f"{', '.join(h['class_names'])}\nsamples: {h['n_samples']}\nfeatures: {h['n_features']}\n"
              f"descriptors: {len(h['descriptors'])}\nfeature config: {_describe_config(h['feature_config'])}")
        if args.descriptors:
            print("\n".join(h["descriptors"]))
    elif buf.startswith(MACHINE_MAGIC):
        h, _ = read_machine_header(buf)
        print(f"machine: {path}\nversion: {h['version']}\nmodel: {h['model']}\nparams: {json.dumps(h['params'])}\n"
              f"classes ({len(h['class_names'])}): {', '.join(h['class_names'])}\n"
              f"features: {len(h['descriptors'])}\nscaling: {(h['scaling'] or {}).get('method', 'none')}\n"
              f"feature config: {_describe_config(h['feature_config'])}")
    elif buf.startswith(RESULTS_MAGIC):
        r = load_results(path)
        print(f"results: {path}\nreport: {r.get('report')}\nmodel: {r.get('model', '-')}")
        for key in ("train", "validation", "test", "pooled"):
            if r.get(key):
                print(f"{key} accuracy: {100 * r[key]['accuracy']:.2f}%")
        if r.get("selected") is not None:
            print(f"selected: {', '.join(r['selected'])}")
    elif buf.startswith(ARCHIVE_MAGIC):
        arch = decode_archive(buf)
        files = len({r.file_id for r in arch.records})
        sizes = sorted({len(r.data) for r in arch.records})
        print(f"archive: {path}\nclass: {arch.class_name}\nversion: {arch.format_version}\n"
              f"fragments: {len(arch)}\nsource files: {files}\nfragment sizes: {sizes}")
    else:
        raise FormatError(f"{path} is not a fragkit artifact (unknown header)", 0)


# ---------------------------------------------------------------- parser


def _add_training_flags(p, with_out):
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--dataset", required=True)
    p.add_argument("--weighting", default="balanced", choices=WEIGHTING_METHODS)
    p.add_argument("--scaling", default="zscore", choices=SCALING_METHODS + ("none",))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-leaf", type=float, default=0.001, help="tree/forest: minimum leaf size as a fraction")
    p.add_argument("--trees", type=int, default=50, help="forest: number of trees")
    p.add_argument("--split-features", type=int, default=None, help="forest: features per split")
    p.add_argument("--kernel", default="rbf", choices=("rbf", "linear", "polynomial"))
    p.add_argument("--kernel-scale", type=float, default=1.0)
    p.add_argument("--order", type=int, default=3, help="svm: polynomial order")
    p.add_argument("--box", type=float, default=1.0, help="svm: box constraint")
    p.add_argument("--knn-features", type=int, default=None, help="knn: features per learner")
    p.add_argument("--learners", type=int, default=10, help="knn: number of learners")
    p.add_argument("--k-neighbors", type=int, default=1)
    p.add_argument("--hidden", type=int, default=10, help="nn: hidden layer size")
    p.add_argument("--results", help="write a machine-readable results file here")
    if with_out:
        p.add_argument("--split", default="0,1", help="start,end fractions of the dataset")
        p.add_argument("--percents", default="80,20", help="train,validation percentages")
        p.add_argument("--out", required=True)


def build_parser():
    parser = _Parser(prog="fragkit", description="File-fragment type identification toolkit")
    parser.add_argument("--version", action="version", version=f"fragkit {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fragment", help="cut class folders of files into fragment archives")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sizes", default="1024")
    p.add_argument("--head-discard", type=float, default=0.0)
    p.add_argument("--tail-discard", type=float, default=0.0)
    p.add_argument("--max-per-file", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fragment)

    p = sub.add_parser("import-raw", help="convert a headerless fixed-size fragment file to an archive")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--fragment-size", type=int, required=True)
    p.add_argument("--class-name")
    p.add_argument("--file-id", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import_raw)

    p = sub.add_parser("extract", help="build a feature dataset from archives")
    p.add_argument("--config", help="JSON feature configuration file or 'example566'")
    p.add_argument("--machine", help="reuse a trained machine's feature configuration")
    p.add_argument("--archives", nargs="+", required=True)
    p.add_argument("--class-names")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("dataset", help="permute, expand, merge labels or subset a dataset")
    ops = p.add_subparsers(dest="op", required=True, parser_class=_Parser)
    q = ops.add_parser("permute")
    q.add_argument("--dataset", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q = ops.add_parser("expand")
    q.add_argument("--dataset", required=True)
    q.add_argument("--other", required=True)
    q.add_argument("--out", required=True)
    q = ops.add_parser("merge-labels")
    q.add_argument("--dataset", required=True)
    q.add_argument("--group", action="append", required=True, help="comma-separated classes; repeatable")
    q.add_argument("--names", required=True, help="one new name per group, comma-separated")
    q.add_argument("--out", required=True)
    q = ops.add_parser("subset")
    q.add_argument("--dataset", required=True)
    q.add_argument("--classes")
    q.add_argument("--features")
    q.add_argument("--features-file")
    q.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train a decision machine")
    _add_training_flags(p, with_out=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("test", help="test a trained machine on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--range", default="0,1")
    p.add_argument("--weighting", default="balanced", choices=WEIGHTING_METHODS)
    p.add_argument("--results")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("crossval", help="K-fold cross-validation")
    _add_training_flags(p, with_out=False)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("select", help="feature selection")
    p.add_argument("--method", required=True, choices=("embedded", "wrapper"))
    p.add_argument("--dataset", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--count", type=int, help="embedded: keep the top N instead of prompting")
    p.add_argument("--percents", default="80,20")
    p.add_argument("--min-leaf", type=float, default=0.001)
    p.add_argument("--weighting", default="balanced", choices=WEIGHTING_METHODS)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--max-features", type=int)
    p.add_argument("--results")
    p.add_argument("--out")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("plot", help="histogram or scatter plot data and SVG")
    kinds = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    q = kinds.add_parser("histogram")
    q.add_argument("--dataset", required=True)
    q.add_argument("--features", required=True)
    q.add_argument("--classes")
    q.add_argument("--bins", type=int, default=20)
    q.add_argument("--out", required=True, help="output directory")
    q = kinds.add_parser("scatter")
    q.add_argument("--dataset", required=True)
    q.add_argument("--features", required=True, help="2 or 3 comma-separated features")
    q.add_argument("--group", action="append", help="comma-separated classes drawn as one series; repeatable")
    q.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("show", help="print the header of any fragkit file")
    p.add_argument("file")
    p.add_argument("--descriptors", action="store_true", help="datasets: list every descriptor")
    p.set_defaults(func=cmd_show)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except FragkitError as exc:
        print(f"fragkit: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"fragkit: error: {exc}", file=sys.stderr)
        return 1
    except FloatingPointError as exc:
        print(f"fragkit: numeric error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
