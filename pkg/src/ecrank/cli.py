"""Command-line pipeline: gen, aps, sums, train, eval, cutoffs, search.

Every command accepts ``--config FILE`` (key = value lines, keys named like
the long flags) and ``--threads``; explicit flags override the file.
Relative paths resolve against ``--data-dir``, else $ECRANK_DATA_DIR, else
the working directory.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import sums as S
from .arith import sieve_primes
from .curve import ap_batch, conductor
from .curve.counting import CHUNK
from .dataset import (CUSTOM_HIGH_RANK, LMFDB_HIGH_RANK, ApFeatures, GenConfig, SplitSpec,
                      TabularFeatures, class_weights, generate_custom_dataset, ingest_csv,
                      read_aps, split_indices, write_aps, write_curves_csv)
from .dataset.features import conductor_feature
from .errors import ArchMismatch, EcrankError, InsufficientApData, NonfiniteLoss, ValidationError
from .nn import (CnnConfig, TrainConfig, build_cnn, build_fcnn, evaluate, extract_cutoffs,
                 load_model, merge_confusion, metrics_from_confusion, random_search, save_model,
                 train)

log = logging.getLogger("ecrank")

SUPPORTED_BOUNDS = (10**3, 10**4, 10**5)
SUM_NAMES = ("s0", "s1", "s2", "s3", "s4", "s5", "s6")
DATA_ENV = "ECRANK_DATA_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(EcrankError):
    pass


# ---------------------------------------------------------------------------
# small helpers


def read_config(path) -> dict:
    """key = value lines; '#' starts a comment; keys use '-' or '_'."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _data_dir(args) -> Path:
    return Path(args.data_dir or os.environ.get(DATA_ENV) or ".")


def _path(args, name) -> Path:
    p = Path(name)
    return p if p.is_absolute() else _data_dir(args) / p


def _existing(args, name) -> Path:
    p = _path(args, name)
    if not p.exists():
        raise ConfigError(f"missing input file {p}")
    return p


def _bound(value) -> int:
    b = int(float(value))
    if b not in SUPPORTED_BOUNDS:
        raise argparse.ArgumentTypeError(f"bound must be one of {SUPPORTED_BOUNDS}")
    return b


def _count(value) -> int:
    """Integer flag that also accepts forms like 1e8."""
    f = float(value)
    if f != int(f):
        raise argparse.ArgumentTypeError(f"{value} is not an integer")
    return int(f)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _set_threads(n: int) -> None:
    from threadpoolctl import threadpool_limits

    threadpool_limits(max(1, n))


def _with_conductors(records):
    out = []
    for r in records:
        out.append(r if r.conductor is not None else
                   type(r)(r.id, *r.ainvs, conductor=conductor(r.curve), rank=r.rank, source=r.source))
    return out


# ---------------------------------------------------------------------------
# gen / aps / sums


def _pencil(spec: str) -> dict:
    """'2:10,4:5' -> {2: 10, 4: 5}."""
    out = {}
    for part in filter(None, (s.strip() for s in spec.split(","))):
        k, _, n = part.partition(":")
        out[int(k)] = int(n)
    return out


def cmd_gen(args) -> int:
    cfg = GenConfig(count=args.count, pencil=_pencil(args.pencil), coeff_bound=args.coeff_bound,
                    coord_bound=args.coord_bound, seed=args.seed)
    records = generate_custom_dataset(cfg)
    out = _path(args, args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_curves_csv(out, [r.with_rank(None) for r in records])
    log.info("wrote %d curves to %s", len(records), out)
    return EXIT_OK


def cmd_aps(args) -> int:
    records = ingest_csv(_existing(args, args.curves))
    table = sieve_primes(args.bound)
    results = []
    step = max(CHUNK, -(-len(records) // 10))
    for start in range(0, len(records), step):
        chunk = records[start:start + step]
        results += ap_batch([r.curve for r in chunk], table, ids=[r.id for r in chunk])
        log.info("a_p: %d / %d curves", min(start + step, len(records)), len(records))
    good = [r for r in results if not isinstance(r, Exception)]
    for rec, res in zip(records, results):
        if isinstance(res, Exception):
            log.error("curve %s failed: %s", rec.id, res)
    if records and not good:
        log.error("every curve failed")
        return EXIT_CONFIG
    out = _path(args, args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_aps(out, good)
    log.info("wrote a_p for %d curves (p < %d) to %s", len(good), args.bound, out)
    return EXIT_OK


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def sums_rows(records, aps, B: int, delta: float):
    by_id = {a.curve_id: a for a in aps}
    rows, warned = [], False
    for r in records:
        if r.id not in by_id:
            continue
        rec = by_id[r.id]
        S._require_below(rec, B)
        v = S.sum_vector(rec, r.conductor, B, delta)
        if v.s6 is None and not warned:
            log.warning("a_p data too short for S6(%g); leaving the column empty", delta)
            warned = True
        rows.append([r.id, r.conductor, *(_fmt(x) for x in v.values()),
                     "" if r.rank is None else r.rank])
    return rows


def cmd_sums(args) -> int:
    records = _with_conductors(ingest_csv(_existing(args, args.curves)))
    aps = read_aps(_existing(args, args.aps))
    rows = sums_rows(records, aps, args.bound, args.delta)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "conductor", *SUM_NAMES, "rank"])
    w.writerows(rows)
    _write_text(_path(args, args.out), buf.getvalue())
    return EXIT_OK


def read_sums(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return rows


# ---------------------------------------------------------------------------
# features and labels


def _labels(ranks, args) -> np.ndarray:
    r = np.asarray(ranks, dtype=np.int64)
    if args.labels == "binary":
        return (r >= args.high_rank).astype(np.int64)
    if args.cap_rank is not None:
        r = np.minimum(r, args.cap_rank)
    return r


def _feature_names(args) -> list:
    if args.arch == "omega":
        return list(SUM_NAMES)
    names = [s.strip().lower() for s in args.features.split(",") if s.strip()]
    bad = [n for n in names if n not in SUM_NAMES]
    if bad or not names:
        raise ConfigError(f"unknown sum features {bad or names}; choose from {SUM_NAMES}")
    return names


def build_dataset(args, desc: dict | None = None):
    """(features, conductors, ids) for the arguments; ``desc`` fixes the model's feature setup."""
    arch = desc["arch"] if desc else args.arch
    N_max = int(desc["N_max"]) if desc else args.n_max
    if arch == "cnn":
        bound = int(desc["bound"]) if desc else args.bound
        records = _with_conductors(ingest_csv(_existing(args, args.curves)))
        aps = {a.curve_id: a for a in read_aps(_existing(args, args.aps))}
        records = [r for r in records if r.id in aps and r.rank is not None]
        table = sieve_primes(bound)
        for r in records:
            if not aps[r.id].covers(bound - 1):
                raise InsufficientApData(f"{r.id}: a_p file stops below {bound}")
        feats = ApFeatures.from_records([r.conductor for r in records],
                                        (aps[r.id].restrict(bound) for r in records), table, N_max,
                                        _labels([r.rank for r in records], args))
        return feats, [r.conductor for r in records], [r.id for r in records]
    names = desc["features"].split(",") if desc else _feature_names(args)
    rows = [r for r in read_sums(_existing(args, args.sums)) if r["rank"] != ""]
    x = np.empty((len(rows), len(names) + 1))
    for i, row in enumerate(rows):
        for j, n in enumerate(names):
            if row[n] == "":
                raise InsufficientApData(f"{row['id']}: column {n} is empty")
            x[i, j] = float(row[n])
        x[i, -1] = conductor_feature(int(row["conductor"]), N_max)
    labels = _labels([int(r["rank"]) for r in rows], args)
    return TabularFeatures(x, labels), [int(r["conductor"]) for r in rows], [r["id"] for r in rows]


def _split_spec(args) -> SplitSpec:
    cut = None
    if args.cut:
        lo, hi = (int(float(v)) for v in args.cut.split(","))
        cut = (lo, hi)
    return SplitSpec(mode=args.mode, ratio=args.ratio, test_fraction=args.test_fraction,
                     conductor_cut=cut, seed=args.split_seed)


def _train_config(args, weights) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr_max=args.lr_max,
                       beta1=args.beta1, weight_decay=args.weight_decay,
                       class_weights=tuple(weights), seed=args.seed)


def _build_model(args, feats, K, dropout=None):
    if args.arch == "cnn":
        cfg = CnnConfig(input_len=feats.input_shape[1], num_classes=K, L1=args.l1, L2=args.l2,
                        L3=args.l3, KS=args.ks)
        return build_cnn(cfg, seed=args.seed)
    d = args.dropout if dropout is None else dropout
    return build_fcnn(feats.input_shape[0], K, d, seed=args.seed, arch=args.arch)


def _metrics_json(model, data) -> dict:
    _, m = evaluate(model, data)
    out = {"n": int(len(data)), **m.to_dict()}
    desc = model.descriptor
    if desc.get("labels") == "all":
        C = merge_confusion(m.confusion, int(desc["high_rank"]))
        b = metrics_from_confusion(C)
        out["binary"] = {"threshold": int(desc["high_rank"]), **b.to_dict()}
    return out


def _describe(model, args, names, K):
    model.descriptor.update(
        N_max=args.n_max, labels=args.labels, high_rank=args.high_rank,
        cap_rank="" if args.cap_rank is None else args.cap_rank, num_classes=K,
        split_mode=args.mode, split_ratio=args.ratio, split_test_fraction=args.test_fraction,
        split_cut=args.cut or "", split_seed=args.split_seed)
    if args.arch == "cnn":
        model.descriptor["bound"] = args.bound
    else:
        model.descriptor["features"] = ",".join(names)
    model.descriptor = {k: str(v) for k, v in model.descriptor.items()}


def _prepare_training(args):
    if args.high_rank is None:
        args.high_rank = LMFDB_HIGH_RANK
    feats, conds, _ = build_dataset(args)
    tr, va, te = split_indices(conds, _split_spec(args))
    K = int(feats.labels.max()) + 1 if len(feats) else 2
    K = max(K, 2)
    weights = class_weights(feats.labels[tr], K)
    return feats, (tr, va, te), K, weights


def _write_outputs(args, model, history, test_metrics, extra=None):
    out = _path(args, args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_model(out / "model.bin", model)
    if history is not None:
        _write_text(out / "history.csv", history.to_csv())
    payload = {"arch": model.descriptor["arch"], "test": test_metrics,
               "mcc": test_metrics["mcc"], **(extra or {})}
    _write_text(out / "metrics.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_train(args) -> int:
    feats, (tr, va, te), K, weights = _prepare_training(args)
    names = None if args.arch == "cnn" else _feature_names(args)
    model = _build_model(args, feats, K)
    _describe(model, args, names, K)
    model, history = train(model, feats.subset(tr), feats.subset(va), _train_config(args, weights),
                           log=log.info)
    test = _metrics_json(model, feats.subset(te))
    _write_outputs(args, model, history, test, {"best_epoch": history.best_epoch})
    log.info("test MCC %.4f", test["mcc"])
    return EXIT_OK


def cmd_search(args) -> int:
    feats, (tr, va, te), K, weights = _prepare_training(args)
    names = None if args.arch == "cnn" else _feature_names(args)

    def build(dropout):
        m = _build_model(args, feats, K, dropout)
        _describe(m, args, names, K)
        return m

    model, cfg, results = random_search(build, feats.subset(tr), feats.subset(va),
                                        _train_config(args, weights), args.trials,
                                        seed=args.seed, log=log.info)
    test = _metrics_json(model, feats.subset(te))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["trial", "dropout", "lr_max", "weight_decay", "val_mcc"],
                       lineterminator="\n")
    w.writeheader()
    w.writerows(results)
    _write_text(_path(args, args.out_dir) / "search.csv", buf.getvalue())
    _write_outputs(args, model, None, test, {"lr_max": cfg.lr_max,
                                            "weight_decay": cfg.weight_decay})
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(_existing(args, args.model))
    desc = model.descriptor
    args.labels = desc["labels"]
    args.high_rank = int(desc["high_rank"])
    args.cap_rank = int(desc["cap_rank"]) if desc.get("cap_rank") else None
    if desc["arch"] != "cnn" and args.features:
        names = _feature_names(argparse.Namespace(arch=desc["arch"], features=args.features))
        if len(names) + 1 != model.input_shape[0]:
            raise ArchMismatch(f"{len(names) + 1} features given, model expects {model.input_shape[0]}")
        desc = {**desc, "features": ",".join(names)}
    if desc["arch"] == "cnn" and args.bound and args.bound != int(desc["bound"]):
        raise ArchMismatch(f"model was trained on p < {desc['bound']}, not p < {args.bound}")
    feats, conds, _ = build_dataset(args, desc)
    model.check_input(feats.input_shape)
    if args.subset != "all":
        cut = desc.get("split_cut") or None
        spec = SplitSpec(mode=desc["split_mode"], ratio=float(desc["split_ratio"]),
                         test_fraction=float(desc["split_test_fraction"]),
                         conductor_cut=tuple(int(v) for v in cut.split(",")) if cut else None,
                         seed=int(desc["split_seed"]))
        parts = dict(zip(("train", "val", "test"), split_indices(conds, spec)))
        feats = feats.subset(parts[args.subset])
    if len(feats) and feats.labels.max() >= model.num_classes:
        raise ValidationError("labels exceed the model's class count")
    payload = {"arch": desc["arch"], "subset": args.subset, "test": _metrics_json(model, feats)}
    payload["mcc"] = payload["test"]["mcc"]
    _write_text(_path(args, args.out), json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_cutoffs(args) -> int:
    model = load_model(_existing(args, args.model))
    if model.descriptor["arch"] == "cnn" or model.input_shape != (2,):
        raise ArchMismatch("cutoffs need a one-sum FCNN (two input features)")
    N_max = int(model.descriptor["N_max"])
    conds = np.unique(np.round(np.logspace(math.log10(args.cond_min), math.log10(args.cond_max),
                                           args.cond_steps)).astype(np.int64))
    grid = np.linspace(args.sum_min, args.sum_max, args.sum_steps)
    rows = extract_cutoffs(model, conds.tolist(), grid, N_max)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["log10_conductor", "sum_value", "class_low", "class_high"])
    for r in rows:
        w.writerow([repr(r[0]), repr(r[1]), r[2], r[3]])
    _write_text(_path(args, args.out), buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _train_flags(p):
    p.add_argument("--arch", choices=("cnn", "fcnn", "omega"), default="fcnn")
    p.add_argument("--features", default="s0", help="comma-separated sums for fcnn")
    p.add_argument("--curves", default="curves.csv")
    p.add_argument("--aps", default="aps.bin")
    p.add_argument("--sums", default="sums.csv")
    p.add_argument("--bound", type=_bound, default=10**4, help="a_p bound N for cnn features")
    p.add_argument("--n-max", type=_count, default=10**8, help="conductor normaliser N_max")
    p.add_argument("--labels", choices=("all", "binary"), default="all")
    p.add_argument("--high-rank", type=int, default=None,
                   help=f"binary threshold (default {LMFDB_HIGH_RANK}; custom data uses {CUSTOM_HIGH_RANK})")
    p.add_argument("--cap-rank", type=int, default=None, help="merge ranks above this into one class")
    p.add_argument("--mode", choices=("uniform", "top_range"), default="uniform")
    p.add_argument("--cut", default=None, help="lo,hi conductor range for top_range test set")
    p.add_argument("--ratio", type=float, default=4.0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--batch-size", type=int, default=1024)
    p.add_argument("--lr-max", type=float, default=1e-3)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=1e-3)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--l1", type=int, default=0)
    p.add_argument("--l2", type=int, default=None)
    p.add_argument("--l3", type=int, default=3)
    p.add_argument("--ks", type=int, default=17)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="run")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key = value file; flags override it")
    common.add_argument("--data-dir", default=None, help=f"base for relative paths (else ${DATA_ENV})")
    common.add_argument("--threads", type=int, default=1, help="BLAS/numba threads; 1 is deterministic")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ecrank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a custom curve set")
    p.add_argument("--count", type=int, default=1000, help="random Weierstrass curves")
    p.add_argument("--pencil", default="", help="k:count pairs for pencil curves, e.g. 2:10,4:5")
    p.add_argument("--coeff-bound", type=int, default=10**4)
    p.add_argument("--coord-bound", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="curves.csv")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("aps", parents=[common], help="compute a_p for p below a bound")
    p.add_argument("--curves", default="curves.csv")
    p.add_argument("--bound", type=_bound, default=10**4)
    p.add_argument("--out", default="aps.bin")
    p.set_defaults(func=cmd_aps)

    p = sub.add_parser("sums", parents=[common], help="compute S0..S6 per curve")
    p.add_argument("--curves", default="curves.csv")
    p.add_argument("--aps", default="aps.bin")
    p.add_argument("--bound", type=_bound, default=10**4, help="sum bound B")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--out", default="sums.csv")
    p.set_defaults(func=cmd_sums)

    p = sub.add_parser("train", parents=[common], help="train a classifier")
    _train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", parents=[common], help="random hyperparameter search")
    _train_flags(p)
    p.add_argument("--trials", type=int, default=8)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", parents=[common], help="evaluate a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--curves", default="curves.csv")
    p.add_argument("--aps", default="aps.bin")
    p.add_argument("--sums", default="sums.csv")
    p.add_argument("--features", default=None, help="override sum columns (checked against model)")
    p.add_argument("--bound", type=_bound, default=None)
    p.add_argument("--subset", choices=("all", "train", "val", "test"), default="all")
    p.add_argument("--out", default="metrics.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cutoffs", parents=[common], help="decision boundaries of a one-sum model")
    p.add_argument("--model", required=True)
    p.add_argument("--cond-min", type=float, default=10.0)
    p.add_argument("--cond-max", type=float, default=1e8)
    p.add_argument("--cond-steps", type=int, default=50)
    p.add_argument("--sum-min", type=float, default=-10.0)
    p.add_argument("--sum-max", type=float, default=10.0)
    p.add_argument("--sum-steps", type=int, default=401)
    p.add_argument("--out", default="cutoffs.csv")
    p.set_defaults(func=cmd_cutoffs)
    return parser


def parse_args(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = read_config(_path(args, args.config) if not Path(args.config).exists() else args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"ecrank: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    _set_threads(args.threads)
    try:
        return args.func(args)
    except NonfiniteLoss as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (EcrankError, OSError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
