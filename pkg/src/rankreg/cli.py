"""Command-line interface for training, evaluating and comparing rank-regularized classifiers."""
import argparse
import json
import logging
import os
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import asdict

from . import experiments
from .data import gen_gaussian_imbalanced, load_table, save_table, stratified_split
from .exceptions import RankRegError
from .losses import LOSS_ALIASES
from .metrics import DEFAULT_BETAS
from .mlp import load_model, save_model
from .ranking import RegConfig
from .trainer import TrainConfig, evaluate, train

LOSS_NAMES = LOSS_ALIASES


@contextmanager
def atomic_target(path):
    """Yield a temporary path next to ``path``; rename it into place on success."""
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), prefix=".tmp-")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def atomic_write(path, text):
    with atomic_target(path) as tmp, open(tmp, "w") as fh:
        fh.write(text)


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2) + "\n")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _loss_param(text):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value in {text!r}") from None


def _training_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("training")
    g.add_argument("--base-loss", choices=sorted(LOSS_NAMES), default="bce")
    g.add_argument("--loss-param", type=_loss_param, action="append", default=[], metavar="NAME=VALUE",
                   help="loss parameter, e.g. focal_gamma=2 (repeatable)")
    g.add_argument("--rankreg", action="store_true", help="add the ranking regularizer")
    g.add_argument("--lambda", dest="lam", type=float, default=1.0)
    g.add_argument("--gamma", type=float, default=RegConfig.gamma)
    g.add_argument("--penalty", choices=["raw", "square", "cube", "exp"], default="square")
    g.add_argument("--no-normalize", action="store_true", help="penalize raw ranks instead of rank / N")
    g.add_argument("--buffer-size", type=int, default=32)
    g.add_argument("--buffer-strategy", choices=["dequeue-max", "fifo", "dequeue-min"], default="dequeue-max")
    g.add_argument("--buffer-in-base-loss", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--batch-size", type=int, default=None, help="default 32 with --rankreg, else 64")
    g.add_argument("--hidden", type=_ints, default=(32,), help="hidden layer widths, comma-separated")
    g.add_argument("--epochs", type=int, default=200)
    g.add_argument("--lr", type=float, default=0.05)
    g.add_argument("--momentum", type=float, default=0.9)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tpr", type=_floats, default=DEFAULT_BETAS, help="TPR levels, comma-separated")
    return p


def _data_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("data (synthetic unless --data is given)")
    g.add_argument("--data", help="training pool CSV")
    g.add_argument("--test-data", help="test CSV; without it --data is split 70/10/20 per seed")
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--n-neg", type=int, default=5000)
    g.add_argument("--ratio", type=float, default=100)
    g.add_argument("--separation", type=float, default=2.0)
    g.add_argument("--data-seed", type=int, default=0)
    g.add_argument("--test-n-neg", type=int, default=2000, help="per-class size of the balanced synthetic test set")
    g.add_argument("--test-seed", type=int, default=1)
    g.add_argument("--val-fraction", type=float, default=0.1)
    return p


def _experiment_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("experiment output")
    g.add_argument("--seeds", type=int, default=1, help="number of run seeds, starting at --seed")
    g.add_argument("--out", required=True, help="result JSON path")
    g.add_argument("--roc-dir", help="write one ROC table per arm (first seed) here")
    return p


def _reg_from_args(args):
    return RegConfig(lam=args.lam, gamma=args.gamma, penalty=args.penalty, normalize=not args.no_normalize)


def train_config_from_args(args):
    reg = _reg_from_args(args) if args.rankreg else None
    return TrainConfig(
        loss=LOSS_NAMES[args.base_loss],
        loss_params=dict(args.loss_param),
        reg=reg,
        batch_size=args.batch_size,
        buffer_size=args.buffer_size,
        buffer_strategy=args.buffer_strategy,
        buffer_in_base_loss=args.buffer_in_base_loss,
        hidden=tuple(args.hidden),
        epochs=args.epochs,
        learning_rate=args.lr,
        momentum=args.momentum,
        seed=args.seed,
        betas=tuple(args.tpr),
    )


def data_config_from_args(args):
    if args.data:
        cfg = {"source": "file", "path": os.path.abspath(args.data), "sha256": experiments.file_digest(args.data)}
        if args.test_data:
            cfg["test_path"] = os.path.abspath(args.test_data)
            cfg["test_sha256"] = experiments.file_digest(args.test_data)
        cfg["val_fraction"] = args.val_fraction
        return cfg
    return {
        "source": "synthetic",
        "dim": args.dim,
        "n_neg": args.n_neg,
        "ratio": args.ratio,
        "separation": args.separation,
        "seed": args.data_seed,
        "test_n_neg": args.test_n_neg,
        "test_seed": args.test_seed,
        "val_fraction": args.val_fraction,
    }


def _print_report(report, stream=None):
    stream = stream or sys.stdout
    print(f"AUC {report.auc:.4f}", file=stream)
    for beta, fpr in sorted(report.fpr_at.items(), reverse=True):
        print(f"FPR@{beta * 100:g}%TPR {fpr:.4f}", file=stream)


def cmd_gen_data(args):
    d = gen_gaussian_imbalanced(args.dim, args.n_neg, args.ratio, args.separation, args.seed)
    with atomic_target(args.out) as tmp:
        save_table(d, tmp)
    print(f"wrote {len(d)} samples ({d.n_pos} positive, {d.n_neg} negative) to {args.out}")


def cmd_train(args):
    cfg = train_config_from_args(args)
    data = load_table(args.data)
    val = None
    if args.val_data:
        train_set, val = data, load_table(args.val_data)
    elif args.val_fraction > 0:
        train_set, val = stratified_split(data, (1 - args.val_fraction, args.val_fraction), args.seed)
    else:
        train_set = data
    model, history = train(cfg, train_set, val)
    with atomic_target(args.model_out) as tmp:
        save_model(model, tmp)
    doc = {
        "config": {
            "train": cfg.to_dict(),
            "data": os.path.abspath(args.data),
            "data_sha256": experiments.file_digest(args.data),
            "val_fraction": args.val_fraction,
        },
        **history.to_dict(),
    }
    if args.history_out:
        write_json(args.history_out, doc)
    final = history.records[-1].train if history.records else None
    if final is not None:
        print("final training-set report:")
        _print_report(final)


def cmd_eval(args):
    model = load_model(args.model)
    data = load_table(args.data)
    report = evaluate(model, data, args.tpr)
    _print_report(report)
    if args.out:
        write_json(args.out, report.to_dict())
    if args.roc:
        atomic_write(args.roc, report.roc.to_table())


def _run_and_write(cfg, args):
    sink = None
    if args.roc_dir:
        os.makedirs(args.roc_dir, exist_ok=True)

        def sink(name, roc):
            safe = name.replace("+", "_plus_").replace("=", "_").replace("/", "_")
            atomic_write(os.path.join(args.roc_dir, f"{safe}.tsv"), roc.to_table())

    result = experiments.run_experiment(cfg, roc_sink=sink)
    write_json(args.out, result)
    print(experiments.format_table(result))
    return result


def _experiment_base(args, command):
    train_cfg = train_config_from_args(args)
    return {
        "command": command,
        "data": data_config_from_args(args),
        "train": train_cfg.to_dict(),
        "seed": args.seed,
        "n_seeds": args.seeds,
    }


def cmd_compare(args):
    cfg = _experiment_base(args, "compare")
    cfg["train"]["reg"] = asdict(_reg_from_args(args))
    cfg["train"]["batch_size"] = args.batch_size
    cfg["losses"] = [LOSS_NAMES[name] for name in args.losses.split(",")]
    _run_and_write(cfg, args)


def cmd_ablate(args):
    cfg = _experiment_base(args, "ablate")
    cfg["train"]["reg"] = asdict(_reg_from_args(args))
    cfg["ablation"] = args.ablation
    _run_and_write(cfg, args)


def cmd_ensemble(args):
    cfg = _experiment_base(args, "ensemble")
    cfg["k"] = args.k
    _run_and_write(cfg, args)


def cmd_rerun(args):
    with open(args.result) as fh:
        old = json.load(fh)
    if old.get("schema") != experiments.SCHEMA:
        raise RankRegError(f"{args.result}: unsupported schema {old.get('schema')!r}")
    args.roc_dir = None
    new = experiments.run_experiment(old["config"])
    new = json.loads(json.dumps(new))
    if args.out:
        write_json(args.out, new)
    print(experiments.format_table(new))
    if experiments.same_numbers(old, new):
        print("reproduced: all reported numbers identical")
        return 0
    print("MISMATCH: rerun numbers differ from the recorded result", file=sys.stderr)
    return 1


def _losses_arg(text):
    names = text.split(",")
    bad = [n for n in names if n not in LOSS_NAMES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown loss(es) {bad}; choose from {sorted(LOSS_NAMES)}")
    return text


def build_parser():
    parser = argparse.ArgumentParser(prog="rankreg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    training, data, exp = _training_flags(), _data_flags(), _experiment_flags()

    p = sub.add_parser("gen-data", help="write a synthetic imbalanced Gaussian dataset")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n-neg", type=int, default=5000)
    p.add_argument("--ratio", type=float, default=100)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[training], help="train one model on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--val-data")
    p.add_argument("--val-fraction", type=float, default=0.0)
    p.add_argument("--model-out", required=True)
    p.add_argument("--history-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a CSV dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--tpr", type=_floats, default=DEFAULT_BETAS)
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--roc", help="ROC table path (threshold, fpr, tpr)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", parents=[training, data, exp], help="base loss vs base loss + RankReg")
    p.add_argument("--losses", type=_losses_arg, default="bce", help="comma-separated base losses")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ablate", parents=[training, data, exp], help="sweep one design axis")
    p.add_argument("--ablation", choices=sorted(experiments.ABLATIONS), required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("ensemble", parents=[training, data, exp], help="logit-averaged ensemble of k models")
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("rerun", help="re-execute a result file's embedded config and compare")
    p.add_argument("result")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        status = args.func(args)
    except (RankRegError, OSError) as exc:
        print(f"rankreg: error: {exc}", file=sys.stderr)
        return 2
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
