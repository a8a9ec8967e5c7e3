"""Seeded comparison, ablation and ensemble experiments.

Every experiment is a pure function of a plain-dict config, and the result
document embeds that config, so ``run_experiment(result["config"])``
reproduces the reported numbers exactly.

Data protocol
-------------
``synthetic`` data draws a fixed imbalanced training pool and a separate
class-balanced test set (ratio 1:1, its own seed).  Each run seed then makes
a stratified train/validation split of the pool.  ``file`` data loads a CSV
pool and either a CSV test set or, without one, a 70/10/20 stratified
train/validation/test split per seed.
"""
import copy
import hashlib
import time
from dataclasses import replace

import numpy as np

from .data import flip_labels, gen_gaussian_imbalanced, load_table, stratified_split
from .exceptions import ConfigurationError
from .metrics import ensemble_scores, metrics_report
from .mlp import forward
from .ranking import RegConfig, rankreg_value
from .trainer import TrainConfig, evaluate, train, train_member

SCHEMA = "rankreg-result/1"

ABLATIONS = {
    "penalty": ("penalty", ["raw", "square", "cube", "exp"]),
    "buffer-strategy": ("buffer_strategy", ["dequeue-max", "fifo", "dequeue-min"]),
    "buffer-size": ("buffer_size", [0, 8, 16, 32, 64]),
    "label-noise": ("eta", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]),
    "imbalance": ("ratio", [100, 200]),
}

DEFAULT_DATA = {
    "source": "synthetic",
    "dim": 2,
    "n_neg": 5000,
    "ratio": 100,
    "separation": 2.0,
    "seed": 0,
    "test_n_neg": 2000,
    "test_seed": 1,
    "val_fraction": 0.1,
}


def file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _load_checked(path, digest):
    if digest is not None and file_digest(path) != digest:
        raise ConfigurationError(f"{path} changed since the experiment was recorded")
    return load_table(path)


def make_data(data_cfg, seed, ratio=None, eta=0.0):
    """Return ``(train, val, test)`` for one run seed."""
    cfg = {**DEFAULT_DATA, **data_cfg}
    val_fraction = cfg["val_fraction"]
    if cfg["source"] == "synthetic":
        pool = gen_gaussian_imbalanced(
            cfg["dim"], cfg["n_neg"], ratio or cfg["ratio"], cfg["separation"], cfg["seed"]
        )
        test = gen_gaussian_imbalanced(cfg["dim"], cfg["test_n_neg"], 1, cfg["separation"], cfg["test_seed"])
        if val_fraction > 0:
            train_set, val = stratified_split(pool, (1 - val_fraction, val_fraction), seed)
        else:
            train_set, val = pool, None
    elif cfg["source"] == "file":
        if ratio is not None:
            raise ConfigurationError("the imbalance sweep needs synthetic data")
        pool = _load_checked(cfg["path"], cfg.get("sha256"))
        if cfg.get("test_path"):
            test = _load_checked(cfg["test_path"], cfg.get("test_sha256"))
            if val_fraction > 0:
                train_set, val = stratified_split(pool, (1 - val_fraction, val_fraction), seed)
            else:
                train_set, val = pool, None
        else:
            train_set, val, test = stratified_split(pool, (0.7, 0.1, 0.2), seed)
    else:
        raise ConfigurationError(f"unknown data source {cfg['source']!r}")
    if eta:
        train_set = flip_labels(train_set, eta, seed)
    return train_set, val, test


def _summary(reports):
    aucs = np.array([r.auc for r in reports])
    betas = sorted(reports[0].fpr_at)
    fprs = {b: np.array([r.fpr_at[b] for r in reports]) for b in betas}
    return {
        "median": {"auc": float(np.median(aucs)), "fpr_at": {repr(b): float(np.median(v)) for b, v in fprs.items()}},
        "mean": {"auc": float(np.mean(aucs)), "fpr_at": {repr(b): float(np.mean(v)) for b, v in fprs.items()}},
    }


def run_arm(name, train_cfg, data_cfg, seeds, ratio=None, eta=0.0, roc_sink=None):
    """Train and test one configuration over several seeds."""
    reports = []
    start = time.perf_counter()
    for i, seed in enumerate(seeds):
        tr, va, te = make_data(data_cfg, seed, ratio=ratio, eta=eta)
        model, _ = train(replace(train_cfg, seed=seed), tr, va)
        report = evaluate(model, te, train_cfg.betas)
        if roc_sink is not None and i == 0:
            roc_sink(name, report.roc)
        reports.append(report)
    return {
        "name": name,
        "seeds": list(seeds),
        "reports": [r.to_dict() for r in reports],
        **_summary(reports),
        "wall_clock_s": time.perf_counter() - start,
    }


def _train_cfg(cfg):
    return TrainConfig.from_dict(cfg["train"])


def _seeds(cfg):
    return [cfg.get("seed", 0) + i for i in range(cfg.get("n_seeds", 1))]


def run_compare(cfg, roc_sink=None):
    base = _train_cfg(cfg)
    reg = base.reg or RegConfig()
    arms, deltas = [], []
    for loss in cfg["losses"]:
        loss_cfg = replace(base, loss=loss, loss_params=cfg.get("loss_params", {}).get(loss, {}))
        baseline = run_arm(loss, replace(loss_cfg, reg=None), cfg["data"], _seeds(cfg), roc_sink=roc_sink)
        ranked = run_arm(f"{loss}+RankReg", replace(loss_cfg, reg=reg), cfg["data"], _seeds(cfg), roc_sink=roc_sink)
        arms += [baseline, ranked]
        b, r = baseline["median"], ranked["median"]
        deltas.append(
            {"fpr_at": {k: b["fpr_at"][k] - r["fpr_at"][k] for k in b["fpr_at"]}, "auc": r["auc"] - b["auc"]}
        )
    avg = {
        "fpr_at": {k: float(np.mean([d["fpr_at"][k] for d in deltas])) for k in deltas[0]["fpr_at"]},
        "auc": float(np.mean([d["auc"] for d in deltas])),
    }
    return {"arms": arms, "avg_delta": avg}


def toy_gap(penalty):
    """Unnormalized regularizer sums for positives at ranks {1,4} minus {2,3} of five."""
    config = RegConfig(penalty=penalty, normalize=False)
    scores = np.arange(5.0, 0.0, -1.0)
    a = rankreg_value(scores, [1, 0, 0, 1, 0], config) * 2
    b = rankreg_value(scores, [0, 1, 1, 0, 0], config) * 2
    return a - b


def run_ablate(cfg, roc_sink=None):
    axis = cfg["ablation"]
    if axis not in ABLATIONS:
        raise ConfigurationError(f"unknown ablation {axis!r}; expected one of {sorted(ABLATIONS)}")
    field_name, values = ABLATIONS[axis]
    base = _train_cfg(cfg)
    reg = base.reg or RegConfig()
    base = replace(base, reg=reg)
    arms = []
    for value in values:
        kwargs = {}
        if field_name == "penalty":
            arm_cfg = replace(base, reg=replace(reg, penalty=value))
        elif field_name in ("eta", "ratio"):
            arm_cfg = base
            kwargs[field_name] = value
        else:
            arm_cfg = replace(base, **{field_name: value})
        arm = run_arm(f"{field_name}={value}", arm_cfg, cfg["data"], _seeds(cfg), roc_sink=roc_sink, **kwargs)
        arm["value"] = value
        if field_name == "penalty":
            arm["toy_gap"] = toy_gap(value)
        arms.append(arm)
    return {"arms": arms}


def run_ensemble(cfg, roc_sink=None):
    train_cfg = _train_cfg(cfg)
    seed = cfg.get("seed", 0)
    k = cfg.get("k", 10)
    data = {**DEFAULT_DATA, **cfg["data"]}
    start = time.perf_counter()
    pool, _, test = make_data({**data, "val_fraction": 0.0}, seed)
    fraction = 1 - data["val_fraction"]
    member_scores, members = [], []
    for m in range(k):
        model, _ = train_member(train_cfg, pool, m, seed, fraction)
        scores, _ = forward(model, test.X)
        member_scores.append(scores)
        members.append(metrics_report(scores, test.y, train_cfg.betas).to_dict())
    report = metrics_report(ensemble_scores(member_scores), test.y, train_cfg.betas)
    if roc_sink is not None:
        roc_sink("ensemble", report.roc)
    return {
        "members": members,
        "ensemble": report.to_dict(),
        "wall_clock_s": time.perf_counter() - start,
    }


RUNNERS = {"compare": run_compare, "ablate": run_ablate, "ensemble": run_ensemble}


def run_experiment(cfg, roc_sink=None):
    cfg = copy.deepcopy(cfg)
    if cfg.get("command") not in RUNNERS:
        raise ConfigurationError(f"unknown experiment command {cfg.get('command')!r}")
    result = RUNNERS[cfg["command"]](cfg, roc_sink=roc_sink)
    return {"schema": SCHEMA, "config": cfg, **result}


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k != "wall_clock_s"}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def same_numbers(a, b):
    """True when two result documents agree on everything except timings."""
    return _strip_timing(a) == _strip_timing(b)


def format_table(result):
    """Plain-text table of the per-arm medians (or members) of a result document."""
    cfg = result["config"]
    if cfg["command"] == "ensemble":
        rows = [(f"member {i}", r["fpr_at"], r["auc"]) for i, r in enumerate(result["members"])]
        e = result["ensemble"]
        rows.append(("ensemble", e["fpr_at"], e["auc"]))
    else:
        rows = [(a["name"], a["median"]["fpr_at"], a["median"]["auc"]) for a in result["arms"]]
        if "avg_delta" in result:
            rows.append(("Avg. delta", result["avg_delta"]["fpr_at"], result["avg_delta"]["auc"]))
    betas = sorted(rows[0][1], key=float, reverse=True)
    width = max(len(r[0]) for r in rows) + 2
    head = "".join(f"FPR@{float(b) * 100:g}%TPR".rjust(14) for b in betas) + "AUC".rjust(9)
    lines = ["arm".ljust(width) + head]
    for name, fpr, auc_value in rows:
        lines.append(name.ljust(width) + "".join(f"{fpr[b] * 100:14.1f}" for b in betas) + f"{auc_value * 100:9.1f}")
    if cfg["command"] == "ablate" and cfg["ablation"] == "penalty":
        lines.append("toy gap, ranks {1,4} minus {2,3}: " + ", ".join(f"{a['value']}={a['toy_gap']:g}" for a in result["arms"]))
    return "\n".join(lines)
