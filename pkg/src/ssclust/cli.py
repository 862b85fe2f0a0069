"""Command-line interface.

Subcommands::

    ssclust cluster         --input data.csv [--label-column L] --out-prefix run
    ssclust sweep-penalty   --out sweep.csv
    ssclust analytic-probs  --preset fig1 --out fig1.csv
    ssclust simulate        --n 500 --out sim.csv
    ssclust hellinger-test  --input assign.csv --cluster-column c --line-column l --out test.json

Every subcommand accepts ``--config FILE`` (JSON object whose keys match the
long option names, with dashes or underscores) and ``--seed``.  Explicit
flags override the config file; ``SSCLUST_SEED`` supplies the seed when
neither does.  Exit status is 0 on success, 2 for usage/config errors and 1
for runtime failures, which are reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import analysis, metrics, sim
from .errors import DataFormatError, SSClustError
from .gaussian import CovModel
from .select import ALL_MODELS, model_search
from .ssem import UNLABELED, Dataset

NA_VALUES = ("", "NA")


class UsageError(Exception):
    pass


def fmt(v) -> str:
    return format(float(v), ".17g")


def load_dataset(path, label_column=None, ignore=()) -> Dataset:
    """Read a header-first CSV into a :class:`Dataset`.

    Every column other than ``label_column`` and ``ignore`` must be numeric.
    Label cells that are empty or ``NA`` mark unlabeled rows; the remaining
    label values become classes in order of first appearance.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for col in [label_column, *ignore]:
            if col is not None and col not in header:
                raise DataFormatError(f"{path}: no column named {col!r}")
        skip = set(ignore)
        if label_column is not None:
            skip.add(label_column)
        feat_idx = [i for i, h in enumerate(header) if h not in skip]
        if not feat_idx:
            raise DataFormatError(f"{path}: no feature columns")
        lab_idx = header.index(label_column) if label_column is not None else None

        rows, raw_labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataFormatError(
                    f"{path}: line {lineno} has {len(rec)} fields, expected {len(header)}"
                )
            vals = []
            for i in feat_idx:
                try:
                    vals.append(float(rec[i]))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: non-numeric value {rec[i]!r} at line {lineno}, column {header[i]!r}"
                    ) from None
            rows.append(vals)
            if lab_idx is not None:
                raw_labels.append(rec[lab_idx].strip())
    if not rows:
        raise DataFormatError(f"{path}: no data rows")

    classes = []
    labels = np.full(len(rows), UNLABELED, dtype=int)
    for i, v in enumerate(raw_labels):
        if v in NA_VALUES:
            continue
        if v not in classes:
            classes.append(v)
        labels[i] = classes.index(v)
    return Dataset(np.array(rows, dtype=float), labels, class_names=tuple(classes))


def _int_list(text):
    """Parse ``"2-5"``, ``"1,3,4"`` or a JSON list into a list of ints."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [v if v == "n" else float(v) for v in text]
    return [p.strip() if p.strip() == "n" else float(p) for p in str(text).split(",") if p.strip()]


def _models(text):
    if isinstance(text, (list, tuple)):
        return [CovModel.parse(m) for m in text]
    return [CovModel.parse(m.strip()) for m in str(text).split(",") if m.strip()]


def _str_list(text):
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _write_config_sidecar(out_path, config):
    _write_json(out_path + ".config.json", config)


# ---------------------------------------------------------------- commands


def cmd_cluster(cfg):
    data = load_dataset(cfg["input"], cfg.get("label_column"), _str_list(cfg.get("ignore") or []))
    G_range = _int_list(cfg["G"])
    models = _models(cfg["models"])
    if data.n_classes > min(G_range):
        raise DataFormatError(
            f"{data.n_classes} labeled classes exceed the smallest requested G={min(G_range)}"
        )
    result = model_search(
        data,
        G_range,
        models,
        m="n1",
        restarts=cfg["restarts"],
        seed=cfg["seed"],
        threads=cfg["threads"],
        m_values=[float(data.n)],
    )
    fit = result.best_fit
    prefix = cfg["out_prefix"]
    with open(prefix + "_assignments.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        G = fit.resp.shape[1]
        writer.writerow(["row", "component"] + [f"resp_{k}" for k in range(G)])
        for i, (lab, row) in enumerate(zip(fit.labels, fit.resp)):
            writer.writerow([i, int(lab)] + [fmt(v) for v in row])
    best = result.best
    _write_json(
        prefix + "_scores.json",
        {
            "config": cfg,
            "class_names": list(data.class_names),
            "n": data.n,
            "n1": data.n_unlabeled,
            "best": {**best.to_dict(), "index": result.best_index},
            "scores": [s.to_dict() for s in result.scores],
            "params": {
                "weights": fit.params.weights.tolist(),
                "means": fit.params.means.tolist(),
                "covariances": fit.params.covariances.tolist(),
            },
        },
    )
    return [prefix + "_assignments.csv", prefix + "_scores.json"]


def cmd_sweep(cfg):
    if cfg.get("full_scale"):
        cfg = {**cfg, "n_u_list": [5 * 2**k for k in range(8)], "replicates": 100, "m_grid_size": 21}
    res = sim.penalty_sweep_experiment(
        n_s=cfg["n_s"],
        n_u_list=_int_list(cfg["n_u_list"]),
        m_grid_size=cfg["m_grid_size"],
        replicates=cfg["replicates"],
        G_range=_int_list(cfg["G"]),
        models=_models(cfg["models"]),
        seed=cfg["seed"],
        restarts=cfg["restarts"],
        weights=[float(w) for w in cfg["weights"]],
        threads=cfg["threads"],
    )
    with open(cfg["out"], "w", newline="", encoding="utf-8") as fh:
        res.to_csv(fh)
    _write_config_sidecar(cfg["out"], cfg)
    return [cfg["out"], cfg["out"] + ".config.json"]


def cmd_analytic(cfg):
    preset = analysis.FIGURE_PRESETS.get(cfg.get("preset") or "", {})
    axis = cfg.get("axis") or preset.get("axis")
    if axis is None:
        raise UsageError("analytic-probs needs --preset or --axis")
    fixed = dict(preset.get("fixed", {}))
    fixed.update(cfg.get("fixed") or {})
    grid = cfg.get("grid")
    if grid is None:
        grid = {"n": [100, 200, 500, 1000, 2000, 5000, 10000, 100000, 1000000],
                "d": list(range(20, 401, 20)),
                "d0": list(range(10, 200, 10))}[axis]
    table = analysis.figure_sweep(axis, _float_list(grid), fixed, _float_list(cfg["m_list"]))
    with open(cfg["out"], "w", newline="", encoding="utf-8") as fh:
        table.to_csv(fh)
    _write_config_sidecar(cfg["out"], {**cfg, "skipped": table.skipped})
    return [cfg["out"], cfg["out"] + ".config.json"]


def cmd_simulate(cfg):
    rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], 1]))
    if cfg.get("mixture"):
        spec = sim.MixtureSpec(**cfg["mixture"])
    else:
        spec = sim.crossed_ellipses_mixture(rng, [float(w) for w in cfg["weights"]])
    x, comps = sim.sample_mixture(spec, cfg["n"], rng)
    frac = float(cfg["label_fraction"])
    labeled_comps = set(_int_list(cfg["labeled_components"])) if cfg.get("labeled_components") is not None else set(range(spec.G))
    eligible = np.flatnonzero(np.isin(comps, sorted(labeled_comps)))
    n_lab = int(round(frac * eligible.size))
    chosen = set(rng.choice(eligible, size=n_lab, replace=False).tolist()) if n_lab else set()
    with open(cfg["out"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{j + 1}" for j in range(spec.dim)] + ["component", "label"])
        for i in range(x.shape[0]):
            label = str(int(comps[i])) if i in chosen else ""
            writer.writerow([fmt(v) for v in x[i]] + [int(comps[i]), label])
    _write_config_sidecar(cfg["out"], {**cfg, "mixture": spec.to_dict()})
    return [cfg["out"], cfg["out"] + ".config.json"]


def cmd_hellinger(cfg):
    with open(cfg["input"], newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        fields = reader.fieldnames or []
    for col in (cfg["cluster_column"], cfg["line_column"]):
        if col not in fields:
            raise DataFormatError(f"{cfg['input']}: no column named {col!r}")
    assignments = [r[cfg["cluster_column"]] for r in rows]
    lines = [r[cfg["line_column"]] for r in rows]
    outcome = metrics.line_difference_test(assignments, lines, B=cfg["B"], seed=cfg["seed"])
    _write_json(cfg["out"], {"config": cfg, **outcome.to_dict()})
    return [cfg["out"]]


COMMANDS = {
    "cluster": cmd_cluster,
    "sweep-penalty": cmd_sweep,
    "analytic-probs": cmd_analytic,
    "simulate": cmd_simulate,
    "hellinger-test": cmd_hellinger,
}

# defaults applied after config-file and flag merging
DEFAULTS = {
    "cluster": {"G": "1-9", "models": "EII,VII,EEE,VVV", "restarts": 5, "ignore": [], "label_column": None},
    "sweep-penalty": {
        "n_s": 100,
        "n_u_list": [5, 10, 20, 40, 80, 160],
        "m_grid_size": 11,
        "replicates": 50,
        "G": "2-5",
        "models": [m.value for m in ALL_MODELS],
        "restarts": 5,
        "weights": [1 / 3, 1 / 3, 1 / 3],
        "full_scale": False,
    },
    "analytic-probs": {"preset": None, "axis": None, "grid": None, "fixed": None,
                       "m_list": [math.exp(2), 10.0, 50.0, 100.0, 500.0]},
    "simulate": {"n": 500, "weights": [1 / 3, 1 / 3, 1 / 3], "label_fraction": 0.0,
                 "labeled_components": None, "mixture": None},
    "hellinger-test": {"B": 999},
}
REQUIRED = {
    "cluster": ("input", "out_prefix"),
    "sweep-penalty": ("out",),
    "analytic-probs": ("out",),
    "simulate": ("out",),
    "hellinger-test": ("input", "cluster_column", "line_column", "out"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssclust", description="Semi-supervised model-based clustering.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        # default=None everywhere so config-file values survive unless a flag is given
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("cluster", help="select and fit a semi-supervised mixture by BIC*")
    common(p)
    p.add_argument("--input")
    p.add_argument("--label-column")
    p.add_argument("--ignore", help="comma-separated columns to drop")
    p.add_argument("--G", dest="G", help="component counts, e.g. 1-5 or 2,3,4")
    p.add_argument("--models", help="comma-separated subset of EII,VII,EEE,VVV")
    p.add_argument("--restarts", type=int)
    p.add_argument("--out-prefix")

    p = sub.add_parser("sweep-penalty", help="ARI across penalty arguments on simulated data")
    common(p)
    p.add_argument("--n-s", type=int)
    p.add_argument("--n-u-list")
    p.add_argument("--m-grid-size", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--G", dest="G")
    p.add_argument("--models")
    p.add_argument("--restarts", type=int)
    p.add_argument("--full-scale", action="store_const", const=True, default=None)
    p.add_argument("--out")

    p = sub.add_parser("analytic-probs", help="case 2a/2b misselection probability tables")
    common(p)
    p.add_argument("--preset", choices=sorted(analysis.FIGURE_PRESETS))
    p.add_argument("--axis", choices=["n", "d", "d0"])
    p.add_argument("--grid", help="comma-separated axis values")
    p.add_argument("--m-list", help="comma-separated penalty arguments ('n' allowed)")
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="sample the three-component planar mixture")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--label-fraction", type=float)
    p.add_argument("--labeled-components")
    p.add_argument("--out")

    p = sub.add_parser("hellinger-test", help="permutation test for two lines' cluster memberships")
    common(p)
    p.add_argument("--input")
    p.add_argument("--cluster-column")
    p.add_argument("--line-column")
    p.add_argument("--B", dest="B", type=int)
    p.add_argument("--out")
    return parser


def resolve_config(args) -> dict:
    command = args.command
    cfg = dict(DEFAULTS[command])
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        allowed = (set(vars(args)) | set(DEFAULTS[command])) - {"command", "config"}
        for key, value in file_cfg.items():
            key = key.replace("-", "_")
            if key not in allowed:
                raise UsageError(f"unknown config key {key!r} for {command}")
            cfg[key] = value
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        cfg[key] = value
    if cfg.get("seed") is None:
        env = os.environ.get("SSCLUST_SEED")
        try:
            cfg["seed"] = int(env) if env is not None else 0
        except ValueError:
            raise UsageError(f"SSCLUST_SEED must be an integer, got {env!r}") from None
    cfg["threads"] = int(cfg.get("threads") or 1)
    missing = [k for k in REQUIRED[command] if not cfg.get(k)]
    if missing:
        raise UsageError(f"{command}: missing required option(s): {', '.join('--' + k.replace('_', '-') for k in missing)}")
    cfg["command"] = command
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on unknown flags
    try:
        cfg = resolve_config(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ssclust: error: {exc}", file=sys.stderr)
        return 2
    try:
        outputs = COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"ssclust: error: {exc}", file=sys.stderr)
        return 2
    except (SSClustError, ValueError, KeyError, TypeError, OSError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc), "command": args.command}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
