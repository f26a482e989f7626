"""Command-line entry point.

Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from fracdnn import modelio
from fracdnn.adjoint import flat_problem, gradient_check
from fracdnn.config import (ConfigError, dump_config, hyper_from, resolve,
                            train_config_from)
from fracdnn.data import (DataFormatError, batch_normalize, generate_cls,
                          generate_perfume_standin, load_csv, one_hot, train_test_split)
from fracdnn.errors import ConvergenceError, FracDNNError, LineSearchError, NonFiniteError, ShapeError
from fracdnn.fractional import TimeGrid, mittag_leffler, solve_caputo_ivp
from fracdnn.network import MODES, forward_propagate, xavier_init
from fracdnn.optimizer import design_blocks, flatten
from fracdnn.trainer import (confusion_counts, median_layer_ratio, test, train,
                             vanishing_gradient_experiment)

log = logging.getLogger("fracdnn")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
REFINEMENT_TAUS = (0.02, 0.01, 0.005, 0.0025)


class UsageError(FracDNNError):
    pass


# ---------------------------------------------------------------- data

def _csv(cfg, key):
    path = Path(cfg[key])
    if not cfg[key]:
        raise UsageError(f"data = csv requires {key}")
    if not path.is_file():
        raise UsageError(f"dataset file not found: {path}")
    return load_csv(path, cfg["feature_columns"] or None, cfg["label_column"] or None,
                    cfg["delimiter"])


def load_datasets(cfg):
    """Return ``(train, test)``; ``test`` may be None."""
    kind = cfg["data"]
    if kind == "cls":
        return (generate_cls(cfg["n_train"], cfg["data_seed"]),
                generate_cls(cfg["n_test"], cfg["data_seed"] + 1))
    if kind == "standin":
        full = generate_perfume_standin(cfg["standin_per_class"], cfg["data_seed"])
        # at most 70% of the stand-in goes to training
        n_train = min(cfg["n_train"], full.n_samples * 7 // 10)
        return train_test_split(full, n_train, cfg["data_seed"])
    if kind == "csv":
        tr = _csv(cfg, "train_csv")
        te = None
        if cfg["test_csv"]:
            te = _csv(cfg, "test_csv")
            if te.class_names != tr.class_names:
                # align the test labels with the training class order
                te = load_csv(cfg["test_csv"], cfg["feature_columns"] or None,
                              cfg["label_column"] or None, cfg["delimiter"], tr.class_names)
        return tr, te
    raise UsageError(f"unknown data source {kind!r} (expected cls, standin or csv)")


def _out_dir(cfg) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_config(cfg))
    return out


def _load_model(cfg):
    path = Path(cfg["model"])
    if not cfg["model"]:
        raise UsageError("no model path given (set model = ... or --model)")
    if not path.is_file():
        raise UsageError(f"model file not found: {path}")
    try:
        return modelio.load_model(path)
    except modelio.ModelFormatError as exc:
        raise UsageError(f"cannot parse model {path}: {exc}") from None


def write_trajectory(path, model, dataset):
    Y = forward_propagate(model.params, batch_normalize(dataset.Y), model.hyper)
    labels = dataset.labels
    n_f = dataset.n_features
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["layer_index", "sample_index"]
                   + [f"feature_{i + 1}" for i in range(n_f)] + ["class_label"])
        for j, Yj in enumerate(Y):
            for s in range(Yj.shape[1]):
                w.writerow([j, s] + ["%.17g" % v for v in Yj[:, s]] + [int(labels[s])])
    return Y.shape[0] * Y.shape[2]


# ---------------------------------------------------------------- commands

def cmd_train(cfg) -> int:
    tr, te = load_datasets(cfg)
    tcfg = train_config_from(cfg)
    out = _out_dir(cfg)
    t0 = time.perf_counter()
    with (out / "trace.jsonl").open("w") as fh:
        def sink(i, trace, alpha):
            trace.to_jsonl(fh, outer=i + 1)
        model = train(tr, tcfg, on_iteration=sink)
    wall = time.perf_counter() - t0
    modelio.save_model(model, out / "model.txt")
    metrics = {"alpha_train": model.summary["alpha_train"],
               "alpha_train_full": model.summary["alpha_train_full"],
               "wall_time_s": wall}
    if te is not None:
        metrics["alpha_test"] = test(model, te)[1]
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    if cfg["write_trajectories"]:
        write_trajectory(out / "trajectory_train.csv", model, tr)
    print(f"alpha_train (last mini-batch) = {metrics['alpha_train']:.2f}%")
    print(f"alpha_train (full set)        = {metrics['alpha_train_full']:.2f}%")
    if "alpha_test" in metrics:
        print(f"alpha_test                    = {metrics['alpha_test']:.2f}%")
    print(f"model written to {out / 'model.txt'}")
    return EXIT_OK


def cmd_test(cfg) -> int:
    model = _load_model(cfg)
    tr, te = load_datasets(cfg)
    data = te if te is not None else tr
    try:
        C_test, alpha = test(model, data)
    except ShapeError as exc:
        raise UsageError(f"model/dataset mismatch: {exc}") from None
    conf = confusion_counts(C_test, data.C)
    out = _out_dir(cfg)
    (out / "metrics_test.json").write_text(json.dumps({"alpha_test": alpha}, indent=2) + "\n")
    np.savetxt(out / "confusion.csv", conf, fmt="%d", delimiter=",")
    print(f"alpha_test = {alpha:.2f}%  ({int(np.trace(conf))}/{data.n_samples} correct)")
    print("confusion counts (rows: true class, columns: predicted):")
    for row in conf:
        print("  " + " ".join(f"{v:5d}" for v in row))
    return EXIT_OK


def l1_errors(gamma, lam, u0, tau, T, ml_tol):
    grid = TimeGrid(tau, int(round(T / tau)))
    t = grid.t
    u = solve_caputo_ivp(gamma, lambda v: lam * v, u0, grid)
    ref = np.array([u0 * mittag_leffler(gamma, lam * tk ** gamma, ml_tol) for tk in t])
    return t, u, ref


def cmd_validate_l1(cfg) -> int:
    g, lam, u0, tau, T = cfg["gamma"], cfg["lambda"], cfg["u0"], cfg["tau"], cfg["T"]
    out = _out_dir(cfg)
    t, u, ref = l1_errors(g, lam, u0, tau, T, cfg["ml_tol"])
    err = np.abs(u - ref)
    with (out / "l1_solution.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "numeric", "reference", "error"])
        for row in zip(t, u, ref, err):
            w.writerow(["%.17g" % v for v in row])
    print(f"gamma={g} lambda={lam} u0={u0} tau={tau} T={T}: max error {err.max():.6e}")
    prev = None
    print("refinement:")
    for tr_tau in REFINEMENT_TAUS:
        _, uu, rr = l1_errors(g, lam, u0, tr_tau, T, cfg["ml_tol"])
        e = float(np.max(np.abs(uu - rr)))
        ratio = "" if prev is None or e == 0 else f"  ratio {prev / e:.3f}"
        print(f"  tau={tr_tau:<8g} max error {e:.6e}{ratio}")
        prev = e
    return EXIT_OK if err.max() <= cfg["l1_threshold"] else EXIT_CHECK


def cmd_gradcheck(cfg) -> int:
    hyper = hyper_from(cfg)
    n_f, n_c, N, n = cfg["n_features"], cfg["n_classes"], cfg["n_layers"], cfg["n_samples"]
    rng = np.random.default_rng(cfg["seed"])
    params = xavier_init(cfg["seed"], n_f, n_c, N)
    params.b[:] = 0.1 * rng.standard_normal(N)
    Y0 = rng.standard_normal((n_f, n))
    C = one_hot(rng.integers(0, n_c, n), n_c)
    f, g = flat_problem(Y0, C, hyper, n_c, cfg["backward"])
    x = flatten(params)
    blocks = design_blocks(n_f, n_c, N)
    gval = g(x)
    if cfg["inject_fault"] != "none":
        if cfg["inject_fault"] not in blocks:
            raise UsageError(f"inject_fault must be none, W, K or b, got {cfg['inject_fault']!r}")
        gval[blocks[cfg["inject_fault"]].start] *= 2.0
    res = gradient_check(f, g, x, blocks, n_directions=cfg["n_directions"],
                         seed=cfg["seed"], gradient_value=gval)
    out = _out_dir(cfg)
    with (out / "gradcheck.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "h", "zeroth_order_error", "first_order_error"])
        for r in res.values():
            for h, e0, e1 in zip(r.steps, r.zeroth, r.first):
                w.writerow([r.name, "%g" % h, "%.17g" % e0, "%.17g" % e1])
    with (out / "slopes.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "slope_zeroth", "slope_first", "passed"])
        for r in res.values():
            w.writerow([r.name, "%.6f" % r.slope_zeroth, "%.6f" % r.slope_first, int(r.passed)])
    for r in res.values():
        print(f"{r.name}: slopes {r.slope_zeroth:.3f} / {r.slope_first:.3f}  "
              f"{'ok' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in res.values()) else EXIT_CHECK


def cmd_vg_experiment(cfg) -> int:
    modes = cfg["modes"]
    if not modes:
        raise UsageError("no modes given")
    bad = [m for m in modes if m not in MODES]
    if bad:
        raise UsageError(f"unknown mode(s) {bad}; expected a subset of {list(MODES)}")
    cfg = dict(cfg)
    if cfg["data"] == "cls":
        cfg["data"] = "standin"
    tr, _ = load_datasets(cfg)
    tcfg = train_config_from(cfg)
    traces = vanishing_gradient_experiment(tr, cfg["n_layers"], tuple(modes), tcfg)
    out = _out_dir(cfg)
    length = max(len(t.records) for t in traces.values())
    with (out / "vg.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        head = ["iteration"]
        for m in modes:
            head += [f"{m}_first", f"{m}_last", f"{m}_ratio"]
        w.writerow(head)
        for it in range(length):
            row = [it]
            for m in modes:
                recs = traces[m].records
                if it < len(recs):
                    a, b = recs[it].first_layer_norm, recs[it].last_layer_norm
                    row += ["%.17g" % a, "%.17g" % b, "%.17g" % (a / b) if b else "nan"]
                else:
                    row += ["", "", ""]
            w.writerow(row)
    for m in modes:
        print(f"{m:>10}: median first/last gradient norm ratio {median_layer_ratio(traces[m]):.4g}")
    return EXIT_OK


def cmd_trajectory(cfg) -> int:
    model = _load_model(cfg)
    tr, te = load_datasets(cfg)
    data = te if te is not None else tr
    if data.n_features != model.params.n_features:
        raise UsageError(f"model expects {model.params.n_features} features, "
                         f"data has {data.n_features}")
    out = _out_dir(cfg)
    rows = write_trajectory(out / "trajectory.csv", model, data)
    print(f"wrote {rows} rows to {out / 'trajectory.csv'}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "test": cmd_test,
    "validate-l1": cmd_validate_l1,
    "gradcheck": cmd_gradcheck,
    "vg-experiment": cmd_vg_experiment,
    "trajectory": cmd_trajectory,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir")
    common.add_argument("--mode", choices=MODES)
    common.add_argument("--backward", choices=("paper", "exact"))
    common.add_argument("--model", help="model file (test, trajectory)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; may be repeated")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="fracdnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return EXIT_USAGE
        overrides[key.strip()] = value
    for key, attr in (("seed", "seed"), ("out_dir", "out_dir"), ("mode", "mode"),
                      ("backward", "backward"), ("model", "model")):
        if getattr(args, attr) is not None:
            overrides[key] = getattr(args, attr)
    try:
        cfg = resolve(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except (ConfigError, UsageError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonFiniteError, ConvergenceError, LineSearchError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
