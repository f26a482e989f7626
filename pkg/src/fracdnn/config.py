"""Flat ``key = value`` run configuration with typed parsing.

Unknown keys are rejected so a typo never silently falls back to a default.
"""

from __future__ import annotations

from pathlib import Path

from fracdnn.errors import FracDNNError
from fracdnn.network import HyperParams
from fracdnn.optimizer import OptConfig
from fracdnn.trainer import TrainConfig


class ConfigError(FracDNNError, ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _list(s: str) -> list:
    return [p.strip() for p in s.split(",") if p.strip()]


# key -> (parser, default)
KEYS = {
    # network
    "gamma": (float, 0.5),
    "tau": (float, 0.2),
    "n_layers": (int, 5),
    "mode": (str, "fractional"),
    "xi_W": (float, 0.0),
    "xi_K": (float, 0.0),
    "xi_b": (float, 0.0),
    "sigma_index": (str, "Y_j"),
    # training
    "m1": (int, 6),
    "m2": (int, 30),
    "batch_fraction": (float, 0.5),
    "seed": (int, 0),
    "backward": (str, "exact"),
    "optimizer": (str, "bfgs"),
    "grad_tol": (float, 1e-6),
    "c1": (float, 1e-4),
    "rho": (float, 0.5),
    "max_backtracks": (int, 30),
    "initial_step": (float, 1.0),
    # data
    "data": (str, "cls"),            # cls | standin | csv
    "data_seed": (int, 1234),
    "n_train": (int, 2000),
    "n_test": (int, 2000),
    "standin_per_class": (int, 55),
    "train_csv": (str, ""),
    "test_csv": (str, ""),
    "feature_columns": (_list, []),
    "label_column": (str, ""),
    "delimiter": (str, ","),
    # artifacts
    "out_dir": (str, "runs/latest"),
    "model": (str, ""),
    "write_trajectories": (_bool, False),
    # validate-l1
    "lambda": (float, -4.0),
    "u0": (float, 0.5),
    "T": (float, 1.0),
    "ml_tol": (float, 1e-12),
    "l1_threshold": (float, 2e-2),
    # gradcheck
    "n_samples": (int, 10),
    "n_features": (int, 2),
    "n_classes": (int, 2),
    "n_directions": (int, 1),
    "inject_fault": (str, "none"),   # none | W | K | b
    # vg-experiment
    "modes": (_list, ["plain", "residual", "fractional"]),
}


def parse_value(key: str, raw: str):
    if key not in KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    parser, _ = KEYS[key]
    try:
        return parser(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from None


def defaults() -> dict:
    return {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in KEYS.items()}


def read_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}, line {lineno}: expected key = value")
        key = key.strip()
        try:
            out[key] = parse_value(key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{path}, line {lineno}: {exc}") from None
    return out


def resolve(path=None, overrides=None) -> dict:
    cfg = defaults()
    if path:
        cfg.update(read_config(path))
    for k, v in (overrides or {}).items():
        if k not in KEYS:
            raise ConfigError(f"unknown config key {k!r}")
        cfg[k] = parse_value(k, v) if isinstance(v, str) else v
    return cfg


def format_value(v) -> str:
    if isinstance(v, list):
        return ",".join(map(str, v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: dict) -> str:
    return "".join(f"{k} = {format_value(cfg[k])}\n" for k in KEYS)


def hyper_from(cfg: dict) -> HyperParams:
    try:
        return HyperParams(gamma=cfg["gamma"], tau=cfg["tau"], n_layers=cfg["n_layers"],
                           mode=cfg["mode"], xi_W=cfg["xi_W"], xi_K=cfg["xi_K"],
                           xi_b=cfg["xi_b"], sigma_index=cfg["sigma_index"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def train_config_from(cfg: dict) -> TrainConfig:
    try:
        opt = OptConfig(max_iters=cfg["m2"], grad_tol=cfg["grad_tol"], c1=cfg["c1"],
                        rho=cfg["rho"], max_backtracks=cfg["max_backtracks"],
                        initial_step=cfg["initial_step"])
        return TrainConfig(hyper=hyper_from(cfg), m1=cfg["m1"], m2=cfg["m2"],
                           batch_fraction=cfg["batch_fraction"], seed=cfg["seed"],
                           backward=cfg["backward"], optimizer=cfg["optimizer"], opt=opt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
