"""Plain-text model files.

Layout (one item per line)::

    fracdnn-model 1
    n_f <int>
    n_c <int>
    n_layers <int>
    <hyperparameter name> <value>       # gamma, tau, mode, xi_W, xi_K, xi_b, sigma_index
    classes <json list or null>
    summary <json object>
    W
    <n_c rows of n_f numbers>
    K <j>                               # repeated for j = 0..N-1
    <n_f rows of n_f numbers>
    b
    <N numbers>
    end

Numbers are written with 17 significant digits, which round-trips every
double exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from fracdnn.errors import FracDNNError
from fracdnn.network import HyperParams, NetworkParams
from fracdnn.trainer import TrainedModel

MAGIC = "fracdnn-model"
VERSION = 1
_FLOAT_HYPER = ("gamma", "tau", "xi_W", "xi_K", "xi_b")


class ModelFormatError(FracDNNError, ValueError):
    pass


def _fmt(v) -> str:
    return "%.17g" % v


def dumps(model: TrainedModel) -> str:
    p, h = model.params, model.hyper
    lines = [f"{MAGIC} {VERSION}", f"n_f {p.n_features}", f"n_c {p.n_classes}",
             f"n_layers {p.n_layers}"]
    lines += [f"{k} {_fmt(getattr(h, k))}" for k in _FLOAT_HYPER]
    lines += [f"mode {h.mode}", f"sigma_index {h.sigma_index}",
              f"classes {json.dumps(model.class_names)}",
              f"summary {json.dumps(model.summary, sort_keys=True)}", "W"]
    lines += [" ".join(map(_fmt, row)) for row in p.W]
    for j, K in enumerate(p.K):
        lines.append(f"K {j}")
        lines += [" ".join(map(_fmt, row)) for row in K]
    lines += ["b", " ".join(map(_fmt, p.b)), "end"]
    return "\n".join(lines) + "\n"


def loads(text: str) -> TrainedModel:
    lines = text.splitlines()
    pos = 0

    def take(what):
        nonlocal pos
        if pos >= len(lines):
            raise ModelFormatError(f"unexpected end of file, expected {what}")
        pos += 1
        return lines[pos - 1]

    def keyed(key):
        line = take(key)
        name, _, value = line.partition(" ")
        if name != key:
            raise ModelFormatError(f"line {pos}: expected {key!r}, got {line[:40]!r}")
        return value

    def numbers(count):
        line = take(f"{count} numbers")
        try:
            row = [float(v) for v in line.split()]
        except ValueError as exc:
            raise ModelFormatError(f"line {pos}: {exc}") from None
        if len(row) != count:
            raise ModelFormatError(f"line {pos}: expected {count} numbers, got {len(row)}")
        return row

    try:
        head = take("header").split()
        if len(head) != 2 or head[0] != MAGIC:
            raise ModelFormatError(f"line 1: not a {MAGIC} file")
        if int(head[1]) != VERSION:
            raise ModelFormatError(f"line 1: unsupported version {head[1]}")
        n_f, n_c, N = (int(keyed(k)) for k in ("n_f", "n_c", "n_layers"))
        hyper = {k: float(keyed(k)) for k in _FLOAT_HYPER}
        hyper["mode"] = keyed("mode")
        hyper["sigma_index"] = keyed("sigma_index")
        classes = json.loads(keyed("classes"))
        summary = json.loads(keyed("summary"))
        keyed("W")
        W = np.array([numbers(n_f) for _ in range(n_c)])
        K = np.empty((N, n_f, n_f))
        for j in range(N):
            if keyed("K") != str(j):
                raise ModelFormatError(f"line {pos}: expected operator index {j}")
            K[j] = [numbers(n_f) for _ in range(n_f)]
        keyed("b")
        b = np.array(numbers(N))
        if take("end") != "end":
            raise ModelFormatError(f"line {pos}: expected 'end'")
        hp = HyperParams(n_layers=N, **hyper)
    except ModelFormatError:
        raise
    except (ValueError, TypeError) as exc:
        raise ModelFormatError(f"line {pos}: {exc}") from None
    return TrainedModel(NetworkParams(W, K, b), hp, classes, summary)


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(dumps(model))


def load_model(path) -> TrainedModel:
    return loads(Path(path).read_text())
