"""JSON model files with every float written as 17-significant-digit text.

17 digits are enough to round-trip any IEEE double, so a loaded model
reproduces the saved model's predictions bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import Bin, TrainConfig
from .numerics import NeuralClassifier
from .tree import Internal, Leaf, Node, NrtModel, iter_nodes

SCHEMA_VERSION = 1
FORMAT = "nrtree-model"


class ModelFileError(ValueError):
    pass


def _f(v: float) -> str:
    return format(float(v), ".17g")


def _fs(values) -> list[str]:
    return [_f(v) for v in np.asarray(values, dtype=float).ravel()]


def _bin_record(b: Bin) -> dict:
    return {"low": _f(b.low), "high": _f(b.high), "representative": _f(b.representative),
            "count": b.count}


def _node_record(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"id": node.id, "kind": "leaf", "bin": _bin_record(node.bin)}
    clf = node.classifier
    return {
        "id": node.id,
        "kind": "internal",
        "threshold": _f(node.threshold),
        "classifier": {
            "kind": clf.kind,
            "layer_dims": clf.layer_dims,
            "weights": [_fs(w) for w in clf.weights],
            "biases": [_fs(b) for b in clf.biases],
        },
        "left": node.left.id,
        "right": node.right.id,
        "bin": _bin_record(node.bin),
    }


def model_to_dict(model: NrtModel) -> dict:
    return {
        "format": FORMAT,
        "schema_version": SCHEMA_VERSION,
        "config": model.config.to_dict(),
        "dim": model.dim,
        "feature_names": model.feature_names,
        "response_name": model.response_name,
        "x_mean": _fs(model.x_mean),
        "x_scale": _fs(model.x_scale),
        "root": model.root.id,
        "nodes": [_node_record(n) for n in iter_nodes(model.root)],
        "training_log": model.training_log,
    }


def _arr(values, shape=None) -> np.ndarray:
    a = np.array([float(v) for v in values], dtype=float)
    return a.reshape(shape) if shape is not None else a


def _bin(rec: dict) -> Bin:
    return Bin(float(rec["low"]), float(rec["high"]), float(rec["representative"]),
               int(rec["count"]))


def model_from_dict(d: dict) -> NrtModel:
    if d.get("format") != FORMAT:
        raise ModelFileError("not an nrtree model file")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ModelFileError(f"unsupported schema version {d.get('schema_version')}")
    records = {int(r["id"]): r for r in d["nodes"]}

    def build(node_id: int) -> Node:
        r = records[node_id]
        if r["kind"] == "leaf":
            return Leaf(node_id, _bin(r["bin"]))
        c = r["classifier"]
        dims = c["layer_dims"]
        weights = [_arr(w, (a, b)) for w, a, b in zip(c["weights"], dims[:-1], dims[1:])]
        biases = [_arr(b) for b in c["biases"]]
        clf = NeuralClassifier(weights, biases, c["kind"])
        return Internal(node_id, float(r["threshold"]), clf, build(int(r["left"])),
                        build(int(r["right"])), _bin(r["bin"]))

    try:
        root = build(int(d["root"]))
    except KeyError as exc:
        raise ModelFileError(f"model file is missing {exc}") from None
    return NrtModel(root, int(d["dim"]), TrainConfig.from_dict(d["config"]),
                    _arr(d["x_mean"]), _arr(d["x_scale"]), list(d.get("training_log", [])),
                    d.get("feature_names"), d.get("response_name"))


def save_model(model: NrtModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1), encoding="utf-8")


def load_model(path) -> NrtModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(d)
