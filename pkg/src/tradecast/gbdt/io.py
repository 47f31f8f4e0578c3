"""Text persistence for fitted models.

Floats are written with ``float.hex`` so a save/load round trip reproduces
predictions bit for bit.  Layout::

    tradecast-gbdt 1
    params <json>
    base_score <hex>
    best_round <int>
    features <n>
    numeric <name> <n_bounds> <hex bounds...>
    categorical <name> <n_labels> <json label list>
    eval_history <n> <hex...>
    train_history <n> <hex...>
    trees <n>
    tree <n_nodes>
    split <feature> <threshold> <missing_left> <gain> <sum_grad> <count>
    leaf <value> <sum_grad> <count>

Trees list their nodes in preorder.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import MissingFile, ModelFormatError
from .binning import BinMapper, FeatureBins
from .booster import GbdtModel, GbdtParams
from .tree import Tree

MAGIC = "tradecast-gbdt"
VERSION = 1


def _hex(v) -> str:
    return float(v).hex()


def dumps(model: GbdtModel) -> str:
    out = [f"{MAGIC} {VERSION}",
           "params " + json.dumps(asdict(model.params), sort_keys=True),
           f"base_score {_hex(model.base_score)}",
           f"best_round {model.best_round}",
           f"features {len(model.bin_mapper.features)}"]
    for fb in model.bin_mapper.features:
        if fb.kind == "categorical":
            out.append(f"categorical {fb.name} {len(fb.labels)} {json.dumps(list(fb.labels))}")
        else:
            out.append(f"numeric {fb.name} {len(fb.bounds)} " + " ".join(_hex(b) for b in fb.bounds))
    for key in ("eval_history", "train_history"):
        vals = getattr(model, key)
        out.append(f"{key} {len(vals)} " + " ".join(_hex(v) for v in vals))
    out.append(f"trees {len(model.trees)}")
    for t in model.trees:
        out.append(f"tree {t.n_nodes}")
        for i in range(t.n_nodes):
            if t.feature[i] >= 0:
                out.append(f"split {t.feature[i]} {t.threshold[i]} {int(t.missing_left[i])} "
                           f"{_hex(t.gain[i])} {_hex(t.sum_grad[i])} {t.count[i]}")
            else:
                out.append(f"leaf {_hex(t.value[i])} {_hex(t.sum_grad[i])} {t.count[i]}")
    return "\n".join(out) + "\n"


def _parse_tree(lines) -> Tree:
    n = len(lines)
    feature = np.full(n, -1, dtype=np.int64)
    threshold = np.zeros(n, dtype=np.int64)
    missing_left = np.zeros(n, dtype=bool)
    gain = np.zeros(n)
    value = np.zeros(n)
    sum_grad = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    for i, line in enumerate(lines):
        parts = line.split()
        if parts[0] == "split":
            feature[i], threshold[i] = int(parts[1]), int(parts[2])
            missing_left[i] = parts[3] == "1"
            gain[i], sum_grad[i] = float.fromhex(parts[4]), float.fromhex(parts[5])
            count[i] = int(parts[6])
        elif parts[0] == "leaf":
            value[i], sum_grad[i] = float.fromhex(parts[1]), float.fromhex(parts[2])
            count[i] = int(parts[3])
        else:
            raise ModelFormatError(f"unexpected tree line {line!r}")
    # rebuild child links from preorder
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)

    def walk(i):
        if feature[i] < 0:
            return i + 1
        left[i] = i + 1
        right[i] = walk(i + 1)
        return walk(right[i])

    if walk(0) != n:
        raise ModelFormatError("tree node list is not a complete preorder")
    return Tree(feature, threshold, missing_left, gain, left, right, value, sum_grad, count)


def loads(text: str) -> GbdtModel:
    lines = text.splitlines()
    try:
        magic, version = lines[0].split()
        if magic != MAGIC or int(version) != VERSION:
            raise ModelFormatError(f"unsupported model header {lines[0]!r}")
        params = GbdtParams(**json.loads(lines[1].split(" ", 1)[1]))
        base = float.fromhex(lines[2].split()[1])
        best_round = int(lines[3].split()[1])
        n_feat = int(lines[4].split()[1])
        feats = []
        pos = 5
        for line in lines[pos:pos + n_feat]:
            kind, name, count, rest = (line.split(" ", 3) + [""])[:4]
            if kind == "categorical":
                feats.append(FeatureBins(name, kind, np.zeros(0), tuple(json.loads(rest))))
            else:
                bounds = np.array([float.fromhex(b) for b in rest.split()])
                if len(bounds) != int(count):
                    raise ModelFormatError(f"feature {name}: bound count mismatch")
                feats.append(FeatureBins(name, "numeric", bounds))
        pos += n_feat
        hist = {}
        for key in ("eval_history", "train_history"):
            parts = lines[pos].split()
            if parts[0] != key:
                raise ModelFormatError(f"expected {key}")
            hist[key] = [float.fromhex(v) for v in parts[2:]]
            pos += 1
        n_trees = int(lines[pos].split()[1])
        pos += 1
        trees = []
        for _ in range(n_trees):
            n_nodes = int(lines[pos].split()[1])
            trees.append(_parse_tree(lines[pos + 1:pos + 1 + n_nodes]))
            pos += 1 + n_nodes
    except (IndexError, ValueError, KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    return GbdtModel(base, trees, params, BinMapper(tuple(feats)), best_round,
                     hist["eval_history"], hist["train_history"])


def save_model(model: GbdtModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def load_model(path) -> GbdtModel:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{path} does not exist")
    return loads(path.read_text(encoding="utf-8"))
