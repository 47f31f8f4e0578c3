"""Gradient boosting with squared-error loss, per-tree feature fraction and
validation-based early stopping."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import EmptyTrain, NonNumericTarget, NoValidWithEarlyStop, SchemaMismatch
from ..panel import CATEGORICAL, KEY_COLUMNS, PanelTable
from .binning import BinMapper, build_bins
from .tree import Tree, TreeGrower


@dataclass(frozen=True)
class GbdtParams:
    learning_rate: float = 0.01
    num_leaves: int = 31
    max_depth: int = 8
    feature_fraction: float = 0.6
    early_stopping_rounds: int = 500
    max_rounds: int = 5000
    min_data_in_leaf: int = 20
    max_bins: int = 255
    lambda_l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.num_leaves < 2:
            raise ValueError("num_leaves must be >= 2")
        if not 0 < self.feature_fraction <= 1:
            raise ValueError("feature_fraction must be in (0, 1]")
        if self.early_stopping_rounds < 0 or self.max_rounds < 1:
            raise ValueError("round counts out of range")
        if self.min_data_in_leaf < 1 or self.lambda_l2 < 0:
            raise ValueError("min_data_in_leaf must be >= 1 and lambda_l2 >= 0")
        if not 1 <= self.max_bins <= 65534:
            raise ValueError("max_bins out of range")

    def replace(self, **kw) -> "GbdtParams":
        return GbdtParams(**{**asdict(self), **kw})


@dataclass
class GbdtModel:
    base_score: float
    trees: list[Tree]
    params: GbdtParams
    bin_mapper: BinMapper
    best_round: int
    eval_history: list[float] = field(default_factory=list)
    train_history: list[float] = field(default_factory=list)

    @property
    def feature_names(self) -> list[str]:
        return self.bin_mapper.names

    @property
    def rounds_used(self) -> int:
        return len(self.trees)

    @property
    def _missing_bins(self) -> np.ndarray:
        return np.array([f.missing_bin for f in self.bin_mapper.features], dtype=np.int64)

    def predict_binned(self, Xb: np.ndarray, n_trees: int | None = None) -> np.ndarray:
        n_trees = self.best_round if n_trees is None else n_trees
        out = np.zeros(Xb.shape[0])
        mb = self._missing_bins
        for tree in self.trees[:n_trees]:
            out += tree.predict_binned(Xb, mb)
        return self.base_score + self.params.learning_rate * out

    def predict_matrix(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.feature_names):
            raise SchemaMismatch(
                f"rows have {X.shape[1]} columns, model expects {len(self.feature_names)}")
        return self.predict_binned(self.bin_mapper.transform(X))


def fit_arrays(X, y, params: GbdtParams = GbdtParams(), X_valid=None, y_valid=None, *,
               feature_names: Sequence[str] | None = None,
               categorical: dict | None = None) -> GbdtModel:
    """Boost regression trees on a dense matrix (NaN = missing)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0 or len(y) == 0:
        raise EmptyTrain("training set is empty")
    if len(y) != X.shape[0]:
        raise ValueError("X and y lengths differ")
    if not np.all(np.isfinite(y)):
        raise NonNumericTarget("target contains missing or non-finite values")
    has_valid = X_valid is not None and len(X_valid) > 0
    if params.early_stopping_rounds > 0 and not has_valid:
        raise NoValidWithEarlyStop("early stopping needs a non-empty validation set")

    mapper = build_bins(X, params.max_bins, feature_names, categorical)
    Xb = mapper.transform(X)
    n_features = X.shape[1]
    k = max(1, math.ceil(params.feature_fraction * n_features - 1e-9))

    # exact base for a constant target so its gradients are exactly zero
    base = float(y[0]) if np.ptp(y) == 0 else float(np.mean(y))
    pred = np.full(len(y), base)
    grower = TreeGrower(Xb, mapper.n_bins, num_leaves=params.num_leaves,
                        max_depth=params.max_depth, min_data_in_leaf=params.min_data_in_leaf,
                        lambda_l2=params.lambda_l2)
    missing_bins = np.array([f.missing_bin for f in mapper.features], dtype=np.int64)
    if has_valid:
        Xvb = mapper.transform(np.atleast_2d(np.asarray(X_valid, dtype=np.float64)))
        yv = np.asarray(y_valid, dtype=np.float64)
        vpred = np.full(len(yv), base)

    rng = np.random.default_rng(params.seed)
    lr = params.learning_rate
    trees, history, train_hist = [], [], []
    best_mse, best_round = math.inf, 0
    for _ in range(params.max_rounds):
        eligible = np.sort(rng.choice(n_features, size=k, replace=False))
        g = pred - y
        tree, members = grower.grow(g, eligible)
        if tree.n_leaves < 2:
            break
        trees.append(tree)
        for node, rows in enumerate(members):
            if len(rows):
                pred[rows] += lr * tree.value[node]
        resid = pred - y
        train_hist.append(float(resid @ resid) / len(y))
        if has_valid:
            vpred += lr * tree.predict_binned(Xvb, missing_bins)
            ve = vpred - yv
            mse = float(ve @ ve) / len(yv)
            history.append(mse)
            if mse < best_mse:
                best_mse, best_round = mse, len(trees)
            elif params.early_stopping_rounds and len(trees) - best_round >= params.early_stopping_rounds:
                break
    if params.early_stopping_rounds == 0 or not has_valid:
        best_round = len(trees)
    return GbdtModel(base, trees, params, mapper, best_round, history, train_hist)


def default_features(panel: PanelTable) -> list[str]:
    return ["year", *panel.feature_names]


def panel_matrix(panel: PanelTable, names: Sequence[str],
                 labels: dict[str, tuple[str, ...]] | None = None) -> np.ndarray:
    """Dense float matrix of panel columns.

    Categorical columns become codes into ``labels[name]`` (defaulting to the
    panel's own labels); unknown or missing labels become NaN.
    """
    labels = labels or {}
    cols = []
    for name in names:
        if panel.kinds.get(name) == CATEGORICAL:
            target = labels.get(name, panel.labels[name])
            code = {lab: i for i, lab in enumerate(target)}
            cols.append([np.nan if v is None else code.get(v, np.nan) for v in panel.decoded(name)])
        elif name in panel.features or name == "year":
            cols.append(np.asarray(panel.column(name), dtype=np.float64))
        elif name in KEY_COLUMNS:
            raise SchemaMismatch(f"key column {name!r} cannot be used as a feature")
        else:
            raise SchemaMismatch(f"panel has no column {name!r}")
    return np.column_stack(cols) if cols else np.zeros((len(panel), 0))


def gbdt_fit(train: PanelTable, valid: PanelTable | None, target: str = "value_usd",
             params: GbdtParams = GbdtParams(),
             features: Sequence[str] | None = None) -> GbdtModel:
    if len(train) == 0:
        raise EmptyTrain("training panel is empty")
    if target in train.kinds and train.kinds[target] == CATEGORICAL:
        raise NonNumericTarget(f"target {target!r} is categorical")
    features = list(features) if features is not None else default_features(train)
    if target in features:
        raise SchemaMismatch("target cannot also be a feature")
    cat = {j: train.labels[n] for j, n in enumerate(features)
           if train.kinds.get(n) == CATEGORICAL}
    X = panel_matrix(train, features)
    y = np.asarray(train.column(target), dtype=np.float64)
    Xv = yv = None
    if valid is not None and len(valid):
        Xv = panel_matrix(valid, features, {features[j]: lab for j, lab in cat.items()})
        yv = np.asarray(valid.column(target), dtype=np.float64)
    return fit_arrays(X, y, params, Xv, yv, feature_names=features, categorical=cat)


def gbdt_predict(model: GbdtModel, rows) -> np.ndarray:
    """Predict for a PanelTable (columns matched by name) or a dense matrix."""
    if isinstance(rows, PanelTable):
        names = model.feature_names
        missing = [n for n in names if n not in rows.features and n != "year"]
        if missing:
            raise SchemaMismatch(f"panel lacks model features {missing}")
        labels = {f.name: f.labels for f in model.bin_mapper.features if f.kind == CATEGORICAL}
        for n in labels:
            if rows.kinds.get(n) != CATEGORICAL:
                raise SchemaMismatch(f"feature {n!r} is categorical in the model")
        return model.predict_matrix(panel_matrix(rows, names, labels))
    return model.predict_matrix(rows)


@dataclass(frozen=True)
class FeatureImportance:
    names: tuple[str, ...]
    split: tuple[int, ...]
    gain: tuple[float, ...]
    kind: str = "split"

    def ranked(self, kind: str | None = None) -> list[tuple[str, int, float]]:
        kind = kind or self.kind
        if kind not in ("split", "gain"):
            raise ValueError("kind must be 'split' or 'gain'")
        rows = list(zip(self.names, self.split, self.gain))
        key = (lambda r: (-r[1], r[0])) if kind == "split" else (lambda r: (-r[2], r[0]))
        return sorted(rows, key=key)

    def lines(self, kind: str | None = None) -> list[str]:
        return [f"{n}: {s}, {g:.6g}" for n, s, g in self.ranked(kind)]

    def to_csv(self, path, kind: str | None = None) -> None:
        total = sum(self.gain)
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature", "split", "gain", "gain_share"])
            for n, s, g in self.ranked(kind):
                share = g / total if total > 0 else 0.0
                w.writerow([n, s, format(g, ".10g"), format(share, ".6f")])


def feature_importance(model: GbdtModel, kind: str = "split") -> FeatureImportance:
    """Split counts and summed split gains per feature over the used trees,
    ranked by ``kind`` in the report helpers."""
    if kind not in ("split", "gain"):
        raise ValueError("kind must be 'split' or 'gain'")
    names = model.feature_names
    split = np.zeros(len(names), dtype=np.int64)
    gain = np.zeros(len(names))
    for tree in model.trees[:model.best_round]:
        internal = tree.feature >= 0
        np.add.at(split, tree.feature[internal], 1)
        np.add.at(gain, tree.feature[internal], tree.gain[internal])
    return FeatureImportance(tuple(names), tuple(int(s) for s in split),
                             tuple(float(g) for g in gain), kind)
