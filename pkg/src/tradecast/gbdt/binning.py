"""Feature histograms: equal-frequency bins for numeric columns, identity bins
for categorical codes, and one dedicated missing-value bin per feature."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BIN_DTYPE = np.uint16


@dataclass(frozen=True)
class FeatureBins:
    name: str
    kind: str                                 # "numeric" | "categorical"
    bounds: np.ndarray = field(repr=False)    # numeric: ascending upper bounds, last is +inf
    labels: tuple[str, ...] = ()              # categorical: code -> label

    @property
    def n_value_bins(self) -> int:
        return len(self.labels) if self.kind == "categorical" else len(self.bounds)

    @property
    def missing_bin(self) -> int:
        return self.n_value_bins

    @property
    def n_bins(self) -> int:
        return self.n_value_bins + 1

    def transform(self, column) -> np.ndarray:
        x = np.asarray(column, dtype=np.float64)
        missing = np.isnan(x)
        out = np.full(len(x), self.missing_bin, dtype=BIN_DTYPE)
        if self.kind == "categorical":
            ok = ~missing & (x >= 0) & (x < self.n_value_bins) & (x == np.floor(x))
            out[ok] = x[ok].astype(BIN_DTYPE)
        else:
            out[~missing] = np.searchsorted(self.bounds, x[~missing], side="left")
        return out


def numeric_bounds(values, max_bins: int) -> np.ndarray:
    """Upper bin bounds at equal-frequency cut points over the present values.

    Bounds sit midway between a cut value and the next distinct value; the last
    bound is +inf so every finite value lands in exactly one bin.
    """
    v = np.sort(np.asarray(values, dtype=np.float64))
    v = v[~np.isnan(v)]
    if len(v) == 0:
        return np.array([np.inf])
    distinct = np.unique(v)
    if len(distinct) <= max_bins:
        cuts = distinct[:-1]
    else:
        n = len(v)
        idx = [math.ceil(i * n / max_bins) - 1 for i in range(1, max_bins)]
        cuts = np.unique(v[idx])
        cuts = cuts[cuts < distinct[-1]]
    nxt = distinct[np.searchsorted(distinct, cuts, side="right")]
    bounds = (cuts + nxt) / 2.0
    return np.concatenate([bounds, [np.inf]])


@dataclass(frozen=True)
class BinMapper:
    features: tuple[FeatureBins, ...]

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def n_bins(self) -> np.ndarray:
        return np.array([f.n_bins for f in self.features], dtype=np.int64)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.features):
            raise ValueError(f"expected {len(self.features)} columns, got shape {X.shape}")
        out = np.empty(X.shape, dtype=BIN_DTYPE)
        for j, fb in enumerate(self.features):
            out[:, j] = fb.transform(X[:, j])
        return out


def build_bins(X, max_bins: int = 255, names=None, categorical=None) -> BinMapper:
    """Fit a BinMapper on training columns.

    ``categorical`` maps a column index to its label tuple; those columns hold
    integer codes (NaN or negative when missing).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    if not 1 <= max_bins < np.iinfo(BIN_DTYPE).max:
        raise ValueError("max_bins out of range")
    names = list(names) if names is not None else [f"f{j}" for j in range(X.shape[1])]
    categorical = categorical or {}
    feats = []
    for j, name in enumerate(names):
        if j in categorical:
            feats.append(FeatureBins(name, "categorical", np.zeros(0), tuple(categorical[j])))
        else:
            feats.append(FeatureBins(name, "numeric", numeric_bounds(X[:, j], max_bins)))
    return BinMapper(tuple(feats))
