"""Pearson correlation, correlation matrices, simple OLS projection and R²."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import LengthMismatch, TooFewPairs, UnknownColumn, ZeroVariance
from .panel import NUMERIC, PanelTable


def _complete_pairs(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray([np.nan if v is None else v for v in x], dtype=np.float64)
    y = np.asarray([np.nan if v is None else v for v in y], dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(f"series lengths differ: {len(x)} vs {len(y)}")
    ok = np.isfinite(x) & np.isfinite(y)
    return x[ok], y[ok]


def pearson(x, y) -> float:
    """Pearson r over pairs where both values are present.

    Raises TooFewPairs with fewer than two complete pairs and ZeroVariance when
    either side is constant.
    """
    x, y = _complete_pairs(x, y)
    if len(x) < 2:
        raise TooFewPairs(f"{len(x)} complete pairs, need at least 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("constant series has no correlation")
    r = float(dx @ dy) / (np.sqrt(sxx) * np.sqrt(syy))
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple[str, ...]
    values: np.ndarray       # NaN where the cell is undefined
    pair_counts: np.ndarray
    reasons: dict            # (i, j) -> error code for undefined cells

    def get(self, a: str, b: str) -> float | None:
        v = self.values[self.names.index(a), self.names.index(b)]
        return None if np.isnan(v) else float(v)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["", *self.names])
            for i, name in enumerate(self.names):
                cells = ["" if np.isnan(v) else format(float(v), ".10g") for v in self.values[i]]
                w.writerow([name, *cells])


def correlation_matrix(panel: PanelTable, columns: Sequence[str]) -> CorrelationMatrix:
    cols = []
    for name in columns:
        col = panel.column(name)  # raises UnknownColumn
        if name in panel.kinds and panel.kinds[name] != NUMERIC:
            raise UnknownColumn(f"column {name!r} is not numeric")
        cols.append(np.asarray(col, dtype=np.float64))
    k = len(cols)
    values = np.full((k, k), np.nan)
    counts = np.zeros((k, k), dtype=np.int64)
    reasons = {}
    for i in range(k):
        for j in range(i, k):
            ok = np.isfinite(cols[i]) & np.isfinite(cols[j])
            counts[i, j] = counts[j, i] = int(ok.sum())
            try:
                r = pearson(cols[i], cols[j])
            except (TooFewPairs, ZeroVariance) as exc:
                reasons[(i, j)] = reasons[(j, i)] = exc.code
                continue
            values[i, j] = values[j, i] = 1.0 if i == j else r
    return CorrelationMatrix(tuple(columns), values, counts, reasons)


@dataclass(frozen=True)
class OlsModel:
    slope: float
    intercept: float
    n: int
    r_squared: float

    def predict(self, x) -> np.ndarray:
        return self.intercept + self.slope * np.asarray(x, dtype=np.float64)


def ols_fit(x, y) -> OlsModel:
    """Closed-form simple linear regression with intercept."""
    x, y = _complete_pairs(x, y)
    if len(x) < 2:
        raise TooFewPairs(f"{len(x)} complete pairs, need at least 2")
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ZeroVariance("predictor is constant")
    slope = float(dx @ dy) / sxx
    intercept = float(ym - slope * xm)
    syy = float(dy @ dy)
    if syy == 0.0:
        r2 = 1.0
    else:
        resid = dy - slope * dx
        r2 = min(1.0, max(0.0, 1.0 - float(resid @ resid) / syy))
    return OlsModel(slope, intercept, len(x), r2)


def ols_forecast(model: OlsModel, years: Sequence[int]) -> list[tuple[int, float]]:
    return [(int(y), model.intercept + model.slope * y) for y in years]


def r_squared(actual, predicted) -> float:
    """1 - SSE/SST; negative when predictions are worse than the mean."""
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape:
        raise LengthMismatch(f"series lengths differ: {len(a)} vs {len(p)}")
    if len(a) < 2:
        raise TooFewPairs("need at least 2 observations")
    d = a - a.mean()
    sst = float(d @ d)
    if sst == 0.0:
        raise ZeroVariance("actual series is constant; R² undefined")
    e = a - p
    return 1.0 - float(e @ e) / sst
