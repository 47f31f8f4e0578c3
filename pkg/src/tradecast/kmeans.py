"""K-means clustering of countries: standardization, k-means++ seeded Lloyd
iterations with restarts, and nearest-centroid assignment."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, KTooLarge


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray  # bool mask of zero-variance columns

    def apply(self, rows) -> np.ndarray:
        X = np.asarray(rows, dtype=np.float64)
        scale = np.where(self.constant, 1.0, self.std)
        Z = (X - self.mean) / scale
        Z[:, self.constant] = 0.0
        return Z


def standardize(matrix) -> tuple[np.ndarray, Standardization]:
    """Center each column and scale by its sample (n-1) standard deviation.

    Columns with zero spread, or any column when there is a single row, map to
    zeros and are flagged in ``Standardization.constant``.
    """
    X = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    mean = X.mean(axis=0)
    if X.shape[0] > 1:
        std = X.std(axis=0, ddof=1)
    else:
        std = np.zeros(X.shape[1])
    constant = ~(std > 0)
    st = Standardization(mean, std, constant)
    return st.apply(X), st


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray
    feature_names: tuple[str, ...]
    standardization: Standardization | None
    inertia: float
    seed: int
    n_iter: int = 0


def _sq_dists(X, C):
    # (n, k) squared Euclidean distances
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all remaining points coincide with a center
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(X, centroids, max_iter):
    labels = None
    prev_inertia = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        d = _sq_dists(X, centroids)
        new_labels = d.argmin(axis=1)
        inertia = float(d[np.arange(len(X)), new_labels].sum())
        assert inertia <= prev_inertia * (1 + 1e-12) + 1e-12, "inertia increased"
        prev_inertia = inertia
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = centroids.copy()
        for j in range(len(centroids)):
            members = labels == j
            if members.any():
                centroids[j] = X[members].mean(axis=0)
        # empty-cluster repair: move to the point farthest from its centroid
        for j in range(len(centroids)):
            if not (labels == j).any():
                far = ((X - centroids[labels]) ** 2).sum(axis=1)
                i = int(far.argmax())
                centroids[j] = X[i]
                labels = labels.copy()
                labels[i] = j
    d = _sq_dists(X, centroids)
    labels = d.argmin(axis=1)
    inertia = float(d[np.arange(len(X)), labels].sum())
    return centroids, labels, inertia, it


def _canonical_order(centroids):
    # descending first-feature centroid value, stable on ties
    return np.lexsort((np.arange(len(centroids)), -centroids[:, 0]))


def kmeans_fit(matrix, k: int, seed: int = 0, *, n_init: int = 10, max_iter: int = 300,
               feature_names: Sequence[str] | None = None,
               standardization: Standardization | None = None) -> ClusterModel:
    """Best-of-``n_init`` k-means++ / Lloyd fit on already standardized rows."""
    X = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > X.shape[0]:
        raise KTooLarge(f"k={k} exceeds the {X.shape[0]} rows")
    best = None
    for restart in range(n_init):
        rng = np.random.default_rng([seed, restart])
        C, _, inertia, n_iter = _lloyd(X, _kmeanspp(X, k, rng), max_iter)
        # strict < keeps the lowest restart index on ties
        if best is None or inertia < best[1]:
            best = (C, inertia, n_iter)
    C, inertia, n_iter = best
    C = C[_canonical_order(C)]
    names = tuple(feature_names) if feature_names is not None else tuple(
        f"f{i}" for i in range(X.shape[1]))
    return ClusterModel(k, C, names, standardization, inertia, seed, n_iter)


def assign(model: ClusterModel, rows, countries: Sequence[str] | None = None,
           *, standardized: bool = False) -> list[tuple[str, int, float]]:
    """Nearest centroid (lowest index on ties) per row.

    Raw rows are mapped through the model's standardization unless
    ``standardized`` is set.
    """
    X = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if X.shape[1] != model.centroids.shape[1]:
        raise DimensionMismatch(
            f"rows have {X.shape[1]} features, model has {model.centroids.shape[1]}")
    if model.standardization is not None and not standardized:
        X = model.standardization.apply(X)
    d = _sq_dists(X, model.centroids)
    labels = d.argmin(axis=1)
    dist = np.sqrt(d[np.arange(len(X)), labels])
    if countries is None:
        countries = [str(i) for i in range(len(X))]
    return [(c, int(l), float(s)) for c, l, s in zip(countries, labels, dist)]


def write_cluster_report(assignments, path) -> None:
    """CSV ``country,cluster,distance_to_centroid`` with 1-based cluster labels."""
    rows = sorted(assignments, key=lambda a: (a[1], a[0]))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country", "cluster", "distance_to_centroid"])
        for country, label, dist in rows:
            w.writerow([country, label + 1, format(dist, ".10g")])
