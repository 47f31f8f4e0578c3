"""Histogram gradient-boosted regression trees with leaf-wise growth."""
from .binning import BinMapper, FeatureBins, build_bins, numeric_bounds
from .booster import (
    FeatureImportance,
    GbdtModel,
    GbdtParams,
    default_features,
    feature_importance,
    fit_arrays,
    gbdt_fit,
    gbdt_predict,
    panel_matrix,
)
from .io import dumps, load_model, loads, save_model
from .tree import Tree, TreeGrower, split_gain

__all__ = [
    "BinMapper", "FeatureBins", "build_bins", "numeric_bounds",
    "FeatureImportance", "GbdtModel", "GbdtParams", "default_features",
    "feature_importance", "fit_arrays", "gbdt_fit", "gbdt_predict", "panel_matrix",
    "dumps", "loads", "save_model", "load_model",
    "Tree", "TreeGrower", "split_gain",
]
