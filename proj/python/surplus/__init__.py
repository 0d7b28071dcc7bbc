"""Refit-based feature importance: SMSSM, LOCO and baselines."""
import json

import numpy as np

from . import _core
from ._core import (ValidationError, angle_score, coverage_probability,
                    exact_shapley, selective_ratio)

__all__ = ["simulate", "analyze", "exact_shapley", "coverage_probability",
           "angle_score", "selective_ratio", "ValidationError"]


def simulate(dataset, n=1000, seed=0, noise=1.0, collinearity=0.05):
    """Returns (X, y, names, true_set) for one of DS1..DS6."""
    cols, y, names, truth = _core.simulate(dataset, n, seed, noise, collinearity)
    return np.column_stack(cols), np.asarray(y), names, truth


def analyze(X, y, names=None, method="smssm", learner="gbt", seed=0, k=200,
            repeats=20, jobs=1):
    """Runs one importance method and returns its report as a dict."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if names is None:
        names = [f"X{j + 1}" for j in range(X.shape[1])]
    cols = [X[:, j].tolist() for j in range(X.shape[1])]
    text = _core.analyze(cols, np.asarray(y, dtype=float).tolist(), list(names),
                         method, learner, seed, k, repeats, jobs)
    return json.loads(text)
