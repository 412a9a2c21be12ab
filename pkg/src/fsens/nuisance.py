"""Nuisance estimation: the covariate-shift weight and the loss regression.

The identifiable part of the distributional shift between arms is

    r(x) = (1 - e(x)) p1 / (e(x) (1 - p1)),

where e(x) is the propensity and p1 the marginal treated fraction.  The
cross-fitted estimator additionally needs a regression of the evaluated
dual loss on covariates.  Both are served by a pluggable regressor;
the default is a random forest (200 trees, min leaf 5), with a Gaussian
kernel smoother and k-nearest-neighbors as dependency-light alternatives.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

__all__ = [
    "RegressorSpec",
    "NuisanceFit",
    "fit_regressor",
    "fit_propensity",
    "shift_ratio",
    "fit_h",
]

DEFAULT_CLIP = 0.01


@dataclass(frozen=True)
class RegressorSpec:
    """Which regression algorithm to use and its hyperparameters.

    kind: "RandomForest" (n_trees, min_leaf, max_depth), "KernelSmoother"
    (bandwidth; None = rule of thumb), or "KNearest" (k; None = n^(4/(4+d))).
    """

    kind: str = "RandomForest"
    n_trees: int = 200
    min_leaf: int = 5
    max_depth: int | None = None
    bandwidth: float | None = None
    k: int | None = None

    def __post_init__(self):
        if self.kind not in ("RandomForest", "KernelSmoother", "KNearest"):
            raise ValueError(f"unknown regressor kind {self.kind!r}")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class NuisanceFit:
    """Fitted propensity-derived pieces for one fitting fold."""

    e_hat: Callable[[np.ndarray], np.ndarray]
    p1_hat: float
    clip: float = DEFAULT_CLIP
    h_hat: Callable[[np.ndarray], np.ndarray] | None = None

    def r_hat(self, X: np.ndarray) -> np.ndarray:
        return shift_ratio(self.e_hat(X), self.p1_hat)


def fit_regressor(X: np.ndarray, y: np.ndarray, reg: RegressorSpec, seed: int = 0):
    """Fit ``reg`` to (X, y); returns a vectorized predictor X -> yhat."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size or y.size == 0:
        raise ValueError("X and y must be nonempty with matching lengths")
    n, d = X.shape

    if reg.kind == "RandomForest":
        from sklearn.ensemble import RandomForestRegressor

        model = RandomForestRegressor(
            n_estimators=reg.n_trees,
            min_samples_leaf=reg.min_leaf,
            max_depth=reg.max_depth,
            random_state=seed,
            n_jobs=1,
        )
        model.fit(X, y)

        def predict(Xq: np.ndarray) -> np.ndarray:
            return model.predict(np.atleast_2d(np.asarray(Xq, dtype=float)))

        return predict

    if reg.kind == "KNearest":
        from sklearn.neighbors import KNeighborsRegressor

        k = reg.k or max(1, int(np.ceil(n ** (4.0 / (4.0 + d)))))
        model = KNeighborsRegressor(n_neighbors=min(k, n))
        model.fit(X, y)

        def predict(Xq: np.ndarray) -> np.ndarray:
            return model.predict(np.atleast_2d(np.asarray(Xq, dtype=float)))

        return predict

    # Nadaraya-Watson with a Gaussian kernel
    bw = reg.bandwidth or float(np.mean(np.std(X, axis=0)) * n ** (-1.0 / (4 + d)) + 1e-12)
    Xtr, ytr = X.copy(), y.copy()

    def predict(Xq: np.ndarray) -> np.ndarray:
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        d2 = ((Xq[:, None, :] - Xtr[None, :, :]) ** 2).sum(axis=2)
        wgt = np.exp(-0.5 * d2 / bw**2)
        denom = wgt.sum(axis=1)
        denom = np.where(denom > 0, denom, 1.0)
        return wgt @ ytr / denom

    return predict


def fit_propensity(
    X: np.ndarray,
    t: np.ndarray,
    reg: RegressorSpec | None = None,
    seed: int = 0,
    clip: float = DEFAULT_CLIP,
    min_leaf_floor: int | None = None,
) -> NuisanceFit:
    """Fit e(x) = P(T=1 | X=x) on a fold containing both arms.

    The fitted propensity is clipped into [clip, 1 - clip]; p1_hat is the
    fold's empirical treated fraction.  Binary targets need much larger
    leaves than generic regressions to produce calibrated probabilities,
    so for forests the leaf size is floored at 10% of the fold by default
    (pass ``min_leaf_floor`` to override).
    """
    t = np.asarray(t)
    if t.min() == t.max():
        raise ValueError("propensity fold contains a single treatment arm")
    reg = reg or RegressorSpec()
    if reg.kind == "RandomForest":
        floor = min_leaf_floor if min_leaf_floor is not None else max(1, round(0.1 * len(t)))
        reg = replace(reg, min_leaf=max(reg.min_leaf, floor))
    raw = fit_regressor(X, t.astype(float), reg, seed=seed)

    def e_hat(Xq: np.ndarray) -> np.ndarray:
        return np.clip(raw(Xq), clip, 1.0 - clip)

    return NuisanceFit(e_hat=e_hat, p1_hat=float(np.mean(t)), clip=clip)


def shift_ratio(e: np.ndarray | float, p1: float) -> np.ndarray | float:
    """r(x) = (1 - e(x)) p1 / (e(x) (1 - p1)); e must be clipped into (0, 1)."""
    if not 0.0 < p1 < 1.0:
        raise ValueError("p1 must lie strictly inside (0, 1)")
    return (1.0 - e) * p1 / (np.asarray(e) * (1.0 - p1)) if not np.isscalar(e) \
        else (1.0 - e) * p1 / (e * (1.0 - p1))


def fit_h(X: np.ndarray, H_values: np.ndarray, reg: RegressorSpec | None = None, seed: int = 0):
    """Regress evaluated loss values on covariates; total on the domain."""
    reg = reg or RegressorSpec()
    return fit_regressor(X, H_values, reg, seed=seed)
