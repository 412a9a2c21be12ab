"""Three-fold cross-fitted estimation of the four counterfactual-mean bounds.

For the lower bound on E[Y(1) | T=0] the procedure is, per fold j (fold
arithmetic mod 3):

  1. fit the propensity on source fold j+1 plus other-arm fold j+1 and
     form the shift weight r-hat,
  2. run sieve ERM of the dual loss on source fold j+1 to get the dual
     optimizer pair (alpha-hat, eta-hat), hence H-hat(x, y),
  3. regress H-hat on covariates over source fold j+2 to get h-hat,
  4. evaluate
        mu^(j) = avg_{source fold j} r-hat (H-hat - h-hat)
               + avg_{other fold j} h-hat,

and report minus the average of the three fold estimates.  The upper
bound runs the same procedure on negated outcomes and flips the sign;
the (0,1) bounds swap the arm roles.  The variance estimator pools the
per-unit components d1 (source/treated) and d0 across folds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ._seeds import child_seed, make_rng
from .divergence import DivergenceSpec
from .dual import OptimizerConfig, _loss_terms
from .nuisance import DEFAULT_CLIP, NuisanceFit, RegressorSpec, fit_h, fit_propensity
from .sieve import SieveConfig, fit_erm

__all__ = [
    "Dataset",
    "FoldPlan",
    "EstimatorConfig",
    "BoundEstimate",
    "split_folds",
    "estimate_bound",
    "variance_estimate",
    "oracle_influence",
    "TARGETS",
]

TARGETS = ("mu10_lower", "mu10_upper", "mu01_lower", "mu01_upper")


@dataclass(frozen=True)
class Dataset:
    """Observed triples (covariates, binary treatment, outcome)."""

    X: np.ndarray
    T: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        T = np.asarray(self.T).astype(int)
        Y = np.asarray(self.Y, dtype=float).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "Y", Y)
        n = X.shape[0]
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError("X must be an (n, d) matrix with d >= 1")
        if T.shape != (n,) or Y.shape != (n,):
            raise ValueError("X, T, Y must have matching first dimensions")
        if not np.isfinite(X).all() or not np.isfinite(Y).all():
            raise ValueError("X and Y must be finite with no missing entries")
        if not np.isin(T, (0, 1)).all():
            raise ValueError("T must be binary")
        if T.sum() == 0 or T.sum() == n:
            raise ValueError("both treatment arms must be nonempty")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def arm_index(self, arm: int) -> np.ndarray:
        return np.flatnonzero(self.T == arm)


@dataclass(frozen=True)
class FoldPlan:
    """Three disjoint, exhaustive, near-equal folds per arm."""

    treated_folds: tuple[np.ndarray, np.ndarray, np.ndarray]
    control_folds: tuple[np.ndarray, np.ndarray, np.ndarray]
    seed: int

    def __post_init__(self):
        for folds in (self.treated_folds, self.control_folds):
            if len(folds) != 3:
                raise ValueError("exactly three folds per arm")
            allidx = np.concatenate(folds)
            if len(np.unique(allidx)) != len(allidx):
                raise ValueError("folds must be disjoint")
            sizes = [len(f) for f in folds]
            if max(sizes) - min(sizes) > 1:
                raise ValueError("fold sizes must be within 1 of each other")

    def folds(self, arm: int):
        return self.treated_folds if arm == 1 else self.control_folds

    def same_split(self, other: "FoldPlan") -> bool:
        return self.seed == other.seed and all(
            np.array_equal(a, b)
            for a, b in zip(self.treated_folds + self.control_folds,
                            other.treated_folds + other.control_folds)
        )


def split_folds(data: Dataset, seed: int) -> FoldPlan:
    """Randomly split each arm into three near-equal folds (deterministic)."""
    folds_by_arm = {}
    for arm in (1, 0):
        idx = data.arm_index(arm)
        if len(idx) < 3:
            raise ValueError(f"arm {arm} has fewer than 3 units")
        perm = idx[make_rng(seed, "folds", arm).permutation(len(idx))]
        base, rem = divmod(len(idx), 3)
        sizes = [base + (1 if j < rem else 0) for j in range(3)]
        cuts = np.cumsum([0] + sizes)
        folds_by_arm[arm] = tuple(np.sort(perm[cuts[j]:cuts[j + 1]]) for j in range(3))
    return FoldPlan(treated_folds=folds_by_arm[1], control_folds=folds_by_arm[0], seed=seed)


@dataclass(frozen=True)
class EstimatorConfig:
    """Everything estimate_bound needs besides the data and the target.

    The override hooks exist for robustness experiments: ``r_override``
    replaces the fitted shift weight with a fixed function of x;
    ``h_override`` is either "zero" or a factory called as
    factory(alpha_fn, eta_fn, rho, spec, y_sign) returning h(x);
    ``theta_override`` freezes the ERM at a fixed (alpha(x), eta(x)) pair,
    given as a callable X -> (alpha array, eta array).
    """

    regressor: RegressorSpec = field(default_factory=RegressorSpec)
    sieve: SieveConfig = field(default_factory=SieveConfig)
    eps: float = 1e-3
    seed: int = 0
    opt: OptimizerConfig = field(default_factory=OptimizerConfig)
    clip: float = DEFAULT_CLIP
    r_override: Callable[[np.ndarray], np.ndarray] | None = None
    h_override: str | Callable | None = None
    theta_override: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None


@dataclass(frozen=True)
class BoundEstimate:
    """One counterfactual-mean bound with its variance machinery.

    ``d1``/``d0`` are the per-unit variance components in the treated /
    control arm (aligned with ``treated_index`` / ``control_index``), each
    evaluated with the nuisances of the unit's own fold.  ``comp_treated``
    and ``comp_control`` are signed, fold-size-weighted versions satisfying

        point == mean(comp_treated) + mean(comp_control)

    exactly, which is what makes effect composition exact.
    """

    target: str
    point: float
    sigma_hat: float
    n: int
    d1: np.ndarray
    d0: np.ndarray
    treated_index: np.ndarray
    control_index: np.ndarray
    fold_of: np.ndarray
    fold_values: tuple[float, float, float]
    sign: float
    p1_hat: float
    p0_hat: float
    comp_treated: np.ndarray
    comp_control: np.ndarray
    plan: FoldPlan
    rho: float
    diagnostics: dict = field(repr=False)

    @property
    def half_width(self) -> float:
        return self.sigma_hat / math.sqrt(self.n)


def variance_estimate(d1: np.ndarray, d0: np.ndarray, p1_hat: float, p0_hat: float) -> float:
    """sigma^2 = (1/p1) Var_n(d1) + (1/p0) Var_n(d0), population-style.

    Requires at least two components per arm.
    """
    d1 = np.asarray(d1, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    if d1.size < 2 or d0.size < 2:
        raise ValueError("need at least two components per arm")
    if not (0 < p1_hat < 1 and 0 < p0_hat < 1):
        raise ValueError("p1_hat and p0_hat must lie in (0, 1)")
    v1 = float(np.mean(d1**2) - np.mean(d1) ** 2)
    v0 = float(np.mean(d0**2) - np.mean(d0) ** 2)
    return v1 / p1_hat + v0 / p0_hat


def _target_roles(target: str) -> tuple[int, float, float]:
    """(source arm, outcome sign, output sign) for a bound target."""
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}, got {target!r}")
    src = 1 if target.startswith("mu10") else 0
    lower = target.endswith("lower")
    y_sign = 1.0 if lower else -1.0
    out_sign = -1.0 if lower else 1.0
    return src, y_sign, out_sign


def estimate_bound(
    data: Dataset,
    spec: DivergenceSpec,
    rho: float,
    target: str,
    cfg: EstimatorConfig | None = None,
    plan: FoldPlan | None = None,
    nuisance_cache: dict | None = None,
) -> BoundEstimate:
    """Cross-fitted estimate of one counterfactual-mean bound.

    ``nuisance_cache`` (a plain dict) shares fitted propensities across
    targets and budgets when the fold plan is shared; it is keyed by the
    fitting fold only, so it is safe exactly when plan and data are fixed.
    """
    cfg = cfg or EstimatorConfig()
    if rho <= 0:
        raise ValueError("rho must be positive")
    src, y_sign, out_sign = _target_roles(target)
    other = 1 - src
    plan = plan or split_folds(data, cfg.seed)
    cache = nuisance_cache if nuisance_cache is not None else {}

    src_folds = plan.folds(src)
    oth_folds = plan.folds(other)
    y_tilde = y_sign * data.Y

    d_src = np.zeros(sum(len(f) for f in src_folds))
    d_oth = np.zeros(sum(len(f) for f in oth_folds))
    src_index = np.concatenate(src_folds)
    oth_index = np.concatenate(oth_folds)
    src_pos = {i: p for p, i in enumerate(src_index)}
    oth_pos = {i: p for p, i in enumerate(oth_index)}

    fold_of = np.full(data.n, -1)
    fold_values = []
    fold_diags = []
    for j in range(3):
        jf, jr = (j + 1) % 3, (j + 2) % 3

        # shift weight from fold j+1 of both arms
        if cfg.r_override is not None:
            r_fn = cfg.r_override
        else:
            key = ("prop", jf)
            if key not in cache:
                fit_idx = np.concatenate([plan.treated_folds[jf], plan.control_folds[jf]])
                try:
                    cache[key] = fit_propensity(
                        data.X[fit_idx], data.T[fit_idx], cfg.regressor,
                        seed=child_seed(cfg.seed, "propensity", jf), clip=cfg.clip,
                    )
                except ValueError as exc:
                    raise ValueError(f"fold {j}: {exc}") from exc
            nf: NuisanceFit = cache[key]
            if src == 1:
                r_fn = nf.r_hat
            else:
                r_fn = lambda Xq, _nf=nf: 1.0 / _nf.r_hat(Xq)

        # dual optimizer pair from source fold j+1; the seed path depends
        # only on (arm, fold), not the target label, so the lower bound on
        # -Y and the upper bound on Y share every draw, bit for bit
        fit_rows = src_folds[jf]
        if cfg.theta_override is not None:
            theta_fn = cfg.theta_override
            erm_diag = {"frozen": True}
        else:
            basis = cfg.sieve.build(len(fit_rows), data.d)
            try:
                pair = fit_erm(
                    basis, data.X[fit_rows], y_tilde[fit_rows], spec, rho,
                    eps=cfg.eps,
                    opt=replace(cfg.opt, seed=child_seed(cfg.seed, "erm", src, j)),
                    p_smooth=cfg.sieve.p,
                    ridge=cfg.sieve.resolve_ridge(len(fit_rows)),
                )
            except Exception as exc:
                raise type(exc)(f"fold {j} ({target}): {exc}") from exc
            theta_fn = pair.evaluate_batch
            erm_diag = dict(pair.diagnostics)

        def H_fn(Xq, yq, _theta=theta_fn):
            alpha, eta = _theta(Xq)
            return _loss_terms(spec, rho, alpha, eta, yq)

        # loss regression from source fold j+2
        if cfg.h_override == "zero":
            h_fn = lambda Xq: np.zeros(np.atleast_2d(Xq).shape[0])
        elif cfg.h_override is not None:
            alpha_eta = theta_fn
            h_fn = cfg.h_override(alpha_eta, rho, spec, y_sign)
        else:
            reg_rows = src_folds[jr]
            h_fn = fit_h(
                data.X[reg_rows], H_fn(data.X[reg_rows], y_tilde[reg_rows]),
                cfg.regressor, seed=child_seed(cfg.seed, "hreg", src, j),
            )

        # evaluate on folds j
        ev_src = src_folds[j]
        ev_oth = oth_folds[j]
        alpha_ev, _ = theta_fn(data.X[ev_src])
        erm_diag["alpha_floor_frac_eval"] = float(np.mean(alpha_ev <= cfg.eps))
        a_vals = np.asarray(r_fn(data.X[ev_src])) * (
            H_fn(data.X[ev_src], y_tilde[ev_src]) - np.asarray(h_fn(data.X[ev_src]))
        )
        b_vals = np.asarray(h_fn(data.X[ev_oth]))
        mu_j = float(np.mean(a_vals) + np.mean(b_vals))
        fold_values.append(mu_j)
        fold_diags.append(erm_diag)
        fold_of[ev_src] = j
        fold_of[ev_oth] = j
        for i, v in zip(ev_src, a_vals):
            d_src[src_pos[i]] = v
        for i, v in zip(ev_oth, b_vals):
            d_oth[oth_pos[i]] = v

    point = out_sign * float(np.mean(fold_values))

    n1 = int(data.T.sum())
    n0 = data.n - n1
    p1_hat, p0_hat = n1 / data.n, n0 / data.n
    if src == 1:
        d1, d0 = d_src, d_oth
        treated_index, control_index = src_index, oth_index
    else:
        d1, d0 = d_oth, d_src
        treated_index, control_index = oth_index, src_index
    sigma_hat = math.sqrt(max(variance_estimate(d1, d0, p1_hat, p0_hat), 0.0))

    # fold-size weights make arm means reproduce the average of fold means
    w_src = np.concatenate([
        np.full(len(src_folds[j]), len(src_index) / (3.0 * len(src_folds[j]))) for j in range(3)
    ])
    w_oth = np.concatenate([
        np.full(len(oth_folds[j]), len(oth_index) / (3.0 * len(oth_folds[j]))) for j in range(3)
    ])
    comp_src = out_sign * d_src * w_src
    comp_oth = out_sign * d_oth * w_oth
    comp_treated, comp_control = (comp_src, comp_oth) if src == 1 else (comp_oth, comp_src)

    diagnostics = {
        "fold_erm": fold_diags,
        "alpha_floor_hit": any(
            d.get("alpha_floor_frac", 0.0) > 0 or d.get("alpha_floor_frac_eval", 0.0) > 0
            for d in fold_diags),
        "restart_spread_flag": any(d.get("restart_spread_exceeds_slack", False) for d in fold_diags),
    }
    return BoundEstimate(
        target=target, point=point, sigma_hat=sigma_hat, n=data.n,
        d1=d1, d0=d0, treated_index=treated_index, control_index=control_index,
        fold_of=fold_of, fold_values=tuple(fold_values), sign=out_sign,
        p1_hat=p1_hat, p0_hat=p0_hat,
        comp_treated=comp_treated, comp_control=comp_control,
        plan=plan, rho=rho, diagnostics=diagnostics,
    )


def oracle_influence(
    data: Dataset,
    r_fn: Callable[[np.ndarray], np.ndarray],
    H_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    h_fn: Callable[[np.ndarray], np.ndarray],
    target: str = "mu10_lower",
    p1: float | None = None,
) -> np.ndarray:
    """Per-unit influence values under known (r, H, h), for test harnesses.

    For mu10 targets:
        phi_i = (T_i / p1) r(X_i) [H(X_i, Y_i) - h(X_i)] + ((1-T_i) / p0) h(X_i);
    mu01 targets swap the arm roles.  Requires both arms nonempty.
    """
    src, _, _ = _target_roles(target)
    t_src = (data.T == src).astype(float)
    p_src = float(np.mean(t_src)) if p1 is None else (p1 if src == 1 else 1.0 - p1)
    p_oth = 1.0 - p_src
    if p_src in (0.0, 1.0):
        raise ValueError("both arms must be nonempty for the influence function")
    H = H_fn(data.X, data.Y)
    h = h_fn(data.X)
    r = r_fn(data.X)
    return t_src / p_src * r * (H - h) + (1.0 - t_src) / p_oth * h
