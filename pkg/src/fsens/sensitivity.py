"""Budget sweeps: confidence-bound curves over rho, monotonization, inversion.

A sensitivity analysis reports, for an ascending grid of budgets, a lower
confidence bound on the effect's lower bound and an upper confidence bound
on its upper bound.  Valid curves are monotone in the budget; sampling
noise can break that, so the curve is repaired by a running extremum
(which only enlarges intervals, preserving validity).  Inverting the
monotone curve at a threshold reports the smallest budget whose interval
contains it, e.g. the confounding level needed to explain away the effect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .divergence import DivergenceSpec
from .effects import att_ate_bounds, atc_bounds, normal_quantile
from .estimator import Dataset, EstimatorConfig, estimate_bound, split_folds

__all__ = ["SensitivityCurve", "InversionResult", "compute_curve", "monotonize", "invert"]


@dataclass(frozen=True)
class SensitivityCurve:
    """Per-budget confidence bounds for one effect, plus monotone repairs."""

    effect: str
    level: float
    rho_grid: np.ndarray
    lcb: np.ndarray
    ucb: np.ndarray
    lcb_monotone: np.ndarray
    ucb_monotone: np.ndarray
    lower_points: np.ndarray
    upper_points: np.ndarray
    lower_sigma: np.ndarray
    upper_sigma: np.ndarray
    n: int
    failures: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.rho_grid)


@dataclass(frozen=True)
class InversionResult:
    """Smallest grid budget whose monotone interval contains the threshold.

    ``rho_hat`` is None when no grid point qualifies; the neighbors record
    the adjacent grid values for resolution transparency.
    """

    threshold: float
    rho_hat: float | None
    neighbor_below: float | None
    neighbor_above: float | None
    interpretation: str


def _required_targets(effect: str) -> tuple[str, ...]:
    if effect == "ATC":
        return ("mu10_lower", "mu10_upper")
    if effect == "ATT":
        return ("mu01_lower", "mu01_upper")
    if effect == "ATE":
        return ("mu10_lower", "mu10_upper", "mu01_lower", "mu01_upper")
    raise ValueError(f"effect must be ATC, ATT or ATE, got {effect!r}")


def compute_curve(
    data: Dataset,
    spec: DivergenceSpec,
    rho_grid,
    effect: str = "ATC",
    level: float = 0.95,
    cfg: EstimatorConfig | None = None,
) -> SensitivityCurve:
    """Sweep the budget grid with one shared fold split.

    Per budget the effect's lower/upper bounds get one-sided confidence
    bounds at level (1 + level) / 2, which pair into a level-``level``
    interval for the effect.  Per-budget failures leave NaN gaps and are
    recorded, not raised.
    """
    cfg = cfg or EstimatorConfig()
    rho_grid = np.asarray(rho_grid, dtype=float)
    if rho_grid.ndim != 1 or len(rho_grid) == 0:
        raise ValueError("rho_grid must be a nonempty 1-d array")
    if np.any(rho_grid <= 0):
        raise ValueError("rho_grid must be positive")
    if np.any(np.diff(rho_grid) <= 0):
        raise ValueError("rho_grid must be strictly ascending without duplicates")
    targets = _required_targets(effect)

    plan = split_folds(data, cfg.seed)
    cache: dict = {}
    z_lo = normal_quantile((1.0 - level) / 2.0)
    z_hi = normal_quantile((1.0 + level) / 2.0)
    sqrt_n = math.sqrt(data.n)

    m = len(rho_grid)
    lcb = np.full(m, np.nan)
    ucb = np.full(m, np.nan)
    lo_pt = np.full(m, np.nan)
    up_pt = np.full(m, np.nan)
    lo_sg = np.full(m, np.nan)
    up_sg = np.full(m, np.nan)
    failures: list[str] = []
    for i, rho in enumerate(rho_grid):
        try:
            ests = {t: estimate_bound(data, spec, float(rho), t, cfg,
                                      plan=plan, nuisance_cache=cache)
                    for t in targets}
            if effect == "ATC":
                lower, upper = atc_bounds(ests["mu10_lower"], ests["mu10_upper"], data)
            elif effect == "ATT":
                table = _att_only(ests["mu01_lower"], ests["mu01_upper"], data)
                lower, upper = table[("ATT", "lower")], table[("ATT", "upper")]
            else:
                table = att_ate_bounds(ests["mu01_lower"], ests["mu01_upper"],
                                       ests["mu10_lower"], ests["mu10_upper"], data)
                lower, upper = table[("ATE", "lower")], table[("ATE", "upper")]
        except Exception as exc:  # per-budget gaps, not aborts
            failures.append(f"rho={rho:g}: {exc}")
            continue
        lo_pt[i], up_pt[i] = lower.point, upper.point
        lo_sg[i], up_sg[i] = lower.sigma_hat, upper.sigma_hat
        lcb[i] = lower.point + z_lo * lower.sigma_hat / sqrt_n
        ucb[i] = upper.point + z_hi * upper.sigma_hat / sqrt_n

    curve = SensitivityCurve(
        effect=effect, level=level, rho_grid=rho_grid,
        lcb=lcb, ucb=ucb, lcb_monotone=lcb.copy(), ucb_monotone=ucb.copy(),
        lower_points=lo_pt, upper_points=up_pt, lower_sigma=lo_sg, upper_sigma=up_sg,
        n=data.n, failures=tuple(failures),
    )
    return monotonize(curve)


def _att_only(mu01_lower, mu01_upper, data):
    from .effects import _compose

    out = {}
    for side, est in (("lower", mu01_upper), ("upper", mu01_lower)):
        y_trt = data.Y[est.treated_index]
        out[("ATT", side)] = _compose(
            "ATT", side, y_trt - est.comp_treated, -est.comp_control, est,
            {"mean_bound": est, "obs_mean_treated": float(np.mean(y_trt))})
    return out


def _running_min_skipnan(x: np.ndarray) -> np.ndarray:
    out = x.copy()
    best = math.inf
    for i, v in enumerate(x):
        if not math.isnan(v):
            best = min(best, v)
            out[i] = best
        # NaN gaps stay NaN
    return out


def monotonize(curve: SensitivityCurve) -> SensitivityCurve:
    """Repair the curve: running minimum of the LCB toward larger budgets,
    running maximum of the UCB; originals are preserved."""
    lcb_m = _running_min_skipnan(curve.lcb)
    ucb_m = -_running_min_skipnan(-curve.ucb)
    return replace(curve, lcb_monotone=lcb_m, ucb_monotone=ucb_m)


def invert(curve: SensitivityCurve, threshold: float = 0.0) -> InversionResult:
    """Smallest grid budget whose monotone interval contains ``threshold``."""
    hit = None
    for i, rho in enumerate(curve.rho_grid):
        lo, hi = curve.lcb_monotone[i], curve.ucb_monotone[i]
        if math.isnan(lo) or math.isnan(hi):
            continue
        if lo <= threshold <= hi:
            hit = i
            break
    if hit is None:
        return InversionResult(threshold=threshold, rho_hat=None,
                               neighbor_below=None, neighbor_above=None,
                               interpretation=(
                                   f"no budget on the grid yields an interval containing "
                                   f"{threshold:g}; the conclusion stands on this grid"))
    rho_hat = float(curve.rho_grid[hit])
    below = float(curve.rho_grid[hit - 1]) if hit > 0 else None
    above = float(curve.rho_grid[hit + 1]) if hit + 1 < len(curve.rho_grid) else None
    return InversionResult(
        threshold=threshold, rho_hat=rho_hat, neighbor_below=below, neighbor_above=above,
        interpretation=(
            f"either the effect's interval truly contains {threshold:g}, or confounding "
            f"of average strength at least {rho_hat:g} is needed to explain it away"),
    )
