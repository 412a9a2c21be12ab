"""Effect bounds (ATC/ATT/ATE) composed from counterfactual-mean bounds,
and Wald confidence intervals.

Compositions are exact at the level of stored per-unit components:

    ATC in [mu10_lower - mean(Y | T=0),  mu10_upper - mean(Y | T=0)]
    ATT in [mean(Y | T=1) - mu01_upper,  mean(Y | T=1) - mu01_lower]
    ATE side = p1 * ATT side + p0 * ATC side

with empirical arm fractions, and each composed estimator's variance is
the usual two-arm pooled formula applied to the composed components.

Normal quantiles come from a rational approximation (Wichura's AS 241)
rather than a libm special function, so golden outputs are bit-stable
across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimator import BoundEstimate, Dataset, variance_estimate

__all__ = [
    "EffectBound",
    "ConfidenceInterval",
    "normal_quantile",
    "atc_bounds",
    "att_ate_bounds",
    "confidence_interval",
]


def normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF, AS 241 (PPND16); |error| < 1e-9."""
    if not 0.0 < p < 1.0:
        if p == 0.0:
            return -math.inf
        if p == 1.0:
            return math.inf
        raise ValueError(f"p must lie in [0, 1], got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0 else val


@dataclass(frozen=True)
class EffectBound:
    """One side of a treatment-effect identification interval."""

    effect: str
    side: str
    point: float
    sigma_hat: float
    n: int
    p1_hat: float
    p0_hat: float
    comp_treated: np.ndarray = field(repr=False)
    comp_control: np.ndarray = field(repr=False)
    components: dict = field(repr=False, default_factory=dict)

    @property
    def half_width(self) -> float:
        return self.sigma_hat / math.sqrt(self.n)


@dataclass(frozen=True)
class ConfidenceInterval:
    kind: str
    level: float
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def _check_shared_plan(*estimates: BoundEstimate):
    first = estimates[0]
    for other in estimates[1:]:
        if not first.plan.same_split(other.plan):
            raise ValueError("bound estimates must share one fold plan")


def _compose(effect: str, side: str, comp_t, comp_c, ref: BoundEstimate, components) -> EffectBound:
    point = float(np.mean(comp_t) + np.mean(comp_c))
    sigma = math.sqrt(max(variance_estimate(comp_t, comp_c, ref.p1_hat, ref.p0_hat), 0.0))
    return EffectBound(effect=effect, side=side, point=point, sigma_hat=sigma,
                       n=ref.n, p1_hat=ref.p1_hat, p0_hat=ref.p0_hat,
                       comp_treated=np.asarray(comp_t), comp_control=np.asarray(comp_c),
                       components=components)


def atc_bounds(mu10_lower: BoundEstimate, mu10_upper: BoundEstimate,
               data: Dataset) -> tuple[EffectBound, EffectBound]:
    """ATC bounds: subtract the observed control mean from the mu10 bounds.

    The control-arm influence component gains the observed outcome, so the
    Wald variance accounts for the subtracted mean.
    """
    if mu10_lower.target != "mu10_lower" or mu10_upper.target != "mu10_upper":
        raise ValueError("pass the mu10_lower and mu10_upper estimates, in that order")
    _check_shared_plan(mu10_lower, mu10_upper)
    out = []
    for est, side in ((mu10_lower, "lower"), (mu10_upper, "upper")):
        y_ctrl = data.Y[est.control_index]
        comp_c = est.comp_control - y_ctrl
        out.append(_compose("ATC", side, est.comp_treated, comp_c, est,
                            {"mean_bound": est, "obs_mean_control": float(np.mean(y_ctrl))}))
    return out[0], out[1]


def att_ate_bounds(
    mu01_lower: BoundEstimate,
    mu01_upper: BoundEstimate,
    mu10_lower: BoundEstimate,
    mu10_upper: BoundEstimate,
    data: Dataset,
) -> dict[tuple[str, str], EffectBound]:
    """ATT, ATC and ATE bounds from the four counterfactual-mean bounds.

    Returns a dict keyed by (effect, side).  The ATE combination uses the
    empirical arm fractions, so its point is exactly
    p1 * ATT + p0 * ATC on each side.
    """
    for est, want in ((mu01_lower, "mu01_lower"), (mu01_upper, "mu01_upper"),
                      (mu10_lower, "mu10_lower"), (mu10_upper, "mu10_upper")):
        if est.target != want:
            raise ValueError(f"expected {want}, got {est.target}")
    _check_shared_plan(mu01_lower, mu01_upper, mu10_lower, mu10_upper)

    atc_lo, atc_up = atc_bounds(mu10_lower, mu10_upper, data)
    out: dict[tuple[str, str], EffectBound] = {
        ("ATC", "lower"): atc_lo, ("ATC", "upper"): atc_up,
    }
    # ATT lower subtracts the upper bound on E[Y(0) | T=1] and vice versa
    for side, est in (("lower", mu01_upper), ("upper", mu01_lower)):
        y_trt = data.Y[est.treated_index]
        comp_t = y_trt - est.comp_treated
        comp_c = -est.comp_control
        out[("ATT", side)] = _compose("ATT", side, comp_t, comp_c, est,
                                      {"mean_bound": est,
                                       "obs_mean_treated": float(np.mean(y_trt))})
    p1, p0 = mu10_lower.p1_hat, mu10_lower.p0_hat
    for side in ("lower", "upper"):
        att, atc = out[("ATT", side)], out[("ATC", side)]
        if not np.array_equal(att.comp_treated.shape, atc.comp_treated.shape):
            raise ValueError("component shapes diverge between ATT and ATC")
        comp_t = p1 * att.comp_treated + p0 * atc.comp_treated
        comp_c = p1 * att.comp_control + p0 * atc.comp_control
        out[("ATE", side)] = _compose("ATE", side, comp_t, comp_c, mu10_lower,
                                      {"ATT": att, "ATC": atc, "p1_hat": p1, "p0_hat": p0})
    return out


def confidence_interval(
    bound,
    level: float = 0.95,
    kind: str = "two_sided_bound",
    upper=None,
    side: str | None = None,
) -> ConfidenceInterval:
    """Wald interval(s) from a bound estimate.

    two_sided_bound: [pt + z_{(1-L)/2} s/sqrt(n), pt + z_{(1+L)/2} s/sqrt(n)]
    one_sided_bound: lower-side bounds get [pt + z_{1-L} s/sqrt(n), +inf),
                     upper-side get (-inf, pt + z_L s/sqrt(n)]
    mean_interval:   left endpoint of the lower bound's two-sided interval,
                     right endpoint of the upper bound's (pass ``upper``).
    """
    if not 0.5 < level < 1.0:
        raise ValueError(f"level must lie in (0.5, 1), got {level}")
    sigma = getattr(bound, "sigma_hat", None)
    if sigma is None or not math.isfinite(sigma):
        raise ValueError("bound has no usable sigma_hat")
    half = bound.sigma_hat / math.sqrt(bound.n)

    if kind == "two_sided_bound":
        return ConfidenceInterval(kind, level,
                                  bound.point + normal_quantile((1 - level) / 2) * half,
                                  bound.point + normal_quantile((1 + level) / 2) * half)
    if kind == "one_sided_bound":
        which = side or _infer_side(bound)
        if which == "lower":
            return ConfidenceInterval(kind, level,
                                      bound.point + normal_quantile(1 - level) * half, math.inf)
        return ConfidenceInterval(kind, level,
                                  -math.inf, bound.point + normal_quantile(level) * half)
    if kind == "mean_interval":
        if upper is None:
            raise ValueError("mean_interval needs both the lower and upper bound estimates")
        half_up = upper.sigma_hat / math.sqrt(upper.n)
        return ConfidenceInterval(kind, level,
                                  bound.point + normal_quantile((1 - level) / 2) * half,
                                  upper.point + normal_quantile((1 + level) / 2) * half_up)
    raise ValueError(f"unknown interval kind {kind!r}")


def _infer_side(bound) -> str:
    side = getattr(bound, "side", None)
    if side in ("lower", "upper"):
        return side
    target = getattr(bound, "target", "")
    if target.endswith("lower"):
        return "lower"
    if target.endswith("upper"):
        return "upper"
    raise ValueError("cannot infer bound side; pass side='lower' or 'upper'")
