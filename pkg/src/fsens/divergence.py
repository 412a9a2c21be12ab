"""The f-divergence family parameterizing the sensitivity model.

A sensitivity model is indexed by a convex ``f`` with ``f(1) = 0`` and a
budget ``rho``.  Everything downstream only touches ``f`` through three
callables: ``f`` itself, its convex conjugate ``f*(s) = sup_{t>=0} {st - f(t)}``,
and the conjugate's derivative.  This module ships closed forms for the
Kullback-Leibler, Pearson chi-squared, and Cressie-Read families, plus a
numerical validator that certifies the closed forms against a direct
grid supremum.

Conventions:
  * ``f`` is defined on t >= 0, with ``f(0)`` taken as the right limit
    (may be ``inf``); negative t is a domain error.
  * ``f_star`` is total on the reals and returns ``inf`` above the
    conjugate's effective domain (which is bounded above for
    Cressie-Read k < 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "DivergenceSpec",
    "ValidationReport",
    "make_spec",
    "validate_spec",
    "gamma_to_rho",
]

_XLOGX_FLOOR = 1e-300  # below this t, t*log(t) is numerically 0


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class DivergenceSpec:
    """A convex f with f(1)=0, its conjugate, and the conjugate derivative.

    ``conj_domain_max`` is the supremum of the conjugate's effective domain;
    ``f_star`` returns ``inf`` strictly above it.  ``f_at_zero`` is the right
    limit f(0+), used by feasibility diagnostics.
    """

    name: str
    k: float | None
    f: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    f_star: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    f_star_prime: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    f_at_zero: float
    conj_domain_max: float

    def label(self) -> str:
        return self.name if self.k is None else f"{self.name}(k={self.k:g})"


@dataclass(frozen=True)
class ValidationReport:
    """Numerical certificate for a DivergenceSpec.

    Violations are reported, never raised; ``ok`` collects the verdict at
    the stated tolerances.
    """

    spec_label: str
    f_at_one: float
    max_convexity_violation: float
    max_fenchel_violation: float
    max_conjugate_mismatch: float
    max_conjugate_derivative_mismatch: float
    f_at_zero_error: float
    messages: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.messages


def _f_kl(t: np.ndarray) -> np.ndarray:
    t = _as_array(t)
    if np.any(t < 0):
        raise ValueError("f is only defined for t >= 0")
    out = np.where(t > _XLOGX_FLOOR, t * np.log(np.maximum(t, _XLOGX_FLOOR)), 0.0)
    return out


def _f_chi2(t: np.ndarray) -> np.ndarray:
    t = _as_array(t)
    if np.any(t < 0):
        raise ValueError("f is only defined for t >= 0")
    return (t - 1.0) ** 2


def _make_f_cressie_read(k: float) -> Callable[[np.ndarray], np.ndarray]:
    c = k * (k - 1.0)

    def f(t: np.ndarray) -> np.ndarray:
        t = _as_array(t)
        if np.any(t < 0):
            raise ValueError("f is only defined for t >= 0")
        with np.errstate(divide="ignore", over="ignore"):
            tk = np.power(t, k) if k > 0 else np.where(t > 0, np.power(np.maximum(t, 1e-300), k), np.inf)
        return (tk - k * t + k - 1.0) / c

    return f


def make_spec(name: str, k: float | None = None) -> DivergenceSpec:
    """Build a DivergenceSpec by name.

    Supported names: ``"KL"``, ``"ChiSquared"``, ``"CressieRead"`` (requires
    ``k`` not in {0, 1}).  Closed forms:

      KL:   f(t) = t log t,      f*(s) = exp(s - 1)
      chi2: f(t) = (t - 1)^2,    f*(s) = (s/2 + 1)_+^2 - 1
      CR_k: f(t) = (t^k - kt + k - 1) / (k(k-1)),
            f*(s) = ((1 + (k-1)s)_+^{k/(k-1)} - 1) / k on its domain.
    """
    if name == "KL":
        if k is not None:
            raise ValueError("KL takes no parameter k")

        def f_star(s):
            s = _as_array(s)
            return np.exp(np.minimum(s - 1.0, 700.0))

        def f_star_prime(s):
            s = _as_array(s)
            return np.exp(np.minimum(s - 1.0, 700.0))

        return DivergenceSpec("KL", None, _f_kl, f_star, f_star_prime,
                              f_at_zero=0.0, conj_domain_max=math.inf)

    if name == "ChiSquared":
        if k is not None:
            raise ValueError("ChiSquared takes no parameter k")

        def f_star(s):
            s = _as_array(s)
            return 0.25 * np.maximum(s + 2.0, 0.0) ** 2 - 1.0

        def f_star_prime(s):
            s = _as_array(s)
            return np.maximum(0.5 * s + 1.0, 0.0)

        return DivergenceSpec("ChiSquared", None, _f_chi2, f_star, f_star_prime,
                              f_at_zero=1.0, conj_domain_max=math.inf)

    if name == "CressieRead":
        if k is None or k in (0.0, 1.0):
            raise ValueError("CressieRead requires a real k not in {0, 1}")
        k = float(k)
        expo = k / (k - 1.0)

        if k > 1:
            # conjugate total on R; flat at -1/k below s = -1/(k-1)
            def f_star(s):
                s = _as_array(s)
                w = np.maximum(1.0 + (k - 1.0) * s, 0.0)
                return (np.power(w, expo) - 1.0) / k

            def f_star_prime(s):
                s = _as_array(s)
                w = np.maximum(1.0 + (k - 1.0) * s, 0.0)
                return np.power(w, 1.0 / (k - 1.0))

            dom_max = math.inf
        else:
            # k < 1 (and k != 0): f grows linearly, conjugate blows up at
            # s_max = 1/(1-k)
            s_max = 1.0 / (1.0 - k)

            def f_star(s):
                s = _as_array(s)
                w = 1.0 + (k - 1.0) * s
                out = np.full_like(s, np.inf)
                inside = w > 0
                with np.errstate(over="ignore"):
                    out[inside] = (np.power(w[inside], expo) - 1.0) / k
                if k < 0:
                    # at the domain edge the supremum is finite (approached,
                    # not attained); strictly above it is +inf
                    out[np.abs(w) <= 1e-12] = -1.0 / k
                return out

            def f_star_prime(s):
                s = _as_array(s)
                w = 1.0 + (k - 1.0) * s
                out = np.full_like(s, np.inf)
                inside = w > 0
                with np.errstate(over="ignore"):
                    out[inside] = np.power(w[inside], 1.0 / (k - 1.0))
                return out

            dom_max = s_max

        f_at_zero = 1.0 / k if k > 0 else math.inf
        return DivergenceSpec("CressieRead", k, _make_f_cressie_read(k), f_star,
                              f_star_prime, f_at_zero=f_at_zero, conj_domain_max=dom_max)

    raise ValueError(f"unknown divergence name {name!r}; expected KL, ChiSquared or CressieRead")


def _numeric_conjugate(spec: DivergenceSpec, s: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
    """Direct supremum of st - f(t) over t >= 0, by grid scan with adaptive
    range extension and local parabolic refinement around the argmax."""
    from scipy.optimize import minimize_scalar

    out = np.empty(len(s))
    for j, sj in enumerate(s):
        grid = t_grid
        # extend the grid while the maximum sits on the right edge
        for _ in range(80):
            vals = sj * grid - spec.f(grid)
            i = int(np.nanargmax(vals))
            if i < len(grid) - 1 or not np.isfinite(vals[i]):
                break
            grid = np.concatenate([grid, grid[-1] * np.array([2.0, 4.0, 8.0])])
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: -(sj * t - float(spec.f(np.array(t)))),
                                  bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
            out[j] = max(vals[i], -res.fun)
        else:
            out[j] = vals[i]
    return out


def gamma_to_rho(spec: DivergenceSpec, gamma: float) -> float:
    """Budget implied by a uniform odds-ratio bound Gamma >= 1.

    A model whose odds-ratio distortion is uniformly inside [1/Gamma, Gamma]
    satisfies the average condition with rho = max{f(1/Gamma), f(Gamma)}.
    """
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return float(max(spec.f(np.array(1.0 / gamma)), spec.f(np.array(float(gamma)))))


def validate_spec(
    spec: DivergenceSpec,
    s_grid: np.ndarray | None = None,
    t_grid: np.ndarray | None = None,
    tol_conjugate: float = 1e-4,
    tol_fenchel: float = 1e-10,
    tol_convexity: float = 1e-10,
    tol_derivative: float = 1e-5,
) -> ValidationReport:
    """Certify a spec's closed forms on sampling grids.

    Checks f(1)=0, midpoint convexity of f, the Fenchel-Young inequality,
    agreement of ``f_star`` with a direct supremum over the t grid, the
    conjugate derivative against central finite differences, and the
    recorded f(0+).  Grids default to dense coverage of s in [-50, 50]
    (clipped to the conjugate domain) and t in (0, 50].
    """
    if s_grid is None:
        hi = min(50.0, spec.conj_domain_max - 1e-6)
        s_grid = np.linspace(-50.0, hi, 801)
    if t_grid is None:
        t_grid = np.concatenate([np.geomspace(1e-8, 1.0, 2000), np.linspace(1.0, 50.0, 4000)[1:]])
    if len(s_grid) == 0 or len(t_grid) == 0:
        raise ValueError("validation grids must be nonempty")

    messages: list[str] = []

    f_at_one = float(spec.f(np.array(1.0)))
    if abs(f_at_one) > 1e-12:
        messages.append(f"f(1) = {f_at_one:.3e}, expected 0")

    # midpoint convexity on pairs from the t grid
    rng = np.random.default_rng(0)
    t1 = rng.choice(t_grid, size=400)
    t2 = rng.choice(t_grid, size=400)
    lam = rng.random(400)
    mid = spec.f(lam * t1 + (1 - lam) * t2)
    chord = lam * spec.f(t1) + (1 - lam) * spec.f(t2)
    finite = np.isfinite(mid) & np.isfinite(chord)
    conv_viol = float(np.max(np.maximum(mid - chord, 0.0)[finite], initial=0.0))
    if conv_viol > tol_convexity:
        messages.append(f"convexity violated by {conv_viol:.3e}")

    # conjugate against the direct sup, only where the closed form is finite;
    # mismatch is normalized by 1 + |f*| so huge conjugate values (KL at
    # large s) are compared at the precision float64 supports
    fstar = spec.f_star(s_grid)
    numeric = _numeric_conjugate(spec, s_grid, t_grid)
    finite = np.isfinite(fstar)
    conj_mismatch = float(np.max(
        np.abs(fstar[finite] - numeric[finite]) / (1.0 + np.abs(fstar[finite])), initial=0.0))
    if conj_mismatch > tol_conjugate:
        messages.append(f"conjugate mismatch {conj_mismatch:.3e} exceeds {tol_conjugate:.1e}")

    # Fenchel-Young on random (s, t) pairs
    ss = rng.choice(s_grid, size=600)
    tt = rng.choice(t_grid, size=600)
    gap = ss * tt - spec.f(tt) - spec.f_star(ss)
    gap = gap[np.isfinite(gap)]
    fy_viol = float(np.max(np.maximum(gap, 0.0), initial=0.0))
    if fy_viol > tol_fenchel:
        messages.append(f"Fenchel-Young violated by {fy_viol:.3e}")

    # conjugate derivative vs central differences, restricted to smooth regions:
    # bounded derivative scale and no curvature spike (kinks, domain edges)
    h = 1e-6
    s_in = s_grid[(s_grid > s_grid[0] + 10 * h) & (s_grid < s_grid[-1] - 10 * h)]
    fd = (spec.f_star(s_in + h) - spec.f_star(s_in - h)) / (2 * h)
    an = spec.f_star_prime(s_in)
    spike = np.abs(spec.f_star_prime(s_in + h) - 2 * an + spec.f_star_prime(s_in - h))
    ok = np.isfinite(fd) & np.isfinite(an)
    smooth = ok & (np.abs(an) < 1e3) & (spike < 1e-6 * (1.0 + np.abs(an)))
    der_mismatch = float(np.max(np.abs(fd[smooth] - an[smooth]), initial=0.0))
    if der_mismatch > tol_derivative:
        messages.append(f"conjugate derivative mismatch {der_mismatch:.3e}")

    # f(0+) against an evaluation near zero (fractional Cressie-Read powers
    # converge slowly, so widen the threshold by the residual t0^k term)
    t0 = 1e-20
    f_near_zero = float(spec.f(np.array(t0)))
    zero_tol = 1e-8
    if spec.name == "CressieRead" and spec.k is not None and 0 < spec.k < 1:
        zero_tol += 5 * t0 ** spec.k / abs(spec.k * (spec.k - 1.0))
    if math.isinf(spec.f_at_zero):
        zero_err = 0.0 if f_near_zero > 1e6 else math.inf
    else:
        zero_err = abs(f_near_zero - spec.f_at_zero)
    if zero_err > zero_tol:
        messages.append(f"f(0+) mismatch {zero_err:.3e}")

    return ValidationReport(
        spec_label=spec.label(),
        f_at_one=f_at_one,
        max_convexity_violation=conv_viol,
        max_fenchel_violation=fy_viol,
        max_conjugate_mismatch=conj_mismatch,
        max_conjugate_derivative_mismatch=der_mismatch,
        f_at_zero_error=zero_err,
        messages=tuple(messages),
    )
