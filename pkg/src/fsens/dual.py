"""Dual loss, pointwise dual solver, and a discrete primal certifying oracle.

The bound on a counterfactual conditional mean under a divergence budget
``rho`` is the optimal value of a two-parameter convex program: minimize

    l(alpha, eta, y) = alpha * f*((y + eta) / (-alpha)) + eta + alpha * rho

in expectation over the observed conditional law, over alpha > 0 and real
eta.  Minus the optimal value (times the covariate-shift weight) is the
lower bound on the shifted mean.  ``solve_pointwise_dual`` performs that
minimization on a sample; ``primal_oracle_discrete`` solves the primal
program directly on a finite support, certifying strong duality in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._seeds import make_rng
from .divergence import DivergenceSpec

__all__ = [
    "OptimizerConfig",
    "DualPoint",
    "DiscreteInstance",
    "NumericalDivergenceError",
    "dual_loss",
    "dual_loss_gradient",
    "solve_pointwise_dual",
    "primal_oracle_discrete",
]


class NumericalDivergenceError(RuntimeError):
    """The dual objective diverged below the guard floor.

    Signals an f whose conjugate violates the growth conditions the dual
    representation needs (e.g. non-smooth conjugates with linear tails).
    """


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for the simplex search + gradient polish used throughout.

    ``restarts`` counts optimization starts (the first is the scale-aware
    initialization, the rest are jittered).  The simplex phase is budgeted;
    the polish phase runs a bounded quasi-Newton refinement with analytic
    gradients from the same start.
    """

    restarts: int = 5
    nm_maxfev: int | None = None
    polish: bool = True
    polish_maxiter: int = 500
    jitter: float = 0.5
    seed: int = 0
    divergence_floor: float = -1e12


@dataclass(frozen=True)
class DualPoint:
    """Minimizer of the sample dual objective at a fixed covariate point."""

    alpha: float
    eta: float
    value: float
    gradient_norm: float
    floor_hit: bool = False
    restart_values: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class DiscreteInstance:
    """A finite-support conditional law with budget and shift weight.

    ``probs`` must be positive and sum to one; ``r`` is the local
    covariate-shift weight (the target measure carries mass r relative to
    the source at this covariate value).
    """

    support: np.ndarray
    probs: np.ndarray
    rho: float
    r: float = 1.0

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        if support.ndim != 1 or probs.shape != support.shape:
            raise ValueError("support and probs must be 1-d arrays of equal length")
        if len(np.unique(support)) != len(support):
            raise ValueError("support values must be distinct")
        if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be positive and sum to 1 within 1e-12")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.r <= 0:
            raise ValueError("r must be positive")


def _loss_terms(spec: DivergenceSpec, rho: float, alpha, eta, y) -> np.ndarray:
    u = (np.asarray(y, dtype=float) + eta) / (-alpha)
    return alpha * spec.f_star(u) + eta + alpha * rho


def dual_loss(spec: DivergenceSpec, rho: float, alpha: float, eta: float, y) -> float | np.ndarray:
    """Evaluate l(alpha, eta, y); vectorized over ``y``.

    Jointly convex in (alpha, eta) for each y.  Raises for alpha <= 0.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    out = _loss_terms(spec, rho, float(alpha), float(eta), y)
    return float(out) if np.isscalar(y) else out


def dual_loss_gradient(
    spec: DivergenceSpec, rho: float, alpha: float, eta: float, y
) -> tuple[float | np.ndarray, float | np.ndarray]:
    """Analytic gradient of the dual loss in (alpha, eta).

    With u = (y + eta) / (-alpha):
        d/d(alpha) = f*(u) - u f*'(u) + rho
        d/d(eta)   = 1 - f*'(u)
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    y_arr = np.asarray(y, dtype=float)
    u = (y_arr + eta) / (-alpha)
    fsu = spec.f_star(u)
    fpu = spec.f_star_prime(u)
    d_alpha = fsu - u * fpu + rho
    d_eta = 1.0 - fpu
    if np.isscalar(y):
        return float(d_alpha), float(d_eta)
    return d_alpha, d_eta


def _objective_and_grad(spec, rho, alpha, eta, y, w):
    """Weighted dual objective and gradient, with a smooth quadratic
    penalty past the conjugate domain so line searches stay finite.

    With u = (y + eta)/(-alpha): du/d(alpha) = -u/alpha, du/d(eta) = -1/alpha.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        u = (y + eta) / (-alpha)
        s_cap = spec.conj_domain_max - 1e-9
        inside = u < s_cap
        u_in = np.minimum(u, s_cap)
        over = np.maximum(u - s_cap, 0.0)
        fsu = spec.f_star(u_in)
        fpu = spec.f_star_prime(u_in)
        dpen = 2e6 * over
        loss = float(np.dot(w, alpha * fsu + 1e6 * over**2)) + eta + alpha * rho
        per_alpha = np.where(inside, fsu - u_in * fpu, fsu + dpen * (-u / alpha))
        per_eta = np.where(inside, 1.0 - fpu, 1.0 - dpen / alpha)
        d_alpha = float(np.dot(w, per_alpha)) + rho
        d_eta = float(np.dot(w, per_eta))
    return loss, d_alpha, d_eta


def _exact_objective(spec, rho, alpha, eta, y, w) -> float:
    vals = _loss_terms(spec, rho, alpha, eta, y)
    return float(np.dot(w, vals)) if np.all(np.isfinite(vals)) else math.inf


def solve_pointwise_dual(
    spec: DivergenceSpec,
    rho: float,
    y_samples,
    eps: float = 1e-3,
    opt: OptimizerConfig | None = None,
    weights=None,
) -> DualPoint:
    """Minimize the sample-average dual loss over alpha >= eps, eta in R.

    ``-r * value`` is the pointwise lower bound on the shifted conditional
    mean when the local shift weight is r.  Upper bounds follow by negating
    the sample and the result.

    Uses a budgeted simplex search in (log(alpha - eps), eta) with
    ``opt.restarts`` starts, then a bounded quasi-Newton polish in
    (alpha, eta) with analytic gradients.
    """
    y = np.asarray(y_samples, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("y_samples must be nonempty")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if rho <= 0:
        raise ValueError("rho must be positive")
    opt = opt or OptimizerConfig()
    if weights is None:
        w = np.full(y.shape, 1.0 / y.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != y.shape or np.any(w < 0):
            raise ValueError("weights must be nonnegative and match y_samples")
        w = w / w.sum()

    q75, q25 = np.quantile(y, [0.75, 0.25])
    alpha0 = max(eps, q75 - q25)
    eta0 = -float(np.median(y))
    rng = make_rng(opt.seed, "pointwise-dual")

    def nm_obj(z):
        a = eps + math.exp(min(z[0], 40.0))
        val = _exact_objective(spec, rho, a, z[1], y, w)
        if val < opt.divergence_floor:
            raise NumericalDivergenceError(
                f"dual objective fell below {opt.divergence_floor:.1e} at alpha={a:.3e}"
            )
        return val

    def polish_obj(z):
        loss, da, de = _objective_and_grad(spec, rho, z[0], z[1], y, w)
        return loss, np.array([da, de])

    scale = max(1.0, float(np.std(y)))
    best = None
    restart_values = []
    maxfev = opt.nm_maxfev or 400
    for i in range(max(1, opt.restarts)):
        if i == 0:
            a_i, e_i = alpha0, eta0
        else:
            a_i = max(eps, alpha0 * math.exp(opt.jitter * rng.standard_normal()))
            e_i = eta0 + opt.jitter * scale * rng.standard_normal()
        z0 = np.array([math.log(max(a_i - eps, 1e-12)), e_i])
        res = optimize.minimize(nm_obj, z0, method="Nelder-Mead",
                                options={"maxfev": maxfev, "xatol": 1e-8, "fatol": 1e-12})
        a_nm = eps + math.exp(min(res.x[0], 40.0))
        cand = (res.fun, a_nm, res.x[1])
        if opt.polish:
            pol = optimize.minimize(polish_obj, np.array([a_nm, res.x[1]]), jac=True,
                                    method="L-BFGS-B", bounds=[(eps, None), (None, None)],
                                    options={"maxiter": opt.polish_maxiter,
                                             "ftol": 1e-14, "gtol": 1e-10})
            val = _exact_objective(spec, rho, pol.x[0], pol.x[1], y, w)
            if val <= cand[0]:
                cand = (val, float(pol.x[0]), float(pol.x[1]))
        restart_values.append(cand[0])
        if best is None or cand[0] < best[0]:
            best = cand

    value, alpha, eta = best
    if value < opt.divergence_floor:
        raise NumericalDivergenceError(f"dual objective diverged to {value:.3e}")
    da, de = dual_loss_gradient(spec, rho, alpha, eta, y)
    g_alpha = float(np.dot(w, da))
    g_eta = float(np.dot(w, de))
    floor_hit = alpha <= eps * (1 + 1e-9)
    if floor_hit:
        g_alpha = min(g_alpha, 0.0)  # projected onto the feasible direction
    grad_norm = math.hypot(g_alpha, g_eta)
    return DualPoint(alpha=alpha, eta=eta, value=value, gradient_norm=grad_norm,
                     floor_hit=floor_hit, restart_values=tuple(restart_values))


def _kl_tilt_oracle(inst: DiscreteInstance) -> tuple[float, np.ndarray]:
    """Exact KL primal: the optimal reweighting is an exponential tilt
    q_i \\propto p_i exp(-lam * y_i) with the divergence constraint binding."""
    y, p, rho, r = inst.support, inst.probs, inst.rho, inst.r

    def tilt(lam):
        logq = -lam * (y - y.min())
        q = p * np.exp(logq - np.max(logq))
        q /= q.sum()
        return q

    def kl(lam):
        q = tilt(lam)
        pos = q > 0
        return float(np.sum(q[pos] * np.log(q[pos] / p[pos])))

    argmin_mass = float(p[y == y.min()].sum())
    kl_max = -math.log(argmin_mass)
    if rho >= kl_max - 1e-13:
        q = np.where(y == y.min(), p / argmin_mass, 0.0)
        return float(r * y.min()), r * q / p

    lo, hi = 0.0, 1.0
    while kl(hi) < rho:
        hi *= 2.0
        if hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if kl(mid) < rho:
            lo = mid
        else:
            hi = mid
    q = tilt(0.5 * (lo + hi))
    return float(r * np.dot(q, y)), r * q / p


def _f_prime_numeric(spec: DivergenceSpec, t: np.ndarray) -> np.ndarray:
    h = 1e-7 * np.maximum(1.0, np.abs(t))
    lo = np.maximum(t - h, 1e-12)
    return (spec.f(t + h) - spec.f(lo)) / (t + h - lo)


def primal_oracle_discrete(spec: DivergenceSpec, inst: DiscreteInstance) -> tuple[float, np.ndarray]:
    """Solve the discrete primal program exactly.

        min  sum_i p_i L_i y_i
        s.t. sum_i p_i L_i = r,  sum_i p_i f(L_i / r) <= rho,  L_i >= 0

    Returns the optimal value and an optimal L.  KL instances are solved
    through the exponential-tilt family (closed form up to a scalar
    bisection); other divergences through a constrained NLP from several
    feasible starts.  L == r is always feasible (f(1) = 0), so the program
    cannot be infeasible for rho >= 0.
    """
    y, p, rho, r = inst.support, inst.probs, inst.rho, inst.r
    if y.size == 1:
        return float(r * y[0]), np.array([r])
    if rho == 0.0:
        # f(1) = 0 forces the unshifted weighting
        return float(r * np.dot(p, y)), np.full(y.size, r)
    if spec.name == "KL":
        return _kl_tilt_oracle(inst)

    # variables w_i = L_i / r:  min r * sum p_i w_i y_i
    #   s.t. sum p_i w_i = 1, sum p_i f(w_i) <= rho, w_i >= 0
    obj_vec = r * p * y

    def objective(w):
        return float(np.dot(obj_vec, w))

    def objective_jac(w):
        return obj_vec

    def div_con(w):
        return rho - float(np.dot(p, spec.f(np.maximum(w, 0.0))))

    def div_jac(w):
        return -p * _f_prime_numeric(spec, np.maximum(w, 1e-12))

    constraints = [
        {"type": "eq", "fun": lambda w: float(np.dot(p, w)) - 1.0, "jac": lambda w: p},
        {"type": "ineq", "fun": div_con, "jac": div_jac},
    ]
    w_floor = 1e-12 if math.isinf(spec.f_at_zero) else 0.0
    bounds = [(w_floor, None)] * y.size

    # feasible starts: uniform, and pushes toward the argmin-y vertex
    starts = [np.ones(y.size)]
    vertex = np.where(y == y.min(), 1.0, 0.0)
    vertex = vertex / np.dot(p, vertex)
    for s in (0.9, 0.5, 0.2):
        cand = (1 - s) * np.ones(y.size) + s * vertex
        if div_con(cand) >= 0:
            starts.append(cand)
            break

    best_val, best_w = math.inf, np.ones(y.size)
    for w0 in starts:
        res = optimize.minimize(objective, w0, jac=objective_jac, bounds=bounds,
                                constraints=constraints, method="SLSQP",
                                options={"maxiter": 1000, "ftol": 1e-14})
        w = np.maximum(res.x, 0.0)
        mass_err = abs(float(np.dot(p, w)) - 1.0)
        feasible = mass_err < 1e-8 and div_con(w) > -1e-8
        if feasible and res.fun < best_val:
            best_val, best_w = float(res.fun), w
    if not math.isfinite(best_val):
        raise RuntimeError("primal oracle failed to find a feasible solution")
    return best_val, r * best_w
