"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -s`` to see the verdicts live.
The heavy Monte-Carlo criteria parallelize over local cores; everything is
seeded and reduces deterministically.
"""

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
import numpy as np

from fsens.divergence import make_spec, validate_spec
from fsens.dual import solve_pointwise_dual, primal_oracle_discrete
from fsens.effects import confidence_interval
from fsens.estimator import EstimatorConfig, estimate_bound, variance_estimate
from fsens.nuisance import shift_ratio
from fsens.sensitivity import compute_curve, invert
from fsens.simulation import (
    DgpConfig,
    coverage_experiment,
    generate,
    kl_truth,
    logistic_confounding_budget,
    oracle_influence_variance_kl,
    propensity,
)
from fsens._seeds import child_seed

from helpers import finite_difference_gradient, random_discrete_instances, smooth_random_points

WORKERS = min(8, os.cpu_count() or 1)
KL = make_spec("KL")


def report(criterion: int, ok: bool, detail: str):
    print(f"\nACCEPTANCE CRITERION {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


# ------------------------------------------------------------------ 1
def test_criterion_1_conjugate_correctness():
    t0 = time.time()
    worst = {}
    for name, k in (("KL", None), ("ChiSquared", None),
                    ("CressieRead", -1.0), ("CressieRead", 2.0), ("CressieRead", 3.0)):
        rep = validate_spec(make_spec(name, k))
        worst[rep.spec_label] = rep.max_conjugate_mismatch
    elapsed = time.time() - t0
    ok = max(worst.values()) < 1e-4 and elapsed < 5.0
    report(1, ok, f"max conjugate mismatch {max(worst.values()):.2e} over "
                   f"{list(worst)} in {elapsed:.2f}s (< 1e-4, < 5s)")


# ------------------------------------------------------------------ 2
def test_criterion_2_strong_duality():
    t0 = time.time()
    gaps = []
    for spec_name in ("KL", "ChiSquared"):
        spec = make_spec(spec_name)
        for inst in random_discrete_instances(50, seed=202):
            primal, _ = primal_oracle_discrete(spec, inst)
            dual = solve_pointwise_dual(spec, inst.rho, inst.support,
                                        eps=1e-9, weights=inst.probs)
            gaps.append(abs(-dual.value * inst.r - primal))
    elapsed = time.time() - t0
    ok = max(gaps) < 1e-4 and elapsed < 60.0
    report(2, ok, f"100 instances, max |dual - primal| = {max(gaps):.2e} "
                   f"in {elapsed:.1f}s (< 1e-4, < 60s)")


# ------------------------------------------------------------------ 3
def test_criterion_3_logistic_budget_integral():
    t0 = time.time()
    b1 = logistic_confounding_budget(1.0)
    b2 = logistic_confounding_budget(2.0)
    elapsed = time.time() - t0
    ok = 0.15 <= b1 <= 0.25 and 0.55 <= b2 <= 0.65 and elapsed < 1.0
    report(3, ok, f"budget(1)={b1:.4f} in [0.15,0.25], budget(2)={b2:.4f} "
                   f"in [0.55,0.65], {elapsed:.3f}s (< 1s)")


# ------------------------------------------------------------------ 4
def _crit4_worker(rep: int) -> tuple[bool, bool]:
    cfg = DgpConfig(n=2000, delta=0.0, seed=child_seed(400, "rep", rep))
    data = generate(cfg)
    ecfg = EstimatorConfig(seed=child_seed(401, "est", rep))
    lo = estimate_bound(data, KL, 1e-6, "mu10_lower", ecfg)
    up = estimate_bound(data, KL, 1e-6, "mu10_upper", ecfg, plan=lo.plan)
    p1_true = kl_truth(cfg).p1
    trt = data.arm_index(1)
    target = float(np.mean(shift_ratio(propensity(cfg, data.X[trt]), p1_true) * data.Y[trt]))
    ok_lo = abs(lo.point - target) <= 3 * lo.sigma_hat / math.sqrt(lo.n)
    ok_up = abs(up.point - target) <= 3 * up.sigma_hat / math.sqrt(up.n)
    return ok_lo, ok_up


def test_criterion_4_zero_budget_identification():
    t0 = time.time()
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        results = list(pool.map(_crit4_worker, range(100), chunksize=5))
    hits_lo = sum(r[0] for r in results)
    hits_up = sum(r[1] for r in results)
    elapsed = time.time() - t0
    ok = hits_lo >= 95 and hits_up >= 95 and elapsed < 600
    report(4, ok, f"lower {hits_lo}/100, upper {hits_up}/100 within 3 sigma/sqrt(n) "
                   f"of the oracle-reweighted mean (need >= 95), {elapsed:.0f}s (< 600s)")


# ------------------------------------------------------------------ 5
def test_criterion_5_desk_scale_coverage():
    t0 = time.time()
    cells = [DgpConfig(n=2000, delta=0.5, seed=0), DgpConfig(n=2000, delta=1.0, seed=0)]
    rows = coverage_experiment(cells, reps=200, level=0.95, workers=WORKERS, seed=505)
    elapsed = time.time() - t0
    details = []
    ok = elapsed < 7200
    for row in rows:
        for key in ("coverage_lower", "coverage_upper", "coverage_mean"):
            val = row[key]
            details.append(f"delta={row['delta']}: {key}={val:.3f}")
            ok = ok and 0.90 <= val <= 0.99
        ok = ok and row["failures"] == 0
    report(5, ok, "; ".join(details) + f" (all in [0.90, 0.99]); {elapsed:.0f}s (< 2h)")


# ------------------------------------------------------------------ 6
def _frozen_theta(Xq):
    n = np.atleast_2d(Xq).shape[0]
    return np.full(n, 1.5), np.full(n, -1.0)


def _crit6_worker(rep: int) -> bool:
    cfg = DgpConfig(n=2000, delta=0.5, seed=child_seed(600, "rep", rep))
    data = generate(cfg)
    truth_lower = kl_truth(cfg, 0.125).mu10_lower
    est = estimate_bound(data, KL, 0.125, "mu10_lower",
                         EstimatorConfig(seed=child_seed(601, "est", rep),
                                         theta_override=_frozen_theta))
    lcb = confidence_interval(est, 0.95, "one_sided_bound", side="lower").lo
    return lcb <= truth_lower


def test_criterion_6_one_side_validity_frozen_erm():
    t0 = time.time()
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        hits = sum(pool.map(_crit6_worker, range(200), chunksize=5))
    elapsed = time.time() - t0
    ok = hits >= 0.90 * 200
    report(6, ok, f"one-sided LCB covered the true lower bound in {hits}/200 "
                   f"frozen-ERM replicates (need >= 180), {elapsed:.0f}s")


# ------------------------------------------------------------------ 7
def _oracle_h_factory_kl(cfg: DgpConfig, rho: float):
    """Closed-form conditional mean of the fitted loss under the design."""

    def factory(theta_fn, rho_in, spec, y_sign):
        def h(Xq):
            Xq = np.atleast_2d(Xq)
            alpha, eta = theta_fn(Xq)
            m = y_sign * cfg.mean1(Xq)
            s = cfg.sigma(Xq)
            expo = -(m + eta) / alpha + s**2 / (2 * alpha**2) - 1.0
            return alpha * np.exp(np.minimum(expo, 500.0)) + eta + alpha * rho_in

        return h

    return factory


def _crit7_worker(args) -> bool:
    scenario, rep = args
    cfg = DgpConfig(n=5000, delta=0.5, seed=child_seed(700, scenario, rep))
    data = generate(cfg)
    truth = kl_truth(cfg, 0.125)
    if scenario == "broken_h":
        p1 = truth.p1

        def r_oracle(Xq, _cfg=cfg, _p1=p1):
            return shift_ratio(propensity(_cfg, Xq), _p1)

        ecfg = EstimatorConfig(seed=child_seed(701, scenario, rep),
                               r_override=r_oracle, h_override="zero")
    else:  # broken r-hat with the oracle loss regression
        ecfg = EstimatorConfig(seed=child_seed(701, scenario, rep),
                               r_override=lambda Xq: np.ones(np.atleast_2d(Xq).shape[0]),
                               h_override=_oracle_h_factory_kl(cfg, 0.125))
    est = estimate_bound(data, KL, 0.125, "mu10_lower", ecfg)
    return abs(est.point - truth.mu10_lower) < 3 * est.sigma_hat / math.sqrt(est.n)


def test_criterion_7_double_robustness():
    t0 = time.time()
    jobs = [("broken_h", r) for r in range(100)] + [("broken_r", r) for r in range(100)]
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        results = list(pool.map(_crit7_worker, jobs, chunksize=5))
    hits_h = sum(results[:100])
    hits_r = sum(results[100:])
    elapsed = time.time() - t0
    ok = hits_h >= 90 and hits_r >= 90
    report(7, ok, f"broken h-hat: {hits_h}/100, broken r-hat: {hits_r}/100 within "
                   f"3 sigma/sqrt(n) of the oracle bound (need >= 90), {elapsed:.0f}s")


# ------------------------------------------------------------------ 8
def test_criterion_8_monotone_curve_and_inversion():
    t0 = time.time()
    cfg = DgpConfig(n=5000, delta=0.5, seed=88)
    data = generate(cfg)
    truth = kl_truth(cfg)
    grid = np.round(np.arange(0.05, 1.0001, 0.05), 10)
    curve = compute_curve(data, KL, grid, effect="ATC", level=0.95,
                          cfg=EstimatorConfig(seed=8))
    mono = bool(np.all(np.diff(curve.lcb_monotone) <= 1e-12))
    zero_cross = invert(curve, 0.0)
    truth_cross = invert(curve, truth.atc)
    elapsed = time.time() - t0
    ok = (mono and not curve.failures
          and zero_cross.rho_hat is not None
          and truth_cross.rho_hat is not None
          and truth_cross.rho_hat <= zero_cross.rho_hat)
    report(8, ok, f"LCB monotone={mono}; truth-crossing rho_hat="
                   f"{truth_cross.rho_hat} <= zero-crossing rho_hat_0={zero_cross.rho_hat} "
                   f"(reference run: 0.1 and 0.65; grid-step agreement reported, "
                   f"not asserted), {elapsed:.0f}s")


# ------------------------------------------------------------------ 9
def test_criterion_9_variance_formula():
    t0 = time.time()
    fixture = variance_estimate([0.0, 2.0], [1.0, 3.0], 0.5, 0.5)
    cfg = DgpConfig(n=15000, delta=0.5, seed=99)
    data = generate(cfg)
    # a smoother loss regression for this comparison: the min-leaf-5 default
    # adds its own prediction noise to the components, which is part of
    # sigma_hat but not of the oracle influence variance
    from fsens.nuisance import RegressorSpec

    est = estimate_bound(data, KL, 0.125, "mu10_lower",
                         EstimatorConfig(seed=9, regressor=RegressorSpec(min_leaf=20)))
    oracle_var = oracle_influence_variance_kl(cfg, 0.125, n_mc=1_000_000, seed=909)
    ratio = est.sigma_hat**2 / oracle_var
    elapsed = time.time() - t0
    ok = fixture == 4.0 and 0.9 <= ratio <= 1.1
    report(9, ok, f"hand fixture = {fixture} (exact 4); sigma_hat^2 / MC oracle "
                   f"variance = {ratio:.3f} at n=15000 (within 10%), {elapsed:.0f}s")


# ------------------------------------------------------------------ 10
def test_criterion_10_gradient_checks():
    t0 = time.time()
    worst = {}
    for name, k in (("KL", None), ("ChiSquared", None),
                    ("CressieRead", 2.0), ("CressieRead", 3.0), ("CressieRead", -1.0)):
        spec = make_spec(name, k)
        w = 0.0
        for alpha, eta, y in smooth_random_points(spec, 1000, seed=1010):
            from fsens.dual import dual_loss_gradient

            da, de = dual_loss_gradient(spec, 0.25, alpha, eta, y)
            fa, fe = finite_difference_gradient(spec, 0.25, alpha, eta, y)
            w = max(w, abs(da - fa) / (1 + abs(fa)), abs(de - fe) / (1 + abs(fe)))
        worst[spec.label()] = w
    elapsed = time.time() - t0
    ok = max(worst.values()) < 1e-4
    report(10, ok, f"1000 random points per divergence, worst relative gradient "
                    f"error {max(worst.values()):.2e} (< 1e-4), {elapsed:.0f}s")
