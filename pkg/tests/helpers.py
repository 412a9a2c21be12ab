"""Shared oracles and utilities for the test suite."""

from __future__ import annotations

import numpy as np

from fsens.divergence import DivergenceSpec, make_spec
from fsens.dual import dual_loss

ALL_SPECS = [
    ("KL", None),
    ("ChiSquared", None),
    ("CressieRead", 2.0),
    ("CressieRead", 3.0),
    ("CressieRead", -1.0),
]


def finite_difference_gradient(spec: DivergenceSpec, rho, alpha, eta, y, h=1e-6):
    """Central finite differences of the dual loss in (alpha, eta)."""
    da = (dual_loss(spec, rho, alpha + h, eta, y) - dual_loss(spec, rho, alpha - h, eta, y)) / (2 * h)
    de = (dual_loss(spec, rho, alpha, eta + h, y) - dual_loss(spec, rho, alpha, eta - h, y)) / (2 * h)
    return da, de


def smooth_random_points(spec: DivergenceSpec, n: int, seed: int):
    """Random (alpha, eta, y) draws kept away from conjugate kinks and
    domain edges so finite differences are trustworthy."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        alpha = float(np.exp(rng.normal(0.0, 0.7)))
        eta = float(rng.normal(0.0, 2.0))
        y = float(rng.normal(0.0, 2.0))
        u = (y + eta) / (-alpha)
        if spec.name == "ChiSquared" and abs(u + 2.0) < 2e-2:
            continue
        if spec.name == "CressieRead":
            k = spec.k
            edge = -1.0 / (k - 1.0) if k > 1 else None
            if edge is not None and abs(u - edge) < 2e-2:
                continue
            if np.isfinite(spec.conj_domain_max) and u > spec.conj_domain_max - 0.1:
                continue
        if spec.name == "KL" and u > 30:
            continue
        out.append((alpha, eta, y))
    return out


def kl_spec():
    return make_spec("KL")


def chi2_spec():
    return make_spec("ChiSquared")


def random_discrete_instances(n_instances: int, seed: int, rho_range=(0.01, 2.0)):
    """Random finite-support instances with <= 6 atoms."""
    from fsens.dual import DiscreteInstance

    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_instances):
        m = int(rng.integers(2, 7))
        support = np.sort(rng.normal(0, 2, size=m))
        support += np.arange(m) * 1e-9  # enforce distinctness
        probs = rng.dirichlet(np.ones(m))
        probs = np.maximum(probs, 1e-4)
        probs = probs / probs.sum()
        rho = float(rng.uniform(*rho_range))
        r = float(rng.uniform(0.3, 2.5))
        out.append(DiscreteInstance(support=support, probs=probs, rho=rho, r=r))
    return out
