import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsens.divergence import DivergenceSpec, gamma_to_rho, make_spec, validate_spec

from helpers import ALL_SPECS


def test_kl_closed_forms():
    spec = make_spec("KL")
    assert spec.f(np.array(1.0)) == pytest.approx(0.0, abs=1e-15)
    assert spec.f_star(np.array(0.0)) == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert spec.f_at_zero == 0.0


def test_chi2_closed_forms():
    spec = make_spec("ChiSquared")
    assert spec.f(np.array(2.0)) == pytest.approx(1.0)
    # sup_t {2t - (t-1)^2} is attained at t = 2 with value 3
    assert spec.f_star(np.array(2.0)) == pytest.approx(3.0)
    # continuous flat tail at -1 below s = -2
    assert spec.f_star(np.array(-5.0)) == pytest.approx(-1.0)
    assert spec.f_at_zero == 1.0


def test_cressie_read_closed_forms():
    spec = make_spec("CressieRead", 2.0)
    assert spec.f(np.array(3.0)) == pytest.approx(2.0)  # (t-1)^2/2 at t=3
    assert spec.f_at_zero == pytest.approx(0.5)
    spec3 = make_spec("CressieRead", 3.0)
    assert spec3.f_at_zero == pytest.approx(1.0 / 3.0)
    specm1 = make_spec("CressieRead", -1.0)
    assert math.isinf(specm1.f_at_zero)
    # conjugate domain is bounded above for k < 1
    assert specm1.conj_domain_max == pytest.approx(0.5)
    assert math.isinf(float(specm1.f_star(np.array(1.0))))


def test_make_spec_errors():
    with pytest.raises(ValueError):
        make_spec("TotalVariation")
    with pytest.raises(ValueError):
        make_spec("CressieRead")
    with pytest.raises(ValueError):
        make_spec("CressieRead", 1.0)
    with pytest.raises(ValueError):
        make_spec("KL", 2.0)


def test_f_domain_error():
    spec = make_spec("KL")
    with pytest.raises(ValueError):
        spec.f(np.array(-0.5))


@pytest.mark.parametrize("name,k", ALL_SPECS)
def test_validate_shipped_specs(name, k):
    report = validate_spec(make_spec(name, k))
    assert report.ok, report.messages
    assert report.max_conjugate_mismatch < 1e-4
    assert report.max_fenchel_violation < 1e-10
    assert report.f_at_zero_error < 1e-8


def test_validate_flags_f_one_violation():
    base = make_spec("KL")
    broken = DivergenceSpec(
        name="KL", k=None,
        f=lambda t: base.f(t) + 0.1,
        f_star=base.f_star, f_star_prime=base.f_star_prime,
        f_at_zero=0.1, conj_domain_max=math.inf,
    )
    report = validate_spec(broken)
    assert not report.ok
    assert any("f(1)" in msg for msg in report.messages)


def test_gamma_to_rho_values():
    assert gamma_to_rho(make_spec("KL"), 1.0) == pytest.approx(0.0, abs=1e-15)
    assert gamma_to_rho(make_spec("ChiSquared"), 1.0) == pytest.approx(0.0, abs=1e-15)
    assert gamma_to_rho(make_spec("KL"), 2.0) == pytest.approx(2 * math.log(2), rel=1e-12)
    assert gamma_to_rho(make_spec("ChiSquared"), 3.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        gamma_to_rho(make_spec("KL"), 0.9)


@pytest.mark.parametrize("name,k", ALL_SPECS)
def test_gamma_to_rho_nondecreasing(name, k):
    spec = make_spec(name, k)
    gammas = np.linspace(1.0, 8.0, 40)
    vals = [gamma_to_rho(spec, g) for g in gammas]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@given(s=st.floats(-20, 4.9), t=st.floats(1e-6, 40))
@settings(max_examples=200, deadline=None)
def test_fenchel_young_kl(s, t):
    spec = make_spec("KL")
    assert s * t <= float(spec.f(np.array(t))) + float(spec.f_star(np.array(s))) + 1e-10


@given(s=st.floats(-40, 40), t=st.floats(0.0, 40))
@settings(max_examples=200, deadline=None)
def test_fenchel_young_chi2(s, t):
    spec = make_spec("ChiSquared")
    assert s * t <= float(spec.f(np.array(t))) + float(spec.f_star(np.array(s))) + 1e-10


@given(t1=st.floats(1e-4, 30), t2=st.floats(1e-4, 30), lam=st.floats(0, 1))
@settings(max_examples=200, deadline=None)
@pytest.mark.parametrize("name,k", [("KL", None), ("ChiSquared", None), ("CressieRead", 2.0)])
def test_f_midpoint_convexity(name, k, t1, t2, lam):
    spec = make_spec(name, k)
    mid = float(spec.f(np.array(lam * t1 + (1 - lam) * t2)))
    chord = lam * float(spec.f(np.array(t1))) + (1 - lam) * float(spec.f(np.array(t2)))
    assert mid <= chord + 1e-10


def test_fenchel_equality_at_argmax():
    # equality in Fenchel-Young holds at t = argmax, checked against the
    # stationarity point t = f_star_prime(s)
    for name, k in ALL_SPECS:
        spec = make_spec(name, k)
        for s in (-1.5, -0.2, 0.4):
            t_star = float(spec.f_star_prime(np.array(s)))
            if not np.isfinite(t_star) or t_star <= 0:
                continue
            gap = s * t_star - float(spec.f(np.array(t_star))) - float(spec.f_star(np.array(s)))
            assert abs(gap) < 1e-6
