import json

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from dynsample import (
    HEAT,
    DiffusivityProfile,
    InitialDatum,
    InvalidProfile,
    OperatorSpec,
    TolUnachievable,
    Trace,
    evaluate_nonautonomous,
    evaluate_solution,
    explicit_plan,
    random_ball_member,
    sample_trace,
)


def direct_sum(spec, f, x, t, bits=400):
    with mp.workprec(bits):
        x, t = mpf(x), mpf(t)
        return mp.fsum(
            f.coeff(k) * mp.exp(mpf(spec.lam(k).numerator) / spec.lam(k).denominator * t) * mp.sin(k * x)
            for k in range(1, f.support + 1)
        )


def test_single_mode_heat_value():
    f = InitialDatum((1,), 1.0)
    x = mp.pi / 2  # a 53-bit number, so sin(x) is not exactly 1
    res = evaluate_solution(HEAT, f, x, 1, mpf(10) ** -40)
    with mp.workprec(200):
        assert abs(res.value - mp.exp(-1) * mp.sin(x)) <= res.error
    assert res.error <= mpf(10) ** -40


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.decimals("0.01", "20", places=2), st.decimals("0.1", "3", places=2),
       st.integers(10, 60))
def test_certificate_covers_the_exact_series(seed, t, x, digits):
    f = random_ball_member(1.0, 40, 0.9, seed)
    tol = mpf(10) ** -digits
    x, t = mpf(str(x)), mpf(str(t))
    res = evaluate_solution(HEAT, f, x, t, tol)
    assert res.error <= tol
    with mp.workprec(400):
        assert abs(res.value - direct_sum(HEAT, f, x, t)) <= res.error


def test_higher_order_operator_against_direct_sum():
    spec = OperatorSpec((1, "-1/2"))
    f = random_ball_member(2.0, 15, 0.9, seed=4)
    x, t = mpf("1.1"), mpf("0.3")
    res = evaluate_solution(spec, f, x, t, mpf(10) ** -50)
    with mp.workprec(400):
        assert abs(res.value - direct_sum(spec, f, x, t)) <= res.error


def test_linearity_within_certificates():
    f = random_ball_member(1.0, 30, 0.5, seed=1)
    g = random_ball_member(1.0, 30, 0.4, seed=2)
    with mp.workprec(160):
        h = InitialDatum(tuple(a + b for a, b in zip(f.coeffs, g.coeffs)), 1.0)
    x, t, tol = mpf(1), mpf("0.7"), mpf(10) ** -30
    rf, rg, rh = (evaluate_solution(HEAT, d, x, t, tol) for d in (f, g, h))
    with mp.workprec(200):
        assert abs(rh.value - rf.value - rg.value) <= rf.error + rg.error + rh.error


def test_late_time_drops_modes_but_keeps_certificate():
    f = random_ball_member(1.0, 200, 0.9, seed=9)
    res = evaluate_solution(HEAT, f, mpf(1), mpf(50), mpf(10) ** -60)
    with mp.workprec(400):
        assert abs(res.value - direct_sum(HEAT, f, 1, 50, bits=600)) <= res.error


def test_precision_ceiling_is_enforced():
    f = random_ball_member(1.0, 10, 0.9, seed=1)
    with pytest.raises(TolUnachievable):
        evaluate_solution(HEAT, f, mpf(1), mpf(1), mpf(10) ** -200, ceiling=100)


def test_constant_profile_is_time_scaled_heat():
    f = random_ball_member(1.0, 20, 0.9, seed=3)
    prof = DiffusivityProfile.constant(2)
    a = evaluate_nonautonomous(prof, f, mpf(1), mpf("0.5"), mpf(10) ** -40)
    b = evaluate_solution(HEAT, f, mpf(1), mpf(1), mpf(10) ** -40)
    with mp.workprec(200):
        assert abs(a.value - b.value) <= a.error + b.error


def test_sinusoidal_profile_matches_closed_form():
    f = random_ball_member(2.0, 20, 0.9, seed=6)
    prof = DiffusivityProfile.sinusoidal(1, "1/2")
    t = mpf("2.5")
    x = mpf("0.9")
    res = evaluate_nonautonomous(prof, f, x, t, mpf(10) ** -45)
    with mp.workprec(400):
        b = t + (1 - mp.cos(t)) / 2
        assert abs(res.value - direct_sum(HEAT, f, x, b)) <= res.error


@pytest.mark.parametrize("profile", [
    DiffusivityProfile("affine", a=1, b="1/4"),
    DiffusivityProfile.sinusoidal(2, -1, 3),
    DiffusivityProfile("tabulated", nodes=(0, 1, 3), values=(1, 2, "1/2")),
])
def test_accumulated_diffusivity_against_quadrature(profile):
    for text in ("0.3", "1", "2.2", "5"):
        t = mpf(text)
        B, err = profile.accumulated(t, 200)
        with mp.workprec(120):
            nodes = [0] + [mpf(v.numerator) / v.denominator for v in profile.nodes if 0 < v < float(t)] + [t]
            q = mp.quad(profile.alpha, nodes)
            assert abs(B - q) < mpf(10) ** -30
        assert err < mpf(2) ** -190


@pytest.mark.parametrize("kwargs", [
    dict(kind="constant", a=0),
    dict(kind="affine", a=1, b=-1),
    dict(kind="sinusoidal", a=1, b=1),
    dict(kind="tabulated", nodes=(0, 1), values=(1, 0)),
    dict(kind="tabulated", nodes=(1, 2), values=(1, 1)),
    dict(kind="bogus"),
])
def test_invalid_profiles(kwargs):
    with pytest.raises(InvalidProfile):
        DiffusivityProfile(**kwargs)


def test_profile_lower_bounds():
    assert DiffusivityProfile.sinusoidal(1, "-1/2").lower_bound == mpf("0.5")
    assert DiffusivityProfile("tabulated", nodes=(0, 1), values=(3, 2)).lower_bound == 2


def test_trace_round_trip_and_noise():
    f = random_ball_member(1.0, 20, 0.9, seed=2)
    plan = explicit_plan("1", [mpf("0.5"), mpf(1), mpf(2)])
    tr = sample_trace(HEAT, f, plan, mpf(10) ** -30)
    back = Trace.from_json(tr.to_json())
    assert back.samples == tr.samples and back.errors == tr.errors and back.times == tr.times
    noisy = sample_trace(HEAT, f, plan, mpf(10) ** -30, noise=1e-3, noise_seed=4)
    assert noisy.noise == 1e-3
    assert json.loads(noisy.to_json())["noise"] == 1e-3
    assert any(abs(a - b) > 1e-6 for a, b in zip(noisy.samples, tr.samples))


def test_nonautonomous_trace_records_accumulated_times():
    f = random_ball_member(1.0, 10, 0.9, seed=2)
    prof = DiffusivityProfile.sinusoidal(1, "1/2")
    plan = explicit_plan("1", [mpf("0.5"), mpf(1)])
    tr = sample_trace(prof, f, plan, [mpf(10) ** -30] * 2)
    with mp.workprec(100):
        assert abs(tr.effective_times[1] - (1 + (1 - mp.cos(1)) / 2)) < mpf(10) ** -25
    assert Trace.from_json(tr.to_json()).effective_times == tr.effective_times


def test_per_sample_tolerance_length_checked():
    f = InitialDatum((1,), 1.0)
    plan = explicit_plan("1", [mpf(1), mpf(2)])
    with pytest.raises(ValueError):
        sample_trace(HEAT, f, plan, [mpf(10) ** -20])
