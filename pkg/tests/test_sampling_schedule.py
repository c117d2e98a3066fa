from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from dynsample import (
    HEAT,
    DiffusivityProfile,
    OperatorSpec,
    ResonantPoint,
    RhoBelowThreshold,
    build_plan,
    default_rho,
    explicit_plan,
    geometric_times,
    parse_real,
    rescaled_times,
    scan_sampling_point,
)


def direct_d0(x0, K, bits=120):
    with mp.workprec(bits):
        return min(k * abs(mp.sin(k * x0)) for k in range(1, K + 1))


def test_parse_real_expressions():
    with mp.workprec(200):
        golden = mp.pi * (mp.sqrt(5) - 1) / 2
    assert abs(parse_real("pi*(sqrt(5)-1)/2", 200) - golden) < mpf(2) ** -195
    assert parse_real("-3/4") == mpf("-0.75")
    assert parse_real(Fraction(1, 2)) == mpf("0.5")
    with pytest.raises(ValueError):
        parse_real("__import__('os')")


def test_resonant_points_rejected():
    with pytest.raises(ResonantPoint) as info:
        scan_sampling_point(parse_real("pi/2"), 10)
    assert info.value.k == 2
    with pytest.raises(ResonantPoint):
        scan_sampling_point(parse_real("pi/3"), 10)
    with pytest.raises(ValueError):
        scan_sampling_point(mpf(4), 10)


@pytest.mark.parametrize("expr", ["pi*(sqrt(5)-1)/2", "pi/sqrt(2)", "1"])
def test_scan_matches_direct_minimum(expr):
    x0 = parse_real(expr)
    assert scan_sampling_point(x0, 2000) == pytest.approx(float(direct_d0(x0, 2000)), rel=1e-9)


def test_golden_point_constant():
    # attained at k = 1: sin(pi (sqrt 5 - 1) / 2)
    assert scan_sampling_point(parse_real("pi*(sqrt(5)-1)/2"), 10 ** 4) == pytest.approx(
        0.9320324238132276, rel=1e-12)


def test_geometric_times():
    times = geometric_times(mpf("0.1"), mpf("1.5"), 4, HEAT)
    assert [float(t) for t in times] == pytest.approx([0.1, 0.15, 0.225, 0.3375], rel=1e-15)
    with pytest.raises(RhoBelowThreshold):
        geometric_times(1, "1.3", 3, HEAT)
    with pytest.raises(ValueError):
        geometric_times(0, 3, 3, HEAT)


@pytest.mark.parametrize("n_half", [1, 2, 3])
def test_threshold_gate_is_strict(n_half):
    spec = OperatorSpec(tuple(-1 if l % 2 else 1 for l in range(n_half)))
    with mp.workprec(100):
        threshold = 2 * n_half * mp.ln2
        above = threshold * (1 + mpf(2) ** -80)
    with pytest.raises(RhoBelowThreshold):
        geometric_times(1, threshold, 3, spec)
    geometric_times(1, above, 3, spec)


def test_auto_ratio():
    assert default_rho(HEAT) == Fraction(14, 5)
    assert default_rho(2) == Fraction(105, 100) * Fraction(16, 3)
    plan = build_plan(HEAT, t1="0.5", n=3, k_scan=100)
    assert float(plan.rho) == 2.8
    assert [float(t) for t in plan.times] == pytest.approx([0.5, 1.4, 3.92])


def test_rescaled_times_meet_targets():
    prof = DiffusivityProfile.sinusoidal(1, "1/2")
    rho = mpf("2.8")
    times = rescaled_times(prof, mpf("0.5"), rho, 6)
    b1, e1 = prof.accumulated(times[0], 256)
    for j, t in enumerate(times):
        b, e = prof.accumulated(t, 256)
        with mp.workprec(256):
            assert b - e >= (b1 + e1) * rho ** j
            assert (b + e) <= (b1 + e1) * rho ** j * (1 + mpf(2) ** -200)


def test_unit_diffusivity_reproduces_geometric_times():
    prof = DiffusivityProfile.constant(1)
    rho = mpf("2.8")
    a = rescaled_times(prof, mpf("0.5"), rho, 5)
    with mp.workprec(256):
        b = geometric_times(mpf("0.5"), rho, 5, HEAT)
        assert all(abs(x - y) <= y * mpf(2) ** -240 for x, y in zip(a, b))


@settings(max_examples=10, deadline=None)
@given(st.decimals("0.01", "5", places=2), st.integers(2, 8))
def test_rescaled_plan_targets_hold(t1, n):
    prof = DiffusivityProfile("affine", a=1, b="1/3")
    plan = build_plan(prof, t1=str(t1), n=n, k_scan=50)
    lower = plan.effective_times_lower(256)
    with mp.workprec(256):
        assert all(lower[j] >= lower[0] * plan.rho ** j * (1 - mpf(2) ** -200) for j in range(n))


def test_plan_serialization_and_validation():
    plan = build_plan(HEAT, t1="1", n=4, k_scan=100)
    d = plan.to_dict()
    assert d["mode"] == "autonomous" and len(d["times"]) == 4
    ex = explicit_plan("1", [mpf(1), mpf(3)])
    assert ex.mode == "explicit" and ex.n == 2
    with pytest.raises(ValueError):
        explicit_plan("1", [mpf(2), mpf(1)])
