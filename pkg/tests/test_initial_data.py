import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from dynsample import InitialDatum, ball_norm, l2_distance, random_ball_member, truncation_tail_bound


def test_random_member_lands_on_requested_norm():
    f = random_ball_member(1.0, 200, 0.9, seed=3)
    assert f.support == 200
    assert f.declared_ball
    assert abs(ball_norm(f) - mpf("0.9")) < mpf(10) ** -30


def test_random_member_is_reproducible_and_seed_dependent():
    a = random_ball_member(2.0, 50, 0.5, seed=11)
    b = random_ball_member(2.0, 50, 0.5, seed=11)
    c = random_ball_member(2.0, 50, 0.5, seed=12)
    assert a.coeffs == b.coeffs
    assert a.coeffs != c.coeffs


def test_random_member_decays_like_the_smoothness_class():
    f = random_ball_member(2.0, 100, 0.9, seed=1)
    ratios = [abs(f.coeff(k)) * k ** 3 for k in range(1, 101)]
    assert max(ratios) / min(ratios) <= 3 + 1e-9  # magnitudes drawn from U(0.5, 1.5)


@pytest.mark.parametrize("r,K,margin", [(1.0, 0, 0.5), (1.0, 5, 1.0), (1.0, 5, 0.0)])
def test_random_member_rejects_bad_arguments(r, K, margin):
    with pytest.raises(ValueError):
        random_ball_member(r, K, margin, seed=0)


def test_declared_ball_is_checked():
    with pytest.raises(ValueError):
        InitialDatum((1, 1), 1.0, declared_ball=True)
    with pytest.raises(ValueError):
        InitialDatum((0.1,), None, declared_ball=True)
    InitialDatum((0.5, 0.25), 1.0, declared_ball=True)


def test_ball_norm_single_mode():
    # sum k^{2r} f_k^2 with f_3 = 0.1, r = 1 -> 9 * 0.01
    f = InitialDatum((0, 0, "0.1"), 1.0)
    with mp.workprec(128):
        assert abs(ball_norm(f) - mpf("0.3")) < mpf(10) ** -35


def test_json_round_trip_is_exact():
    f = random_ball_member(0.5, 30, 0.8, seed=5)
    g = InitialDatum.from_json(f.to_json())
    assert g.coeffs == f.coeffs
    assert g.smoothness_r == 0.5
    with pytest.raises(ValueError):
        InitialDatum.from_json('{"coeffs": ["1"], "extra": 1}')


def test_coefficients_outside_support_are_zero():
    f = InitialDatum((1, 2), 1.0)
    assert f.coeff(0) == 0 and f.coeff(3) == 0 and f.coeff(2) == 2


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=4),
       st.lists(st.integers(-5, 5), min_size=1, max_size=4))
def test_l2_distance_matches_quadrature(a, b):
    f = InitialDatum(tuple(a), 1.0)
    g = InitialDatum(tuple(b), 1.0)
    with mp.workprec(80):
        diff = lambda x: sum((f.coeff(k) - g.coeff(k)) * mp.sin(k * x) for k in range(1, 5))
        direct = mp.sqrt(mp.quad(lambda x: diff(x) ** 2, [0, mp.pi / 2, mp.pi]))
        assert abs(l2_distance(f, g) - direct) < mpf(10) ** -15 * (1 + direct)


def test_truncation_tail_bound():
    assert truncation_tail_bound(2, 10) == pytest.approx(0.01)
    f = random_ball_member(2.0, 200, 0.9, seed=2)
    head = InitialDatum(f.coeffs[:10], 2.0)
    # |f - P_n f| <= sqrt(pi/2) n^{-r} for f in the unit ball
    assert l2_distance(f, head) <= mp.sqrt(mp.pi / 2) * truncation_tail_bound(2, 10)
