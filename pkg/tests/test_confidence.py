import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbl.confidence import (Ball, BetaSchedule, Ellipsoid, RlsState, beta_next, contains, estimate,
                            max_linear, min_linear, rls_ingest)
from cbl.errors import InvalidArgument


def ellipsoid(center, V, radius, clip=None):
    V = np.asarray(V, dtype=float)
    return Ellipsoid(center, V, np.linalg.inv(V), radius, clip)


# --- least squares -----------------------------------------------------------

def test_rls_single_ingest():
    s = rls_ingest(RlsState(1, 1.0), [1.0], 3.0)
    np.testing.assert_allclose(estimate(s), [1.5])
    assert s.m == 1


def test_rls_empty_is_zero():
    np.testing.assert_array_equal(estimate(RlsState(3, 2.0)), np.zeros(3))


def test_rls_axis_aligned():
    s = rls_ingest(RlsState(2, 1.0), [1.0, 0.0], 2.0)
    np.testing.assert_allclose(estimate(s), [1.0, 0.0])


def test_rls_opposite_rewards_cancel():
    s = RlsState(2, 1.0)
    s.ingest([0.3, -1.2], 0.7)
    s.ingest([0.3, -1.2], -0.7)
    np.testing.assert_allclose(s.estimate(), [0.0, 0.0], atol=1e-15)


def test_rls_rejects_nonfinite():
    s = RlsState(2, 1.0)
    with pytest.raises(InvalidArgument):
        s.ingest([1.0, np.nan], 0.0)
    with pytest.raises(InvalidArgument):
        s.ingest([1.0, 0.0], float("inf"))


def test_rls_warns_but_accepts_long_features():
    s = RlsState(2, 1.0, D=1.0)
    with pytest.warns(UserWarning):
        s.ingest([3.0, 0.0], 1.0)
    assert s.m == 1


def test_rls_matches_batch_solve():
    rng = np.random.default_rng(11)
    Phi = rng.standard_normal((500, 3))
    y = Phi @ np.array([0.2, -0.5, 1.0]) + rng.standard_normal(500)
    s = RlsState(3, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for phi, r in zip(Phi, y):
            s.ingest(phi, r)
    direct = np.linalg.solve(Phi.T @ Phi + 2.0 * np.eye(3), Phi.T @ y)
    np.testing.assert_allclose(s.estimate(), direct, rtol=1e-10)


# --- radius schedule -----------------------------------------------------------

def test_beta_hand_value():
    sched = BetaSchedule(sigma=1, d=1, D=1, lam=1, delta=2 / math.e**2, B=0)
    assert beta_next(sched, 0, "clucb") == pytest.approx(math.sqrt(2))


def test_beta_noiseless_is_constant():
    sched = BetaSchedule(sigma=0, d=3, D=2, lam=4, delta=0.1, B=1)
    for n in (0, 1, 10, 10_000):
        assert beta_next(sched, n, "clucb") == pytest.approx(2.0)
        assert beta_next(sched, n + 1, "clucb2") == pytest.approx(2.0)


def test_beta_variants_share_the_formula():
    sched = BetaSchedule(sigma=1, d=4, D=3, lam=1, delta=0.001, B=0.5)
    assert beta_next(sched, 7, "clucb") == beta_next(sched, 8, "clucb2") == sched.radius(8)


def test_beta_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        BetaSchedule(sigma=1, d=1, D=1, lam=1, delta=1.0, B=1)
    sched = BetaSchedule(sigma=1, d=1, D=1, lam=1, delta=0.5, B=1)
    with pytest.raises(InvalidArgument):
        beta_next(sched, -1)
    with pytest.raises(InvalidArgument):
        beta_next(sched, 1, "other")


@settings(max_examples=80, deadline=None)
@given(sigma=st.floats(0.01, 5), d=st.integers(1, 8), D=st.floats(0.1, 10), lam=st.floats(0.1, 10),
       delta=st.floats(1e-6, 0.99), B=st.floats(0.01, 5), n=st.integers(0, 10**6))
def test_beta_monotone(sigma, d, D, lam, delta, B, n):
    base = BetaSchedule(sigma, d, D, lam, delta, B)
    r = base.radius(n + 1)
    assert base.radius(n + 2) > r
    assert r >= math.sqrt(lam) * B
    assert BetaSchedule(sigma * 1.5, d, D, lam, delta, B).radius(n + 1) >= r
    assert BetaSchedule(sigma, d + 1, D, lam, delta, B).radius(n + 1) >= r
    assert BetaSchedule(sigma, d, D * 1.5, lam, delta, B).radius(n + 1) >= r
    assert BetaSchedule(sigma, d, D, lam, delta, B * 1.5).radius(n + 1) >= r
    assert BetaSchedule(sigma, d, D, lam, delta / 2, B).radius(n + 1) > r


# --- set geometry --------------------------------------------------------------

def test_ball_support():
    value, arg = max_linear(Ball(2.0), [0.0, 1.0])
    assert value == pytest.approx(2.0)
    np.testing.assert_allclose(arg, [0.0, 2.0])
    value, arg = min_linear(Ball(2.0), [0.0, 1.0])
    assert value == pytest.approx(-2.0)
    np.testing.assert_allclose(arg, [0.0, -2.0])


def test_zero_direction():
    assert max_linear(Ball(1.0), [0.0, 0.0])[0] == 0.0
    value, arg = max_linear(ellipsoid([0.3, 0.1], np.eye(2), 1.0), [0.0, 0.0])
    assert value == 0.0
    np.testing.assert_array_equal(arg, [0.3, 0.1])


def test_ellipsoid_max_diagonal():
    value, arg = max_linear(ellipsoid([0.0, 0.0], np.diag([4.0, 1.0]), 2.0), [1.0, 0.0])
    assert value == pytest.approx(1.0)
    np.testing.assert_allclose(arg, [1.0, 0.0])


def test_ellipsoid_max_against_sampled_boundary():
    # boundary of |theta|_V <= 2 with V = diag(4, 1): theta = (cos u, 2 sin u)
    u = np.linspace(0, 2 * np.pi, 100_000)
    sampled = np.max(np.cos(u))
    value, _ = max_linear(ellipsoid([0.0, 0.0], np.diag([4.0, 1.0]), 2.0), [1.0, 0.0])
    assert sampled <= value <= sampled + 1e-3


def test_ellipsoid_min():
    value, arg = min_linear(ellipsoid([1.0, 0.0], np.eye(2), 1.0), [1.0, 0.0])
    assert value == pytest.approx(0.0)
    np.testing.assert_allclose(arg, [0.0, 0.0], atol=1e-15)


def test_contains_examples():
    assert contains(Ball(1.0), [1.0, 0.0])
    assert not contains(Ball(1.0), [1.0, 0.1])
    e = ellipsoid([0.0, 0.0], np.eye(2), 1.0)
    assert not contains(e, [0.0, 1.01])
    assert contains(e, [0.0, 1.0])


def test_ellipsoid_snapshots_inputs():
    V = np.eye(2)
    e = Ellipsoid([0.0, 0.0], V, V.copy(), 1.0)
    V[0, 0] = 100.0
    assert e.V[0, 0] == 1.0


def test_from_rls_is_frozen_against_later_ingests():
    rls = RlsState(2, 1.0)
    rls.ingest([1.0, 0.0], 1.0)
    e = Ellipsoid.from_rls(rls, 1.0)
    before = (e.center.copy(), e.V.copy())
    rls.ingest([0.0, 1.0], 5.0)
    np.testing.assert_array_equal(e.center, before[0])
    np.testing.assert_array_equal(e.V, before[1])


def test_nonpositive_radius_rejected():
    with pytest.raises(InvalidArgument):
        Ball(0.0)
    with pytest.raises(InvalidArgument):
        ellipsoid([0.0], [[1.0]], 0.0)


def random_ellipsoid(rng, d, clip=None):
    A = rng.standard_normal((d, d))
    V = A @ A.T + 0.5 * np.eye(d)
    return ellipsoid(rng.standard_normal(d), V, rng.uniform(0.1, 3.0), clip)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4))
def test_reflection_and_membership(seed, d):
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal(d)
    for cs in (Ball(rng.uniform(0.1, 3.0)), random_ellipsoid(rng, d)):
        lo, arg_lo = min_linear(cs, phi)
        hi, arg_hi = max_linear(cs, -phi)
        assert lo == pytest.approx(-hi, abs=1e-12)
        assert contains(cs, arg_lo)
        assert contains(cs, max_linear(cs, phi)[1])
        assert float(arg_lo @ phi) == pytest.approx(lo, abs=1e-9)
        assert cs.upper(phi) == pytest.approx(max_linear(cs, phi)[0], abs=1e-12)
        assert cs.lower(phi) == pytest.approx(lo, abs=1e-12)
        assert cs.max_values(phi[None, :])[0] == pytest.approx(max_linear(cs, phi)[0], abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4))
def test_clipped_set_respects_ball(seed, d):
    rng = np.random.default_rng(seed)
    B = rng.uniform(0.2, 2.0)
    cs = random_ellipsoid(rng, d, clip=B)
    plain = Ellipsoid(cs.center, cs.V, cs.V_inv, cs.radius)
    phi = rng.standard_normal(d)
    value, arg = max_linear(cs, phi)
    assert np.linalg.norm(arg) <= B + 1e-12
    assert value <= max_linear(plain, phi)[0] + 1e-12
    assert value <= B * np.linalg.norm(phi) + 1e-12
