import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbl.checks import (check_lemma1, check_lemma2, check_lemma3, check_nT_bound, coverage_experiment,
                        geometry_cases, lemma2_grid, lemma3_grid, lucb_replay, nT_bound_rhs,
                        rls_oracle_error)
from cbl.environment import generate_instance
from cbl.errors import InvalidArgument
from cbl.harness import PolicyConfig, run_episode


def test_lemma1_single_step():
    case = check_lemma1([[1.0]], lam=1.0, D=1.0)
    assert case.lhs == pytest.approx(1.0)
    assert case.rhs == pytest.approx(2 * math.log(2))
    assert case.holds


def test_lemma1_zero_sequence():
    case = check_lemma1(np.zeros((5, 3)), lam=1.0, D=1.0)
    assert case.lhs == 0.0 and case.holds


def test_lemma1_rejects_long_elements():
    with pytest.raises(InvalidArgument):
        check_lemma1([[2.0]], lam=1.0, D=1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 300), d=st.integers(1, 5))
def test_lemma1_random_sequences(seed, k, d):
    X = np.random.default_rng(seed).standard_normal((k, d))
    assert check_lemma1(X, lam=1.0).holds


def test_lemma2_hand_value():
    case = check_lemma2(1, 1, 1, 2)
    assert case.lhs == pytest.approx(-2 + math.sqrt(2) * math.log(2))
    assert case.lhs == pytest.approx(-1.02, abs=5e-3)
    assert case.rhs == pytest.approx(16 / 9 * (1 + math.log(2)) ** 2)
    assert case.rhs == pytest.approx(5.10, abs=5e-3)
    assert case.holds


def test_lemma2_tiny_c1():
    case = check_lemma2(1e-9, 1, 1, 10)
    assert case.lhs < 0 and case.holds
    with pytest.raises(InvalidArgument):
        check_lemma2(1, 1, 1, 1.5)


def test_lemma2_grid_holds():
    cases = lemma2_grid()
    assert len(cases) == 27 * 200
    assert all(c.holds for c in cases)


def test_lemma3_hand_value():
    case = check_lemma3(1.0, math.e, 1.0)
    assert case.applicable and not case.note
    assert case.lhs == 1.0 and case.rhs == pytest.approx(2.0)
    assert case.holds


def test_lemma3_false_premise_and_inapplicable():
    case = check_lemma3(1.0, math.e, 100.0)
    assert case.holds and case.note == "premise false"
    case = check_lemma3(1.0, 1.0, 0.5)
    assert case.holds and not case.applicable


def test_lemma3_grid_holds():
    cases = lemma3_grid(n_constants=50, n_x=50)
    assert all(c.holds for c in cases)
    assert sum(c.applicable and not c.note for c in cases) > 0


def test_nT_bound_monotone_in_alpha():
    values = [nT_bound_rhs(4, 1.0, 1.0, 1.0, 3.0, 0.001, a, 0.5) for a in (0.01, 0.1, 0.5, 0.99)]
    assert values == sorted(values, reverse=True)
    assert all(v > 0 for v in values)


def test_nT_bound_oracle_and_clucb():
    inst = generate_instance(seed=0)
    oracle = PolicyConfig("oracle", alpha=0.1)
    assert check_nT_bound(run_episode(inst, oracle, 100), inst, oracle) is True
    cfg = PolicyConfig("clucb", alpha=0.2)
    tr = run_episode(inst, cfg, 2000, seed=0, run=0)
    assert check_nT_bound(tr, inst, cfg) is True


def test_geometry_cases_small_batch():
    cases = geometry_cases(n_cases=20, n_samples=20_000, seed=1)
    assert all(c.gap >= -1e-12 for c in cases)
    assert all(c.gap <= 5e-3 for c in cases)
    for c in cases:
        if c.diagonal:
            assert c.analytic == pytest.approx(c.diagonal_formula, abs=1e-10)


def test_rls_oracle_small():
    assert rls_oracle_error(n_ingests=1000, seed=2) <= 1e-8


def test_coverage_small():
    res = coverage_experiment("lucb", episodes=20, horizon=50)
    assert res.episodes == 20
    assert 0.0 <= res.failure_rate <= 1.0


def test_replay_matches():
    inst = generate_instance(seed=0, run=3)
    cfg = PolicyConfig("clucb", alpha=0.1)
    tr = run_episode(inst, cfg, 1500, seed=0, run=3)
    res = lucb_replay(inst, cfg, tr)
    assert res.identical
    assert res.optimistic_rounds == int(tr.optimistic.sum()) > 0


def test_replay_detects_a_tampered_trace():
    inst = generate_instance(seed=0, run=3)
    cfg = PolicyConfig("clucb", alpha=0.1)
    tr = run_episode(inst, cfg, 1500, seed=0, run=3)
    i = int(np.flatnonzero(tr.optimistic)[5])
    tr.y[i] += 1.0
    assert not lucb_replay(inst, cfg, tr).identical
