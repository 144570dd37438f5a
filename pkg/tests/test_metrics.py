import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from artnoise.metrics import ee, ee_avg, normalized_energy, srr, summarize
from artnoise.template import AttackOutcome


def test_ee_zero_on_success():
    assert ee(True, 123.0, 10, 100, 1.0) == 0.0


def test_ee_worked_example():
    # N_T=20, m=100, sigma^2=4: normalised energy 800 / 8000 = 0.1
    assert normalized_energy(800.0, 20, 100, 4.0) == pytest.approx(0.1)
    assert ee(False, 800.0, 20, 100, 4.0) == pytest.approx(10.0)


def test_ee_undefined_without_energy():
    assert math.isnan(ee(False, 0.0, 10, 10, 1.0))


@given(st.floats(1e-3, 1e6), st.floats(1.01, 100))
def test_ee_anti_monotone_in_energy(E, factor):
    assert ee(False, E * factor, 10, 50, 2.0) < ee(False, E, 10, 50, 2.0)


def test_srr_double_average():
    outcomes = {0: [True, True, True, False], 1: [True, False, False, False]}
    assert srr(outcomes) == pytest.approx(0.5)
    # unequal trial counts: per-key rates are averaged, not trials
    assert srr({0: [True], 1: [False, False, False]}) == pytest.approx(0.5)


def test_srr_accepts_outcome_objects():
    outcomes = {3: [AttackOutcome(3, 3, 1, 0.0), AttackOutcome(3, 1, 1, 0.0)]}
    assert srr(outcomes) == 0.5


def test_missing_and_empty_keys_rejected():
    with pytest.raises(ValueError, match="no outcomes"):
        srr({0: [True]}, keys=[0, 1])
    with pytest.raises(ValueError):
        srr({0: []})
    with pytest.raises(ValueError):
        srr({})


def test_ee_avg_closed_form():
    N_T, m, s2 = 2, 10, 1.0
    outcomes = {
        0: [AttackOutcome(0, 1, 1, 5.0), AttackOutcome(0, 0, 1, 5.0)],
        1: [AttackOutcome(1, 0, 1, 10.0), AttackOutcome(1, 0, 1, 20.0)],
    }
    k0 = (N_T * m * s2 / 5.0 + 0.0) / 2
    k1 = (N_T * m * s2 / 10.0 + N_T * m * s2 / 20.0) / 2
    assert ee_avg(outcomes, N_T, m, s2) == pytest.approx((k0 + k1) / 2)


@given(st.lists(st.booleans(), min_size=1, max_size=30), st.floats(0.1, 100))
def test_uniform_energy_ee_tracks_failures(hits, E):
    # with equal energy per trial EE_avg is (1 - SRR) times the single-failure EE
    outcomes = {0: [AttackOutcome(0, 0 if h else 1, 1, E) for h in hits]}
    expected = (1 - srr(outcomes)) * ee(False, E, 5, 7, 1.5)
    assert ee_avg(outcomes, 5, 7, 1.5) == pytest.approx(expected)


def test_summarize(rng):
    outcomes = {k: [AttackOutcome(k, int(rng.integers(2)), 1, 1.0) for _ in range(4)] for k in (0, 1)}
    s = summarize(outcomes, 4, 3, 1.0)
    assert s.srr == srr(outcomes)
    assert s.total_normalized_energy == pytest.approx(8 / 12)
    assert sum(s.per_key_success.values()) == sum(o.success for v in outcomes.values() for o in v)
