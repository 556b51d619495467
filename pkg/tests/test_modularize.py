import numpy as np
import pytest

from comixup.energy import Hyperparams, aggregate, compatibility
from comixup.errors import IndexOutOfRange
from comixup.modularize import ConditionedModular, condition, modular_value
from tests.test_energy import make_model, random_labeling


def test_two_outputs_collapse():
    rng = np.random.default_rng(41)
    model = make_model(rng, 3, 2, 2)
    lab = random_labeling(rng, 2, 4, 3, 2)
    cond = condition(model, lab, 0)
    o2 = aggregate(lab, 1)
    np.testing.assert_allclose(cond.v_minus_j, 2.0 * model.compat.a @ o2, atol=1e-12)
    assert cond.c_rest == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(IndexOutOfRange):
        condition(model, lab, 2)


def test_unary_add_rows_identical():
    rng = np.random.default_rng(43)
    model = make_model(rng, 4, 3, 2)
    lab = random_labeling(rng, 3, 4, 4, 2)
    cond = condition(model, lab, 1)
    assert cond.unary_add.shape == (model.n, model.m)
    for k in range(model.n):
        np.testing.assert_array_equal(cond.unary_add[k], cond.unary_add[0])
    np.testing.assert_allclose(
        cond.unary_add[0],
        model.params.gamma * np.maximum(cond.tau_prime, cond.v_minus_j),
        atol=1e-12,
    )


def test_conditioned_raw_identity():
    # v . o_j + c_rest reproduces the full pairwise sum exactly
    rng = np.random.default_rng(47)
    for _ in range(50):
        model = make_model(rng, 4, 3, 2)
        lab = random_labeling(rng, 3, 4, 4, 2)
        raw, _ = compatibility(lab, model.compat.a, model.tau_abs)
        for j in range(3):
            cond = condition(model, lab, j)
            value = float(cond.v_minus_j @ aggregate(lab, j)) + cond.c_rest
            assert value == pytest.approx(raw, rel=1e-9, abs=1e-9)


def test_exactness_when_clipping_and_threshold_inactive():
    # raw far above the floor and every v entry above tau' -> the modular
    # value equals the exact conditioned compatibility
    rng = np.random.default_rng(53)
    params = Hyperparams(tau=0.0)  # clip floor at zero keeps tau' = 0
    hits = 0
    for _ in range(50):
        model = make_model(rng, 4, 3, 2, params)
        lab = random_labeling(rng, 3, 4, 4, 2)
        raw, _ = compatibility(lab, model.compat.a, model.tau_abs)
        for j in range(3):
            cond = condition(model, lab, j)
            if np.all(cond.v_minus_j > cond.tau_prime) and raw > model.tau_abs:
                expected = raw - cond.c_rest
                assert modular_value(cond, aggregate(lab, j)) == pytest.approx(
                    expected, rel=1e-9
                )
                hits += 1
    assert hits > 50


def test_flat_region_criterion():
    # support below the threshold -> exactly tau' * n, no extra penalty
    cond = ConditionedModular(
        v_minus_j=np.array([0.5, 2.0, 9.0]),
        tau_prime=3.0,
        c_rest=0.0,
        unary_add=np.zeros((1, 3)),
    )
    o = np.array([4.0, 2.0, 0.0])  # mass 6 on the two below-threshold inputs
    assert modular_value(cond, o) == 3.0 * 6.0
    o_zero_v = np.zeros(3)
    assert modular_value(cond, o_zero_v) == 0.0


def test_monotone_under_mass_transfer():
    # moving mass toward a larger-v coordinate never lowers the value
    rng = np.random.default_rng(59)
    for _ in range(200):
        m = 5
        v = np.abs(rng.standard_normal(m)) * 3
        cond = ConditionedModular(v, float(rng.random()), 0.0, np.zeros((1, m)))
        o = rng.random(m) * 4
        lo, hi = sorted(rng.choice(m, size=2, replace=False), key=lambda i: v[i])
        amount = rng.random() * o[lo]
        o2 = o.copy()
        o2[lo] -= amount
        o2[hi] += amount
        assert modular_value(cond, o2) >= modular_value(cond, o) - 1e-12


def test_flat_value_independent_of_distribution():
    # all v below tau': any profile with the same mass scores tau' * mass
    cond = ConditionedModular(np.array([1.0, 2.0, 0.5]), 4.0, 0.0, np.zeros((1, 3)))
    for o in ([4, 0, 0], [0, 4, 0], [2, 1, 1]):
        assert modular_value(cond, np.array(o, dtype=float)) == pytest.approx(16.0)
