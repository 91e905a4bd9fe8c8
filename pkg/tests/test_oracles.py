import math

import numpy as np
import pytest

from instances import prob, rng_for
from statbundle import (
    ConvergenceError,
    brute_divergences,
    cross_entropy,
    entropy,
    js,
    kl,
    marginal,
    product,
    schrodinger_2x2_brute,
    sinkhorn_oracle,
)


def test_sinkhorn_zero_cost_gives_product_in_one_sweep():
    rng = rng_for(1)
    q1, q2 = prob(rng, 3), prob(rng, 4)
    res = sinkhorn_oracle(np.zeros((3, 4)), 1.0, q1, q2)
    assert res.iterations == 1
    np.testing.assert_allclose(res.plan.weights, product(q1, q2).weights, atol=1e-15)


def test_sinkhorn_margins_within_tolerance():
    rng = rng_for(2)
    for _ in range(20):
        n1, n2 = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        q1, q2 = prob(rng, n1), prob(rng, n2)
        eps = float(rng.choice([0.5, 1.0, 2.0]))
        res = sinkhorn_oracle(rng.standard_normal((n1, n2)), eps, q1, q2, tol=1e-10)
        assert res.margin_error <= 1e-10
        assert np.max(np.abs(marginal(res.plan, 1).weights - q1.weights)) <= 1e-10
        assert np.max(np.abs(marginal(res.plan, 2).weights - q2.weights)) <= 1e-10


def test_sinkhorn_argument_checks():
    q = prob(rng_for(3), 2)
    with pytest.raises(ValueError):
        sinkhorn_oracle(np.zeros((2, 2)), 0.0, q, q)
    with pytest.raises(ValueError):
        sinkhorn_oracle(np.zeros((2, 2)), 1.0, q, q, tol=1e-3)
    rng = rng_for(4)
    with pytest.raises(ConvergenceError):
        sinkhorn_oracle(5 * rng.standard_normal((3, 3)), 0.1, prob(rng, 3), prob(rng, 3), tol=1e-15, max_sweeps=2)


def test_sinkhorn_agrees_with_golden_section_on_2x2():
    rng = rng_for(5)
    for _ in range(20):
        q1, q2 = prob(rng, 2), prob(rng, 2)
        eps = float(rng.choice([0.5, 1.0, 2.0]))
        cost = rng.standard_normal((2, 2))
        plan = sinkhorn_oracle(cost, eps, q1, q2, tol=1e-15).plan.table
        assert np.max(np.abs(plan - schrodinger_2x2_brute(cost, eps, q1, q2))) <= 1e-8


def test_brute_divergences_agree_with_library():
    rng = rng_for(6)
    for _ in range(50):
        n = int(rng.integers(2, 11))
        q, r = prob(rng, n), prob(rng, n)
        b_kl, b_cross, b_ent, b_js = brute_divergences(q, r)
        assert abs(b_kl - kl(q, r)) <= 1e-13
        assert abs(b_cross - cross_entropy(q, r)) <= 1e-13
        assert abs(b_ent - entropy(q)) <= 1e-13
        assert abs(b_js - js(q, r)) <= 1e-13
        assert 0.0 <= b_js <= math.log(2)


def test_brute_divergences_of_equal_arguments():
    q = prob(rng_for(7), 6)
    b_kl, _, _, b_js = brute_divergences(q, q)
    assert b_kl == 0.0 and b_js == 0.0
