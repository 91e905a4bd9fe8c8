import numpy as np
import pytest

from instances import fiber_values, joint, prob, rng_for
from statbundle import (
    CondDecomp,
    CondTangent,
    Fiber,
    JointProb,
    center,
    compose,
    dB,
    dB_transpose,
    decomp_euler_step,
    decompose,
    exp_chart_inv,
    fd_natural_grad,
    gan_grad,
    inner,
    kl_to_composed,
    lift,
    max_rel_error,
    mix_chart,
    mix_chart_inv,
    product,
    tangent_inner,
    uniform,
)

TABLE = JointProb([[0.1, 0.2], [0.3, 0.4]])


def instances(count, seed, n_max=5):
    rng = rng_for(seed)
    for _ in range(count):
        n1, n2 = int(rng.integers(2, n_max + 1)), int(rng.integers(2, n_max + 1))
        yield rng, joint(rng, n1, n2), int(rng.integers(1, 3))


def random_tangent(rng, d: CondDecomp) -> CondTangent:
    return CondTangent(
        Fiber(d.margin, fiber_values(rng, d.margin)),
        tuple(Fiber(k, fiber_values(rng, k)) for k in d.kernel),
    )


def moved(d: CondDecomp, t: CondTangent, s: float) -> CondDecomp:
    """The decomposition along exponential curves with initial scores ``t``."""
    return CondDecomp(
        exp_chart_inv(d.margin, s * t.margin_dot),
        tuple(exp_chart_inv(k, s * v) for k, v in zip(d.kernel, t.kernel_dot)),
        d.axis,
    )


def test_decompose_worked_example():
    d = decompose(TABLE, 1)
    np.testing.assert_allclose(d.margin.weights, [0.3, 0.7], atol=1e-16)
    np.testing.assert_allclose(d.kernel_matrix, [[1 / 3, 2 / 3], [3 / 7, 4 / 7]], atol=1e-16)


def test_product_kernel_rows_equal_second_margin():
    rng = rng_for(1)
    q1, q2 = prob(rng, 3), prob(rng, 4)
    d = decompose(product(q1, q2), 1)
    for k in d.kernel:
        np.testing.assert_allclose(k.weights, q2.weights, atol=1e-15)


def test_roundtrip_both_axes():
    for _, q, axis in instances(30, 2):
        back = compose(decompose(q, axis))
        assert back.shape == q.shape
        assert np.max(np.abs(back.weights - q.weights)) <= 1e-12


def test_decomposition_rejects_ragged_kernels():
    with pytest.raises(ValueError):
        CondDecomp(uniform(2), (uniform(3),))


def test_dB_basics():
    for rng, q, axis in instances(20, 3):
        d = decompose(q, axis)
        zero = CondTangent(
            Fiber(d.margin, np.zeros(d.margin.n)),
            tuple(Fiber(k, np.zeros(k.n)) for k in d.kernel),
        )
        assert dB(d, zero).norm() == 0.0
        v = dB(d, random_tangent(rng, d))
        assert abs(v.values @ compose(d).weights) <= 1e-15


def test_dB_against_differences_and_mixture_chart():
    for rng, q, axis in instances(20, 4):
        d = decompose(q, axis)
        t = random_tangent(rng, d)
        h = 1e-5
        # score by differencing log-densities
        lp = np.log(compose(moved(d, t, h)).weights)
        lm = np.log(compose(moved(d, t, -h)).weights)
        fd = (lp - lm) / (2 * h)
        fd = fd - fd @ q.weights
        assert np.max(np.abs(dB(d, t).values - fd)) <= 1e-6
        # mixture-chart route: d/ds eta_q(B(d(s))) at s = 0 is the joint score
        ep = mix_chart(q, compose(moved(d, t, h))).values
        em = mix_chart(q, compose(moved(d, t, -h))).values
        assert np.max(np.abs(dB(d, t).values - (ep - em) / (2 * h))) <= 1e-6


def test_dB_transpose_basics():
    for rng, q, axis in instances(20, 5):
        d = decompose(q, axis)
        t = dB_transpose(d, Fiber(q, np.zeros(q.n)))
        assert t.margin_dot.norm() == 0.0 and all(k.norm() == 0.0 for k in t.kernel_dot)
        # a centered function of the conditioning coordinate has no kernel part
        f = center(d.margin, rng.standard_normal(d.margin.n))
        t = dB_transpose(d, Fiber(q, lift(q, f, axis).values))
        assert all(np.max(np.abs(k.values)) <= 1e-15 for k in t.kernel_dot)
        np.testing.assert_allclose(t.margin_dot.values, f.values, atol=1e-15)


def test_adjointness():
    for rng, q, axis in instances(100, 6):
        d = decompose(q, axis)
        t = random_tangent(rng, d)
        v = Fiber(q, fiber_values(rng, q))
        lhs = inner(q, v, dB(d, t))
        rhs = tangent_inner(d, dB_transpose(d, v), t)
        assert abs(lhs - rhs) <= 1e-12


def test_gan_grad_matches_composition():
    for rng, p, axis in instances(100, 7):
        d = decompose(joint(rng, *p.shape), axis)
        g = gan_grad(p, d)
        route = dB_transpose(d, -mix_chart(compose(d), p))
        assert np.max(np.abs(g.margin_dot.values - route.margin_dot.values)) <= 1e-12
        for a, b in zip(g.kernel_dot, route.kernel_dot):
            assert np.max(np.abs(a.values - b.values)) <= 1e-12


def test_gan_grad_against_oracle():
    for rng, p, axis in instances(10, 8, n_max=4):
        d = decompose(joint(rng, *p.shape), axis)
        g = gan_grad(p, d)
        fd = fd_natural_grad(lambda a: kl_to_composed(p, CondDecomp(a, d.kernel, axis)), d.margin)
        assert max_rel_error(g.margin_dot, fd) <= 1e-5
        for x, k in enumerate(d.kernel):

            def phi(row, x=x):
                rows = list(d.kernel)
                rows[x] = row
                return kl_to_composed(p, CondDecomp(d.margin, rows, axis))

            assert max_rel_error(g.kernel_dot[x], fd_natural_grad(phi, k)) <= 1e-5


def test_gan_grad_vanishes_at_target():
    for _, p, axis in instances(20, 9):
        g = gan_grad(p, decompose(p, axis))
        assert np.max(np.abs(g.margin_dot.values)) <= 1e-14
        assert all(np.max(np.abs(k.values)) <= 1e-14 for k in g.kernel_dot)


def test_gan_grad_uniform_conditional_target():
    rng = rng_for(10)
    g1 = prob(rng, 3)
    p = product(g1, uniform(4))
    d = decompose(joint(rng, 3, 4), 1)
    g = gan_grad(p, d)
    np.testing.assert_allclose(g.margin_dot.values, -mix_chart(d.margin, g1).values, atol=1e-14)
    for x, k in enumerate(d.kernel):
        expected = -g1.weights[x] * mix_chart(k, uniform(4)).values
        np.testing.assert_allclose(g.kernel_dot[x].values, expected, atol=1e-14)


def test_descent_step_does_not_increase_divergence():
    for rng, p, axis in instances(50, 11):
        d = decompose(joint(rng, *p.shape), axis)
        g = gan_grad(p, d)
        step = CondTangent(-g.margin_dot, tuple(-k for k in g.kernel_dot))
        after = decomp_euler_step(d, step, 1e-3)
        assert kl_to_composed(p, after) <= kl_to_composed(p, d)


def test_velocity_decomposition_along_joint_curves():
    for rng, q, axis in instances(10, 12):
        v = Fiber(q, fiber_values(rng, q))
        h = 1e-5
        dp = decompose(exp_chart_inv(q, h * v), axis)
        dm = decompose(exp_chart_inv(q, -h * v), axis)
        d = decompose(q, axis)

        def score(base, plus, minus):
            s = (np.log(plus.weights) - np.log(minus.weights)) / (2 * h)
            return Fiber(base, s - s @ base.weights)

        t = CondTangent(
            score(d.margin, dp.margin, dm.margin),
            tuple(score(k, a, b) for k, a, b in zip(d.kernel, dp.kernel, dm.kernel)),
        )
        assert np.max(np.abs(dB(d, t).values - v.values)) <= 1e-6


def test_mix_chart_inverse_of_mixture_route():
    # the mixture route reconstructs the composed joint to first order
    rng = rng_for(13)
    q = joint(rng, 3, 3)
    d = decompose(q, 1)
    t = random_tangent(rng, d)
    s = 1e-6
    approx = mix_chart_inv(q, s * dB(d, t))
    exact = compose(moved(d, t, s))
    assert np.max(np.abs(approx.weights - exact.weights)) <= 1e-10
