"""Conditional representation of joint probabilities.

A joint ``q`` on ``Omega1 x Omega2`` is written as a margin times a kernel,
``q(x, y) = q1(x) q_{2|1}(y|x)``.  The map ``B: (q1, q_{2|1}) -> q`` has a
simple derivative in scores and an explicit transpose, which turns natural
gradients of functions of the joint into natural gradients with respect to
the margin and each kernel row.  :func:`gan_grad` applies this to
``KL(p || B(q1, q_{2|1}))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpaceMismatchError
from .product import JointProb
from .simplex import Fiber, Prob, check_base, inner


@dataclass(frozen=True)
class CondDecomp:
    """``margin`` on the conditioning coordinate and one kernel row per atom.

    ``axis=1`` conditions on the first coordinate, ``q = q_{2|1} q1``;
    ``axis=2`` conditions on the second, ``q = q_{1|2} q2``.
    """

    margin: Prob
    kernel: tuple[Prob, ...]
    axis: int = 1

    def __post_init__(self):
        if self.axis not in (1, 2):
            raise ValueError("axis must be 1 or 2")
        object.__setattr__(self, "kernel", tuple(self.kernel))
        if len(self.kernel) != self.margin.n:
            raise ValueError("need one kernel row per atom of the margin")
        if len({k.space for k in self.kernel}) != 1:
            raise SpaceMismatchError("kernel rows must share one sample space")

    @property
    def kernel_matrix(self) -> np.ndarray:
        return np.array([k.weights for k in self.kernel])


@dataclass(frozen=True)
class CondTangent:
    """A tangent vector at a :class:`CondDecomp`: a score for the margin and
    a score for each kernel row."""

    margin_dot: Fiber
    kernel_dot: tuple[Fiber, ...]

    def __post_init__(self):
        object.__setattr__(self, "kernel_dot", tuple(self.kernel_dot))


def _orient(table: np.ndarray, axis: int) -> np.ndarray:
    # rows indexed by the conditioning coordinate
    return table if axis == 1 else table.T


def decompose(q: JointProb, axis: int = 1) -> CondDecomp:
    t = _orient(q.table, axis)
    cond_space, other_space = q.spaces if axis == 1 else q.spaces[::-1]
    m = t.sum(axis=1)
    kernel = tuple(Prob(row / row.sum(), other_space) for row in t)
    return CondDecomp(Prob(m, cond_space), kernel, axis)


def compose(d: CondDecomp) -> JointProb:
    """The Bayes map ``B``: margin times kernel."""
    t = d.margin.weights[:, None] * d.kernel_matrix
    spaces = (d.margin.space, d.kernel[0].space)
    if d.axis == 1:
        return JointProb(t, spaces)
    return JointProb(t.T, spaces[::-1])


def _check_tangent(d: CondDecomp, t: CondTangent) -> None:
    check_base(t.margin_dot, d.margin)
    if len(t.kernel_dot) != len(d.kernel):
        raise ValueError("tangent needs one kernel score per kernel row")
    for v, k in zip(t.kernel_dot, d.kernel):
        check_base(v, k)


def dB(d: CondDecomp, t: CondTangent) -> Fiber:
    """Score of the joint: ``(x, y) -> margin_dot(x) + kernel_dot_x(y)``."""
    _check_tangent(d, t)
    v = t.margin_dot.values[:, None] + np.array([k.values for k in t.kernel_dot])
    return Fiber(compose(d), _orient(v, d.axis).reshape(-1))


def dB_transpose(d: CondDecomp, v: Fiber) -> CondTangent:
    """Adjoint of :func:`dB` for the covariance pairings.

    The margin part is ``E_q[v | Pi]``; the kernel part for atom ``x`` is
    ``q1(x) (v(x, .) - E_{q_{2|1}(.|x)}[v(x, .)])``.
    """
    joint = compose(d)
    check_base(v, joint)
    vt = _orient(v.values.reshape(joint.shape), d.axis)
    k = d.kernel_matrix
    row_means = (vt * k).sum(axis=1)
    m = d.margin.weights
    kernel_dot = tuple(
        Fiber(kx, m[i] * (vt[i] - row_means[i])) for i, kx in enumerate(d.kernel)
    )
    return CondTangent(Fiber(d.margin, row_means), kernel_dot)


def tangent_inner(d: CondDecomp, a: CondTangent, b: CondTangent) -> float:
    """Pairing on the product of the margin fiber and the kernel-row fibers."""
    total = inner(d.margin, a.margin_dot, b.margin_dot)
    for k, u, w in zip(d.kernel, a.kernel_dot, b.kernel_dot):
        total += inner(k, u, w)
    return total


def kl_to_composed(p: JointProb, d: CondDecomp) -> float:
    """``KL(p || B(d))``."""
    q = compose(d)
    if p.space != q.space:
        raise SpaceMismatchError("target and decomposition live on different spaces")
    return float(p.weights @ (np.log(p.weights) - np.log(q.weights)))


def gan_grad(p: JointProb, d: CondDecomp) -> CondTangent:
    """Natural gradient of ``(q1, q_{2|1}) -> KL(p || B(q1, q_{2|1}))``.

    Margin component ``-eta_{q1}(p1)``; component of atom ``x``
    ``-p1(x) eta_{q_{2|1}(.|x)}(p_{2|1}(.|x))``.
    """
    q = compose(d)
    if p.space != q.space:
        raise SpaceMismatchError("target and decomposition live on different spaces")
    pt = _orient(p.table, d.axis)
    p1 = pt.sum(axis=1)
    q1 = d.margin.weights
    first = Fiber(d.margin, 1.0 - p1 / q1)
    rows = tuple(
        Fiber(kx, -p1[i] * (pt[i] / p1[i] / kx.weights - 1.0)) for i, kx in enumerate(d.kernel)
    )
    return CondTangent(first, rows)


def decomp_euler_step(d: CondDecomp, t: CondTangent, dt: float) -> CondDecomp:
    """Multiplicative Euler step on the margin and on every kernel row."""
    _check_tangent(d, t)

    def step(p: Prob, v: Fiber) -> Prob:
        a = dt * v.values
        w = p.weights * np.exp(a - a.max())
        return p.with_weights(w / w.sum())

    return CondDecomp(
        step(d.margin, t.margin_dot),
        tuple(step(k, v) for k, v in zip(d.kernel, t.kernel_dot)),
        d.axis,
    )
