"""Factorial sample spaces ``Omega1 x Omega2``.

Margins and conditional expectations, the mean-field map ``r -> r1 (x) r2``
and its derivative, ANOVA decomposition of random variables, gradients of
the two mean-field divergences, and the Kantorovich and Schrodinger
problems over the transport plans ``Gamma(q1, q2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, IllConditionedError
from .flows import Trajectory, exp_euler_step
from .simplex import (
    Fiber,
    Prob,
    RandomVariable,
    Rv,
    SampleSpace,
    _values,
    center,
    check_base,
    exp_chart,
    expect,
    kl,
    mix_chart,
)

_product_space = lru_cache(maxsize=256)(SampleSpace.product)


class JointProb(Prob):
    """Strictly positive probability function on ``Omega1 x Omega2``.

    Stored row-major: ``weights[i * n2 + j]`` is the mass of ``(x_i, y_j)``.
    A JointProb is a :class:`Prob` on the product space, so every simplex
    operation applies to it directly; ``table`` is the ``n1 x n2`` view.
    """

    __slots__ = ("spaces",)

    def __init__(self, weights, spaces: tuple[SampleSpace, SampleSpace] | None = None):
        t = np.asarray(weights, dtype=float)
        if t.ndim != 2:
            raise ValueError("joint weights must be a 2-d table")
        if spaces is None:
            spaces = (SampleSpace(t.shape[0]), SampleSpace(t.shape[1]))
        s1, s2 = spaces
        if (s1.size, s2.size) != t.shape:
            raise ValueError(f"table shape {t.shape} does not match the spaces")
        super().__init__(t.reshape(-1), _product_space(s1, s2))
        object.__setattr__(self, "spaces", (s1, s2))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.spaces[0].size, self.spaces[1].size)

    @property
    def table(self) -> np.ndarray:
        return self.weights.reshape(self.shape)

    def with_weights(self, weights) -> JointProb:
        return JointProb(np.reshape(weights, self.shape), self.spaces)

    @classmethod
    def from_prob(cls, p: Prob, n1: int, n2: int) -> JointProb:
        return cls(p.weights.reshape(n1, n2))

    def __repr__(self):
        return f"JointProb({np.array2string(self.table, precision=6)})"


def _table(r: JointProb, v: RandomVariable) -> np.ndarray:
    return _values(r, v).reshape(r.shape)


def _axis(axis: int) -> int:
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    return axis


def marginal(r: JointProb, axis: int = 1) -> Prob:
    """Margin of ``r`` on ``Omega1`` (axis 1) or ``Omega2`` (axis 2)."""
    if _axis(axis) == 1:
        return Prob(r.table.sum(axis=1), r.spaces[0])
    return Prob(r.table.sum(axis=0), r.spaces[1])


def product(q1: Prob, q2: Prob) -> JointProb:
    return JointProb(np.outer(q1.weights, q2.weights), (q1.space, q2.space))


def mean_field(r: JointProb) -> JointProb:
    """The product of the margins of ``r``."""
    return product(marginal(r, 1), marginal(r, 2))


def condexp(r: JointProb, v: RandomVariable, axis: int = 1) -> Rv:
    """``E_r[v | Pi_axis]`` as a random variable on the margin's space."""
    t = r.table
    vt = _table(r, v)
    if _axis(axis) == 1:
        return Rv((vt * t).sum(axis=1) / t.sum(axis=1), r.spaces[0])
    return Rv((vt * t).sum(axis=0) / t.sum(axis=0), r.spaces[1])


def lift(r: JointProb, f: RandomVariable, axis: int = 1) -> Rv:
    """A function of one coordinate seen as a random variable on the product."""
    n1, n2 = r.shape
    if _axis(axis) == 1:
        a = np.asarray(f, dtype=float).reshape(n1)
        return Rv(np.repeat(a, n2), r.space)
    a = np.asarray(f, dtype=float).reshape(n2)
    return Rv(np.tile(a, n1), r.space)


def _sum_condexp(r: JointProb, v: RandomVariable, weights: JointProb | None = None) -> np.ndarray:
    # E[v|Pi1] + E[v|Pi2] under ``weights`` (default r), as a joint table
    w = r if weights is None else weights
    c1 = condexp(w, v, 1).values
    c2 = condexp(w, v, 2).values
    return c1[:, None] + c2[None, :]


def d_marginalization(r: JointProb, rdot: Fiber, axis: int = 1) -> Fiber:
    """Derivative of the marginalization: the score of ``Pi_axis(r(t))`` is
    ``E_r[rdot | Pi_axis]``."""
    check_base(rdot, r)
    return center(marginal(r, axis), condexp(r, rdot, axis))


def d_mean_field(r: JointProb, rdot: Fiber) -> Fiber:
    """Derivative of ``r -> r1 (x) r2``; the result lives at the product."""
    check_base(rdot, r)
    return center(mean_field(r), _sum_condexp(r, rdot))


@dataclass(frozen=True)
class AnovaParts:
    """``u = mean + effect1(x) + effect2(y) + interaction(x, y)`` under ``base``."""

    mean: float
    effect1: Rv
    effect2: Rv
    interaction: Rv
    base: JointProb

    def reconstruct(self) -> np.ndarray:
        e = self.effect1.values[:, None] + self.effect2.values[None, :]
        return self.mean + e.reshape(-1) + self.interaction.values


def anova(q: JointProb, u: RandomVariable) -> AnovaParts:
    """ANOVA decomposition of ``u`` in ``L2(q)``.

    The main effects are the orthogonal projection of ``u - E_q[u]`` onto
    ``{f(x) + g(y)}`` with ``f``, ``g`` centered under the margins of ``q``;
    the interaction is the residual.  For a product ``q`` the effects reduce
    to the conditional expectations.
    """
    n1, n2 = q.shape
    q1 = marginal(q, 1).weights
    q2 = marginal(q, 2).weights
    ut = _table(q, u)
    mean = float(ut.reshape(-1) @ q.weights)
    resid = ut - mean

    # centered indicator bases of the two marginal subspaces
    b1 = np.eye(n1)[: n1 - 1] - q1[: n1 - 1, None]  # (n1-1, n1)
    b2 = np.eye(n2)[: n2 - 1] - q2[: n2 - 1, None]
    design = np.concatenate(
        [
            np.repeat(b1, n2, axis=1),  # rows: basis fn of x, broadcast along y
            np.tile(b2, (1, n1)),
        ]
    ).T  # (n1*n2, n1+n2-2)
    w = q.weights
    gram = (design.T * w) @ design
    if np.linalg.cond(gram) > 1e12:
        raise IllConditionedError("ANOVA normal equations are ill-conditioned")
    coef = np.linalg.solve(gram, (design.T * w) @ resid.reshape(-1))
    f = coef[: n1 - 1] @ b1
    g = coef[n1 - 1 :] @ b2
    inter = resid - f[:, None] - g[None, :]
    return AnovaParts(
        mean=mean,
        effect1=Rv(f, q.spaces[0]),
        effect2=Rv(g, q.spaces[1]),
        interaction=Rv(inter, q.space),
        base=q,
    )


def interaction(q: JointProb, u: RandomVariable) -> Fiber:
    """Interaction part of ``u`` under ``q``, as a fiber vector at ``q``."""
    return center(q, anova(q, u).interaction)


def mutual_information(r: JointProb) -> float:
    return kl(r, mean_field(r))


def grad_kl_meanfield_fwd(r: JointProb) -> Fiber:
    """Natural gradient of ``r -> KL(r1 (x) r2 || r)``."""
    pi = mean_field(r)
    s = exp_chart(r, pi)
    return center(r, _sum_condexp(r, s, weights=pi).reshape(-1) - mix_chart(r, pi).values)


def grad_kl_meanfield_rev(r: JointProb) -> Fiber:
    """Natural gradient of the mutual information ``r -> KL(r || r1 (x) r2)``."""
    pi = mean_field(r)
    eta = mix_chart(r, pi)
    return center(r, -exp_chart(r, pi).values + _sum_condexp(r, eta).reshape(-1))


def kantorovich_cost(q: JointProb, cost: RandomVariable) -> float:
    return expect(q, cost)


def kantorovich_grad(q: JointProb, cost: RandomVariable) -> Fiber:
    """Gradient of ``q -> E_q[U]`` restricted to transport plans.

    Velocities of curves in ``Gamma(q1, q2)`` are interactions, so only the
    interaction part of ``U - E_q[U]`` pairs with them.
    """
    return interaction(q, cost)


def _log_mean_exp(a: np.ndarray, w: np.ndarray) -> float:
    m = a.max()
    return float(m + np.log(np.exp(a - m) @ w))


@dataclass(frozen=True)
class SchrodingerProblem:
    """Entropic transport between ``margins`` with cost ``cost`` at temperature
    ``epsilon``.  ``log_normalizer`` is ``log E_{q1 (x) q2}[exp(-U/epsilon)]``."""

    cost: np.ndarray
    epsilon: float
    margins: tuple[Prob, Prob]
    log_normalizer: float

    def __post_init__(self):
        c = np.array(self.cost, dtype=float)
        q1, q2 = self.margins
        if c.shape != (q1.n, q2.n):
            raise ValueError(f"cost shape {c.shape} does not match margins ({q1.n}, {q2.n})")
        if not np.all(np.isfinite(c)):
            raise ValueError("cost must be finite")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "cost", c)
        psi = _log_mean_exp(-c.reshape(-1) / self.epsilon, np.outer(q1.weights, q2.weights).reshape(-1))
        if abs(psi - self.log_normalizer) > 1e-12 * max(1.0, abs(psi)):
            raise ValueError("log_normalizer is inconsistent with cost and margins")

    @classmethod
    def create(cls, cost, epsilon: float, q1: Prob, q2: Prob) -> SchrodingerProblem:
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        c = np.asarray(cost, dtype=float).reshape(q1.n, q2.n)
        psi = _log_mean_exp(-c.reshape(-1) / epsilon, np.outer(q1.weights, q2.weights).reshape(-1))
        return cls(c, float(epsilon), (q1, q2), psi)

    def reference(self) -> JointProb:
        """The tilted product ``exp(-U/epsilon - psi) q1 (x) q2``."""
        q1, q2 = self.margins
        t = np.exp(-self.cost / self.epsilon - self.log_normalizer) * np.outer(q1.weights, q2.weights)
        return JointProb(t / t.sum(), (q1.space, q2.space))

    def product_plan(self) -> JointProb:
        return product(*self.margins)


def schrodinger_objective(prob: SchrodingerProblem, q: JointProb) -> float:
    """``KL(q || exp(-U/epsilon - psi) q1 (x) q2)`` summed directly, with
    ``q1``, ``q2`` the margins of ``q`` and ``psi`` the problem's normalizer.

    On ``Gamma(q1, q2)`` these are the problem's margins, and the value equals
    ``E_q[U]/epsilon + KL(q || q1 (x) q2) + psi``.
    """
    t = q.table
    pi = np.outer(t.sum(axis=1), t.sum(axis=0))
    log_ref = -prob.cost / prob.epsilon - prob.log_normalizer + np.log(pi)
    return float(np.sum(t * (np.log(t) - log_ref)))


def schrodinger_grad(prob: SchrodingerProblem, q: JointProb) -> Fiber:
    """Natural gradient of :func:`schrodinger_objective`.

    ``(U - E_q U)/epsilon - s_q(q1 (x) q2) + E_q[eta | Pi1] + E_q[eta | Pi2]``
    with ``eta = eta_q(q1 (x) q2)``; only the cost term carries ``1/epsilon``.
    """
    u = _values(q, prob.cost)
    return center(q, u / prob.epsilon) + grad_kl_meanfield_rev(q)


def schrodinger_interaction_grad(prob: SchrodingerProblem, q: JointProb) -> Fiber:
    """The part of :func:`schrodinger_grad` that acts on transport plans."""
    return interaction(q, schrodinger_grad(prob, q))


def ipf(
    q: JointProb,
    q1: Prob,
    q2: Prob,
    tol: float = 1e-14,
    max_sweeps: int = 100_000,
) -> JointProb:
    """Iterative proportional fitting of ``q`` onto ``Gamma(q1, q2)``."""
    t = np.array(q.table)
    a = q1.weights
    b = q2.weights
    for _ in range(max_sweeps):
        t *= (a / t.sum(axis=1))[:, None]
        t *= (b / t.sum(axis=0))[None, :]
        err = np.max(np.abs(t.sum(axis=1) - a))
        if err <= tol:
            return JointProb(t, (q1.space, q2.space))
    raise ConvergenceError(f"IPF did not reach {tol:g} in {max_sweeps} sweeps")


def constrained_schrodinger_flow(
    prob: SchrodingerProblem,
    q0: JointProb | None,
    dt: float,
    steps: int,
    stop_tol: float | None = None,
) -> Trajectory:
    """Gradient flow of the Schrodinger objective inside ``Gamma(q1, q2)``.

    Each step moves along minus the interaction part of the gradient by a
    multiplicative Euler step, then restores the margins by IPF.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    q1, q2 = prob.margins
    q = prob.product_plan() if q0 is None else q0
    if (
        np.max(np.abs(marginal(q, 1).weights - q1.weights)) > 1e-10
        or np.max(np.abs(marginal(q, 2).weights - q2.weights)) > 1e-10
    ):
        raise ValueError("initial plan does not have the problem's margins")

    traj = Trajectory()
    for k in range(steps + 1):
        v = -schrodinger_interaction_grad(prob, q)
        g = v.norm()
        traj.append(k * dt, q, schrodinger_objective(prob, q), g)
        if k == steps or (stop_tol is not None and g <= stop_tol):
            break
        q = ipf(exp_euler_step(q, v, dt), q1, q2)
    return traj
