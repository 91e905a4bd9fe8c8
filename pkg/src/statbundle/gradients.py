"""Natural gradients of divergences and entropies on the open simplex.

The natural gradient of a scalar field ``Phi`` at ``q`` is the fiber vector
``g`` with ``d/dt Phi(q(t)) = E_q[g * score]`` for every curve through ``q``,
where the score is ``d/dt log q(t)``.  Functions of two probabilities have a
total gradient with one component in each fiber (:class:`GradPair`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IllConditionedError
from .simplex import (
    Fiber,
    Prob,
    RandomVariable,
    center,
    cross_entropy,
    entropy,
    exp_chart,
    exp_chart_inv,
    midpoint,
    mix_chart,
)

ScalarField = Callable[[Prob], float]


@dataclass(frozen=True)
class GradPair:
    """Total gradient of a function of ``(q, r)``: ``first`` lives in the
    fiber at ``q``, ``second`` in the fiber at ``r``."""

    first: Fiber
    second: Fiber


def grad_expect(q: Prob, u: RandomVariable) -> Fiber:
    """Gradient of ``q -> E_q[u]``, which is ``u - E_q[u]``."""
    return center(q, u)


def grad_kl_total(q: Prob, r: Prob) -> GradPair:
    """Total natural gradient of ``KL(q || r)``: ``(-s_q(r), -eta_r(q))``."""
    return GradPair(-exp_chart(q, r), -mix_chart(r, q))


def grad_cross_entropy_total(q: Prob, r: Prob) -> GradPair:
    """Total natural gradient of ``H(q, r) = -E_q[log r]``.

    The ``r`` slot is ``-eta_r(q)``, the same as for ``KL(q||r)``: the two
    functions differ by ``H(q)``, which does not depend on ``r``.
    """
    first = -np.log(r.weights) - cross_entropy(q, r)
    # the mean of ``first`` is zero only up to rounding
    return GradPair(center(q, first), -mix_chart(r, q))


def grad_entropy(q: Prob) -> Fiber:
    """Gradient of the entropy, ``-log q - H(q)``."""
    return center(q, -np.log(q.weights) - entropy(q))


def grad_js(q: Prob, r: Prob) -> Fiber:
    """Gradient of ``q -> JS(q, r)``: ``-s_q((q + r)/2) / 2``."""
    return -0.5 * exp_chart(q, midpoint(q, r))


def grad_phi_mixture_center(p: Prob, q: Prob, r: Prob) -> Fiber:
    """Gradient in ``p`` of ``(KL(q||p) + KL(r||p)) / 2``.

    Vanishes exactly at the midpoint of ``q`` and ``r``, where the function
    attains the Jensen-Shannon divergence as its minimum.
    """
    return -0.5 * (mix_chart(p, q) + mix_chart(p, r))


def fd_natural_grad(phi: ScalarField, q: Prob, eps: float = 1e-4) -> Fiber:
    """Natural gradient of ``phi`` at ``q`` by central differences.

    Differentiates along the exponential curves ``t -> e_q(t b_k)`` with
    ``b_k = 1{x_k} - q(x_k)``, k < n-1, and solves the Gram system of the
    covariance pairing.  Used as an independent check of the closed forms.
    """
    if not 0.0 < eps <= 1e-2:
        raise ValueError("eps must lie in (0, 1e-2]")
    n = q.n
    w = q.weights
    basis = np.eye(n)[: n - 1] - w[: n - 1, None]  # row k is b_k
    d = np.empty(n - 1)
    for k, b in enumerate(basis):
        plus = phi(exp_chart_inv(q, Fiber(q, eps * b)))
        minus = phi(exp_chart_inv(q, Fiber(q, -eps * b)))
        d[k] = (plus - minus) / (2.0 * eps)
    gram = (basis * w) @ basis.T
    if np.linalg.cond(gram) > 1e12:
        raise IllConditionedError("Gram matrix of the difference basis is singular")
    coef = np.linalg.solve(gram, d)
    return center(q, coef @ basis)


def fd_directional(phi: Callable[[float], float], t: float = 0.0, h: float = 1e-5) -> float:
    """Central difference of a scalar function of time."""
    return (phi(t + h) - phi(t - h)) / (2.0 * h)


def max_rel_error(analytic: Fiber | np.ndarray, reference: Fiber | np.ndarray) -> float:
    """``max|a - b| / (1 + max|a|)``, the comparison used by the gradient checks."""
    a = np.asarray(analytic, dtype=float)
    b = np.asarray(reference, dtype=float)
    return float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(a))))


__all__ = [
    "GradPair",
    "ScalarField",
    "fd_directional",
    "fd_natural_grad",
    "grad_cross_entropy_total",
    "grad_entropy",
    "grad_expect",
    "grad_js",
    "grad_kl_total",
    "grad_phi_mixture_center",
    "max_rel_error",
]
