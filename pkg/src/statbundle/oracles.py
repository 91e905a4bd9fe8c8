"""Brute-force reference computations.

Nothing here calls into the chart or gradient machinery: these routines
work on plain arrays so that they can cross-check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .product import JointProb
from .simplex import Prob


@dataclass(frozen=True)
class SinkhornResult:
    plan: JointProb
    iterations: int
    margin_error: float


def sinkhorn_oracle(
    cost,
    eps: float,
    q1: Prob,
    q2: Prob,
    tol: float = 1e-12,
    max_sweeps: int = 100_000,
) -> SinkhornResult:
    """Minimizer of ``KL(q || exp(-U/eps) q1 (x) q2)`` over plans with margins
    ``q1``, ``q2``, by alternate row and column scaling of the Gibbs kernel."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")
    a = np.asarray(q1.weights, dtype=float)
    b = np.asarray(q2.weights, dtype=float)
    c = np.asarray(cost, dtype=float).reshape(a.size, b.size)
    kernel = np.exp(-(c - c.min()) / eps) * a[:, None] * b[None, :]
    u = np.ones(a.size)
    v = np.ones(b.size)
    for it in range(1, max_sweeps + 1):
        u = a / (kernel @ v)
        v = b / (kernel.T @ u)
        plan = u[:, None] * kernel * v[None, :]
        err = max(np.max(np.abs(plan.sum(axis=1) - a)), np.max(np.abs(plan.sum(axis=0) - b)))
        if err <= tol:
            return SinkhornResult(JointProb(plan, (q1.space, q2.space)), it, float(err))
    raise ConvergenceError(f"Sinkhorn did not reach {tol:g} in {max_sweeps} sweeps")


def brute_divergences(q, r) -> tuple[float, float, float, float]:
    """``(KL(q||r), H(q, r), H(q), JS(q, r))`` by explicit loops."""
    qw = [float(x) for x in np.asarray(q, dtype=float).reshape(-1)]
    rw = [float(x) for x in np.asarray(r, dtype=float).reshape(-1)]
    if len(qw) != len(rw):
        raise ValueError("length mismatch")
    kl = 0.0
    cross = 0.0
    ent = 0.0
    js = 0.0
    for a, b in zip(qw, rw):
        kl += a * math.log(a / b)
        cross -= a * math.log(b)
        ent -= a * math.log(a)
        m = 0.5 * (a + b)
        js += 0.5 * a * math.log(a / m) + 0.5 * b * math.log(b / m)
    return kl, cross, ent, js


def _golden_min(f, lo: float, hi: float, xtol: float = 1e-15, max_iter: int = 500) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def schrodinger_2x2_brute(cost, eps: float, q1: Prob, q2: Prob) -> np.ndarray:
    """Minimize the entropic transport objective over the one-parameter
    family of 2x2 plans with margins ``q1``, ``q2`` by golden-section search.

    The plan is ``[[t, a0 - t], [b0 - t, 1 - a0 - b0 + t]]`` and the
    objective is ``sum q log q + sum q U / eps`` (the reference's constant
    factors do not move the minimizer).
    """
    a0 = float(q1.weights[0])
    b0 = float(q2.weights[0])
    c = np.asarray(cost, dtype=float).reshape(2, 2)
    lo = max(0.0, a0 + b0 - 1.0)
    hi = min(a0, b0)

    def plan(t):
        return np.array([[t, a0 - t], [b0 - t, 1.0 - a0 - b0 + t]])

    def objective(t):
        p = plan(t)
        if np.min(p) <= 0:
            return math.inf
        return float(np.sum(p * np.log(p)) + np.sum(p * c) / eps)

    t0 = _golden_min(objective, lo, hi, xtol=1e-12)

    # refine on the increment from t0; each term is written without
    # cancellation so the increment keeps full relative precision
    p0 = plan(t0).reshape(-1)
    sign = np.array([1.0, -1.0, -1.0, 1.0])
    slope = float(sign @ c.reshape(-1)) / eps

    def increment(h):
        terms = [
            s * h * math.log(p + s * h) + p * math.log1p(s * h / p) for p, s in zip(p0, sign)
        ]
        return math.fsum(terms + [slope * h])

    half = min(1e-6, 0.5 * float(np.min(p0)))
    h = _golden_min(increment, -half, half, xtol=1e-18)
    return plan(t0 + h)
