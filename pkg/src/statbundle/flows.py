"""Gradient flows on the open simplex.

A vector field assigns to each point ``q`` a fiber vector at ``q``, read as
the score ``d/dt log q``.  Steps are taken in the exponential chart at the
current point, so positivity is kept and normalization only absorbs an
additive constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Literal

import numpy as np

from .errors import PositivityBreachError, SpaceMismatchError
from .simplex import (
    Fiber,
    Prob,
    cumulant,
    e_transport,
    exp_chart,
    exp_chart_inv,
)

VectorField = Callable[[Prob], Fiber]
Scheme = Literal["exp-euler", "rk4"]

POSITIVITY_FLOOR = 1e-15


@dataclass
class Trajectory:
    """Time-indexed states with the objective and gradient norm at each one.

    States are :class:`Prob` points for simplex flows and parameter vectors
    for flows in a parameter space.
    """

    times: list[float] = field(default_factory=list)
    states: list[Any] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)

    def append(self, t: float, state, objective: float, grad_norm: float) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("trajectory times must be strictly increasing")
        self.times.append(float(t))
        self.states.append(state)
        self.objective.append(float(objective))
        self.grad_norm.append(float(grad_norm))

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.states[-1]

    @property
    def diagnostics(self) -> list[dict[str, float]]:
        return [
            {"objective": f, "grad_norm": g} for f, g in zip(self.objective, self.grad_norm)
        ]

    def state_matrix(self) -> np.ndarray:
        return np.array([np.asarray(s, dtype=float) for s in self.states])


def _guarded(q: Prob, weights: np.ndarray) -> Prob:
    if not np.all(np.isfinite(weights)) or np.min(weights) < POSITIVITY_FLOOR:
        raise PositivityBreachError(f"state weight fell below {POSITIVITY_FLOOR:g}")
    return q.with_weights(weights)


def exp_euler_step(q: Prob, v: Fiber, dt: float) -> Prob:
    """``normalize(q * exp(dt v))``."""
    a = dt * v.values
    w = q.weights * np.exp(a - a.max())
    return _guarded(q, w / w.sum())


def rk4_step(q: Prob, F: VectorField, dt: float, k1: Fiber | None = None) -> Prob:
    """Classical RK4 in the exponential chart centered at ``q``.

    With ``p = e_q(v)`` the chart velocity is the field pulled back to the
    fiber at ``q`` by the exponential transport, ``dv/dt = F(p) - E_q[F(p)]``.
    """

    def rhs(v: np.ndarray) -> np.ndarray:
        p = exp_chart_inv(q, Fiber(q, v - v @ q.weights))
        return e_transport(p, q, F(p)).values

    if k1 is None:
        k1v = rhs(np.zeros(q.n))
    else:
        k1v = k1.values
    k2 = rhs(0.5 * dt * k1v)
    k3 = rhs(0.5 * dt * k2)
    k4 = rhs(dt * k3)
    v = dt / 6.0 * (k1v + 2.0 * k2 + 2.0 * k3 + k4)
    w = q.weights * np.exp(v - v.max())
    return _guarded(q, w / w.sum())


def integrate(
    q0: Prob,
    F: VectorField,
    dt: float,
    steps: int,
    scheme: Scheme = "exp-euler",
    objective: Callable[[Prob], float] | None = None,
    stop_tol: float | None = None,
) -> Trajectory:
    """Integrate ``score = F(q)`` from ``q0`` for ``steps`` steps of size ``dt``.

    ``objective`` is only evaluated for the diagnostics.  With ``stop_tol``
    set, integration stops at the first state whose field norm is at most
    ``stop_tol``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if scheme not in ("exp-euler", "rk4"):
        raise ValueError(f"unknown scheme {scheme!r}")

    traj = Trajectory()
    q = q0
    for k in range(steps + 1):
        v = F(q)
        g = v.norm()
        traj.append(k * dt, q, objective(q) if objective else np.nan, g)
        if k == steps or (stop_tol is not None and g <= stop_tol):
            break
        if scheme == "exp-euler":
            q = exp_euler_step(q, v, dt)
        else:
            q = rk4_step(q, F, dt, k1=v)
    return traj


def exp_flow(r: Prob, q0: Prob, t: float) -> Prob:
    """Closed-form solution of ``score = s_q(r)``, ``q(0) = q0``.

    The exponential coordinates at ``r`` contract as ``exp(-t) s_r(q0)``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    v = exp_chart(r, q0).values * np.exp(-t)
    return r.with_weights(np.exp(v - cumulant(r, v)) * r.weights)


def mix_flow(q: Prob, r0: Prob, t: float) -> Prob:
    """Closed-form solution of ``score = eta_r(q)``, ``r(0) = r0``:
    the mixture ``exp(-t) r0 + (1 - exp(-t)) q``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if q.space != r0.space:
        raise SpaceMismatchError("probability functions live on different spaces")
    a = np.exp(-t)
    return q.with_weights(a * r0.weights + (1.0 - a) * q.weights)
