"""Variational lower bound for a discrete latent variable.

The joint ``q12`` lives on ``Omega1 x Omega2``; ``x`` in ``Omega1`` is
observed and ``y`` in ``Omega2`` is latent.  The posterior
``q_{2|1}(.|x)`` is approximated in an exponential tilt of the prior,
``r_theta = exp(theta . u - psi(theta)) q2`` with ``E_{q2}[u] = 0``, by the
gradient flow of the lower bound in ``theta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, IllConditionedError, NonPositiveError
from .flows import Trajectory
from .product import JointProb, marginal
from .simplex import Fiber, Prob, center, cumulant, kl


@dataclass(frozen=True)
class ExpModel:
    """Exponential family ``exp(theta . u - psi(theta)) base``.

    ``suffstats`` has shape ``(d, n)``.  The statistics are re-centered under
    ``base`` on construction and their covariance Gram matrix must be
    nonsingular.
    """

    base: Prob
    suffstats: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        u = np.atleast_2d(np.array(self.suffstats, dtype=float))
        if u.shape[1] != self.base.n:
            raise ValueError(f"statistics have {u.shape[1]} values, base has {self.base.n} atoms")
        u = u - (u @ self.base.weights)[:, None]
        gram = (u * self.base.weights) @ u.T
        if np.linalg.cond(gram) >= 1e12:
            raise IllConditionedError("sufficient statistics are linearly dependent")
        th = np.array(self.theta, dtype=float).reshape(-1)
        if th.shape != (u.shape[0],):
            raise ValueError(f"theta must have {u.shape[0]} entries")
        u.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "suffstats", u)
        object.__setattr__(self, "theta", th)

    @property
    def dim(self) -> int:
        return self.suffstats.shape[0]

    def with_theta(self, theta) -> ExpModel:
        return ExpModel(self.base, self.suffstats, theta)

    def log_density(self) -> np.ndarray:
        """``theta . u`` on the atoms."""
        return self.theta @ self.suffstats


def whitened_indicator_stats(q2: Prob, d: int) -> np.ndarray:
    """``d`` statistics spanning the first ``d`` centered indicators, whitened
    so that their covariance under ``q2`` is the identity."""
    if not 1 <= d <= q2.n - 1:
        raise ValueError(f"dimension must lie in [1, {q2.n - 1}]")
    b = np.eye(q2.n)[:d] - q2.weights[:d, None]
    gram = (b * q2.weights) @ b.T
    chol = np.linalg.cholesky(gram)
    return np.linalg.solve(chol, b)


def model_prob(m: ExpModel) -> Prob:
    a = m.log_density()
    w = np.exp(a - a.max()) * m.base.weights
    return m.base.with_weights(w / w.sum())


def psi(m: ExpModel) -> float:
    return cumulant(m.base, m.log_density())


def grad_psi(m: ExpModel) -> np.ndarray:
    """``E_{r_theta}[u]``."""
    return m.suffstats @ model_prob(m).weights


def hess_psi(m: ExpModel) -> np.ndarray:
    """``Cov_{r_theta}(u_i, u_j)``."""
    r = model_prob(m).weights
    c = m.suffstats - (m.suffstats @ r)[:, None]
    h = (c * r) @ c.T
    return 0.5 * (h + h.T)


@dataclass(frozen=True)
class VBProblem:
    """A joint ``q12`` and an observed index ``x`` of the first coordinate."""

    joint: JointProb
    x: int

    def __post_init__(self):
        if not isinstance(self.joint, JointProb):
            raise TypeError("joint must be a JointProb")
        if not 0 <= self.x < self.joint.shape[0]:
            raise ValueError(f"observation index {self.x} out of range")

    @property
    def prior(self) -> Prob:
        """``q2``."""
        return marginal(self.joint, 2)

    @property
    def posterior(self) -> Prob:
        """``q_{2|1}(.|x)``."""
        row = self.joint.table[self.x]
        return Prob(row / row.sum(), self.joint.spaces[1])

    @property
    def log_evidence(self) -> float:
        """``log q1(x)``."""
        return float(np.log(self.joint.table[self.x].sum()))

    def log_joint(self) -> np.ndarray:
        """``log q12(x, .)``."""
        return np.log(self.joint.table[self.x])

    def log_likelihood(self) -> np.ndarray:
        """``log q_{1|2}(x|.)``."""
        return self.log_joint() - np.log(self.prior.weights)


def elbo(p: VBProblem, r: Prob) -> float:
    """``L(r, x) = -KL(r || q2) + E_r[log q_{1|2}(x|.)]``."""
    return -kl(r, p.prior) + float(r.weights @ p.log_likelihood())


def elbo_natural_grad(p: VBProblem, r: Prob) -> Fiber:
    """Natural gradient of ``r -> L(r, x)``: ``log(q12(x,.)/r)`` centered at ``r``."""
    return center(r, p.log_joint() - np.log(r.weights))


def vb_theta_rhs(p: VBProblem, m: ExpModel) -> np.ndarray:
    """``-Hess psi(theta) theta + Cov_{r_theta}(u, log q_{1|2}(x|.))``.

    This is the gradient of ``theta -> L(r_theta, x)``.
    """
    if m.base.space != p.prior.space:
        raise ValueError("model and problem live on different latent spaces")
    r = model_prob(m).weights
    c = m.suffstats - (m.suffstats @ r)[:, None]
    ll = p.log_likelihood()
    return -hess_psi(m) @ m.theta + (c * r) @ (ll - ll @ r)


def theta_bar(p: VBProblem, m: ExpModel) -> np.ndarray:
    """Parameter whose model point is closest to the posterior in the
    exponential chart at ``q2``; the posterior itself when the model is exact."""
    s = np.log(p.posterior.weights) - np.log(m.base.weights)
    s = s - s @ m.base.weights
    u = m.suffstats
    w = m.base.weights
    return np.linalg.solve((u * w) @ u.T, (u * w) @ s)


def vb_flow(
    p: VBProblem,
    m0: ExpModel,
    dt: float,
    steps: int,
    stop_tol: float | None = None,
) -> Trajectory:
    """RK4 integration of ``theta' = vb_theta_rhs``.

    States are parameter vectors; the objective column is the lower bound.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be at least 1")

    def rhs(theta: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > 1e6:
            raise DivergenceError("parameter norm exceeded 1e6")
        try:
            return vb_theta_rhs(p, m0.with_theta(theta))
        except NonPositiveError as exc:
            raise DivergenceError(f"model left the open simplex: {exc}") from exc

    traj = Trajectory()
    theta = np.array(m0.theta)
    for k in range(steps + 1):
        m = m0.with_theta(theta)
        k1 = rhs(theta)
        g = float(np.linalg.norm(k1))
        traj.append(k * dt, theta.copy(), elbo(p, model_prob(m)), g)
        if k == steps or (stop_tol is not None and g <= stop_tol):
            break
        k2 = rhs(theta + 0.5 * dt * k1)
        k3 = rhs(theta + 0.5 * dt * k2)
        k4 = rhs(theta + dt * k3)
        theta = theta + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > 1e6:
            raise DivergenceError(f"parameter norm exceeded 1e6 at step {k + 1}")
    return traj
