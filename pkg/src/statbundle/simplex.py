"""Positive probability functions on a finite sample space and the dually
affine structure of the statistical bundle over them.

A point of the open simplex is a :class:`Prob`.  A random variable is an
:class:`Rv`; a random variable that is centered under a base point and
remembers that base point is a :class:`Fiber`.  Fibers are the tangent
vectors of the geometry: velocities, chart coordinates and natural
gradients all live there, paired by the covariance ``E_p[v w]``.

The two affine structures are

* exponential: chart ``s_p(q) = log(q/p) - E_p[log(q/p)]``, transport
  ``v -> v - E_r[v]``;
* mixture: chart ``eta_p(q) = q/p - 1``, transport ``w -> (q/r) w``.

All objects are immutable; their arrays are flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    BaseMismatchError,
    CenteringError,
    NonPositiveError,
    SpaceMismatchError,
)

MIN_WEIGHT = 1e-300
NORMALIZATION_SLACK = 1e-9
BASE_TOL = 1e-15
CENTER_TOL = 1e-10


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SampleSpace:
    """A finite sample space with ``size`` atoms and optional labels."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise ValueError(f"sample space needs at least 2 atoms, got {self.size}")
        object.__setattr__(self, "size", int(self.size))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.size:
                raise ValueError("labels must have one entry per atom")
            if len(set(labels)) != len(labels):
                raise ValueError("labels must be unique")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def product(cls, first: SampleSpace, second: SampleSpace) -> SampleSpace:
        """The product space, atoms ordered row-major."""
        la = first.labels or tuple(str(i) for i in range(first.size))
        lb = second.labels or tuple(str(j) for j in range(second.size))
        return cls(first.size * second.size, tuple(f"({a},{b})" for a in la for b in lb))


def _space(space: SampleSpace | int | None, n: int) -> SampleSpace:
    if space is None:
        return SampleSpace(n)
    if isinstance(space, SampleSpace):
        if space.size != n:
            raise SpaceMismatchError(f"space has {space.size} atoms, values have {n}")
        return space
    return _space(SampleSpace(int(space)), n)


class Prob:
    """Strictly positive probability function on a finite sample space.

    Weights below ``1e-300`` are rejected.  A total that differs from one by
    at most ``1e-9`` is renormalized, anything further off is an error.
    """

    __slots__ = ("space", "weights")

    def __init__(self, weights, space: SampleSpace | int | None = None):
        w = np.array(weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise NonPositiveError("weights must be finite")
        if w.size < 2:
            raise ValueError("a probability function needs at least 2 atoms")
        if np.min(w) < MIN_WEIGHT:
            raise NonPositiveError(f"weight {np.min(w):.3g} is not strictly positive")
        total = w.sum()
        if abs(total - 1.0) > NORMALIZATION_SLACK:
            raise NonPositiveError(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "space", _space(space, w.size))
        object.__setattr__(self, "weights", _frozen(w / total))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def n(self) -> int:
        return self.space.size

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,)

    def with_weights(self, weights) -> Prob:
        """A new point on the same space (subclasses keep their structure)."""
        return Prob(weights, self.space)

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Prob({np.array2string(self.weights, precision=6)})"

    def same_point(self, other: Prob, tol: float = BASE_TOL) -> bool:
        return (
            self.space == other.space
            and float(np.max(np.abs(self.weights - other.weights))) <= tol
        )


def uniform(space: SampleSpace | int) -> Prob:
    n = space.size if isinstance(space, SampleSpace) else int(space)
    return Prob(np.full(n, 1.0 / n), space)


def random_prob(rng: np.random.Generator, space: SampleSpace | int, concentration: float = 2.0) -> Prob:
    """Dirichlet draw with a symmetric concentration parameter."""
    n = space.size if isinstance(space, SampleSpace) else int(space)
    return Prob(rng.dirichlet(np.full(n, concentration)), space)


class Rv:
    """A real random variable on a sample space."""

    __slots__ = ("space", "values")

    def __init__(self, values, space: SampleSpace | int | None = None):
        v = np.array(values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("random variable values must be finite")
        object.__setattr__(self, "space", _space(space, v.size))
        object.__setattr__(self, "values", _frozen(v))

    def __setattr__(self, name, value):
        raise AttributeError("Rv is immutable")

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __repr__(self):
        return f"Rv({np.array2string(self.values, precision=6)})"

    def _other(self, other):
        if isinstance(other, (Rv, Fiber)):
            sp = other.space
            if sp != self.space:
                raise SpaceMismatchError("random variables live on different spaces")
            return other.values
        return other

    def __add__(self, other):
        return Rv(self.values + self._other(other), self.space)

    __radd__ = __add__

    def __sub__(self, other):
        return Rv(self.values - self._other(other), self.space)

    def __rsub__(self, other):
        return Rv(self._other(other) - self.values, self.space)

    def __mul__(self, other):
        return Rv(self.values * self._other(other), self.space)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Rv(self.values / c, self.space)

    def __neg__(self):
        return Rv(-self.values, self.space)


class Fiber:
    """A random variable centered under ``base``: an element of the fiber at
    ``base`` of the statistical bundle.

    Construction checks ``|E_base[values]| <= 1e-10 (1 + max|values|)``.
    Use :func:`center` to project an arbitrary random variable.
    """

    __slots__ = ("base", "values")

    def __init__(self, base: Prob, values):
        v = _values(base, values)
        scale = 1.0 + float(np.max(np.abs(v)))
        mean = float(v @ base.weights)
        if not np.isfinite(mean) or abs(mean) > CENTER_TOL * scale:
            raise CenteringError(f"mean {mean:.3g} under the base point is not zero")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "values", _frozen(v))

    def __setattr__(self, name, value):
        raise AttributeError("Fiber is immutable")

    @property
    def space(self) -> SampleSpace:
        return self.base.space

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __repr__(self):
        return f"Fiber({np.array2string(self.values, precision=6)})"

    def _other(self, other: Fiber) -> np.ndarray:
        if not isinstance(other, Fiber):
            raise TypeError("fiber arithmetic needs another Fiber")
        check_base(self, other.base)
        return other.values

    def __add__(self, other):
        return Fiber(self.base, self.values + self._other(other))

    def __sub__(self, other):
        return Fiber(self.base, self.values - self._other(other))

    def __mul__(self, c):
        if not np.isscalar(c):
            raise TypeError("fibers are scaled by real numbers only")
        return Fiber(self.base, self.values * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Fiber(self.base, self.values / c)

    def __neg__(self):
        return Fiber(self.base, -self.values)

    def norm(self) -> float:
        """Norm in the covariance pairing."""
        return float(np.sqrt(self.values**2 @ self.base.weights))


RandomVariable = Union[Rv, Fiber, np.ndarray]


def _values(p: Prob, u) -> np.ndarray:
    """Values of ``u`` as a flat array on the space of ``p``."""
    if isinstance(u, (Rv, Fiber)):
        if u.space != p.space:
            raise SpaceMismatchError("random variable and probability live on different spaces")
        return u.values
    a = np.asarray(u, dtype=float)
    if a.shape != (p.n,):
        if a.shape == p.shape:
            return a.reshape(-1)
        raise SpaceMismatchError(f"expected {p.n} values, got shape {a.shape}")
    return a


def check_base(v: Fiber, p: Prob) -> None:
    """Raise unless ``v`` is based at ``p``."""
    if not isinstance(v, Fiber):
        raise TypeError(f"expected a Fiber, got {type(v).__name__}")
    if not v.base.same_point(p):
        raise BaseMismatchError("fiber vector is based at a different point")


def _fiber_values(p: Prob, v) -> np.ndarray:
    if isinstance(v, Fiber):
        check_base(v, p)
        return v.values
    return _values(p, v)


def _check_space(p: Prob, q: Prob) -> None:
    if p.space != q.space:
        raise SpaceMismatchError("probability functions live on different spaces")


def expect(p: Prob, u: RandomVariable) -> float:
    return float(_values(p, u) @ p.weights)


def cov(p: Prob, u: RandomVariable, w: RandomVariable) -> float:
    a = _values(p, u)
    b = _values(p, w)
    a = a - a @ p.weights
    b = b - b @ p.weights
    return float((a * b) @ p.weights)


def inner(p: Prob, v: RandomVariable, w: RandomVariable) -> float:
    """Fiber pairing ``E_p[v w]``; fibers must be based at ``p``."""
    return float((_fiber_values(p, v) * _fiber_values(p, w)) @ p.weights)


def center(p: Prob, u: RandomVariable) -> Fiber:
    a = _values(p, u)
    return Fiber(p, a - a @ p.weights)


def exp_chart(p: Prob, q: Prob) -> Fiber:
    """Exponential coordinates of ``q`` at ``p``."""
    _check_space(p, q)
    return center(p, np.log(q.weights) - np.log(p.weights))


def exp_chart_inv(p: Prob, v: Fiber) -> Prob:
    """``e_p(v) = exp(v - K_p(v)) p``."""
    a = _fiber_values(p, v)
    w = np.exp(a - a.max()) * p.weights
    return p.with_weights(w / w.sum())


def mix_chart(p: Prob, q: Prob) -> Fiber:
    """Mixture coordinates ``q/p - 1`` of ``q`` at ``p``."""
    _check_space(p, q)
    return Fiber(p, q.weights / p.weights - 1.0)


def mix_chart_inv(p: Prob, w: Fiber) -> Prob:
    a = _fiber_values(p, w)
    if np.min(1.0 + a) <= 1e-15:
        raise NonPositiveError("mixture coordinates leave the open simplex (1 + w <= 0)")
    q = (1.0 + a) * p.weights
    return p.with_weights(q / q.sum())


def cumulant(p: Prob, v: RandomVariable) -> float:
    """``log E_p[exp(v)]``.

    Defined for every random variable.  On the fiber at ``p`` this is the
    cumulant function whose Bregman divergence is the KL divergence; a
    :class:`Fiber` argument must be based at ``p``.
    """
    a = _fiber_values(p, v)
    m = a.max()
    return float(m + np.log(np.exp(a - m) @ p.weights))


def _tilt(p: Prob, v) -> np.ndarray:
    a = _fiber_values(p, v)
    w = np.exp(a - a.max()) * p.weights
    return w / w.sum()


def cumulant_d1(p: Prob, v: Fiber, h: RandomVariable) -> float:
    """First derivative of the cumulant at ``v`` along ``h``: ``E_{e_p(v)}[h]``."""
    return float(_values(p, h) @ _tilt(p, v))


def cumulant_d2(p: Prob, v: Fiber, h: RandomVariable, k: RandomVariable) -> float:
    """Second derivative: the covariance of ``h`` and ``k`` under ``e_p(v)``."""
    t = _tilt(p, v)
    a = _values(p, h)
    b = _values(p, k)
    a = a - a @ t
    b = b - b @ t
    return float((a * b) @ t)


def e_transport(q: Prob, r: Prob, v: Fiber) -> Fiber:
    """Exponential transport from the fiber at ``q`` to the fiber at ``r``."""
    _check_space(q, r)
    a = _fiber_values(q, v)
    return Fiber(r, a - a @ r.weights)


def m_transport(q: Prob, r: Prob, w: Fiber) -> Fiber:
    """Mixture transport from the fiber at ``q`` to the fiber at ``r``."""
    _check_space(q, r)
    a = _fiber_values(q, w)
    return Fiber(r, q.weights / r.weights * a)


def kl(q: Prob, r: Prob) -> float:
    """Kullback-Leibler divergence ``E_q[log q/r]``."""
    _check_space(q, r)
    return float(q.weights @ (np.log(q.weights) - np.log(r.weights)))


def entropy(q: Prob) -> float:
    return float(-(q.weights @ np.log(q.weights)))


def cross_entropy(q: Prob, r: Prob) -> float:
    _check_space(q, r)
    return float(-(q.weights @ np.log(r.weights)))


def midpoint(q: Prob, r: Prob) -> Prob:
    _check_space(q, r)
    return q.with_weights(0.5 * (q.weights + r.weights))


def js(q: Prob, r: Prob) -> float:
    """Jensen-Shannon divergence, average KL to the midpoint."""
    m = midpoint(q, r)
    return 0.5 * kl(q, m) + 0.5 * kl(r, m)
