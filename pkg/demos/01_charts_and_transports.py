"""
Charts and transports on the probability simplex
================================================

A strictly positive probability function on a finite set is a point of the
open simplex.  Around each point ``p`` there are two affine coordinate
systems: the exponential chart ``s_p(q) = log(q/p) - E_p[log(q/p)]`` and the
mixture chart ``eta_p(q) = q/p - 1``.  Both land in the space of random
variables with zero mean under ``p``.
"""

import numpy as np

import statbundle as sb

rng = np.random.Generator(np.random.PCG64(0))
p = sb.random_prob(rng, 5)
q = sb.random_prob(rng, 5)
r = sb.random_prob(rng, 5)
print("p =", p)
print("q =", q)

# %% Both charts send q to a p-centered vector and back.
v = sb.exp_chart(p, q)
w = sb.mix_chart(p, q)
print("s_p(q)   =", v, " mean under p:", sb.expect(p, v))
print("eta_p(q) =", w, " mean under p:", sb.expect(p, w))
print("roundtrip errors:",
      np.abs(sb.exp_chart_inv(p, v).weights - q.weights).max(),
      np.abs(sb.mix_chart_inv(p, w).weights - q.weights).max())

# %% Moving a vector between fibers.  The exponential transport subtracts the
# new mean, the mixture transport multiplies by the likelihood ratio.  The two
# are adjoint for the covariance pairings.
a = sb.center(q, rng.standard_normal(5))
b = sb.center(r, rng.standard_normal(5))
lhs = sb.inner(q, a, sb.e_transport(r, q, b))
rhs = sb.inner(r, sb.m_transport(q, r, a), b)
print(f"duality: {lhs:.15f} vs {rhs:.15f}")

# %% Parallelogram law: chart images add up along transports.
path = sb.exp_chart(p, q) + sb.e_transport(q, p, sb.exp_chart(q, r))
print("parallelogram error:", np.abs(path.values - sb.exp_chart(p, r).values).max())

# %% The cumulant K_p(v) = log E_p[exp v] at s_p(q) is KL(p||q).
print("K_p(s_p(q)) =", sb.cumulant(p, sb.exp_chart(p, q)), " KL(p||q) =", sb.kl(p, q))
