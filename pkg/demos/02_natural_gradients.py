"""
Natural gradients and a finite-difference check
===============================================

The natural gradient of a function ``phi`` at ``q`` is the ``q``-centered
random variable ``g`` such that ``d/dt phi(q(t)) = E_q[g * score]`` for every
curve through ``q``.  The closed forms below are compared with a numerical
oracle that differentiates along exponential curves and solves the Gram
system of the covariance pairing.
"""

import numpy as np

import statbundle as sb

rng = np.random.Generator(np.random.PCG64(1))
q = sb.random_prob(rng, 6)
r = sb.random_prob(rng, 6)

checks = {
    "KL(.||r)": (sb.grad_kl_total(q, r).first, lambda a: sb.kl(a, r), q),
    "KL(q||.)": (sb.grad_kl_total(q, r).second, lambda b: sb.kl(q, b), r),
    "H(q, .)": (sb.grad_cross_entropy_total(q, r).second, lambda b: sb.cross_entropy(q, b), r),
    "entropy": (sb.grad_entropy(q), sb.entropy, q),
    "JS(., r)": (sb.grad_js(q, r), lambda a: sb.js(a, r), q),
}
for name, (analytic, phi, at) in checks.items():
    err = sb.max_rel_error(analytic, sb.fd_natural_grad(phi, at))
    print(f"{name:10s} relative error {err:.2e}")

# %% The midpoint of q and r is where the mixture-center function is flat.
m = sb.midpoint(q, r)
print("gradient norm at the midpoint:", sb.grad_phi_mixture_center(m, q, r).norm())
