"""
Mean-field approximation of a joint distribution
================================================

A joint ``r`` on a product of two finite sets is compared with the product of
its margins.  ``KL(r || r1 x r2)`` is the mutual information; its natural
gradient flow drives ``r`` toward a product distribution.
"""

import numpy as np

import statbundle as sb

rng = np.random.Generator(np.random.PCG64(3))
r = sb.JointProb(rng.dirichlet(np.ones(12)).reshape(3, 4))
print("mutual information:", sb.mutual_information(r))

traj = sb.integrate(r, lambda s: -sb.grad_kl_meanfield_rev(s), 0.05, 400, "exp-euler",
                    objective=sb.mutual_information)
print("after the flow:", traj.objective[-1])
print("final joint:\n", traj.final.table)

# %% The ANOVA split of a function under r: mean, one effect per coordinate,
# and an interaction orthogonal to both coordinates.
u = rng.standard_normal(12)
parts = sb.anova(r, u)
print("reconstruction error:", np.abs(parts.reconstruct() - u).max())
print("E[interaction | first coordinate]:", sb.condexp(r, parts.interaction, 1).values)
