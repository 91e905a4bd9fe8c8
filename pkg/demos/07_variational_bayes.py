"""
Variational approximation of a posterior
========================================

With ``x`` observed and ``y`` latent, the lower bound
``L(r) = -KL(r || prior) + E_r[log likelihood]`` is maximized over an
exponential tilt of the prior.  With a full set of statistics the model
contains the posterior and the flow reaches it.
"""

import numpy as np

import statbundle as sb

rng = np.random.Generator(np.random.PCG64(6))
joint = sb.JointProb(rng.dirichlet(np.full(15, 3.0)).reshape(3, 5))
problem = sb.VBProblem(joint, x=1)
stats = sb.whitened_indicator_stats(problem.prior, 4)
model = sb.ExpModel(problem.prior, stats, np.zeros(4))

traj = sb.vb_flow(problem, model, 1e-2, 3000)
print(f"lower bound {traj.objective[0]:.6f} -> {traj.objective[-1]:.6f}, "
      f"log evidence {problem.log_evidence:.6f}")
print("distance to theta_bar:", np.linalg.norm(traj.final - sb.theta_bar(problem, model)))

# %% A smaller model cannot reach the posterior; the bound stays below the
# evidence by the KL gap.
small = sb.ExpModel(problem.prior, stats[:2], np.zeros(2))
traj = sb.vb_flow(problem, small, 1e-2, 3000)
r = sb.model_prob(small.with_theta(traj.final))
print("two statistics: bound", traj.objective[-1], " gap", sb.kl(r, problem.posterior))
