"""
Gradient flows of the KL divergence
===================================

Descending ``q -> KL(q||r)`` along its natural gradient gives the equation
``d/dt log q = s_q(r)`` (up to a constant), whose solution stays on the
exponential segment from ``q0`` to ``r``.  Descending ``r -> KL(q||r)`` gives
the mixture segment.  The integrators step in the moving exponential chart.
"""

import numpy as np

import statbundle as sb

rng = np.random.Generator(np.random.PCG64(2))
target = sb.random_prob(rng, 4, concentration=3.0)
start = sb.random_prob(rng, 4, concentration=3.0)

for scheme, dt in (("exp-euler", 1e-3), ("rk4", 1e-2)):
    steps = int(round(1.0 / dt))
    traj = sb.integrate(start, lambda q: sb.exp_chart(q, target), dt, steps, scheme,
                        objective=lambda q: sb.kl(q, target))
    exact = sb.exp_flow(target, start, 1.0)
    print(f"{scheme:9s} dt={dt:g}: error at t=1 {np.abs(traj.final.weights - exact.weights).max():.2e}, "
          f"KL {traj.objective[0]:.4f} -> {traj.objective[-1]:.4f}")

# %% The mixture flow moves along straight lines in the simplex.
traj = sb.integrate(start, lambda p: sb.mix_chart(p, target), 1e-2, 100, "rk4")
print("mixture flow error at t=1:",
      np.abs(traj.final.weights - sb.mix_flow(target, start, 1.0).weights).max())

# %% Halving the step divides the RK4 error by about 16.
errs = []
for dt in (0.1, 0.05, 0.025):
    t = sb.integrate(start, lambda p: sb.mix_chart(p, target), dt, int(round(1 / dt)), "rk4")
    errs.append(np.abs(t.final.weights - sb.mix_flow(target, start, 1.0).weights).max())
print("error ratios:", errs[0] / errs[1], errs[1] / errs[2])
