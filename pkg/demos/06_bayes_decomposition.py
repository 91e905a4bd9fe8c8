"""
Margin and kernel coordinates of a joint distribution
=====================================================

Writing ``q(x, y) = q1(x) k(y|x)`` turns one simplex into a product of
simplices.  Gradients of functions of the joint pull back through the
transpose of the derivative of this map.  Here we fit a margin and kernel to
a target joint by descending ``KL(p || q1 k)``.
"""

import numpy as np

import statbundle as sb

rng = np.random.Generator(np.random.PCG64(5))
p = sb.JointProb(rng.dirichlet(np.full(12, 2.0)).reshape(3, 4))
d = sb.decompose(sb.JointProb(np.full((3, 4), 1 / 12)), axis=1)

for step in range(2001):
    g = sb.gan_grad(p, d)
    if step % 500 == 0:
        print(f"step {step:4d}: KL = {sb.kl_to_composed(p, d):.3e}")
    descent = sb.CondTangent(-g.margin_dot, tuple(-k for k in g.kernel_dot))
    d = sb.decomp_euler_step(d, descent, 0.05)

# %% The closed form equals the generic pullback of the joint gradient.
route = sb.dB_transpose(d, -sb.mix_chart(sb.compose(d), p))
print("closed form vs pullback:", np.abs(g.margin_dot.values - route.margin_dot.values).max())
