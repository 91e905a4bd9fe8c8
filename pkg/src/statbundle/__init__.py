"""Information geometry of finite probability spaces.

Points of the open simplex, the exponential and mixture charts with their
transports, natural gradients of divergences, gradient flows, and their
specializations to joint distributions (mean field, entropic transport,
Bayes decompositions, variational lower bounds).
"""

from .errors import (
    BaseMismatchError,
    CenteringError,
    ConvergenceError,
    DivergenceError,
    GeometryError,
    IllConditionedError,
    NonPositiveError,
    NumericalError,
    PositivityBreachError,
    SpaceMismatchError,
)
from .simplex import (
    Fiber,
    Prob,
    Rv,
    SampleSpace,
    center,
    cov,
    cross_entropy,
    cumulant,
    cumulant_d1,
    cumulant_d2,
    e_transport,
    entropy,
    exp_chart,
    exp_chart_inv,
    expect,
    inner,
    js,
    kl,
    m_transport,
    midpoint,
    mix_chart,
    mix_chart_inv,
    random_prob,
    uniform,
)
from .gradients import (
    GradPair,
    fd_directional,
    fd_natural_grad,
    grad_cross_entropy_total,
    grad_entropy,
    grad_expect,
    grad_js,
    grad_kl_total,
    grad_phi_mixture_center,
    max_rel_error,
)
from .flows import Trajectory, exp_euler_step, exp_flow, integrate, mix_flow, rk4_step
from .product import (
    AnovaParts,
    JointProb,
    SchrodingerProblem,
    anova,
    condexp,
    constrained_schrodinger_flow,
    d_marginalization,
    d_mean_field,
    grad_kl_meanfield_fwd,
    grad_kl_meanfield_rev,
    interaction,
    ipf,
    kantorovich_cost,
    kantorovich_grad,
    lift,
    marginal,
    mean_field,
    mutual_information,
    product,
    schrodinger_grad,
    schrodinger_interaction_grad,
    schrodinger_objective,
)
from .bayes_gan import (
    CondDecomp,
    CondTangent,
    compose,
    dB,
    dB_transpose,
    decomp_euler_step,
    decompose,
    gan_grad,
    kl_to_composed,
    tangent_inner,
)
from .vb import (
    ExpModel,
    VBProblem,
    elbo,
    elbo_natural_grad,
    grad_psi,
    hess_psi,
    model_prob,
    psi,
    theta_bar,
    vb_flow,
    vb_theta_rhs,
    whitened_indicator_stats,
)
from .oracles import SinkhornResult, brute_divergences, schrodinger_2x2_brute, sinkhorn_oracle

__version__ = "0.1.0"
