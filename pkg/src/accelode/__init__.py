"""Accelerated first-order methods as discretizations of damped Hamiltonian dynamics,
with runtime Lyapunov certificates."""

from .continuous import (
    DampingAnalysis,
    PhaseState,
    classify_damping,
    continuous_lyapunov,
    optimal_damping,
    rk4_trajectory,
    stability_step_bound,
    vector_field,
)
from .coordinate import (
    LazyEngine,
    LazyState,
    SamplerConfig,
    acd_run,
    acd_step,
    exact_mean_g,
    lazy_advance,
    sampler_from_lipschitz,
    semi_greedy_delta,
)
from .lyapunov import (
    Certificate,
    contraction_certificate,
    decrease_condition_certificate,
    discrete_lyapunov,
    preserved_norm_certificate,
    stochastic_decrease_certificate,
)
from .problems import (
    CompositeOracle,
    CoordinateOracle,
    SmoothOracle,
    prox_box,
    prox_l1,
    quadratic_from_spectrum,
    reference_minimizer,
)
from .schemes import (
    DiscreteState,
    IterateRecord,
    SchemeConfig,
    Variant,
    heavy_ball_step,
    nesterov_step,
    paper_composite_step,
    paper_smooth_step,
    run,
    sufficient_decrease_update,
)

__version__ = "0.1.0"
