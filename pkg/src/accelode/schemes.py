"""Deterministic discretizations of the damped flow and the classical baselines.

All steppers are pure: they take a :class:`DiscreteState` and return a new
one. The two flow discretizations also return the intra-step quantities
(``x'``, ``v'``, the gradient surrogate ``g`` and the decrease step
``delta``) so that certifiers can check the inequalities of the proof.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DivergenceError, StepSizeError
from .lyapunov import Certificate, StepContext, discrete_lyapunov
from .problems import CompositeOracle, objective_gap, reference_minimizer, smooth_part


class Variant(str, enum.Enum):
    PAPER_SMOOTH = "paper_smooth"
    PAPER_COMPOSITE = "paper_composite"
    NESTEROV = "nesterov"
    HEAVY_BALL = "heavy_ball"
    GRADIENT_DESCENT = "gradient_descent"

    @property
    def is_flow(self):
        return self in (Variant.PAPER_SMOOTH, Variant.PAPER_COMPOSITE)


@dataclass(frozen=True)
class SchemeConfig:
    step: float
    alpha: float
    variant: Variant = Variant.PAPER_SMOOTH
    strict_step_check: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @classmethod
    def for_problem(cls, oracle, variant=Variant.PAPER_SMOOTH, step=None, strict=True):
        """Config with ``alpha`` from the problem and ``step`` defaulting to ``1/sqrt(L)``."""
        g = smooth_part(oracle)
        s = 1.0 / math.sqrt(g.lipschitz) if step is None else float(step)
        return cls(step=s, alpha=g.alpha, variant=variant, strict_step_check=strict)

    def check_step(self, oracle):
        if not (self.strict_step_check and self.variant.is_flow):
            return
        bound = 1.0 / math.sqrt(smooth_part(oracle).lipschitz)
        if self.step > bound * (1 + 1e-12):
            raise StepSizeError(f"step {self.step} exceeds 1/sqrt(L) = {bound}")


@dataclass(frozen=True)
class DiscreteState:
    """Iterate ``x_n`` with velocity ``v_n``; ``aux`` is ``x_{n-1}`` for the two-point baselines."""

    x: np.ndarray
    v: np.ndarray
    n: int = 0
    aux: Optional[np.ndarray] = None

    @classmethod
    def at_rest(cls, x0):
        x0 = np.array(x0, dtype=float)
        return cls(x0, np.zeros_like(x0), 0, x0.copy())


@dataclass(frozen=True)
class Intermediates:
    x_mid: np.ndarray
    v_mid: np.ndarray
    g: np.ndarray
    delta: np.ndarray


@dataclass
class IterateRecord:
    n: int
    f_gap: float
    lyapunov: float
    contraction_ratio: float
    certificate_verdicts: list = field(default_factory=list)
    coord: Optional[int] = None
    realized_decrease: Optional[float] = None
    expected_lyapunov: Optional[float] = None
    state: Optional[DiscreteState] = field(default=None, repr=False)

    @property
    def passed(self):
        return all(c.passed for c in self.certificate_verdicts)


def velocity_from_positions(x, x_prev):
    """The two-point baselines read as flow discretizations via ``v_n = x_n - x_{n-1}``."""
    return x - x_prev


def _momentum_velocity(v, g, s, alpha):
    """Semi-implicit velocity update, solved for ``v'`` in closed form."""
    sa = s * math.sqrt(alpha)
    c = 1.0 / (1.0 + sa)
    return c * (v - c * (sa * v + s * g))


def _compensate(x, v, delta, s, alpha):
    ra = math.sqrt(alpha)
    return x - delta, v + (ra / (1.0 + s * ra)) * delta


def sufficient_decrease_update(oracle, cfg, x, v):
    """Gradient step of length ``1/L`` on ``x`` with the velocity correction that
    keeps ``sqrt(alpha)(x - x*) + (1 + s sqrt(alpha)) v`` fixed."""
    grad = oracle.gradient(x)
    return _compensate(x, v, grad / oracle.lipschitz, cfg.step, cfg.alpha)


def paper_smooth_step(oracle, cfg, state):
    cfg.check_step(oracle)
    s = cfg.step
    x_mid = state.x + s * state.v
    grad = oracle.gradient(x_mid)
    v_mid = _momentum_velocity(state.v, grad, s, cfg.alpha)
    delta = grad / oracle.lipschitz
    x_next, v_next = _compensate(x_mid, v_mid, delta, s, cfg.alpha)
    return DiscreteState(x_next, v_next, state.n + 1, state.x), Intermediates(x_mid, v_mid, grad, delta)


def forward_backward_surrogate(oracle: CompositeOracle, x_mid, s):
    """Gradient surrogate ``(x' - prox_{s^2 h}(x' - s^2 grad g(x'))) / s^2``."""
    s2 = s * s
    y = x_mid - s2 * oracle.smooth.gradient(x_mid)
    return (x_mid - oracle.prox(y, s2)) / s2


def paper_composite_step(oracle: CompositeOracle, cfg, state):
    cfg.check_step(oracle)
    s = cfg.step
    x_mid = state.x + s * state.v
    g = forward_backward_surrogate(oracle, x_mid, s)
    v_mid = _momentum_velocity(state.v, g, s, cfg.alpha)
    delta = s * s * g
    x_next, v_next = _compensate(x_mid, v_mid, delta, s, cfg.alpha)
    return DiscreteState(x_next, v_next, state.n + 1, state.x), Intermediates(x_mid, v_mid, g, delta)


def nesterov_momentum(lipschitz, alpha):
    rl, ra = math.sqrt(lipschitz), math.sqrt(alpha)
    return (rl - ra) / (rl + ra)


def heavy_ball_coefficients(lipschitz, alpha):
    """``(step, momentum)`` for Polyak's method."""
    rl, ra = math.sqrt(lipschitz), math.sqrt(alpha)
    return 4.0 / (rl + ra) ** 2, ((rl - ra) / (rl + ra)) ** 2


def nesterov_step(oracle, state):
    """``y = x_n + beta (x_n - x_{n-1})``, then ``x_{n+1} = y - grad f(y) / L``."""
    prev = state.x if state.aux is None else state.aux
    y = state.x + nesterov_momentum(oracle.lipschitz, oracle.alpha) * (state.x - prev)
    x_next = y - oracle.gradient(y) / oracle.lipschitz
    return DiscreteState(x_next, velocity_from_positions(x_next, state.x), state.n + 1, state.x)


def heavy_ball_step(oracle, state):
    prev = state.x if state.aux is None else state.aux
    step, beta = heavy_ball_coefficients(oracle.lipschitz, oracle.alpha)
    x_next = state.x - step * oracle.gradient(state.x) + beta * (state.x - prev)
    return DiscreteState(x_next, velocity_from_positions(x_next, state.x), state.n + 1, state.x)


def gradient_descent_step(oracle, state):
    x_next = state.x - oracle.gradient(state.x) / oracle.lipschitz
    return DiscreteState(x_next, velocity_from_positions(x_next, state.x), state.n + 1, state.x)


def stepper(cfg) -> Callable:
    """Uniform ``(oracle, state) -> (state, intermediates or None)`` view of every variant."""
    v = cfg.variant
    if v is Variant.PAPER_SMOOTH:
        return lambda o, st: paper_smooth_step(o, cfg, st)
    if v is Variant.PAPER_COMPOSITE:
        return lambda o, st: paper_composite_step(o, cfg, st)
    base = {
        Variant.NESTEROV: nesterov_step,
        Variant.HEAVY_BALL: heavy_ball_step,
        Variant.GRADIENT_DESCENT: gradient_descent_step,
    }[v]
    return lambda o, st: (base(o, st), None)


def _finite(state):
    return bool(np.all(np.isfinite(state.x)) and np.all(np.isfinite(state.v)))


def run(oracle, cfg: SchemeConfig, initial: DiscreteState, iterations: int,
        certifiers: Sequence[Callable[[StepContext], list]] = (),
        xstar=None, fstar=None, keep_states=False) -> list:
    """Run ``iterations`` steps and return one :class:`IterateRecord` per step.

    ``xstar``/``fstar`` default to :func:`reference_minimizer`, never to
    anything the scheme itself computes. Failing certificates are recorded,
    not raised.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    if xstar is None or fstar is None:
        xstar, fstar = reference_minimizer(oracle)
    cfg.check_step(oracle)
    if cfg.variant is Variant.PAPER_COMPOSITE and not isinstance(oracle, CompositeOracle):
        oracle = CompositeOracle(smooth=oracle)
    if cfg.variant is not Variant.PAPER_COMPOSITE and isinstance(oracle, CompositeOracle):
        raise ValueError(f"{cfg.variant.value} needs a smooth objective")
    advance = stepper(cfg)
    s, alpha = cfg.step, cfg.alpha

    state = initial
    lyap = discrete_lyapunov(oracle, state.x, state.v, s, alpha, xstar, fstar)
    records = []
    for _ in range(iterations):
        new, inter = advance(oracle, state)
        if not _finite(new):
            raise DivergenceError(f"{cfg.variant.value} produced a non-finite iterate", new.n)
        new_lyap = discrete_lyapunov(oracle, new.x, new.v, s, alpha, xstar, fstar)
        ctx = StepContext(
            n=new.n, oracle=oracle, step=s, alpha=alpha,
            x_prev=state.x, v_prev=state.v, x_next=new.x, v_next=new.v,
            xstar=xstar, fstar=fstar, lyap_prev=lyap, lyap_next=new_lyap,
        )
        if inter is not None:
            ctx.x_mid, ctx.v_mid, ctx.g = inter.x_mid, inter.v_mid, inter.g
        verdicts: list[Certificate] = [c for check in certifiers for c in check(ctx)]
        records.append(IterateRecord(
            n=new.n,
            f_gap=objective_gap(oracle, new.x, fstar),
            lyapunov=new_lyap,
            contraction_ratio=_ratio(new_lyap, lyap),
            certificate_verdicts=verdicts,
            state=new if keep_states else None,
        ))
        state, lyap = new, new_lyap
    return records


def _ratio(num, den):
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def iterations_to_tolerance(oracle, cfg, x0, tolerance, budget, xstar=None, fstar=None, relative=True):
    """First ``n`` with ``f(x_n) - f* <= tolerance`` (times the initial gap when ``relative``),
    or ``None`` when the budget runs out."""
    if xstar is None or fstar is None:
        xstar, fstar = reference_minimizer(oracle)
    if cfg.variant is Variant.PAPER_COMPOSITE and not isinstance(oracle, CompositeOracle):
        oracle = CompositeOracle(smooth=oracle)
    advance = stepper(cfg)
    state = DiscreteState.at_rest(x0)
    target = tolerance * (objective_gap(oracle, state.x, fstar) if relative else 1.0)
    for _ in range(budget):
        state, _ = advance(oracle, state)
        if not _finite(state):
            raise DivergenceError(f"{cfg.variant.value} produced a non-finite iterate", state.n)
        if objective_gap(oracle, state.x, fstar) <= target:
            return state.n
    return None
