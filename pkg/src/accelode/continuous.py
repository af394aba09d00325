"""Damped Hamiltonian flow ``x' = v, v' = -gamma v - grad f(x)`` and its eigenmode analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .problems import objective_gap

CRITICAL_ATOL = 1e-12
DIVERGENCE_CEILING = 1e12


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if np.shape(self.x) != np.shape(self.v):
            raise ValueError("position and velocity must have the same shape")

    @classmethod
    def at_rest(cls, x0, t=0.0):
        x0 = np.array(x0, dtype=float)
        return cls(x0, np.zeros_like(x0), t)


def vector_field(oracle, damping, state):
    """Return ``(dx/dt, dv/dt)`` at ``state``."""
    return state.v, -damping * state.v - oracle.gradient(state.x)


def rk4_step(oracle, damping, state, dt):
    x, v = state.x, state.v
    k1x, k1v = vector_field(oracle, damping, state)
    k2x, k2v = vector_field(oracle, damping, PhaseState(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v))
    k3x, k3v = vector_field(oracle, damping, PhaseState(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v))
    k4x, k4v = vector_field(oracle, damping, PhaseState(x + dt * k3x, v + dt * k3v))
    return PhaseState(
        x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
        v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v),
        state.t + dt,
    )


def rk4_trajectory(oracle, damping, initial, dt, steps):
    """Classic fourth-order Runge-Kutta; returns ``steps + 1`` states including ``initial``.

    Raises DivergenceError once a state is non-finite or its norm exceeds
    ``1e12 * (1 + |initial|)``.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    ceiling = DIVERGENCE_CEILING * (1.0 + math.hypot(np.linalg.norm(initial.x), np.linalg.norm(initial.v)))
    states = [initial]
    state = initial
    for k in range(1, steps + 1):
        state = rk4_step(oracle, damping, state, dt)
        # exact grid times instead of accumulated sums
        state = PhaseState(state.x, state.v, initial.t + k * dt)
        size = math.hypot(np.linalg.norm(state.x), np.linalg.norm(state.v))
        if not math.isfinite(size) or size > ceiling:
            raise DivergenceError("RK4 trajectory diverged", k)
        states.append(state)
    return states


def continuous_lyapunov(oracle, state, xstar, fstar):
    """``f(x) - f* + 0.5 |sqrt(alpha)(x - x*) + v|^2``."""
    w = math.sqrt(oracle.alpha) * (state.x - xstar) + state.v
    return objective_gap(oracle, state.x, fstar) + 0.5 * float(w @ w)


def total_energy(oracle, state):
    return float(oracle.value(state.x) + 0.5 * state.v @ state.v)


@dataclass(frozen=True)
class DampingAnalysis:
    eigenvalue: float
    damping: float
    roots: tuple
    regime: str
    decay_rate: float
    root_modulus: float


def classify_damping(eigenvalue, damping):
    """Roots of ``z^2 + damping z + eigenvalue`` and the oscillator regime they imply."""
    lam, gamma = float(eigenvalue), float(damping)
    if lam <= 0 or gamma < 0:
        raise ValueError("need eigenvalue > 0 and damping >= 0")
    disc = gamma * gamma - 4.0 * lam
    if abs(disc) <= CRITICAL_ATOL:
        z = complex(-0.5 * gamma, 0.0)
        return DampingAnalysis(lam, gamma, (z, z), "critical", z.real, math.sqrt(lam))
    if disc > 0:
        # larger-magnitude root first, then Vieta to avoid cancellation
        z_fast = -0.5 * (gamma + math.sqrt(disc))
        z_slow = lam / z_fast
        roots = (complex(z_slow), complex(z_fast))
        return DampingAnalysis(lam, gamma, roots, "overdamped", z_slow, abs(z_fast))
    im = 0.5 * math.sqrt(-disc)
    roots = (complex(-0.5 * gamma, im), complex(-0.5 * gamma, -im))
    # |z|^2 = gamma^2/4 + (4 lam - gamma^2)/4 = lam
    return DampingAnalysis(lam, gamma, roots, "underdamped", -0.5 * gamma, math.sqrt(lam))


def optimal_damping(lam_min):
    if lam_min <= 0:
        raise ValueError("smallest eigenvalue must be positive")
    return 2.0 * math.sqrt(lam_min)


def stability_step_bound(lam_max):
    if lam_max <= 0:
        raise ValueError("largest eigenvalue must be positive")
    return 1.0 / math.sqrt(lam_max)


def damping_grid(eigenvalue, size=200):
    """``size`` evenly spaced damping rates in ``(0, 4 sqrt(eigenvalue)]``."""
    top = 4.0 * math.sqrt(eigenvalue)
    return top * np.arange(1, size + 1) / size


def fit_decay_rate(times, lyapunov_values, start_fraction=0.5):
    """Least-squares slope of ``0.5 log L(t)`` over the tail of the trajectory.

    ``L`` is quadratic in the state, so half its log-slope is the decay rate
    of the state itself, comparable with the real parts of the roots.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(lyapunov_values, dtype=float)
    keep = (t >= t[0] + start_fraction * (t[-1] - t[0])) & (y > 0)
    if keep.sum() < 2:
        raise ValueError("not enough positive samples to fit a decay rate")
    slope, _ = np.polyfit(t[keep], 0.5 * np.log(y[keep]), 1)
    return float(slope)


def trajectory_rows(oracle, states, xstar, fstar):
    """Rows ``(t, f_gap, lyapunov, |v|)`` for trajectory export."""
    return [
        (s.t, objective_gap(oracle, s.x, fstar), continuous_lyapunov(oracle, s, xstar, fstar),
         float(np.linalg.norm(s.v)))
        for s in states
    ]


def residual(analysis):
    """Largest ``|p(z)|`` over the stored roots; used to sanity check the formulas."""
    return max(abs(z * z + analysis.damping * z + analysis.eigenvalue) for z in analysis.roots)
