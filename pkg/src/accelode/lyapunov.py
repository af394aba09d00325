"""Discrete Lyapunov function and runtime certificates for the convergence inequalities.

A certificate compares two numbers, ``lhs <= rhs``, and records the
verdict together with the margin. The comparison allows a relative slack
of ``RTOL`` on the magnitude of ``rhs`` plus an absolute slack ``ATOL``,
which covers double-precision accumulation over long runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .problems import objective_gap

RTOL = 1e-10
ATOL = 1e-12


@dataclass(frozen=True)
class Certificate:
    name: str
    passed: bool
    lhs: float
    rhs: float
    margin: float
    n: Optional[int] = None
    z_tag: str = ""

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


def certify(name, lhs, rhs, n=None, z_tag="", scale=None, rtol=RTOL, atol=ATOL):
    """Build a certificate for ``lhs <= rhs`` with slack ``rtol * scale + atol``.

    ``scale`` defaults to ``|rhs|``.
    """
    lhs, rhs = float(lhs), float(rhs)
    scale = abs(rhs) if scale is None else float(scale)
    passed = lhs <= rhs + rtol * scale + atol
    if math.isnan(lhs) or math.isnan(rhs):
        passed = False
    return Certificate(name, bool(passed), lhs, rhs, rhs - lhs, n, z_tag)


def norm_term(x, v, s, alpha, xstar):
    """``0.5 |sqrt(alpha)(x - x*) + (1 + s sqrt(alpha)) v|^2``."""
    ra = math.sqrt(alpha)
    w = ra * (x - xstar) + (1.0 + s * ra) * v
    return 0.5 * float(w @ w)


def discrete_lyapunov(oracle, x, v, s, alpha, xstar, fstar):
    """``f(x) - f* + 0.5 |sqrt(alpha)(x - x*) + (1 + s sqrt(alpha)) v|^2``."""
    if s <= 0 or alpha <= 0:
        raise ValueError("step and alpha must be positive")
    return objective_gap(oracle, x, fstar) + norm_term(x, v, s, alpha, xstar)


def contraction_factor(s, alpha):
    return 1.0 / (1.0 + s * math.sqrt(alpha))


def contraction_certificate(lyap_prev, lyap_next, s, alpha, n=None, name="contraction"):
    """``L_next <= L_prev / (1 + s sqrt(alpha))``."""
    return certify(name, lyap_next, contraction_factor(s, alpha) * lyap_prev, n=n)


def _tagged(z_samples):
    out = []
    for k, item in enumerate(z_samples):
        if isinstance(item, tuple):
            out.append(item)
        else:
            out.append((f"z{k}", item))
    return out


def _decrease(oracle, x_mid, x_next, inner_g, norm_g, s, alpha, z_samples, n, name):
    f_next = oracle.value(x_next)
    penalty = 0.5 * s * s * float(norm_g @ norm_g)
    certs = []
    for tag, z in _tagged(z_samples):
        d = x_mid - z
        lhs = f_next - oracle.value(z)
        rhs = float(inner_g @ d) - 0.5 * alpha * float(d @ d) - penalty
        certs.append(certify(name, lhs, rhs, n=n, z_tag=tag))
    return certs


def decrease_condition_certificate(oracle, x_mid, x_next, g, s, alpha, z_samples, n=None):
    """One certificate per ``z`` for

    ``f(x_next) - f(z) <= <g, x_mid - z> - alpha/2 |x_mid - z|^2 - s^2/2 |g|^2``.

    ``oracle.value`` must be the full objective (including any nonsmooth part).
    ``z_samples`` holds vectors or ``(tag, vector)`` pairs.
    """
    if len(z_samples) == 0:
        raise ValueError("need at least one z sample")
    return _decrease(oracle, x_mid, x_next, g, g, s, alpha, z_samples, n, "decrease_condition")


def stochastic_decrease_certificate(oracle, x_mid, x_next, g, mean_g, s, alpha, z_samples, n=None):
    """As :func:`decrease_condition_certificate`, with the conditional mean of the
    gradient sample in the inner product and the realized sample in the norm."""
    if len(z_samples) == 0:
        raise ValueError("need at least one z sample")
    return _decrease(oracle, x_mid, x_next, mean_g, g, s, alpha, z_samples, n, "stochastic_decrease")


def preserved_norm_certificate(x_mid, v_mid, x_next, v_next, s, alpha, xstar, n=None):
    """The sufficient decrease update must leave the momentum-corrected norm unchanged."""
    before = norm_term(x_mid, v_mid, s, alpha, xstar)
    after = norm_term(x_next, v_next, s, alpha, xstar)
    return certify("preserved_norm", abs(after - before), 0.0, n=n, scale=max(before, after))


def rate_certificates(n, gap, gap0, lyap0, s, alpha, strongly_convex=True):
    """Closed-form rate bounds at iteration ``n`` for a run started at rest.

    The ``L_0`` form always applies; the ``2 (f(x_0) - f*)`` form needs
    strong convexity of the whole objective.
    """
    q = contraction_factor(s, alpha) ** n
    certs = [certify("rate_lyapunov0", gap, q * lyap0, n=n)]
    if strongly_convex:
        certs.append(certify("rate_twice_gap0", gap, 2.0 * q * gap0, n=n))
    return certs


# --------------------------------------------------------------------------
# certifiers: callables invoked once per iteration with a StepContext


@dataclass
class StepContext:
    n: int
    oracle: object
    step: float
    alpha: float
    x_prev: np.ndarray
    v_prev: np.ndarray
    x_next: np.ndarray
    v_next: np.ndarray
    xstar: np.ndarray
    fstar: float
    lyap_prev: float
    lyap_next: float
    x_mid: Optional[np.ndarray] = None
    v_mid: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None
    mean_g: Optional[np.ndarray] = None


def contraction_certifier():
    def check(ctx):
        return [contraction_certificate(ctx.lyap_prev, ctx.lyap_next, ctx.step, ctx.alpha, n=ctx.n)]
    return check


def preserved_norm_certifier():
    def check(ctx):
        if ctx.x_mid is None:
            return []
        return [preserved_norm_certificate(ctx.x_mid, ctx.v_mid, ctx.x_next, ctx.v_next,
                                           ctx.step, ctx.alpha, ctx.xstar, n=ctx.n)]
    return check


def sample_points(ctx, n_random, seed):
    """``x_n``, ``x*`` and ``n_random`` seeded points around them, inside the objective's domain."""
    points = [("x_n", ctx.x_prev), ("x_star", ctx.xstar)]
    if n_random:
        rng = np.random.default_rng([seed, ctx.n])
        radius = 2.0 * max(np.linalg.norm(ctx.x_prev - ctx.xstar), np.linalg.norm(ctx.x_mid - ctx.xstar), 1e-6)
        d = len(ctx.xstar)
        nonsmooth = getattr(ctx.oracle, "nonsmooth", None)
        project = nonsmooth.project if nonsmooth is not None else (lambda z: z)
        for k in range(n_random):
            centre = ctx.xstar if k % 2 == 0 else ctx.x_mid
            z = centre + radius * rng.standard_normal(d) / math.sqrt(d)
            points.append((f"random{k}", project(z)))
    return points


def decrease_condition_certifier(n_random=8, seed=0):
    """Check the decrease condition at ``x_n``, ``x*`` and ``n_random`` extra points.

    Uses the stochastic form when the context carries the exact mean of the
    gradient sample.
    """
    def check(ctx):
        if ctx.x_mid is None:
            return []
        z = sample_points(ctx, n_random, seed)
        if ctx.mean_g is not None:
            return stochastic_decrease_certificate(ctx.oracle, ctx.x_mid, ctx.x_next, ctx.g, ctx.mean_g,
                                                   ctx.step, ctx.alpha, z, n=ctx.n)
        return decrease_condition_certificate(ctx.oracle, ctx.x_mid, ctx.x_next, ctx.g,
                                              ctx.step, ctx.alpha, z, n=ctx.n)
    return check


def default_certifiers(n_random=8, seed=0):
    return [contraction_certifier(), preserved_norm_certifier(), decrease_condition_certifier(n_random, seed)]


def failures(certificates: Sequence[Certificate]):
    return [c for c in certificates if not c.passed]
