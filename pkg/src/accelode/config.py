"""Experiment configuration: an INI file with ``[problem]``, ``[scheme]``, ``[run]`` and
``[sweep]`` sections, plus flat ``section.key=value`` overrides."""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass, field, fields
from typing import get_type_hints

import numpy as np

from . import problems
from .errors import ConfigError

PROBLEM_KINDS = ("quadratic", "ridge_l1", "box_quadratic", "banded")
VARIANTS = ("paper_smooth", "paper_composite", "nesterov", "heavy_ball", "gradient_descent",
            "acd", "acd_semi_greedy", "flow")


@dataclass
class ProblemSpec:
    kind: str = "quadratic"
    dimension: int = 50
    alpha: float = 1.0
    lipschitz: float = 100.0
    spacing: str = "linear"
    rotate: bool = True
    centered: bool = False
    weight: float = 0.1
    lower: float = -0.5
    upper: float = 0.5
    bandwidth: int = 3
    seed: int = 0
    init_scale: float = 3.0


@dataclass
class SchemeSpec:
    variant: str = "paper_smooth"
    variants: tuple = ("paper_smooth", "nesterov", "heavy_ball", "gradient_descent")
    step: str = "auto"
    damping: str = "auto"
    strict: bool = True


@dataclass
class RunSpec:
    iterations: int = 500
    certify: bool = True
    z_samples: int = 8
    seeds: tuple = (0,)
    out: str = "out"
    tol: float = 1e-6
    budget: int = 200000
    checkpoint_every: int = 1


@dataclass
class SweepSpec:
    lambda_min: float = 1.0
    lambda_max: float = 100.0
    grid: int = 200
    dt: float = 0.05
    horizon: float = 40.0


@dataclass
class ExperimentConfig:
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    scheme: SchemeSpec = field(default_factory=SchemeSpec)
    run: RunSpec = field(default_factory=RunSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        for section in fields(self):
            spec = getattr(self, section.name)
            cp[section.name] = {f.name: _dump(getattr(spec, f.name)) for f in fields(spec)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        cfg = cls()
        for name in cp.sections():
            for key, raw in cp[name].items():
                cfg.set(f"{name}.{key}", raw)
        return cfg

    def set(self, dotted: str, raw: str):
        """Apply one ``section.key=value`` override, converting to the field's type."""
        try:
            section, key = dotted.split(".", 1)
        except ValueError:
            raise ConfigError(f"override must look like section.key, got {dotted!r}") from None
        spec = getattr(self, section, None)
        if spec is None or not dataclasses.is_dataclass(spec):
            raise ConfigError(f"unknown config section {section!r}")
        hints = get_type_hints(type(spec))
        if key not in hints:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        setattr(spec, key, _parse(hints[key], raw.strip(), dotted))

    def validate(self):
        p, s = self.problem, self.scheme
        if p.kind not in PROBLEM_KINDS:
            raise ConfigError(f"problem.kind must be one of {PROBLEM_KINDS}")
        if s.variant not in VARIANTS:
            raise ConfigError(f"scheme.variant must be one of {VARIANTS}")
        for v in s.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r} in scheme.variants")
        if p.dimension < 1 or self.run.iterations < 1:
            raise ConfigError("dimension and iterations must be positive")
        if not (0 < p.alpha <= p.lipschitz):
            raise ConfigError("need 0 < alpha <= lipschitz")
        for name in ("step", "damping"):
            value = getattr(s, name)
            if value != "auto":
                try:
                    if not float(value) >= 0:
                        raise ValueError
                except ValueError:
                    raise ConfigError(f"scheme.{name} must be a nonnegative number or 'auto'") from None
        if self.sweep.grid < 3:
            raise ConfigError("sweep.grid must be at least 3")
        return self


def _dump(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, tuple):
        return ",".join(_dump(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(kind, raw, where):
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("on", "true", "yes", "1"):
                return True
            if low in ("off", "false", "no", "0"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            items = tuple(x.strip() for x in raw.split(",") if x.strip())
            if where.endswith("seeds"):
                return tuple(int(x) for x in items)
            return items
        return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {where}") from None


# --------------------------------------------------------------------------
# building problems from a spec


def build_problem(spec: ProblemSpec):
    """Construct the oracle described by ``spec``."""
    d = spec.dimension
    if spec.kind == "quadratic":
        if d == 1:
            b = [0.0] if spec.centered else [float(np.random.default_rng(spec.seed).standard_normal())]
            return problems.quadratic_from_spectrum([spec.alpha], b)
        return problems.random_quadratic(d, spec.alpha, spec.lipschitz, spec.seed, spec.rotate,
                                         spec.spacing, spec.centered)
    if spec.kind == "ridge_l1":
        return problems.ridge_l1_problem(d, spec.alpha, spec.lipschitz, spec.weight, spec.seed)
    if spec.kind == "box_quadratic":
        return problems.box_quadratic_problem(d, spec.alpha, spec.lipschitz, spec.lower, spec.upper, spec.seed)
    if spec.kind == "banded":
        return problems.banded_quadratic(d, spec.bandwidth, spec.seed)
    raise ConfigError(f"unknown problem kind {spec.kind!r}")


def initial_point(spec: ProblemSpec, oracle):
    rng = np.random.default_rng([spec.seed, 1])
    x0 = spec.init_scale * rng.standard_normal(spec.dimension)
    nonsmooth = getattr(oracle, "nonsmooth", None)
    if nonsmooth is not None:
        x0 = nonsmooth.project(x0)
    return x0


def resolve_step(raw, lipschitz):
    """``auto`` means ``1/sqrt(L)``."""
    return 1.0 / math.sqrt(lipschitz) if raw == "auto" else float(raw)


def resolve_damping(raw, alpha):
    """``auto`` means ``2 sqrt(alpha)``."""
    return 2.0 * math.sqrt(alpha) if raw == "auto" else float(raw)
