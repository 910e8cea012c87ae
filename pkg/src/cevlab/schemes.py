"""One-step maps and path simulation.

The centerpiece is the explicit semi-discrete update

    y_{k+1} = | sigma (1-a) dW_k + inner(y_k)^(1-a) | ^ (1/(1-a)),

whose output is nonnegative for every realization of the noise.  Three
Euler-Maruyama variants (naive, full-truncation, reflected) are provided as
baselines that illustrate what the update fixes: plain Euler leaves the
positive half-line.

All step maps are array-capable (numpy broadcasting over a vector of paths)
and pure; ``simulate_path`` iterates one path on a grid and accumulates
diagnostics.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .brownian import IncrementArray
from .errors import GridMismatch, ValidationError
from .model import CevParams, TimeGrid, _inner_clamped

__all__ = [
    "SchemeId",
    "StepFlags",
    "PathResult",
    "semidiscrete_step",
    "euler_step",
    "simulate_path",
]


class SchemeId(enum.Enum):
    """Closed set of implemented schemes; unknown names are rejected at parse time."""

    SEMI_DISCRETE = "SemiDiscrete"
    EULER_NAIVE = "EulerNaive"
    EULER_FULL_TRUNCATION = "EulerFullTruncation"
    EULER_REFLECTED = "EulerReflected"

    @classmethod
    def parse(cls, token: str) -> "SchemeId":
        lowered = token.strip().lower()
        for member in cls:
            if lowered == member.value.lower():
                return member
        valid = ", ".join(m.value for m in cls)
        raise ValidationError(f"unknown scheme {token!r}; expected one of: {valid}")

    @property
    def is_euler(self) -> bool:
        return self is not SchemeId.SEMI_DISCRETE


class StepFlags(NamedTuple):
    """Per-step diagnostics: did z go negative, did the inner clamp fire."""

    z_negative: bool
    clamped: bool


@dataclass(frozen=True)
class PathResult:
    """One simulated trajectory plus positivity diagnostics.

    ``sign_flip_count`` counts steps whose noise term z was negative
    (semi-discrete) or whose proposed iterate was negative (Euler variants);
    ``clamp_count`` counts rounding clamps of the inner expression, which is
    always zero for Euler variants.
    """

    times: np.ndarray
    values: np.ndarray
    sign_flip_count: int
    clamp_count: int
    min_value: float


def _semidiscrete_kernel(y, dt: float, dw, params: CevParams):
    """Array semi-discrete update; returns (y_next, z_negative, clamped)."""
    inner, clamped = _inner_clamped(y, dt, params)
    one_minus_a = 1.0 - params.a
    ipow = np.power(inner, one_minus_a)
    z = params.sigma * one_minus_a * dw + ipow
    z_neg = z < 0.0
    y_next = np.power(np.abs(z), 1.0 / one_minus_a)
    return y_next, z_neg, clamped


def _euler_kernel(variant: SchemeId, x, dt: float, dw, params: CevParams):
    """Array Euler update; returns (x_next, went_negative)."""
    k, l, sigma, a = params.k, params.l, params.sigma, params.a
    if variant is SchemeId.EULER_NAIVE:
        # sign-preserving |x|^a keeps the iteration total below zero
        diffusion = np.sign(x) * np.power(np.abs(x), a)
        x_next = x + (k * l - k * x) * dt + sigma * diffusion * dw
    elif variant is SchemeId.EULER_FULL_TRUNCATION:
        xp = np.maximum(x, 0.0)
        x_next = x + (k * l - k * xp) * dt + sigma * np.power(xp, a) * dw
    elif variant is SchemeId.EULER_REFLECTED:
        proposal = x + (k * l - k * x) * dt + sigma * np.power(np.abs(x), a) * dw
        return np.abs(proposal), proposal < 0.0
    else:
        raise ValidationError(f"{variant} is not an Euler variant")
    return x_next, x_next < 0.0


def semidiscrete_step(
    y: float, dt: float, dw: float, params: CevParams
) -> tuple[float, StepFlags]:
    """One explicit semi-discrete step from state ``y >= 0``.

    Returns the next state (always >= 0) and the step flags.  Propagates
    NegativeInner when the inner expression violates the clamp threshold.
    """
    if not y >= 0.0:
        raise ValidationError("y must be >= 0")
    y_next, z_neg, clamped = _semidiscrete_kernel(float(y), dt, float(dw), params)
    return float(y_next), StepFlags(bool(z_neg), bool(clamped))


def euler_step(
    variant: SchemeId, x: float, dt: float, dw: float, params: CevParams
) -> float:
    """One Euler-Maruyama step of the given baseline variant.

    The state may be negative (negativity is data for the baselines, not an
    error), so no positivity precondition applies.
    """
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValidationError("dt must be a positive finite number")
    x_next, _ = _euler_kernel(variant, float(x), dt, float(dw), params)
    return float(x_next)


def _step_block(scheme: SchemeId, y, dt: float, dw, params: CevParams):
    """Dispatch one vectorized step; returns (next, event_mask, clamp_mask, inner_pow_min).

    ``inner_pow_min`` is the smallest inner^(1-a) seen at the pre-step states,
    the monotone statistic behind the worst per-step sign-flip probability;
    it is +inf for Euler variants, which have no inner expression.
    """
    if scheme is SchemeId.SEMI_DISCRETE:
        inner, clamped = _inner_clamped(y, dt, params)
        one_minus_a = 1.0 - params.a
        ipow = np.power(inner, one_minus_a)
        z = params.sigma * one_minus_a * dw + ipow
        y_next = np.power(np.abs(z), 1.0 / one_minus_a)
        return y_next, z < 0.0, clamped, float(np.min(ipow))
    x_next, neg = _euler_kernel(scheme, y, dt, dw, params)
    return x_next, neg, np.zeros_like(neg), math.inf


def simulate_path(
    scheme: SchemeId,
    params: CevParams,
    grid: TimeGrid,
    inc: IncrementArray,
) -> PathResult:
    """Iterate the chosen scheme over ``grid`` driven by ``inc``.

    The increments must match the grid exactly (same count, same step).  For
    the semi-discrete scheme every value of the result is nonnegative.
    """
    if inc.length != grid.n_steps:
        raise GridMismatch(
            f"increment count {inc.length} does not match n_steps {grid.n_steps}"
        )
    if not math.isclose(inc.dt, grid.dt, rel_tol=1e-12, abs_tol=0.0):
        raise GridMismatch(f"increment dt {inc.dt!r} does not match grid dt {grid.dt!r}")

    values = np.empty(grid.n_steps + 1)
    values[0] = params.x0
    sign_flips = 0
    clamps = 0
    y = params.x0
    dw = inc.values
    for k in range(grid.n_steps):
        if scheme is SchemeId.SEMI_DISCRETE:
            y, flags = semidiscrete_step(y, grid.dt, dw[k], params)
            sign_flips += flags.z_negative
            clamps += flags.clamped
        else:
            y, went_negative = _euler_kernel(scheme, float(y), grid.dt, float(dw[k]), params)
            y = float(y)
            sign_flips += bool(went_negative)
        values[k + 1] = y
    return PathResult(
        times=grid.times(),
        values=values,
        sign_flip_count=int(sign_flips),
        clamp_count=int(clamps),
        min_value=float(values.min()),
    )
