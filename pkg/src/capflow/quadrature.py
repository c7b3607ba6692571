"""Adaptive quadrature with error estimates, plus the variable charts used
by the radial integrals.

All integrals in this package reduce to one-dimensional integrals over
[a, b] or [a, inf) of smooth integrands after at most two substitutions:

* ``x = a + sigma**2`` removes an integrable 1/sqrt(x - a) endpoint
  singularity exactly (horizon boundaries),
* ``x = 1/s`` maps [a, inf) to (0, 1/a] so that decaying tails become
  smooth integrands near s = 0.

The adaptive engine itself is QUADPACK (Gauss-Kronrod pairs with
bisection refinement) via :func:`scipy.integrate.quad`; every result is
returned together with the engine's error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from scipy import integrate as _sci_integrate


class QuadratureError(RuntimeError):
    """Raised when the adaptive engine cannot reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and refinement budget for one integration call.

    ``singular_boundary`` forces (True/False) the 1/sqrt endpoint chart at
    the inner boundary; None means auto-detect from the lapse value there.
    ``tail_rho_factor`` sets rho_max = tail_rho_factor * rho0, beyond which
    tails are handled by the analytic flat-space correction plus a decay
    bound on the committed error.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_depth: int = 40
    singular_boundary: bool | None = None
    tail_rho_factor: float = 1e8

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max refinement depth must be >= 1")

    @property
    def subdivision_limit(self) -> int:
        # QUADPACK counts subintervals, not bisection depth.
        return max(50, 10 * self.max_depth)


class Quantity(NamedTuple):
    """A computed value with an attached error estimate."""

    value: float
    error: float

    def __add__(self, other):  # type: ignore[override]
        if isinstance(other, Quantity):
            return Quantity(self.value + other.value, self.error + other.error)
        return Quantity(self.value + other, self.error)

    def scaled(self, factor: float) -> "Quantity":
        return Quantity(self.value * factor, self.error * abs(factor))


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec,
    points: Sequence[float] = (),
    pure_relative: bool = False,
) -> Quantity:
    """Integrate ``f`` over the finite interval [a, b].

    ``points`` marks interior breakpoints (kinks) the engine must not
    straddle.  ``pure_relative`` requests epsabs=0, appropriate for
    positive integrands whose magnitude is not known in advance.
    """
    if not (a < b):
        if a == b:
            return Quantity(0.0, 0.0)
        raise ValueError(f"empty integration interval [{a}, {b}]")
    epsabs = 0.0 if pure_relative else spec.abs_tol
    inner = [p for p in points if a < p < b] or None
    out = _sci_integrate.quad(
        f,
        a,
        b,
        epsabs=epsabs,
        epsrel=spec.rel_tol,
        limit=spec.subdivision_limit,
        points=inner,
        full_output=1,
    )
    value, err = out[0], out[1]
    if len(out) > 3:
        raise QuadratureError(
            f"quadrature did not converge on [{a}, {b}]: {out[3]}"
        )
    return Quantity(value, err)


def integrate_sqrt_left(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec,
    pure_relative: bool = False,
) -> Quantity:
    """Integrate f over [a, b] when f ~ C/sqrt(x - a) near a.

    The substitution x = a + sigma**2 turns the integrand into
    2*sigma*f(a + sigma**2), which is bounded at sigma = 0.
    """
    if not (a < b):
        return Quantity(0.0, 0.0)
    width = math.sqrt(b - a)

    def g(sigma: float) -> float:
        return 2.0 * sigma * f(a + sigma * sigma)

    return integrate(g, 0.0, width, spec, pure_relative=pure_relative)


def integrate_inverse_chart(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec,
    pure_relative: bool = False,
) -> Quantity:
    """Integrate f over [a, b] (b may be inf) in the s = 1/x chart.

    Suitable when f decays at least like 1/x^2, so that f(1/s)/s^2 stays
    bounded as s -> 0.
    """
    if not (a > 0):
        raise ValueError("inverse chart requires a > 0")
    s_hi = 1.0 / a
    s_lo = 0.0 if math.isinf(b) else 1.0 / b

    def g(s: float) -> float:
        x = 1.0 / s
        return f(x) * x * x

    return integrate(g, s_lo, s_hi, spec, pure_relative=pure_relative)


def geomspace_grid(lo: float, hi: float, n: int) -> list[float]:
    """n logarithmically spaced points on [lo, hi]."""
    if n < 2:
        return [lo]
    ratio = (hi / lo) ** (1.0 / (n - 1))
    return [lo * ratio**i for i in range(n)]
