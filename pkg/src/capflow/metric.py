"""Spherically symmetric asymptotically flat metrics with boundary.

Every geometry handled by this package is described in the area-radius
gauge

    g = (1 - 2 m(rho)/rho)^(-1) d rho^2 + rho^2 dOmega^2,   rho >= rho0,

where m(rho) is the quasi-local mass function of the coordinate sphere at
area-radius rho.  In this gauge the Hawking mass of the sphere at rho is
m(rho) on the nose, the scalar curvature is R = 4 m'(rho)/rho^2, and the
lapse w = sqrt(1 - 2m/rho) is the only metric coefficient the rest of the
package ever needs.  A horizon boundary (w(rho0) = 0) is permitted; the
interior must stay horizon-free (2 m(rho) < rho for rho > rho0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .quadrature import geomspace_grid

__all__ = [
    "MassProfile",
    "ConformalRadialFactor",
    "ValidationReport",
    "build_schwarzschild",
    "build_flat",
    "build_polytail",
    "build_monotone_spline",
    "build_oscillating_witness",
    "from_conformal_radial",
    "scalar_curvature",
    "adm_mass",
    "validate",
    "derivative_consistency",
]

# Sampling used by validate(): log grid on [rho0, DECAY_SPAN * rho0].
VALIDATION_GRID_POINTS = 512
DECAY_SPAN = 1.0e6


@dataclass(frozen=True)
class MassProfile:
    """A quasi-local mass function defining one radial geometry.

    Immutable after construction; safe to share across workers.  The
    callables must be pure.  ``m_second`` is optional and only required
    when second derivatives of the lapse are needed (static potentials).
    """

    rho0: float
    m: Callable[[float], float]
    m_prime: Callable[[float], float]
    m_adm: float
    decay_exponent: float
    label: str
    m_second: Optional[Callable[[float], float]] = None

    def __post_init__(self) -> None:
        if not self.rho0 > 0:
            raise ValueError("inner boundary radius rho0 must be positive")

    def w(self, rho: float) -> float:
        """Lapse w(rho) = sqrt(1 - 2 m(rho)/rho)."""
        val = 1.0 - 2.0 * self.m(rho) / rho
        if val < 0.0:
            if val > -1e-13:
                return 0.0
            raise ValueError(
                f"{self.label}: 2m(rho) > rho at rho={rho} (inside a horizon)"
            )
        return math.sqrt(val)

    def one_minus_w(self, rho: float) -> float:
        """1 - w(rho) evaluated without cancellation: (2m/rho)/(1 + w)."""
        return (2.0 * self.m(rho) / rho) / (1.0 + self.w(rho))

    def with_boundary(self, rho0: float) -> "MassProfile":
        """The exterior of the sphere at area-radius rho0 (same mass function)."""
        if rho0 < self.rho0:
            raise ValueError("new boundary must enclose the old one")
        return replace(self, rho0=rho0, label=f"{self.label}|rho0={rho0:g}")


@dataclass(frozen=True)
class ConformalRadialFactor:
    """A radial conformal factor phi on [r0, inf) defining g = phi^4 g_E.

    phi must be positive, tend to 1 at infinity, and keep the area-radius
    rho(r) = r phi(r)^2 strictly increasing so the metric is expressible
    in area-radius gauge.  Superharmonicity phi'' + (2/r) phi' <= 0 is
    equivalent to nonnegative scalar curvature.
    """

    phi: Callable[[float], float]
    phi_prime: Callable[[float], float]
    phi_second: Callable[[float], float]
    r0: float

    def area_radius(self, r: float) -> float:
        return r * self.phi(r) ** 2

    def area_radius_prime(self, r: float) -> float:
        p = self.phi(r)
        return p * (p + 2.0 * r * self.phi_prime(r))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of profile validation; failures are data, not exceptions."""

    horizon_free: bool
    nonneg_scalar_curvature: bool
    decay_ok: bool
    witness: Optional[tuple[str, float]] = None

    @property
    def passed(self) -> bool:
        return self.horizon_free and self.nonneg_scalar_curvature and self.decay_ok


def build_schwarzschild(mass: float, rho0: float) -> MassProfile:
    """Constant mass profile m(rho) = mass; vacuum exterior.

    Rejects a boundary inside the horizon (rho0 < 2*mass); rho0 = 2*mass
    (minimal boundary, w(rho0) = 0) is allowed.
    """
    if mass < 0:
        raise ValueError("Schwarzschild mass must be nonnegative")
    if rho0 < 2.0 * mass:
        raise ValueError(
            f"boundary rho0={rho0} lies inside the horizon (needs rho0 >= {2*mass})"
        )
    return MassProfile(
        rho0=rho0,
        m=lambda rho: mass,
        m_prime=lambda rho: 0.0,
        m_adm=mass,
        decay_exponent=math.inf,  # sentinel: decay is exact
        label=f"schwarzschild(m={mass:g}, rho0={rho0:g})",
        m_second=lambda rho: 0.0,
    )


def build_flat(rho0: float) -> MassProfile:
    """Euclidean space minus a round ball of area-radius rho0."""
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    prof = build_schwarzschild(0.0, rho0)
    return replace(prof, label=f"flat(rho0={rho0:g})")


def build_polytail(m_inf: float, p: float, rho0: float) -> MassProfile:
    """m(rho) = m_inf (1 - (rho0/rho)^p): generic strict-inequality family.

    Requires p >= 1 so the decay stays comfortably inside the tau > 1/2
    asymptotic regime, and 2*m_inf < rho0 which is sufficient for a
    horizon-free interior since m(rho) <= m_inf.
    """
    if m_inf < 0:
        raise ValueError("m_inf must be nonnegative")
    if p < 1:
        raise ValueError("polytail exponent p must be >= 1")
    if 2.0 * m_inf >= rho0:
        raise ValueError("need 2*m_inf < rho0 for a horizon-free profile")
    return MassProfile(
        rho0=rho0,
        m=lambda rho: m_inf * (1.0 - (rho0 / rho) ** p),
        m_prime=lambda rho: m_inf * p * rho0**p / rho ** (p + 1.0),
        m_adm=m_inf,
        decay_exponent=p,
        label=f"polytail(m_inf={m_inf:g}, p={p:g}, rho0={rho0:g})",
        m_second=lambda rho: -m_inf * p * (p + 1.0) * rho0**p / rho ** (p + 2.0),
    )


def build_monotone_spline(
    seed: int,
    rho0: float = 1.0,
    n_knots: int = 6,
    max_mass_ratio: float = 0.45,
) -> MassProfile:
    """Random NNSC profile: a monotone spline mass function.

    The mass is a monotone PCHIP interpolant in the compactified variable
    xi = rho0/rho, nonincreasing in xi, so m'(rho) >= 0 by construction.
    2*m_inf < rho0 keeps the interior horizon-free.
    """
    rng = np.random.default_rng(seed)
    m_inf = float(rng.uniform(0.1, max_mass_ratio)) * 0.5 * rho0
    m_bdry = float(rng.uniform(0.0, 0.8)) * m_inf
    n_knots = max(3, n_knots)
    xi = np.concatenate(([0.0], np.sort(rng.uniform(0.05, 0.95, n_knots - 2)), [1.0]))
    # Nonincreasing values from m_inf at xi=0 down to m_bdry at xi=1.
    steps = rng.uniform(0.0, 1.0, len(xi) - 1)
    drops = np.concatenate(([0.0], np.cumsum(steps)))
    drops = drops / drops[-1] if drops[-1] > 0 else drops
    vals = m_inf - (m_inf - m_bdry) * drops
    spline = PchipInterpolator(xi, vals, extrapolate=True)
    dspline = spline.derivative()
    d2spline = spline.derivative(2)

    def m(rho: float) -> float:
        return float(spline(rho0 / rho))

    def m_prime(rho: float) -> float:
        x = rho0 / rho
        return float(-dspline(x)) * rho0 / rho**2

    def m_second(rho: float) -> float:
        x = rho0 / rho
        d1 = float(dspline(x))
        d2 = float(d2spline(x))
        return (d2 * rho0 / rho**2) * rho0 / rho**2 + 2.0 * d1 * rho0 / rho**3

    return MassProfile(
        rho0=rho0,
        m=m,
        m_prime=m_prime,
        m_adm=m_inf,
        decay_exponent=1.0,
        label=f"monotone_spline(seed={seed}, rho0={rho0:g})",
        m_second=m_second,
    )


def build_oscillating_witness(
    rho0: float = 1.0,
    m_inf: float = 0.1,
    amp: float = 0.05,
    freq: float = 4.0,
) -> MassProfile:
    """Negative-control profile: m'(rho) < 0 on a few windows (R < 0 there).

    A damped oscillation amp*sin(freq*x)*exp(-x), x = rho - rho0, rides on
    a polytail base.  The profile stays asymptotically flat (decay 1/rho)
    and horizon-free; only the sign condition on the scalar curvature
    fails, on windows near the boundary.
    """
    if 2.0 * (m_inf + amp) >= rho0:
        raise ValueError("oscillation amplitude too large: horizon risk")

    def m(rho: float) -> float:
        x = rho - rho0
        return m_inf * (1.0 - rho0 / rho) + amp * math.sin(freq * x) * math.exp(-x)

    def m_prime(rho: float) -> float:
        x = rho - rho0
        s, c = math.sin(freq * x), math.cos(freq * x)
        return m_inf * rho0 / rho**2 + amp * math.exp(-x) * (freq * c - s)

    def m_second(rho: float) -> float:
        x = rho - rho0
        s, c = math.sin(freq * x), math.cos(freq * x)
        return -2.0 * m_inf * rho0 / rho**3 + amp * math.exp(-x) * (
            (1.0 - freq**2) * s - 2.0 * freq * c
        )

    return MassProfile(
        rho0=rho0,
        m=m,
        m_prime=m_prime,
        m_adm=m_inf,
        decay_exponent=1.0,
        label=f"oscillating_witness(rho0={rho0:g}, amp={amp:g})",
        m_second=m_second,
    )


def _invert_area_radius(factor: ConformalRadialFactor, rho: float) -> float:
    """The isotropic radius r with r*phi(r)^2 = rho (strictly increasing)."""
    lo = factor.r0
    f_lo = factor.area_radius(lo) - rho
    if f_lo > 0:
        if f_lo < 1e-12 * rho:
            return lo
        raise ValueError(f"rho={rho} lies inside the boundary sphere")
    hi = max(rho, 2.0 * lo)
    while factor.area_radius(hi) < rho:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("area radius fails to reach rho (non-monotone phi?)")
    return brentq(lambda r: factor.area_radius(r) - rho, lo, hi, xtol=1e-300, rtol=4e-16)


def from_conformal_radial(factor: ConformalRadialFactor, label: str = "") -> MassProfile:
    """Convert a conformally flat radial metric to area-radius gauge.

    The mass function is read off as the Hawking mass of the isotropic
    sphere at r:  m(rho(r)) = (rho/2) (1 - (rho'(r)/phi^2)^2)  with
    rho(r) = r phi^2.  Schwarzschild factors phi = 1 + m/(2r) round-trip
    to the constant profile m.
    """
    grid = geomspace_grid(factor.r0, 1e8 * factor.r0, 256)
    for a, b in zip(grid, grid[1:]):
        if factor.area_radius(b) <= factor.area_radius(a):
            raise ValueError(
                f"area radius rho(r)=r*phi^2 is non-increasing on [{a:g}, {b:g}]"
            )

    def mass_at_r(r: float) -> float:
        p = factor.phi(r)
        h = (p + 2.0 * r * factor.phi_prime(r)) / p
        return 0.5 * factor.area_radius(r) * (1.0 - h * h)

    def mass_slope_at_r(r: float) -> float:
        p = factor.phi(r)
        dp = factor.phi_prime(r)
        ddp = factor.phi_second(r)
        h = (p + 2.0 * r * dp) / p
        dh = (3.0 * dp + 2.0 * r * ddp) / p - (p + 2.0 * r * dp) * dp / p**2
        rp = factor.area_radius_prime(r)
        return 0.5 * rp * (1.0 - h * h) - factor.area_radius(r) * h * dh

    def m(rho: float) -> float:
        return mass_at_r(_invert_area_radius(factor, rho))

    def m_prime(rho: float) -> float:
        r = _invert_area_radius(factor, rho)
        return mass_slope_at_r(r) / factor.area_radius_prime(r)

    # ADM mass by geometric sampling + Aitken extrapolation of m(r).
    samples = [mass_at_r(1e5 * factor.r0 * 2.0**j) for j in range(12)]
    m_adm = _aitken_limit(samples)

    rho0 = factor.area_radius(factor.r0)
    return MassProfile(
        rho0=rho0,
        m=m,
        m_prime=m_prime,
        m_adm=m_adm,
        decay_exponent=1.0,
        label=label or f"conformal(r0={factor.r0:g})",
    )


def _aitken_limit(values: list[float]) -> float:
    """Iterated Aitken delta-squared limit of a geometrically converging list."""
    seq = list(values)
    while len(seq) >= 3:
        nxt = []
        for a, b, c in zip(seq, seq[1:], seq[2:]):
            denom = (c - b) - (b - a)
            if abs(denom) < 1e-300:
                nxt.append(c)
            else:
                nxt.append(c - (c - b) ** 2 / denom)
        if max(nxt) - min(nxt) < 1e-15 * (1.0 + abs(nxt[-1])):
            return nxt[-1]
        seq = nxt
    return seq[-1]


def scalar_curvature(profile: MassProfile, rho: float) -> float:
    """Scalar curvature R(rho) = 4 m'(rho)/rho^2 (time-symmetric constraint)."""
    if rho < profile.rho0:
        raise ValueError(f"rho={rho} below the boundary rho0={profile.rho0}")
    return 4.0 * profile.m_prime(rho) / rho**2


def adm_mass(profile: MassProfile, cutoff_factor: float = DECAY_SPAN) -> float:
    """ADM mass of the profile, with a decay sanity check at the cutoff."""
    rho_big = cutoff_factor * profile.rho0
    drift = abs(profile.m(rho_big) - profile.m_adm)
    scale = max(1.0, abs(profile.m_adm))
    allowed = _decay_bound(profile, rho_big, scale)
    if drift > allowed:
        raise ValueError(
            f"{profile.label}: m({rho_big:g}) is {drift:.3e} away from the stated "
            f"ADM mass (allowed {allowed:.3e}); decay check failed"
        )
    return profile.m_adm


def _decay_bound(profile: MassProfile, rho_big: float, scale: float) -> float:
    rho_mid = math.sqrt(profile.rho0 * rho_big)
    delta = min(profile.decay_exponent, 50.0)
    c_est = abs(profile.m(rho_mid) - profile.m_adm)
    return 2.0 * c_est * (rho_mid / rho_big) ** delta + 1e-10 * scale


def validate(profile: MassProfile) -> ValidationReport:
    """Check horizon-free interior, R >= 0, and mass decay on a log grid.

    Sign changes of m' between grid points are refined by bisection so a
    narrow R < 0 dip cannot hide between samples.
    """
    grid = geomspace_grid(profile.rho0, DECAY_SPAN * profile.rho0, VALIDATION_GRID_POINTS)
    scale = max(1.0, abs(profile.m_adm))
    tol_neg = 1e-12 * scale

    horizon_free = True
    nonneg_r = True
    witness: Optional[tuple[str, float]] = None

    if 2.0 * profile.m(profile.rho0) > profile.rho0 * (1.0 + 1e-12):
        horizon_free = False
        witness = ("horizon", profile.rho0)

    for rho in grid[1:]:
        if horizon_free and 2.0 * profile.m(rho) >= rho:
            horizon_free = False
            witness = witness or ("horizon", rho)

    slopes = [profile.m_prime(rho) for rho in grid]
    for i, (rho, s) in enumerate(zip(grid, slopes)):
        if s < -tol_neg:
            nonneg_r = False
            witness = witness or ("scalar_curvature", rho)
            break
        if i + 1 < len(grid) and s * slopes[i + 1] < 0:
            bad = _refine_negative_slope(profile, grid[i], grid[i + 1], tol_neg)
            if bad is not None:
                nonneg_r = False
                witness = witness or ("scalar_curvature", bad)
                break

    drift = abs(profile.m(DECAY_SPAN * profile.rho0) - profile.m_adm)
    decay_ok = drift <= _decay_bound(profile, DECAY_SPAN * profile.rho0, scale)
    if not decay_ok:
        witness = witness or ("decay", DECAY_SPAN * profile.rho0)

    return ValidationReport(horizon_free, nonneg_r, decay_ok, witness)


def _refine_negative_slope(
    profile: MassProfile, lo: float, hi: float, tol_neg: float, iters: int = 60
) -> Optional[float]:
    """Bisect towards the most negative m' on [lo, hi]; None if none found."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if profile.m_prime(mid) < -tol_neg:
            return mid
        # Keep the half whose endpoint slope is smaller.
        if profile.m_prime(lo) < profile.m_prime(hi):
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-12 * hi:
            break
    return None


def derivative_consistency(
    profile: MassProfile, n_samples: int = 64, rel_tol: float = 1e-5
) -> tuple[bool, float]:
    """Cross-check m' against centered finite differences of m.

    Guards user-supplied closures; h = 1e-6 * rho, tolerance relative to
    max(|m'|, floor).  Returns (ok, worst relative deviation).
    """
    grid = geomspace_grid(profile.rho0 * (1.0 + 1e-5), 1e4 * profile.rho0, n_samples)
    floor = 1e-8 * max(1.0, abs(profile.m_adm)) / profile.rho0
    worst = 0.0
    for rho in grid:
        h = 1e-6 * rho
        fd = (profile.m(rho + h) - profile.m(rho - h)) / (2.0 * h)
        dev = abs(fd - profile.m_prime(rho)) / max(abs(profile.m_prime(rho)), floor)
        worst = max(worst, dev)
    return worst <= rel_tol, worst
