"""Exact Kerr/Schwarzschild geometry in Boyer-Lindquist coordinates.

Conventions (G = c = 1, signature -+++):

    Delta(r)      = r^2 - 2 M r + a^2
    rho^2(r,th)   = r^2 + a^2 cos^2(th)
    r_+/-         = M +/- sqrt(M^2 - a^2)          (roots of Delta)

Metric components are stored as symmetric tensor components with index
order (t, r, theta, phi); the only off-diagonal entry outside the horizon
is g_{t phi} = -2 M a r sin^2(th) / rho^2 (half the dt dphi coefficient of
the line element).

The tortoise coordinate integrates dr*/dr = (r^2 + a^2)/Delta with the
integration constant fixed so that for a = 0

    r* = r + 2M log(r/(2M) - 1),

and for a != 0 by the partial-fractions antiderivative with each logarithm
normalized by 2M (continuous in a, reduces to the formula above).

Trapped null geodesics outside the horizon satisfy R_a(r, tau, Phi) = 0
with

    R_a = (r^2+a^2)(r^3 - 3M r^2 + a^2 r + a^2 M) tau^2
          - 2 a M (r^2 - a^2) tau Phi - a^2 (r - M) Phi^2,

which for a = 0 reduces to r^4 (r - 3M) tau^2: the photon sphere r = 3M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DegeneratePointError, DomainError, NoBracketError

SIN_THETA_FLOOR = 1e-8  # operations reject the poles rather than regularize

AXES = ("t", "r", "theta", "phi")
_AXIS_INDEX = {name: i for i, name in enumerate(AXES)}


@dataclass(frozen=True)
class BlackHoleParams:
    """Mass and specific angular momentum of the background (length units)."""

    M: float
    a: float = 0.0

    def __post_init__(self):
        if not self.M > 0:
            raise DomainError(f"mass must be positive, got M={self.M}")
        if abs(self.a) > self.M:
            raise DomainError(f"|a| <= M required (extremal allowed), got a={self.a}, M={self.M}")

    @property
    def r_plus(self) -> float:
        return self.M + math.sqrt(self.M**2 - self.a**2)

    @property
    def r_minus(self) -> float:
        return self.M - math.sqrt(self.M**2 - self.a**2)

    def delta(self, r):
        return r * r - 2.0 * self.M * r + self.a * self.a

    def rho2(self, r, theta):
        return r * r + self.a * self.a * np.cos(theta) ** 2


@dataclass(frozen=True)
class MetricComponents:
    """Covariant and contravariant metric at one point, index order (t,r,theta,phi)."""

    covariant: np.ndarray
    contravariant: np.ndarray
    point: tuple  # (r, theta)

    def cov(self, mu: str, nu: str) -> float:
        return float(self.covariant[_AXIS_INDEX[mu], _AXIS_INDEX[nu]])

    def con(self, mu: str, nu: str) -> float:
        return float(self.contravariant[_AXIS_INDEX[mu], _AXIS_INDEX[nu]])

    def identity_defect(self) -> float:
        """Max-norm distance of g . g^{-1} from the identity."""
        return float(np.abs(self.covariant @ self.contravariant - np.eye(4)).max())


def horizon_radii(params: BlackHoleParams) -> tuple[float, float]:
    """Return (r_+, r_-), the roots of Delta. Raises DomainError if |a| > M."""
    if abs(params.a) > params.M:
        raise DomainError("|a| <= M required")
    return params.r_plus, params.r_minus


def metric_bl(params: BlackHoleParams, r: float, theta: float) -> MetricComponents:
    """Kerr metric components in Boyer-Lindquist coordinates at (r, theta).

    Valid outside the horizon (Delta > 0) and away from the axis.  The
    product covariant . contravariant is the identity to ~1e-12 relative.
    """
    M, a = params.M, params.a
    sin_th = math.sin(theta)
    if params.delta(r) <= 0:
        raise DegeneratePointError(f"Delta(r) <= 0 at r={r}: Boyer-Lindquist valid only outside r_+={params.r_plus}")
    if abs(sin_th) < SIN_THETA_FLOOR:
        raise DegeneratePointError(f"polar axis sin(theta)={sin_th}: components degenerate")

    s2 = sin_th * sin_th
    rho2 = params.rho2(r, theta)
    Delta = params.delta(r)
    big = (r * r + a * a) ** 2 - a * a * Delta * s2

    cov = np.zeros((4, 4))
    cov[0, 0] = -(Delta - a * a * s2) / rho2
    cov[0, 3] = cov[3, 0] = -2.0 * a * M * r * s2 / rho2
    cov[1, 1] = rho2 / Delta
    cov[2, 2] = rho2
    cov[3, 3] = big * s2 / rho2

    con = np.zeros((4, 4))
    con[0, 0] = -big / (rho2 * Delta)
    con[0, 3] = con[3, 0] = -2.0 * a * M * r / (rho2 * Delta)
    con[1, 1] = Delta / rho2
    con[2, 2] = 1.0 / rho2
    con[3, 3] = (Delta - a * a * s2) / (rho2 * Delta * s2)

    return MetricComponents(covariant=cov, contravariant=con, point=(r, theta))


# ---------------------------------------------------------------------------
# Tortoise coordinate
# ---------------------------------------------------------------------------

def tortoise(params: BlackHoleParams, r):
    """Tortoise coordinate r*(r) outside the horizon (scalar or array).

    Closed-form antiderivative of (r^2+a^2)/Delta; each log is normalized
    by 2M so the a = 0 case is exactly r + 2M log(r/(2M) - 1).
    """
    M = params.M
    rp, rm = params.r_plus, params.r_minus
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= rp):
        raise DomainError(f"tortoise defined for r > r_+={rp}")
    if rp - rm < 1e-12 * M:
        # extremal double root: dr*/dr = 1 + 2M/(r-M) + 2M^2/(r-M)^2
        out = r_arr + 2 * M * np.log((r_arr - M) / (2 * M)) - 2 * M * M / (r_arr - M)
    else:
        cp = 2 * M * rp / (rp - rm)
        cm = 2 * M * rm / (rm - rp)
        out = r_arr + cp * np.log((r_arr - rp) / (2 * M)) + cm * np.log((r_arr - rm) / (2 * M))
    return out if out.ndim else float(out)


def dtortoise_dr(params: BlackHoleParams, r):
    """dr*/dr = (r^2 + a^2)/Delta; strictly > 1 outside the horizon."""
    r_arr = np.asarray(r, dtype=float)
    out = (r_arr * r_arr + params.a**2) / params.delta(r_arr)
    return out if out.ndim else float(out)


def inverse_tortoise(params: BlackHoleParams, r_star):
    """Invert r*(r) by safeguarded Newton (vectorized; round trip ~1e-12 relative)."""
    rs = np.asarray(r_star, dtype=float)
    scalar = rs.ndim == 0
    rs = np.atleast_1d(rs)
    rp = params.r_plus
    M = params.M

    # initial guess: r ~ r* for large r*, hugging the horizon for negative r*
    expo = np.minimum((rs - rp) / (2 * M), 1.0)
    guess = np.where(rs > rp + 4 * M, rs, rp + 2 * M * np.exp(expo))
    guess = np.maximum(guess, rp * (1 + 1e-14))

    r = guess.copy()
    for _ in range(80):
        f = tortoise(params, r) - rs
        df = dtortoise_dr(params, r)
        step = f / df
        r_new = r - step
        # safeguard: never cross the horizon
        r_new = np.maximum(r_new, 0.5 * (r + rp))
        if np.all(np.abs(r_new - r) <= 1e-14 * np.maximum(1.0, np.abs(r_new))):
            r = r_new
            break
        r = r_new
    # guard against round-off landing exactly on the horizon for very
    # negative r*, where r - r_+ underflows double precision
    out = np.maximum(r, rp * (1.0 + 5e-16))
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Horizon-penetrating slicing t~ = v_+ - mu(r)
# ---------------------------------------------------------------------------

@dataclass
class SlicingSpec:
    """Slicing function mu with blending cutoff zeta and excision radius r_e.

    ``mu`` and ``mu_prime`` are callables of r; ``zeta`` maps r to [0, 1].
    Validity requires r_- < r_e < r_+.
    """

    mu: Callable[[np.ndarray], np.ndarray]
    mu_prime: Callable[[np.ndarray], np.ndarray]
    zeta: Callable[[np.ndarray], np.ndarray]
    r_e: float


@dataclass
class SlicingReport:
    """Per-sample slicing diagnostics; ``passed`` is the overall verdict."""

    radii: np.ndarray
    mu_prime: np.ndarray
    spacelike: np.ndarray          # worst-over-theta value of 2 - (1 - 2Mr/rho^2) mu'
    mu_minus_rstar: np.ndarray     # NaN below the horizon where r* is undefined
    passed: bool
    failures: list = field(default_factory=list)


def _smoothstep5(s):
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def reference_slicing(params: BlackHoleParams, r_e: float | None = None) -> SlicingSpec:
    """Canonical slicing: slope-2 line inside, tortoise outside r = 5M/2.

    mu' blends (quintic, on [2.2M, 2.5M]) between the constant 2 near the
    horizon and dr*/dr outside; mu itself is anchored to r* at r = 5M/2,
    which makes mu >= r* on (2M, 5M/2] with equality beyond.  The paper-side
    requirements only constrain mu by inequalities; this is one smooth
    representative, used as the default in tests and demos.
    """
    M = params.M
    lo, hi = 2.2 * M, 2.5 * M
    if r_e is None:
        r_e = max(params.M, 0.5 * (params.r_plus + params.r_minus))

    def mu_prime(r):
        r_arr = np.asarray(r, dtype=float)
        w = _smoothstep5((r_arr - lo) / (hi - lo))
        dr = np.where(r_arr > params.r_plus * (1 + 1e-12),
                      dtortoise_dr(params, np.maximum(r_arr, params.r_plus * (1 + 1e-12))),
                      2.0)
        out = (1.0 - w) * 2.0 + w * dr
        return out if out.ndim else float(out)

    # anchor constant: mu(hi) = r*(hi); integrate mu' over the blend window once
    nodes, weights = np.polynomial.legendre.leggauss(48)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    blend_integral = float(np.sum(weights * mu_prime(mid + half * nodes)) * half)
    mu_lo = tortoise(params, hi) - blend_integral  # value of mu at r = lo
    line_c = mu_lo - 2.0 * lo                      # mu = 2r + line_c for r <= lo

    def mu(r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r_arr)
        low = r_arr <= lo
        high = r_arr >= hi
        mid_mask = ~(low | high)
        out[low] = 2.0 * r_arr[low] + line_c
        out[high] = tortoise(params, r_arr[high])
        for i in np.nonzero(mid_mask)[0]:
            x = r_arr[i]
            h2 = 0.5 * (x - lo)
            m2 = 0.5 * (x + lo)
            out[i] = mu_lo + float(np.sum(weights * mu_prime(m2 + h2 * nodes)) * h2)
        return out if np.asarray(r).ndim else float(out[0])

    def zeta(r):
        # cutoff equal to 1 near the horizon, vanishing beyond the blend window
        r_arr = np.asarray(r, dtype=float)
        out = 1.0 - _smoothstep5((r_arr - lo) / (hi - lo))
        return out if out.ndim else float(out)

    return SlicingSpec(mu=mu, mu_prime=mu_prime, zeta=zeta, r_e=r_e)


def validate_slicing(spec: SlicingSpec, params: BlackHoleParams, grid: Sequence[float],
                     theta_samples: Sequence[float] = (1e-3, np.pi / 4, np.pi / 2)) -> SlicingReport:
    """Check the slicing conditions on sample radii (failures go in the report).

    Per sample: mu'(r) > 0 and, for every sampled theta,
    2 - (1 - 2 M r / rho^2) mu'(r) > 0 (surfaces space-like), plus
    mu = r* for r > 5M/2 and mu >= r* on (2M, 5M/2].
    """
    r = np.asarray(grid, dtype=float)
    M = params.M
    with np.errstate(all="ignore"):
        mup = np.asarray(spec.mu_prime(r), dtype=float)
        worst = np.full_like(r, np.inf)
        for th in theta_samples:
            rho2 = params.rho2(r, th)
            worst = np.minimum(worst, 2.0 - (1.0 - 2.0 * M * r / rho2) * mup)
        mu_vals = np.asarray(spec.mu(r), dtype=float)
        dmr = np.full_like(r, np.nan)
        outside = r > params.r_plus * (1 + 1e-12)
        dmr[outside] = mu_vals[outside] - tortoise(params, r[outside])

    failures = []
    if not (params.r_minus < spec.r_e < params.r_plus):
        failures.append(f"r_e={spec.r_e} not in (r_-, r_+)=({params.r_minus}, {params.r_plus})")
    bad_mup = ~np.isfinite(mup) | (mup <= 0)
    if bad_mup.any():
        failures.append(f"mu' <= 0 or non-finite at r={r[bad_mup].tolist()[:5]}")
    bad_sl = ~np.isfinite(worst) | (worst <= 0)
    if bad_sl.any():
        failures.append(f"space-like condition fails at r={r[bad_sl].tolist()[:5]}")
    far = r > 2.5 * M
    if far.any():
        err = np.abs(dmr[far])
        if np.nanmax(err) > 1e-9 * max(1.0, float(np.nanmax(np.abs(mu_vals[far])))):
            failures.append(f"mu != r* for r > 5M/2 (max dev {np.nanmax(err):.3e})")
    near = outside & ~far
    if near.any() and np.nanmin(dmr[near]) < -1e-10:
        failures.append(f"mu < r* on (2M, 5M/2] (min {np.nanmin(dmr[near]):.3e})")

    return SlicingReport(radii=r, mu_prime=mup, spacelike=worst,
                         mu_minus_rstar=dmr, passed=not failures, failures=failures)


# ---------------------------------------------------------------------------
# Trapped set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrappedSetQuery:
    """Frequencies (tau, Phi) conjugate to (t, phi) for the trapped-set polynomial."""

    tau: float
    Phi: float
    params: BlackHoleParams

    def __post_init__(self):
        if self.tau == 0:
            raise DomainError("tau must be nonzero")


def trapped_polynomial(params: BlackHoleParams, r, tau: float, Phi: float):
    """R_a(r, tau, Phi); 2-homogeneous in (tau, Phi), root near 3M for small a."""
    M, a = params.M, params.a
    r_arr = np.asarray(r, dtype=float)
    out = ((r_arr**2 + a * a) * (r_arr**3 - 3 * M * r_arr**2 + a * a * r_arr + a * a * M) * tau * tau
           - 2 * a * M * (r_arr**2 - a * a) * tau * Phi
           - a * a * (r_arr - M) * Phi * Phi)
    return out if out.ndim else float(out)


def trapped_root(query: TrappedSetQuery,
                 window: tuple[float, float] | None = None) -> float:
    """Root of R_a in the photon-sphere window [2.5M, 3.5M].

    Safeguarded bisection (brentq) polished by two Newton steps; the residual
    satisfies |R_a(r_a)| <= 1e-12 x (sum of term magnitudes at the root).
    """
    params = query.params
    M = params.M
    lo, hi = window if window is not None else (2.5 * M, 3.5 * M)
    f = lambda r: trapped_polynomial(params, r, query.tau, query.Phi)
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NoBracketError(f"R_a has no sign change in [{lo}, {hi}] for a={params.a}, tau={query.tau}, Phi={query.Phi}")
    root = brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)
    for _ in range(2):  # Newton polish to the round-off floor
        h = 1e-7 * M
        df = (f(root + h) - f(root - h)) / (2 * h)
        if df != 0:
            nxt = root - f(root) / df
            if lo <= nxt <= hi:
                root = nxt
    return float(root)


def trapped_residual_scale(params: BlackHoleParams, r: float, tau: float, Phi: float) -> float:
    """Sum of absolute term magnitudes of R_a at r (tolerance scale for the root)."""
    M, a = params.M, params.a
    return float((r * r + a * a) * abs(r**3 - 3 * M * r * r + a * a * r + a * a * M) * tau * tau
                 + abs(2 * a * M * (r * r - a * a) * tau * Phi)
                 + a * a * abs(r - M) * Phi * Phi
                 + (r * r + a * a) * r**3 * tau * tau)
