"""Finite-difference evolution of the 1+1 per-mode radial wave equation.

The evolved equation is

    d_t^2 psi = d_r*^2 psi - V(t, r*) psi + f(t, r*)

on a uniform tortoise-coordinate grid.  For a static potential the
integrator is the classic three-level leapfrog (exact transport at
Courant number 1, the "magic time step"); for time-dependent potentials
or fourth-order spatial stencils it is RK4 method-of-lines on the
first-order system (psi, pi).

Boundaries: toward the horizon the potential dies off exponentially in
r*, so the grid is truncated where V is below round-off and closed with a
characteristic outgoing condition (Mur discretization for leapfrog,
one-sided advection for RK4).  The outer boundary defaults to causal
disconnection -- size the domain so no boundary signal reaches an
observer before t_max -- with an outgoing option for exploratory runs
(tails are boundary-sensitive; see README).

Time-decaying perturbations localized at the photon sphere model the
nonstationary-background hypotheses at mode level: the metric
perturbation enters the mode equation only through its coefficients, so
the desk-scale analog is a potential (or principal-part) coefficient
perturbation eps * c(t) * w(r*) with c(t) = (1+t)^(-1-delta).  This is an
analog of the 3+1 hypotheses, not a literal implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CFLError, DomainError, InstabilityError, WindowSupportError
from .geometry import BlackHoleParams, tortoise
from .reduction import RadialPotential, potential_on_rstar_grid

INSTABILITY_FACTOR = 1e12
_CHECK_EVERY = 64


@dataclass(frozen=True)
class GridSpec:
    """Uniform (t, r*) grid: dt = cfl * h.

    With the default causal outer boundary the domain must satisfy
    rstar_max - rstar_min > 2 t_max + (support width of the data) so that
    boundary effects cannot reach the region of interest.
    """

    rstar_min: float
    rstar_max: float
    h: float
    cfl: float
    t_max: float
    order: int = 2
    left_boundary: str = "outgoing"    # outgoing | reflecting | causal
    right_boundary: str = "causal"     # causal | outgoing | sommerfeld

    def __post_init__(self):
        if self.rstar_max <= self.rstar_min:
            raise DomainError("rstar_max must exceed rstar_min")
        if self.h <= 0:
            raise DomainError("h must be positive")
        if not (0 < self.cfl <= 1.0):
            raise CFLError(f"Courant factor must lie in (0, 1], got {self.cfl}")
        if self.order not in (2, 4):
            raise DomainError("order must be 2 or 4")
        if self.left_boundary not in ("outgoing", "reflecting", "causal"):
            raise DomainError(f"unknown left boundary '{self.left_boundary}'")
        if self.right_boundary not in ("causal", "outgoing", "sommerfeld"):
            raise DomainError(f"unknown right boundary '{self.right_boundary}'")

    @property
    def dt(self) -> float:
        return self.cfl * self.h

    def rstar(self) -> np.ndarray:
        n = int(round((self.rstar_max - self.rstar_min) / self.h))
        return self.rstar_min + self.h * np.arange(n + 1)


@dataclass(frozen=True)
class InitialData:
    """Localized pulse; effective support is center +/- 8 width (values < 1e-15 outside)."""

    profile: str = "gaussian"          # gaussian | bump
    center: float = 20.0
    width: float = 2.0
    amplitude: float = 1.0
    momentarily_static: bool = True
    direction: str = "ingoing"         # used when momentarily_static is False

    def __post_init__(self):
        if self.profile not in ("gaussian", "bump"):
            raise DomainError(f"unknown profile '{self.profile}'")
        if self.width <= 0:
            raise DomainError("width must be positive")
        if self.direction not in ("ingoing", "outgoing"):
            raise DomainError(f"unknown direction '{self.direction}'")

    def shape(self, x):
        xi = (np.asarray(x, dtype=float) - self.center) / self.width
        if self.profile == "gaussian":
            return self.amplitude * np.exp(-xi * xi)
        out = np.zeros_like(xi)
        inside = np.abs(xi) < 1.0
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - xi[inside] ** 2))
        return out

    def shape_prime(self, x):
        xi = (np.asarray(x, dtype=float) - self.center) / self.width
        if self.profile == "gaussian":
            return self.amplitude * np.exp(-xi * xi) * (-2.0 * xi) / self.width
        out = np.zeros_like(xi)
        inside = np.abs(xi) < 1.0
        z = xi[inside]
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - z * z)) * (-2.0 * z / (1.0 - z * z) ** 2) / self.width
        return out

    def realize(self, rstar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        psi0 = self.shape(rstar)
        if self.momentarily_static:
            pi0 = np.zeros_like(psi0)
        else:
            dpsi = self.shape_prime(rstar)
            # ingoing: psi(t, x) = g(x + t) -> d_t psi = d_x psi; outgoing flips sign
            pi0 = dpsi if self.direction == "ingoing" else -dpsi
        return psi0, pi0


@dataclass(frozen=True)
class PerturbationSpec:
    """Time-decaying coefficient perturbation localized at the photon sphere.

    The evolved potential (or principal coefficient) gains
    epsilon * c(t) * window(r*) with c(t) = (1 + t)^(-1 - delta).
    delta > 0 makes c integrable (the regime covered by the decay theorem);
    delta <= 0 is constructible for out-of-hypothesis experiments and is
    flagged by ``integrable``.
    """

    epsilon: float
    decay_exponent: float                       # delta in c(t) = (1+t)^(-1-delta)
    window: Callable[[np.ndarray], np.ndarray]  # r* -> [0, 1]
    window_support: tuple[float, float]         # (r*_lo, r*_hi)
    mode: str = "potential"                     # potential | principal

    def __post_init__(self):
        if self.mode not in ("potential", "principal"):
            raise DomainError(f"unknown perturbation mode '{self.mode}'")
        if self.epsilon < 0:
            raise DomainError("epsilon must be nonnegative")

    @property
    def integrable(self) -> bool:
        return self.decay_exponent > 0

    def c(self, t):
        return (1.0 + np.asarray(t, dtype=float)) ** (-1.0 - self.decay_exponent)

    def c_integral(self, T: float) -> float:
        """Integral of c over [0, T]; bounded by 1/delta uniformly in T when integrable."""
        d = self.decay_exponent
        if d == 0.0:
            return math.log(1.0 + T)
        return (1.0 - (1.0 + T) ** (-d)) / d


def photon_sphere_window(params: BlackHoleParams, half_width_r: float | None = None):
    """Smooth bump in r* centered on the photon sphere, supported in r in [2.5M, 3.5M].

    Returns (window, (r*_lo, r*_hi)).
    """
    M = params.M
    if half_width_r is None:
        half_width_r = 0.5 * M
    if half_width_r > 0.5 * M:
        raise WindowSupportError("half width must keep support inside [2.5M, 3.5M]")
    rs_center = tortoise(params, 3.0 * M)
    rs_lo = tortoise(params, 3.0 * M - half_width_r)
    rs_hi = tortoise(params, 3.0 * M + half_width_r)
    half = min(rs_center - rs_lo, rs_hi - rs_center)

    def window(rstar):
        xi = (np.asarray(rstar, dtype=float) - rs_center) / half
        out = np.zeros_like(xi)
        inside = np.abs(xi) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi[inside] ** 2))
        return out

    return window, (rs_center - half, rs_center + half)


def build_time_dependent_potential(base: RadialPotential | None, pert: PerturbationSpec,
                                   scale: float = 1.0):
    """V(t, r*) = V_base(r(r*)) + epsilon c(t) window(r*) scale.

    The window must be supported inside r in [2.5M, 3.5M]; the sampled
    bound |V(t,.) - V_base| <= epsilon c(t) max(window)*scale holds by
    construction.
    """
    if base is not None:
        p = base.params
        lo_ok = pert.window_support[0] >= tortoise(p, 2.5 * p.M) - 1e-9
        hi_ok = pert.window_support[1] <= tortoise(p, 3.5 * p.M) + 1e-9
        if not (lo_ok and hi_ok):
            raise WindowSupportError(
                f"window support {pert.window_support} outside r* range of [2.5M, 3.5M]")

    def V(t, rstar):
        rstar = np.asarray(rstar, dtype=float)
        Vb, _ = potential_on_rstar_grid(base, rstar)
        return Vb + pert.epsilon * pert.c(t) * pert.window(rstar) * scale

    return V


@dataclass
class ModeField:
    """State of one mode at time t on the tortoise grid."""

    ell: int
    rstar: np.ndarray
    psi: np.ndarray
    pi: np.ndarray
    t: float


@dataclass
class CurveRecord:
    """Samples along a moving observer r*(t): the mode field and the
    derived 3D quantities u = psi/r and |grad u|."""

    label: str
    t: np.ndarray
    rstar: np.ndarray
    r: np.ndarray
    psi: np.ndarray
    dpsi_dt: np.ndarray
    dpsi_drstar: np.ndarray
    u: np.ndarray
    grad_u: np.ndarray


@dataclass
class Trajectory:
    """Observer time series plus optional full-field snapshots."""

    times: np.ndarray                  # (nt,)
    observers_rstar: np.ndarray        # (nobs,)
    observers_r: np.ndarray            # areal radii (equal to r* in flat space)
    psi: np.ndarray                    # (nt, nobs)
    dpsi_dt: np.ndarray
    dpsi_drstar: np.ndarray
    snapshot_times: Optional[np.ndarray] = None
    snapshot_psi: Optional[np.ndarray] = None     # (ns, nr)
    snapshot_pi: Optional[np.ndarray] = None
    grid_rstar: Optional[np.ndarray] = None
    grid_r: Optional[np.ndarray] = None
    curves: list = field(default_factory=list)    # CurveRecord entries
    ell: int = 0
    meta: dict = field(default_factory=dict)

    def final_state(self) -> ModeField:
        if self.snapshot_psi is None:
            raise DomainError("no snapshots recorded")
        return ModeField(ell=self.ell, rstar=self.grid_rstar,
                         psi=self.snapshot_psi[-1], pi=self.snapshot_pi[-1],
                         t=float(self.snapshot_times[-1]))

    def observer_series(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        return self.times, self.psi[:, index]

    def write_csv(self, path):
        with open(path, "w") as f:
            f.write("t,r_obs,psi,dpsi_dt,dpsi_drstar\n")
            for i, t in enumerate(self.times):
                for j in range(len(self.observers_rstar)):
                    f.write("%.17g,%.17g,%.17g,%.17g,%.17g\n"
                            % (t, self.observers_r[j], self.psi[i, j],
                               self.dpsi_dt[i, j], self.dpsi_drstar[i, j]))


# ---------------------------------------------------------------------------
# Spatial operators
# ---------------------------------------------------------------------------

def _second_derivative(psi: np.ndarray, h: float, order: int) -> np.ndarray:
    out = np.zeros_like(psi)
    h2 = h * h
    if order == 2:
        out[1:-1] = (psi[:-2] - 2.0 * psi[1:-1] + psi[2:]) / h2
    else:
        out[2:-2] = (-psi[:-4] + 16.0 * psi[1:-3] - 30.0 * psi[2:-2]
                     + 16.0 * psi[3:-1] - psi[4:]) / (12.0 * h2)
        out[1] = (psi[0] - 2.0 * psi[1] + psi[2]) / h2
        out[-2] = (psi[-3] - 2.0 * psi[-2] + psi[-1]) / h2
    return out


def first_derivative(psi: np.ndarray, h: float, order: int = 2) -> np.ndarray:
    out = np.empty_like(psi)
    if order == 4 and len(psi) >= 5:
        out[2:-2] = (psi[:-4] - 8.0 * psi[1:-3] + 8.0 * psi[3:-1] - psi[4:]) / (12.0 * h)
        out[1] = (psi[2] - psi[0]) / (2.0 * h)
        out[-2] = (psi[-1] - psi[-3]) / (2.0 * h)
    else:
        out[1:-1] = (psi[2:] - psi[:-2]) / (2.0 * h)
    out[0] = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h)
    out[-1] = (3.0 * psi[-1] - 4.0 * psi[-2] + psi[-3]) / (2.0 * h)
    return out


def energy(field: ModeField, potential_values: np.ndarray | None) -> float:
    """Discrete energy 1/2 sum h (pi^2 + (d_r* psi)^2 + V psi^2)."""
    h = float(field.rstar[1] - field.rstar[0])
    dpsi = first_derivative(field.psi, h)
    V = potential_values if potential_values is not None else 0.0
    return float(0.5 * h * np.sum(field.pi**2 + dpsi**2 + V * field.psi**2))


def _lagrange_weights(rstar: np.ndarray, x: float) -> tuple[int, np.ndarray]:
    """Cubic Lagrange interpolation weights for point x on a uniform grid."""
    h = rstar[1] - rstar[0]
    j = int(np.clip(np.floor((x - rstar[0]) / h), 1, len(rstar) - 3))
    xs = rstar[j - 1:j + 3]
    w = np.ones(4)
    for a in range(4):
        for b in range(4):
            if a != b:
                w[a] *= (x - xs[b]) / (xs[a] - xs[b])
    return j - 1, w


class _Observers:
    def __init__(self, rstar: np.ndarray, obs_rstar: Sequence[float]):
        self.idx = []
        self.w = []
        for x in obs_rstar:
            if not (rstar[0] <= x <= rstar[-1]):
                raise DomainError(f"observer r*={x} outside grid [{rstar[0]}, {rstar[-1]}]")
            i0, w = _lagrange_weights(rstar, float(x))
            self.idx.append(i0)
            self.w.append(w)

    def sample(self, arr: np.ndarray) -> np.ndarray:
        return np.array([float(np.dot(w, arr[i0:i0 + 4])) for i0, w in zip(self.idx, self.w)])


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------

def evolve(grid: GridSpec,
           potential: RadialPotential | None,
           data: InitialData,
           observers_rstar: Sequence[float],
           perturbation: PerturbationSpec | None = None,
           source: Callable[[float, np.ndarray], np.ndarray] | None = None,
           output_stride: int = 1,
           snapshot_stride: int | None = None,
           observers_r: Sequence[float] | None = None,
           curve_observers: Sequence[tuple[str, Callable[[float], float]]] = ()) -> Trajectory:
    """Evolve one mode and record observers (optionally full-field snapshots).

    ``curve_observers`` are moving observers (label, t -> r*) sampled on
    the output stride; they serve the cone-envelope diagnostics.

    Integrator: leapfrog for a static potential with 2nd-order stencils,
    RK4 method-of-lines otherwise.  Reruns of identical configurations are
    bit-identical (sequential numpy, fixed summation order).
    """
    rstar = grid.rstar()
    h, dt = grid.h, grid.dt
    n_steps = int(round(grid.t_max / dt))
    V_static, r_areal = potential_on_rstar_grid(potential, rstar)
    ell = potential.ell if potential is not None else 0

    if perturbation is not None and perturbation.mode == "principal" and perturbation.epsilon >= 0.1:
        raise DomainError("principal-type perturbation requires epsilon < 0.1 to preserve hyperbolicity")

    obs = _Observers(rstar, observers_rstar)
    obs_r = np.asarray(observers_r if observers_r is not None
                       else [r_areal[np.argmin(np.abs(rstar - x))] for x in observers_rstar])

    psi0, pi0 = data.realize(rstar)
    # unit floor keeps the guard meaningful for source-driven runs with zero data
    amp_guard = INSTABILITY_FACTOR * max(np.abs(psi0).max(), abs(data.amplitude), 1.0)

    use_rk4 = (perturbation is not None) or (grid.order == 4)

    pert_window = perturbation.window(rstar) if perturbation is not None else None
    if pert_window is not None:
        lo, hi = perturbation.window_support
        outside = (rstar < lo - 1e-9) | (rstar > hi + 1e-9)
        if np.any(np.abs(pert_window[outside]) > 1e-14):
            raise WindowSupportError("perturbation window leaks outside its declared support")

    def Vt(t):
        if perturbation is None or perturbation.mode != "potential":
            return V_static
        return V_static + perturbation.epsilon * perturbation.c(t) * pert_window

    def principal_factor(t):
        if perturbation is None or perturbation.mode != "principal":
            return None
        return 1.0 + perturbation.epsilon * perturbation.c(t) * pert_window

    rec_times, rec_psi, rec_pi, rec_dpsi = [], [], [], []
    snap_times, snap_psi, snap_pi = [], [], []
    curve_rows = [[] for _ in curve_observers]
    drdrs = np.gradient(r_areal, rstar) if curve_observers else None

    def interp_at(x, arr):
        i0, w = _lagrange_weights(rstar, x)
        return float(np.dot(w, arr[i0:i0 + 4]))

    def record(n, t, psi, pi):
        if n % output_stride == 0:
            dpsi = first_derivative(psi, h, order=grid.order)
            rec_times.append(t)
            rec_psi.append(obs.sample(psi))
            rec_pi.append(obs.sample(pi))
            rec_dpsi.append(obs.sample(dpsi))
            for rows, (_, fn) in zip(curve_rows, curve_observers):
                x = float(fn(t))
                if not (rstar[0] + 2 * h <= x <= rstar[-1] - 2 * h):
                    continue
                r_here = interp_at(x, r_areal)
                p_here = interp_at(x, psi)
                q_here = interp_at(x, pi)
                d_here = interp_at(x, dpsi)
                u = p_here / r_here
                ut = q_here / r_here
                ur = d_here / r_here - p_here * interp_at(x, drdrs) / r_here**2
                ang = ell * (ell + 1) * (u / r_here) ** 2
                rows.append((t, x, r_here, p_here, q_here, d_here, u,
                             math.sqrt(ut * ut + ur * ur + ang)))
        if snapshot_stride is not None and n % snapshot_stride == 0:
            snap_times.append(t)
            snap_psi.append(psi.copy())
            snap_pi.append(pi.copy())

    def guard(psi, n):
        if n % _CHECK_EVERY == 0 and not np.all(np.abs(psi) < amp_guard):
            raise InstabilityError(f"|psi| exceeded {INSTABILITY_FACTOR:g} x initial amplitude at step {n}")

    if not use_rk4:
        _leapfrog(grid, rstar, V_static, psi0, pi0, source, n_steps, record, guard)
    else:
        _rk4(grid, rstar, Vt, principal_factor, psi0, pi0, source, n_steps, record, guard)

    curves = []
    for rows, (label, _) in zip(curve_rows, curve_observers):
        a = np.asarray(rows) if rows else np.zeros((0, 8))
        curves.append(CurveRecord(label=label, t=a[:, 0], rstar=a[:, 1], r=a[:, 2],
                                  psi=a[:, 3], dpsi_dt=a[:, 4], dpsi_drstar=a[:, 5],
                                  u=a[:, 6], grad_u=a[:, 7]))

    traj = Trajectory(
        times=np.asarray(rec_times), observers_rstar=np.asarray(list(observers_rstar), dtype=float),
        observers_r=obs_r, psi=np.asarray(rec_psi), dpsi_dt=np.asarray(rec_pi),
        dpsi_drstar=np.asarray(rec_dpsi),
        snapshot_times=np.asarray(snap_times) if snap_times else None,
        snapshot_psi=np.asarray(snap_psi) if snap_psi else None,
        snapshot_pi=np.asarray(snap_pi) if snap_pi else None,
        grid_rstar=rstar, grid_r=r_areal, curves=curves, ell=ell,
        meta={"scheme": "rk4" if use_rk4 else "leapfrog", "h": h, "dt": dt, "order": grid.order},
    )
    return traj


def _apply_dirichlet(psi, sides):
    left, right = sides
    if left:
        psi[0] = 0.0
    if right:
        psi[-1] = 0.0


def _leapfrog(grid, rstar, V, psi0, pi0, source, n_steps, record, guard):
    h, dt = grid.h, grid.dt
    lam = dt / h
    mur = (1.0 - lam) / (1.0 + lam)
    dirichlet = (grid.left_boundary in ("reflecting", "causal"), grid.right_boundary == "causal")

    def rhs(t, psi):
        out = _second_derivative(psi, h, grid.order) - V * psi
        if source is not None:
            out += source(t, rstar)
        return out

    psi_prev = psi0.copy()
    _apply_dirichlet(psi_prev, dirichlet)
    record(0, 0.0, psi_prev, pi0)

    # second-order accurate first step
    psi_cur = psi_prev + dt * pi0 + 0.5 * dt * dt * rhs(0.0, psi_prev)
    _apply_dirichlet(psi_cur, dirichlet)

    for n in range(1, n_steps + 1):
        t = n * dt
        psi_next = 2.0 * psi_cur - psi_prev + dt * dt * rhs(t, psi_cur)
        if grid.left_boundary == "outgoing":
            psi_next[0] = psi_cur[1] + mur * (psi_cur[0] - psi_next[1])
        if grid.right_boundary in ("outgoing", "sommerfeld"):
            psi_next[-1] = psi_cur[-2] + mur * (psi_cur[-1] - psi_next[-2])
        _apply_dirichlet(psi_next, dirichlet)
        pi_cur = (psi_next - psi_prev) / (2.0 * dt)
        record(n, t, psi_cur, pi_cur)
        guard(psi_next, n)
        psi_prev, psi_cur = psi_cur, psi_next


def _rk4(grid, rstar, Vt, principal_factor, psi0, pi0, source, n_steps, record, guard):
    h, dt = grid.h, grid.dt
    left_out = grid.left_boundary == "outgoing"
    right_out = grid.right_boundary in ("outgoing", "sommerfeld")
    dirichlet = (grid.left_boundary in ("reflecting", "causal"), grid.right_boundary == "causal")

    def rhs(t, psi, pi):
        dpsi = pi.copy()
        lap = _second_derivative(psi, h, grid.order)
        fac = principal_factor(t)
        if fac is not None:
            lap = fac * lap
        dpi = lap - Vt(t) * psi
        if source is not None:
            dpi += source(t, rstar)
        # characteristic closure: advect the state out of the domain
        if left_out:
            dpsi[0] = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h)
            dpi[0] = (-3.0 * pi[0] + 4.0 * pi[1] - pi[2]) / (2.0 * h)
        if right_out:
            dpsi[-1] = -(3.0 * psi[-1] - 4.0 * psi[-2] + psi[-3]) / (2.0 * h)
            dpi[-1] = -(3.0 * pi[-1] - 4.0 * pi[-2] + pi[-3]) / (2.0 * h)
        if dirichlet[0]:
            dpsi[0] = 0.0
            dpi[0] = 0.0
        if dirichlet[1]:
            dpsi[-1] = 0.0
            dpi[-1] = 0.0
        return dpsi, dpi

    psi, pi = psi0.copy(), pi0.copy()
    _apply_dirichlet(psi, dirichlet)
    record(0, 0.0, psi, pi)
    for n in range(1, n_steps + 1):
        t = (n - 1) * dt
        k1p, k1q = rhs(t, psi, pi)
        k2p, k2q = rhs(t + 0.5 * dt, psi + 0.5 * dt * k1p, pi + 0.5 * dt * k1q)
        k3p, k3q = rhs(t + 0.5 * dt, psi + 0.5 * dt * k2p, pi + 0.5 * dt * k2q)
        k4p, k4q = rhs(t + dt, psi + dt * k3p, pi + dt * k3q)
        psi = psi + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        pi = pi + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        _apply_dirichlet(psi, dirichlet)
        record(n, n * dt, psi, pi)
        guard(psi, n)
