"""Decay-exponent extraction from observer time series.

The workhorse diagnostic is the local power index

    p(t) = t u'(t) / u(t) = d log|u| / d log t,

whose plateau identifies the tail exponent (p = -3 for the lowest mode of
Schwarzschild).  Exponents are reported as the signed index series plus a
positive decay rate p_final once the series has settled.

The two-exponent envelope fit tests the cone-adapted form

    |u| ~ C <t>^(-p_t) <t-r>^(-p_u)

by linear least squares on per-slab suprema over the dyadic cone
decomposition (sup-norm statements are per-region, so fitting suprema
rather than raw points is the faithful discretization).  Gradient data is
fit against C <r>^-1 <t-r>^(-p_u).

Tail fits start after the quasinormal ringing epoch; the default window
opens at the last sign change of the series plus a configurable margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analysis import bracket
from .errors import DomainError, InsufficientSamplesError, RankDeficiencyError, SignChangeError


@dataclass
class PowerIndexSeries:
    t: np.ndarray
    p: np.ndarray
    method: str

    def restrict(self, t0: float, t1: float) -> "PowerIndexSeries":
        m = (self.t >= t0) & (self.t <= t1)
        return PowerIndexSeries(t=self.t[m], p=self.p[m], method=self.method)


@dataclass
class EnvelopeFit:
    p_t: float
    p_u: float
    C: float
    max_residual: float    # max |log|u| - model| over fitted suprema
    n_points: int


@dataclass
class DecayFit:
    """Local power index series with plateau estimate and optional envelope."""

    p_series: PowerIndexSeries
    window: tuple[float, float]
    p_final: Optional[float]
    uncertainty: Optional[float]
    envelope: Optional[EnvelopeFit] = None
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        env = None
        if self.envelope is not None:
            env = {"p_t": self.envelope.p_t, "p_u": self.envelope.p_u,
                   "C": self.envelope.C, "residual": self.envelope.max_residual}
        return {"method": self.p_series.method, "window": list(self.window),
                "p_final": self.p_final, "uncertainty": self.uncertainty,
                "envelope": env, **self.meta}


def _check_window(t, u, window):
    t0, t1 = window
    m = (t >= t0) & (t <= t1)
    if m.sum() < 5:
        raise InsufficientSamplesError(f"only {int(m.sum())} samples in window [{t0}, {t1}]")
    uu = u[m]
    if np.any(uu == 0) or (np.sign(uu).max() != np.sign(uu).min()):
        raise SignChangeError(f"series changes sign inside fit window [{t0}, {t1}]")
    return t[m], uu


def local_power_index(t: np.ndarray, u: np.ndarray, method: str = "log-derivative",
                      window: tuple[float, float] | None = None,
                      slope_window_decades: float = 0.15) -> PowerIndexSeries:
    """Local power index of a single-observer series.

    log-derivative: centered differences of log|u| against log t.
    slope: least-squares slope of log|u| vs log t over a sliding window of
    the given width in decades.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise InsufficientSamplesError("t values must be strictly increasing")
    if window is None:
        positive = t[t > 0]
        if len(positive) == 0:
            raise InsufficientSamplesError("no positive times in the series")
        window = (float(positive[0]), float(t[-1]))
    tt, uu = _check_window(t, u, window)

    lt = np.log(tt)
    lu = np.log(np.abs(uu))
    if method == "log-derivative":
        p = np.gradient(lu, lt, edge_order=2)
        return PowerIndexSeries(t=tt, p=p, method=method)
    if method == "slope":
        half = 0.5 * slope_window_decades * math.log(10.0)
        p = np.empty_like(lt)
        for i, x in enumerate(lt):
            m = (lt >= x - half) & (lt <= x + half)
            if m.sum() < 3:
                m = slice(max(0, i - 2), min(len(lt), i + 3))
            p[i] = np.polyfit(lt[m], lu[m], 1)[0]
        return PowerIndexSeries(t=tt, p=p, method=method)
    raise DomainError(f"unknown method '{method}' (log-derivative or slope)")


def plateau(series: PowerIndexSeries, window: tuple[float, float],
            tol: float = 0.25) -> tuple[Optional[float], Optional[float]]:
    """(p_final, uncertainty) over the window, or (None, None) if not settled.

    p_final is reported only when the index varies by less than ``tol``
    across the window; the uncertainty is the half-range there.
    """
    s = series.restrict(*window)
    if len(s.p) < 5:
        return None, None
    spread = float(s.p.max() - s.p.min())
    if spread >= tol:
        return None, None
    return float(np.median(s.p)), 0.5 * spread


def default_fit_window(t: np.ndarray, u: np.ndarray, margin: float = 50.0) -> tuple[float, float]:
    """Open the window after the last sign change of u plus a margin (ringdown guard)."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    s = np.sign(u)
    s[s == 0] = 1.0
    changes = np.nonzero(np.diff(s) != 0)[0]
    t0 = float(t[changes[-1] + 1] + margin) if len(changes) else float(t[0] + margin)
    return (t0, float(t[-1]))


def fit_tail(t: np.ndarray, u: np.ndarray, window: tuple[float, float] | None = None,
             method: str = "log-derivative", plateau_tol: float = 0.25,
             margin: float = 50.0) -> DecayFit:
    """Convenience pipeline: window selection, index series, plateau estimate."""
    if window is None:
        window = default_fit_window(t, u, margin=margin)
    series = local_power_index(t, u, method=method, window=window)
    p_final, unc = plateau(series, window, tol=plateau_tol)
    return DecayFit(p_series=series, window=window, p_final=p_final, uncertainty=unc)


# ---------------------------------------------------------------------------
# Two-exponent envelope fit
# ---------------------------------------------------------------------------

@dataclass
class CurveSeries:
    """Samples of |u| (or |grad u|) along a spacetime curve (t, r(t))."""

    t: np.ndarray
    r: np.ndarray
    u: np.ndarray
    label: str = ""


def _slab_suprema(curves: Sequence[CurveSeries], require_cone: bool):
    """Per (curve x dyadic slab) suprema with representative (t, t-r)."""
    rows = []
    for c in curves:
        t = np.asarray(c.t, dtype=float)
        r = np.asarray(c.r, dtype=float)
        u = np.abs(np.asarray(c.u, dtype=float))
        keep = u > 0
        if require_cone:
            keep &= r >= 0.5 * t - 1e-9  # cone-variable separation region
        t, r, u = t[keep], r[keep], u[keep]
        if len(t) == 0:
            continue
        T = 2.0 ** np.floor(np.log2(np.maximum(t, 1e-300)))
        for Tv in np.unique(T):
            m = T == Tv
            i = int(np.argmax(u[m]))
            rows.append((t[m][i], t[m][i] - r[m][i], u[m][i]))
    return rows


def envelope_fit(curves: Sequence[CurveSeries], kind: str = "field",
                 require_cone: bool = True) -> EnvelopeFit:
    """Fit |u| ~ C <t>^(-p_t) <t-r>^(-p_u) (or C <r>^-1 <t-r>^(-p_u) for gradients).

    Uses per-slab suprema over dyadic time slabs along each curve.  Needs
    at least three curves spanning distinct <t-r> ranges; raises
    RankDeficiencyError when the observers do not separate the two
    variables.
    """
    if kind not in ("field", "gradient"):
        raise DomainError(f"unknown kind '{kind}' (field or gradient)")
    if len(curves) < (3 if kind == "field" else 2):
        raise InsufficientSamplesError("need >= 3 observers spanning distinct <t-r> ranges")
    rows = _slab_suprema(curves, require_cone)
    if len(rows) < 4:
        raise InsufficientSamplesError(f"only {len(rows)} slab suprema available")

    ts = np.array([x[0] for x in rows])
    tr = np.array([x[1] for x in rows])
    us = np.array([x[2] for x in rows])

    if kind == "field":
        A = np.column_stack([np.ones_like(ts), -np.log(bracket(ts)), -np.log(bracket(tr))])
        b = np.log(us)
    else:
        # gradient model: log|du| + log<r> = log C - p_u log<t-r>
        rr = ts - tr
        A = np.column_stack([np.ones_like(ts), -np.log(bracket(tr))])
        b = np.log(us) + np.log(bracket(rr))

    sol, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    if rank < A.shape[1] or sv[0] / max(sv[-1], 1e-300) > 1e8:
        raise RankDeficiencyError("observer curves do not separate <t> and <t-r>")
    resid = float(np.abs(A @ sol - b).max())
    if kind == "field":
        return EnvelopeFit(p_t=float(sol[1]), p_u=float(sol[2]), C=float(np.exp(sol[0])),
                           max_residual=resid, n_points=len(rows))
    return EnvelopeFit(p_t=0.0, p_u=float(sol[1]), C=float(np.exp(sol[0])),
                       max_residual=resid, n_points=len(rows))
