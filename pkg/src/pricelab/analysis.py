"""Local-energy norms, vector fields, dyadic/cone regions, symbol classes.

Weighted spacetime L2 norms with dyadic radial structure:

    LE  : sup over R of || <r>^(-1/2) u ||_L2([t0,t1) x A_R)
    LE* : sum over R of || <r>^(+1/2) f ||_L2([t0,t1) x A_R)
    LE1 : || grad u ||_LE + || <r>^-1 u ||_LE

with A_R = { <r> in [R, 2R) } the dyadic annuli, <r> = sqrt(4 + r^2)
(smooth, >= 2, equal to r asymptotically: one canonical representative).
At mode level the spatial measure is r^2 dr (the 3D radial measure) and
the gradient is (d_t, d_r*, sqrt(l(l+1))/r), so values are comparable to
the 3+1 quantities for spherically decomposed fields.  Time intervals are
half-open [t0, t1), which makes per-block squared norms exactly additive
across adjacent intervals.

Vector fields: T = d_t, S = t d_t + r d_r (generators of time translation
and scaling); the rotation Laplacian acts on a fixed mode by its
eigenvalue, Omega^2 -> -l(l+1).

The forward cone slab C_T = { T <= t <= 2T, r <= t } carries two dyadic
families: C_T^R = C_T & { R < r < 2R } for scales 1 <= R <= T/4 and
C_T^U = C_T & { U < t-r < 2U } for 1 <= U < T/4 (with the {.. < 2}
convention at scale 1).  The largest block of the second family (or of the
first, if the second is empty) is closed upward so the two families
jointly cover C_T exactly; each family is internally disjoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

# ---------------------------------------------------------------------------
# Weights and regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightScheme:
    """Smooth japanese-bracket weight; default <r> = sqrt(4 + r^2)."""

    r_bracket: Callable[[np.ndarray], np.ndarray] = None  # type: ignore

    def __post_init__(self):
        if self.r_bracket is None:
            object.__setattr__(self, "r_bracket", lambda r: np.sqrt(4.0 + np.asarray(r, dtype=float) ** 2))

    def __call__(self, r):
        return self.r_bracket(r)


DEFAULT_WEIGHT = WeightScheme()


def bracket(x):
    """<x> = sqrt(4 + x^2) (applied to r, t, or t - r)."""
    return np.sqrt(4.0 + np.asarray(x, dtype=float) ** 2)


def dyadic_scale(r, weight: WeightScheme = DEFAULT_WEIGHT):
    """Dyadic scale R = 2^floor(log2 <r>), so that <r> in [R, 2R)."""
    w = np.asarray(weight(r), dtype=float)
    return 2.0 ** np.floor(np.log2(w))


@dataclass(frozen=True)
class DyadicRegion:
    """Annulus A_R = { <r> in [R, 2R) } for R > 1, { <r> < 2 } for R = 1."""

    R: float

    def contains(self, r, weight: WeightScheme = DEFAULT_WEIGHT):
        w = np.asarray(weight(r), dtype=float)
        if self.R <= 1.0:
            return w < 2.0
        return (w >= self.R) & (w < 2.0 * self.R)


@dataclass(frozen=True)
class ConeRegion:
    """One dyadic block of the cone slab C_T.

    kind "R": scale in r; kind "U": scale in t - r.  ``hi`` may be +inf for
    the closure block.  Bounds on the scale variable are half-open [lo, hi)
    except at scale 1 where they are [0, 2).
    """

    T: float
    kind: str        # "R" | "U"
    scale: float
    lo: float
    hi: float
    extended: bool = False

    def contains(self, t, r):
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        in_slab = (t >= self.T) & (t <= 2.0 * self.T) & (r <= t)
        x = r if self.kind == "R" else t - r
        return in_slab & (x >= self.lo) & (x < self.hi)

    def enlarged(self) -> "ConeRegion":
        """Canonical factor-2 dilation in each scale (the tilde region)."""
        lo = self.lo / 2.0
        hi = self.hi * 2.0 if np.isfinite(self.hi) else self.hi
        return ConeRegion(T=self.T, kind=self.kind, scale=self.scale, lo=lo, hi=hi,
                          extended=self.extended)

    def contains_enlarged(self, t, r):
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        in_slab = (t >= self.T / 2.0) & (t <= 4.0 * self.T) & (r <= t)
        e = self.enlarged()
        x = r if self.kind == "R" else t - r
        return in_slab & (x >= e.lo) & (x < e.hi)


def cone_partition(T: float) -> list[ConeRegion]:
    """Dyadic decomposition of C_T: R-blocks for 1 <= R <= T/4, U-blocks for 1 <= U < T/4.

    The largest U block (or R block when no U block exists) is closed
    upward so the two families jointly cover C_T; blocks within one family
    are pairwise disjoint.
    """
    if T < 1:
        raise DomainError("cone slab requires T >= 1")
    r_scales, u_scales = [], []
    s = 1.0
    while s <= T / 4.0:
        r_scales.append(s)
        s *= 2.0
    s = 1.0
    while s < T / 4.0:
        u_scales.append(s)
        s *= 2.0

    regions = []
    for R in r_scales:
        lo = 0.0 if R <= 1.0 else R
        regions.append(ConeRegion(T=T, kind="R", scale=R, lo=lo, hi=2.0 * R))
    for i, U in enumerate(u_scales):
        lo = 0.0 if U <= 1.0 else U
        hi = 2.0 * U
        last = i == len(u_scales) - 1
        regions.append(ConeRegion(T=T, kind="U", scale=U, lo=lo,
                                  hi=np.inf if last else hi, extended=last))
    if not u_scales and regions:
        last = regions[-1]
        regions[-1] = ConeRegion(T=T, kind="R", scale=last.scale, lo=last.lo,
                                 hi=np.inf, extended=True)
    return regions


# ---------------------------------------------------------------------------
# Grid fields
# ---------------------------------------------------------------------------

@dataclass
class GridField:
    """Mode data on a tensor (t, r) grid; r may be nonuniform.

    ``values[i, j]`` is the field at (t[i], r[j]).  ``ell`` drives the
    eigenvalue action of the rotation fields.  ``boundary_layers`` counts
    grid layers whose stencil derivatives are one-sided (set by
    apply_vector_field).
    """

    t: np.ndarray
    r: np.ndarray
    values: np.ndarray
    ell: int = 0
    boundary_layers: int = 0

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.t), len(self.r)):
            raise DomainError(f"values shape {self.values.shape} != (len(t), len(r)) = ({len(self.t)}, {len(self.r)})")

    @classmethod
    def from_function(cls, f, t, r, ell: int = 0) -> "GridField":
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        TT, RR = np.meshgrid(t, r, indexing="ij")
        return cls(t=t, r=r, values=np.asarray(f(TT, RR), dtype=float), ell=ell)

    def like(self, values, extra_layers: int = 0) -> "GridField":
        return GridField(t=self.t, r=self.r, values=values, ell=self.ell,
                         boundary_layers=self.boundary_layers + extra_layers)

    def cell_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Point weights (dt_i, dr_j * r_j^2) of the discrete measure r^2 dr dt."""
        return _cell_sizes(self.t), _cell_sizes(self.r) * self.r**2


def _cell_sizes(x: np.ndarray) -> np.ndarray:
    if len(x) == 1:
        return np.array([1.0])
    mid = 0.5 * (x[1:] + x[:-1])
    edges = np.concatenate(([x[0] - 0.5 * (x[1] - x[0])], mid, [x[-1] + 0.5 * (x[-1] - x[-2])]))
    return np.diff(edges)


def _ddt(values: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.gradient(values, t, axis=0, edge_order=2)


def _ddr(values: np.ndarray, r: np.ndarray) -> np.ndarray:
    return np.gradient(values, r, axis=1, edge_order=2)


def apply_vector_field(f: GridField, which: str) -> GridField:
    """Apply T = d_t, S = t d_t + r d_r, or Omega2 (eigenvalue -l(l+1)).

    Derivatives are centered stencils (one-sided at edges, recorded in
    ``boundary_layers``).
    """
    if which == "T":
        return f.like(_ddt(f.values, f.t), extra_layers=1)
    if which == "S":
        TT, RR = np.meshgrid(f.t, f.r, indexing="ij")
        return f.like(TT * _ddt(f.values, f.t) + RR * _ddr(f.values, f.r), extra_layers=1)
    if which == "Omega2":
        return f.like(-f.ell * (f.ell + 1) * f.values)
    raise DomainError(f"unknown vector field '{which}' (expected T, S, or Omega2)")


def gradient_magnitude(f: GridField, use_bracket_floor: bool = False) -> GridField:
    """|grad u| = sqrt(u_t^2 + u_r^2 + l(l+1) u^2 / r^2) at mode level."""
    ut = _ddt(f.values, f.t)
    ur = _ddr(f.values, f.r)
    ang = f.ell * (f.ell + 1) * (f.values / np.maximum(f.r, 1e-300)) ** 2
    return f.like(np.sqrt(ut**2 + ur**2 + ang), extra_layers=1)


# ---------------------------------------------------------------------------
# Local energy norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormSpec:
    """Which norm to evaluate and over which (half-open) time interval."""

    variant: str                     # LE | LE_star | LE1 | LE1_weak
    time_interval: tuple[float, float] | None = None
    weak_cutoff: Optional[Callable[[np.ndarray], np.ndarray]] = None
    weight: WeightScheme = DEFAULT_WEIGHT

    def __post_init__(self):
        if self.variant not in ("LE", "LE_star", "LE1", "LE1_weak"):
            raise DomainError(f"unknown norm variant '{self.variant}'")


@dataclass
class NormResult:
    variant: str
    interval: tuple[float, float]
    value: float
    per_block: dict  # dyadic scale R -> block L2 norm (weighted)

    def to_json_dict(self) -> dict:
        return {"variant": self.variant, "interval": list(self.interval),
                "value": self.value,
                "per_block_values": {str(k): v for k, v in sorted(self.per_block.items())}}


def _block_l2(f: GridField, weight_power: float, interval, weight: WeightScheme):
    """Per-dyadic-block weighted L2 norms under the discrete measure r^2 dr dt."""
    t0, t1 = interval
    tmask = (f.t >= t0) & (f.t < t1)
    if not tmask.any():
        raise DomainError(f"empty time interval [{t0}, {t1}) on the grid")
    wt, wr = f.cell_weights()
    w = weight(f.r)
    scales = np.unique(dyadic_scale(f.r, weight))
    vals2 = f.values[tmask] ** 2
    out = {}
    for R in scales:
        rmask = (w >= R) & (w < 2.0 * R)
        if not rmask.any():
            continue
        block = np.sum(vals2[:, rmask] * (w[rmask] ** weight_power * wr[rmask])[None, :]
                       * wt[tmask][:, None])
        out[float(R)] = math.sqrt(float(block))
    return out


def le_norm(f: GridField, spec: NormSpec) -> NormResult:
    """Evaluate LE / LE* / LE1 / LE1_weak of a grid field.

    LE takes the sup over dyadic blocks of <r>^(-1/2)-weighted L2; LE* the
    sum with weight <r>^(+1/2).  LE1 adds the gradient and <r>^-1 u pieces;
    the weak variant multiplies the gradient by (1 - chi) with chi the
    trapped-set cutoff.
    """
    interval = spec.time_interval if spec.time_interval is not None else (float(f.t[0]), float(f.t[-1]) + 1e-300)
    if spec.variant == "LE":
        blocks = _block_l2(f, -1.0, interval, spec.weight)
        value = max(blocks.values()) if blocks else 0.0
        return NormResult("LE", interval, value, blocks)
    if spec.variant == "LE_star":
        blocks = _block_l2(f, +1.0, interval, spec.weight)
        return NormResult("LE_star", interval, float(sum(blocks.values())), blocks)
    if spec.variant in ("LE1", "LE1_weak"):
        grad = gradient_magnitude(f)
        if spec.variant == "LE1_weak":
            if spec.weak_cutoff is None:
                raise DomainError("LE1_weak requires a weak_cutoff")
            chi = np.asarray(spec.weak_cutoff(f.r), dtype=float)
            grad = grad.like(grad.values * (1.0 - chi)[None, :])
        le_grad = le_norm(grad, NormSpec("LE", interval, weight=spec.weight))
        scaled = f.like(f.values / spec.weight(f.r)[None, :])
        le_u = le_norm(scaled, NormSpec("LE", interval, weight=spec.weight))
        blocks = {R: le_grad.per_block.get(R, 0.0) + le_u.per_block.get(R, 0.0)
                  for R in set(le_grad.per_block) | set(le_u.per_block)}
        return NormResult(spec.variant, interval, le_grad.value + le_u.value, blocks)
    raise DomainError(spec.variant)


def duality_pairing(u: GridField, f: GridField) -> float:
    """|integral of u f r^2 dr dt| under the same discrete measure as le_norm."""
    wt, wr = u.cell_weights()
    return abs(float(np.sum(u.values * f.values * wr[None, :] * wt[:, None])))


# ---------------------------------------------------------------------------
# Commutator residuals
# ---------------------------------------------------------------------------

def _fd1(F, axis_vals, axis, order):
    h = axis_vals[1] - axis_vals[0]
    out = np.zeros_like(F)
    sl = [slice(None)] * F.ndim

    def ax(s):
        q = list(sl)
        q[axis] = s
        return tuple(q)

    if order == 4:
        out[ax(slice(2, -2))] = (F[ax(slice(0, -4))] - 8 * F[ax(slice(1, -3))]
                                 + 8 * F[ax(slice(3, -1))] - F[ax(slice(4, None))]) / (12 * h)
    else:
        out[ax(slice(1, -1))] = (F[ax(slice(2, None))] - F[ax(slice(0, -2))]) / (2 * h)
    return out


def _fd2(F, axis_vals, axis, order):
    h = axis_vals[1] - axis_vals[0]
    out = np.zeros_like(F)
    sl = [slice(None)] * F.ndim

    def ax(s):
        q = list(sl)
        q[axis] = s
        return tuple(q)

    if order == 4:
        out[ax(slice(2, -2))] = (-F[ax(slice(0, -4))] + 16 * F[ax(slice(1, -3))]
                                 - 30 * F[ax(slice(2, -2))] + 16 * F[ax(slice(3, -1))]
                                 - F[ax(slice(4, None))]) / (12 * h * h)
    else:
        out[ax(slice(1, -1))] = (F[ax(slice(0, -2))] - 2 * F[ax(slice(1, -1))]
                                 + F[ax(slice(2, None))]) / (h * h)
    return out


def commutator_residual(u_fn, t: np.ndarray, r: np.ndarray,
                        potential: Callable[[np.ndarray], np.ndarray] | None = None,
                        ell: int = 0, order: int = 2):
    """Residual field of P(Su) - (S+2)(Pu) on the interior of the grid.

    P = d_t^2 - d_r^2 + V + l(l+1)/r^2 (flat box for V = None, ell = 0);
    for the flat operator the residual vanishes identically, so the
    numerical residual converges to zero at the stencil order.  Returns
    (residual, interior trimmed t, interior trimmed r).
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    TT, RR = np.meshgrid(t, r, indexing="ij")
    U = np.asarray(u_fn(TT, RR), dtype=float)
    V = np.zeros_like(RR)
    if potential is not None:
        V = V + potential(RR)
    if ell:
        V = V + ell * (ell + 1) / RR**2

    def P(F):
        return _fd2(F, t, 0, order) - _fd2(F, r, 1, order) + V * F

    def S(F):
        return TT * _fd1(F, t, 0, order) + RR * _fd1(F, r, 1, order)

    res = P(S(U)) - (S(P(U)) + 2.0 * P(U))
    # two stencil applications: trim twice the stencil halfwidth
    m = 2 * (2 if order == 4 else 1)
    return res[m:-m, m:-m], t[m:-m], r[m:-m]


def commutator_residual_flat(u_fn, t: np.ndarray, r: np.ndarray, order: int = 2):
    """Flat-space residual of Box(Su) - (S+2)(Box u); exact identity, so the
    returned field measures pure discretization error."""
    return commutator_residual(u_fn, t, r, potential=None, ell=0, order=order)


# ---------------------------------------------------------------------------
# Symbol classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolClassSpec:
    """Test |Z^j a| <= c_j <r>^k for words Z in {T, S} up to length ``depth``."""

    k: int
    depth: int = 2
    constants: tuple = ()   # optional per-j admissible bounds c_j

    def bound(self, j: int) -> float | None:
        if j < len(self.constants):
            return float(self.constants[j])
        return None


@dataclass
class SymbolClassReport:
    k: int
    sup_scaled: dict            # j -> sup |Z^j a| <r>^(-k) over the grid (max over words)
    passed: bool
    time_integral: float | None = None   # integral over the grid of sup_r |a(t,.)|
    time_decay_exponent: float | None = None

    def to_json_dict(self):
        return {"k": self.k, "sup_scaled": {str(j): v for j, v in self.sup_scaled.items()},
                "passed": self.passed, "time_integral": self.time_integral,
                "time_decay_exponent": self.time_decay_exponent}


def symbol_class_check(a_fn, spec: SymbolClassSpec, t: np.ndarray, r: np.ndarray,
                       weight: WeightScheme = DEFAULT_WEIGHT) -> SymbolClassReport:
    """Membership check for S^Z(r^k) on a sample grid (report, never raises).

    All words in {T, S} of length <= depth are applied by finite
    differences (Omega annihilates functions of (t, r) at mode level and
    is omitted).  For genuinely time-dependent symbols the report also
    carries the grid integral of c(t) = sup_r |a| and its fitted decay
    exponent, the quantities entering the integrability hypothesis of the
    perturbation theorem.
    """
    f = GridField.from_function(lambda T, R: a_fn(T, R), t, r)
    w = weight(f.r)

    def interior_sup(g: GridField, layers: int) -> float:
        m = max(layers, 1)
        vals = np.abs(g.values[m:-m, m:-m]) * (w[m:-m] ** (-spec.k))[None, :]
        return float(vals.max()) if vals.size else float("nan")

    sup_scaled = {0: interior_sup(f, 1)}
    frontier = [f]
    for j in range(1, spec.depth + 1):
        nxt = []
        best = 0.0
        for g in frontier:
            for which in ("T", "S"):
                ng = apply_vector_field(g, which)
                nxt.append(ng)
                best = max(best, interior_sup(ng, ng.boundary_layers + 1))
        sup_scaled[j] = best
        frontier = nxt

    passed = all(np.isfinite(v) for v in sup_scaled.values())
    for j, v in sup_scaled.items():
        b = spec.bound(j)
        if b is not None and v > b:
            passed = False

    c_of_t = np.abs(f.values).max(axis=1)
    wt = _cell_sizes(f.t)
    time_integral = float(np.sum(c_of_t * wt))
    decay = None
    pos = c_of_t > 0
    if pos.sum() > 4 and f.t[0] > 0 and c_of_t.max() > 0:
        varies = c_of_t[pos].max() / max(c_of_t[pos].min(), 1e-300) > 1.001
        if varies:
            decay = float(np.polyfit(np.log(f.t[pos]), np.log(c_of_t[pos]), 1)[0])
    return SymbolClassReport(k=spec.k, sup_scaled=sup_scaled, passed=passed,
                             time_integral=time_integral, time_decay_exponent=decay)


# ---------------------------------------------------------------------------
# Sobolev embedding check on cone blocks
# ---------------------------------------------------------------------------

@dataclass
class SobolevResult:
    region: ConeRegion
    lhs: float        # sup |w| on the block
    rhs: float        # weighted combination of L2 norms on the enlarged block
    ratio: float
    coverage: float   # fraction of the enlarged block seen by the grid


def sobolev_check(w: GridField, region: ConeRegion) -> SobolevResult:
    """Sup-norm vs the scale-weighted L2 combination on a cone block.

    For an R block the right side is
        T^(-1/2) R^(-3/2) sum_{i+j<=2} ||S^i Om^j w||_L2(tilde)
      + T^(-1/2) R^(-1/2) sum_{i+j<=2} ||S^i Om^j grad w||_L2(tilde)
    and for a U block
        T^(-3/2) U^(-1/2) sum ||S^i Om^j w|| + U^(1/2) T^(-3/2) sum ||S^i Om^j grad w||,
    with L2 over the factor-2 enlargement under the measure r^2 dr dt.
    Both sides are 1-homogeneous in w, so the ratio is amplitude invariant.
    """
    TT, RR = np.meshgrid(w.t, w.r, indexing="ij")
    inside = region.contains(TT, RR)
    lhs = float(np.abs(w.values[inside]).max()) if inside.any() else 0.0

    big = region.contains_enlarged(TT, RR)
    wt, wr = w.cell_weights()
    meas = wr[None, :] * wt[:, None]

    def l2_on_big(values):
        return math.sqrt(float(np.sum(values[big] ** 2 * meas[big]))) if big.any() else 0.0

    lam = math.sqrt(w.ell * (w.ell + 1))

    def family(g: GridField):
        """S^i Omega^j g for i + j <= 2 (Omega scales by sqrt(l(l+1)))."""
        S1 = apply_vector_field(g, "S")
        S2 = apply_vector_field(S1, "S")
        out = [g.values, S1.values, S2.values]
        if lam > 0:
            out += [lam * g.values, lam * S1.values, lam * lam * g.values]
        return out

    sum_w = sum(l2_on_big(v) for v in family(w))
    sum_grad = sum(l2_on_big(v) for v in family(gradient_magnitude(w)))

    T, sc = region.T, region.scale
    if region.kind == "R":
        rhs = sum_w / (math.sqrt(T) * sc**1.5) + sum_grad / (math.sqrt(T) * math.sqrt(sc))
    else:
        rhs = sum_w / (T**1.5 * math.sqrt(sc)) + sum_grad * math.sqrt(sc) / T**1.5

    if lhs == 0.0 and rhs == 0.0:
        ratio = 0.0  # vacuous pass
    elif rhs == 0.0:
        ratio = float("inf")
    else:
        ratio = lhs / rhs
    coverage = float(big.mean()) if big.size else 0.0
    return SobolevResult(region=region, lhs=lhs, rhs=rhs, ratio=ratio, coverage=coverage)
