"""One-dimensional phase-plane objects: traveling wave, pulse, manifolds, bumps.

Everything here integrates v'' + f(v) = 0 (or the wave equation with drift)
with a classical fixed-step 4th-order scheme; the first integral
E = (v')^2 / 2 + F(v) is the accuracy monitor.  Profiles are tabulated and
clamped to their exact limits beyond the table, which is justified by the
exponential tails.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .bistable import Bistable
from .errors import NoConvergence, OutOfRange, RadiusTooSmall

_V_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class WaveProfile:
    """Tabulated traveling front phi(z) with speed c, normalized by phi(0) = a."""

    c: float
    z: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray

    def value(self, z):
        return np.interp(z, self.z, self.phi, left=1.0, right=0.0)

    def slope(self, z):
        return np.interp(z, self.z, self.dphi, left=0.0, right=0.0)

    __call__ = value


@dataclass(frozen=True, eq=False)
class Orbit1D:
    """A tabulated orbit of v'' + f(v) = 0 with its first-integral level."""

    kind: str
    x: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    level: float
    F: object = None

    def value(self, x):
        if self.kind == "stable-manifold":
            return np.interp(x, self.x, self.v, right=1.0)
        return np.interp(x, self.x, self.v, left=0.0, right=0.0)

    def slope(self, x):
        return np.interp(x, self.x, self.dv, left=0.0, right=0.0)

    __call__ = value

    def energy_drift(self) -> float:
        """Worst deviation of (v')^2/2 + F(v) from the declared level (table nodes)."""
        return float(np.max(np.abs(0.5 * self.dv**2 + self.F(self.v) - self.level)))


def traveling_wave(b: Bistable, zmax: float = 60.0, h: float = 1e-3,
                   *, c_bracket=(0.0, 2.0), bisect_tol: float = 1e-9) -> WaveProfile:
    """Front profile and speed for phi'' + c phi' + f(phi) = 0, phi(-inf)=1, phi(inf)=0.

    The speed is found by bisection on the overshoot sign of the orbit leaving
    the saddle (1, 0); the profile is then integrated from phi(0) = a in both
    directions.
    """
    lo, hi = c_bracket
    out_lo = _wave_outcome(b, lo)
    out_hi = _wave_outcome(b, hi)
    if out_lo != "overshoot" or out_hi != "undershoot":
        raise NoConvergence(
            f"wave bracket invalid: c={lo} gives {out_lo}, c={hi} gives {out_hi}")
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if _wave_outcome(b, mid) == "overshoot":
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    p_a = _wave_slope_at_a(b, c)

    f = b.f
    z_fwd, v_fwd, p_fwd = _march_wave(f, c, b.a, p_a, h, zmax, forward=True)
    z_bwd, v_bwd, p_bwd = _march_wave(f, c, b.a, p_a, h, zmax, forward=False)
    z = np.concatenate([-np.asarray(z_bwd[::-1]), np.asarray(z_fwd[1:])])
    phi = np.concatenate([np.asarray(v_bwd[::-1]), np.asarray(v_fwd[1:])])
    dphi = np.concatenate([np.asarray(p_bwd[::-1]), np.asarray(p_fwd[1:])])
    return WaveProfile(c=c, z=z, phi=phi, dphi=dphi)


def pulse(b: Bistable, xmax: float = 40.0, h: float = 1e-3) -> Orbit1D:
    """Symmetric homoclinic profile V with V(0) = beta, V(+-inf) = 0."""
    xs, vs, ps = _march_stationary(b.f, b.beta, 0.0, h, xmax,
                                   stop=lambda v, p: v < _V_FLOOR or p > 1e-12)
    x = np.concatenate([-np.asarray(xs[::-1]), np.asarray(xs[1:])])
    v = np.concatenate([np.asarray(vs[::-1]), np.asarray(vs[1:])])
    dv = np.concatenate([-np.asarray(ps[::-1]), np.asarray(ps[1:])])
    return Orbit1D(kind="pulse", x=x, v=v, dv=dv, level=float(b.F(b.beta)), F=b.F)


def stable_manifold(b: Bistable, start_value: float, xmax: float = 40.0,
                    h: float = 1e-3) -> Orbit1D:
    """Monotone connection from start_value up to 1 along the level F(1)."""
    if not 0.0 <= start_value < 1.0:
        raise OutOfRange(f"start_value must lie in [0, 1), got {start_value}")
    F1 = float(b.F(1.0))
    p0 = math.sqrt(2.0 * (F1 - float(b.F(start_value))))
    xs, vs, ps = _march_stationary(b.f, start_value, p0, h, xmax,
                                   stop=lambda v, p: v > 1.0 - _V_FLOOR or p < 0.0)
    return Orbit1D(kind="stable-manifold", x=np.asarray(xs), v=np.asarray(vs),
                   dv=np.asarray(ps), level=F1, F=b.F)


def interval_bump(b: Bistable, R: float, b_offset: float = 0.0,
                  h: float = 1e-3) -> Orbit1D:
    """Positive symmetric profile with zeros at b_offset +- R and peak above beta.

    Exists only for R >= R_min(b); below that RadiusTooSmall reports the
    minimal half-width found by scanning the shooting parameter.
    """
    r_min, eta_star = _bump_r_min(b)
    if R < r_min:
        raise RadiusTooSmall(R, r_min)
    lo, hi = eta_star, 1.0 - 1e-9
    # first zero distance is increasing in the peak height on [eta_star, 1)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        r = _first_zero(b, mid, zcap=max(4.0 * R, 80.0))
        if r is None or r > R:
            hi = mid
        else:
            lo = mid
    eta = 0.5 * (lo + hi)
    xs, vs, ps = _march_stationary(b.f, eta, 0.0, h, max(4.0 * R, 80.0),
                                   stop=lambda v, p: v <= 0.0)
    x1 = np.concatenate([-np.asarray(xs[::-1]), np.asarray(xs[1:])]) + b_offset
    v1 = np.concatenate([np.asarray(vs[::-1]), np.asarray(vs[1:])])
    dv1 = np.concatenate([-np.asarray(ps[::-1]), np.asarray(ps[1:])])
    keep = v1 >= 0.0
    return Orbit1D(kind="interval-bump", x=x1[keep], v=v1[keep], dv=dv1[keep],
                   level=float(b.F(eta)), F=b.F)


def classify_orbit(b: Bistable, v: float, vprime: float, tol: float = 1e-10) -> str:
    """Name the phase-portrait orbit through (v, v') by its first-integral level."""
    E = 0.5 * vprime * vprime + float(b.F(v))
    F1 = float(b.F(1.0))
    if E < -tol:
        return "periodic"
    if abs(E) <= tol:
        return "pulse" if v <= b.beta + tol else "unbounded"
    if abs(E - F1) <= tol:
        return "stable-manifold" if v <= 1.0 + tol else "unbounded"
    if E < F1:
        return "interval-bump" if v <= 1.0 else "unbounded"
    return "unbounded"


# --- integrators ---------------------------------------------------------------

def _march_stationary(f, v0, p0, h, xmax, stop):
    """RK4 on v'' = -f(v) from (v0, p0); returns lists (x, v, p) up to the stop event."""
    xs, vs, ps = [0.0], [v0], [p0]
    v, p, x = v0, p0, 0.0
    n = int(round(xmax / h))
    for k in range(1, n + 1):
        k1v = p
        k1p = -f(v)
        k2v = p + 0.5 * h * k1p
        k2p = -f(v + 0.5 * h * k1v)
        k3v = p + 0.5 * h * k2p
        k3p = -f(v + 0.5 * h * k2v)
        k4v = p + h * k3p
        k4p = -f(v + h * k3v)
        v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        p += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        x = k * h
        xs.append(x)
        vs.append(v)
        ps.append(p)
        if stop(v, p):
            break
    return xs, vs, ps


def _march_wave(f, c, v0, p0, h, zmax, forward):
    """RK4 on phi'' + c phi' + f(phi) = 0; backward runs integrate in -z."""
    s = 1.0 if forward else -1.0
    zs, vs, ps = [0.0], [v0], [p0]
    v, p = v0, p0
    n = int(round(zmax / h))
    for k in range(1, n + 1):
        k1v = s * p
        k1p = s * (-c * p - f(v))
        v2, p2 = v + 0.5 * h * k1v, p + 0.5 * h * k1p
        k2v = s * p2
        k2p = s * (-c * p2 - f(v2))
        v3, p3 = v + 0.5 * h * k2v, p + 0.5 * h * k2p
        k3v = s * p3
        k3p = s * (-c * p3 - f(v3))
        v4, p4 = v + h * k3v, p + h * k3p
        k4v = s * p4
        k4p = s * (-c * p4 - f(v4))
        v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        p += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        if p > 0.0:
            break  # slope flip from tail contamination; drop the point
        zs.append(k * h)
        vs.append(v)
        ps.append(p)
        if forward and v < 1e-9:
            break
        if not forward and v > 1.0 - 1e-9:
            break
    return zs, vs, ps


def _march_p_of_phi(b, c, dphi=2e-4):
    """March p(phi) down from the saddle (1,0); classify overshoot vs undershoot.

    Returns (outcome, p_at_a).  Much faster than marching in z because the
    slow exponential tails collapse in the phi variable.
    """
    f = b.f
    eps = 1e-8
    fp1 = float(b.fp(1.0))
    kappa = 0.5 * (-c + math.sqrt(c * c - 4.0 * fp1))
    p = -eps * kappa
    p_at_a = None

    def seg(phi_start, phi_end, p):
        n = max(2, int(round((phi_start - phi_end) / dphi)))
        h = -(phi_start - phi_end) / n
        phi = phi_start
        for _ in range(n):
            k1 = -c - f(phi) / p
            p2 = p + 0.5 * h * k1
            if p2 >= -1e-14:
                return None
            k2 = -c - f(phi + 0.5 * h) / p2
            p3 = p + 0.5 * h * k2
            if p3 >= -1e-14:
                return None
            k3 = -c - f(phi + 0.5 * h) / p3
            p4 = p + h * k3
            if p4 >= -1e-14:
                return None
            k4 = -c - f(phi + h) / p4
            p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            phi += h
            if p >= -1e-12:
                return None
        return p

    p = seg(1.0 - eps, b.a, p)
    if p is None:
        return "undershoot", None
    p_at_a = p
    p = seg(b.a, 1e-9, p)
    if p is None:
        return "undershoot", p_at_a
    return "overshoot", p_at_a


def _wave_outcome(b, c):
    if c <= 0.0:
        # c = 0 conserves energy: the orbit from (1,0) reaches phi = 0 with speed
        return "overshoot"
    return _march_p_of_phi(b, c)[0]


def _wave_slope_at_a(b, c):
    outcome, p_a = _march_p_of_phi(b, c, dphi=1e-4)
    if p_a is None:
        raise NoConvergence("wave trajectory turned before reaching phi = a")
    return p_a


def _first_zero(b, eta, zcap, h=2e-3):
    """Distance from the peak (eta, 0) to the first zero of v, or None past zcap."""
    xs, vs, _ = _march_stationary(b.f, eta, 0.0, h, zcap, stop=lambda v, p: v <= 0.0)
    if vs[-1] > 0.0:
        return None
    # linear interpolation through the sign change
    v0, v1 = vs[-2], vs[-1]
    return xs[-2] + h * v0 / (v0 - v1)


@functools.lru_cache(maxsize=32)
def _bump_r_min(b: Bistable):
    """Minimal bump half-width and the peak height where it is attained."""
    etas = np.linspace(b.beta + 1e-3, 1.0 - 1e-3, 41)
    rs = np.array([r if (r := _first_zero(b, e, zcap=80.0)) is not None else np.inf
                   for e in etas])
    i = int(np.argmin(rs))
    lo = etas[max(i - 1, 0)]
    hi = etas[min(i + 1, len(etas) - 1)]
    gr = 0.5 * (math.sqrt(5.0) - 1.0)
    x1 = hi - gr * (hi - lo)
    x2 = lo + gr * (hi - lo)
    f1 = _first_zero(b, x1, zcap=80.0) or np.inf
    f2 = _first_zero(b, x2, zcap=80.0) or np.inf
    for _ in range(40):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - gr * (hi - lo)
            f1 = _first_zero(b, x1, zcap=80.0) or np.inf
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + gr * (hi - lo)
            f2 = _first_zero(b, x2, zcap=80.0) or np.inf
    eta_star = 0.5 * (lo + hi)
    return min(f1, f2), eta_star
