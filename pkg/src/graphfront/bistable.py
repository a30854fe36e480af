"""Bistable nonlinearities and the scalar constants derived from them.

The default family is the cubic f(s) = s (1 - s) (s - a) with 0 < a < 1/2,
whose primitive is available in closed form.  Arbitrary evaluators (for
instance spline fits of sampled data) are accepted as well; the defining
sign conditions are then checked numerically at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import OutOfRange, UnbalancedNonlinearity

_BETA_TOL = 1e-12
_DELTA0_CAP = 0.45


@dataclass(frozen=True)
class Bistable:
    """A bistable nonlinearity with stable zeros 0, 1 and unstable zero a.

    All derived constants are computed once at construction and cached:
    ``beta`` is the unique zero of the primitive F in (a, 1), ``delta0`` and
    ``sigma0`` bound f' away from zero near the stable states, and ``f_max``
    is the maximum of f on [0, 1].
    """

    a: float
    f: Callable
    fp: Callable
    F: Callable
    beta: float = field(init=False, default=0.0)
    delta0: float = field(init=False, default=0.0)
    sigma0: float = field(init=False, default=0.0)
    f_max: float = field(init=False, default=0.0)
    name: str = "custom"

    def __post_init__(self):
        _check_shape(self)
        object.__setattr__(self, "beta", _find_beta(self))
        d0, s0 = _find_delta0_sigma0(self)
        object.__setattr__(self, "delta0", d0)
        object.__setattr__(self, "sigma0", s0)
        object.__setattr__(self, "f_max", _find_f_max(self))

    def front_width(self) -> float:
        """Decay length of fronts into the 0 state, 1 / sqrt(-f'(0))."""
        return 1.0 / np.sqrt(-float(self.fp(0.0)))


@dataclass(frozen=True)
class ReservoirConstants:
    """Constants (delta, mu*, sigma) with (mu*/2)(s-delta)^2 + W(s) >= sigma on [0,1]."""

    delta: float
    mu_star: float
    sigma: float


def make_cubic(a: float) -> Bistable:
    """Build the cubic nonlinearity f(s) = s(1-s)(s-a).

    Requires 0 < a < 1/2 so that the integral of f over [0,1] is positive.
    """
    if a <= 0.0:
        raise OutOfRange(f"a must be positive, got {a}")
    if a >= 0.5:
        raise UnbalancedNonlinearity(
            f"a = {a} gives F(1) = (1-2a)/12 <= 0; need a < 1/2")

    def f(s):
        return s * (1.0 - s) * (s - a)

    def fp(s):
        return -3.0 * s * s + 2.0 * (1.0 + a) * s - a

    def F(s):
        return s * s * (-a / 2.0 + (1.0 + a) * s / 3.0 - s * s / 4.0)

    return Bistable(a=a, f=f, fp=fp, F=F, name=f"cubic(a={a:g})")


def from_callables(a: float, f, fp, F, name: str = "custom") -> Bistable:
    """Wrap user-supplied evaluators; the bistable shape is verified numerically."""
    return Bistable(a=a, f=f, fp=fp, F=F, name=name)


def make_table(s_samples, f_samples, name: str = "table") -> Bistable:
    """Cubic-spline nonlinearity through sampled (s, f(s)) data.

    The samples must describe a bistable shape on [0, 1]; the interior zero a
    is located on the spline and all invariants are re-checked.
    """
    from scipy.interpolate import CubicSpline

    s = np.asarray(s_samples, dtype=float)
    y = np.asarray(f_samples, dtype=float)
    if s[0] != 0.0 or s[-1] != 1.0:
        raise OutOfRange("table samples must span [0, 1]")
    spline = CubicSpline(s, y)
    dspline = spline.derivative()
    Fspline = spline.antiderivative()

    grid = np.linspace(1e-4, 1.0 - 1e-4, 2001)
    vals = spline(grid)
    sign_change = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    if len(sign_change) != 1:
        raise UnbalancedNonlinearity("table data does not have a single interior zero")
    k = sign_change[0]
    a = brentq(spline, grid[k], grid[k + 1], xtol=1e-14)
    return Bistable(a=float(a), f=spline, fp=dspline, F=Fspline, name=name)


def beta(b: Bistable) -> float:
    """Unique zero of F in (a, 1); cached on the record."""
    return b.beta


def delta0_sigma0(b: Bistable) -> tuple[float, float]:
    """Constants with f' <= -sigma0 on [0, delta0] and [1-delta0, 1]; cached."""
    return b.delta0, b.sigma0


def reservoir_constants(b: Bistable, delta: float, *,
                        mu_lo: float = 1e-3, ratio: float = 1.25,
                        samples: int = 10_000) -> ReservoirConstants:
    """Pick (mu*, sigma) for the reservoir barrier at a given delta in (0, a).

    mu* is the smallest value on a geometric grid for which
    min_{s in [0,1]} (mu*/2)(s-delta)^2 - F(s) is positive; sigma is that
    minimum.  Keeping mu* small keeps the spectral requirement on the
    reservoir mild.
    """
    if not 0.0 < delta < b.a:
        raise OutOfRange(f"delta must lie in (0, a) = (0, {b.a}), got {delta}")
    s = np.linspace(0.0, 1.0, samples)
    W = -np.asarray(b.F(s), dtype=float)
    quad = 0.5 * (s - delta) ** 2
    mu = mu_lo
    for _ in range(200):
        m = float(np.min(mu * quad + W))
        if m > 0.0:
            return ReservoirConstants(delta=delta, mu_star=mu, sigma=m)
        mu *= ratio
    raise OutOfRange("no mu* found; delta too close to its admissible boundary")


# --- construction-time checks -------------------------------------------------

def _check_shape(b: Bistable) -> None:
    a = b.a
    if not 0.0 < a < 1.0:
        raise OutOfRange(f"a must lie in (0, 1), got {a}")
    for s0 in (0.0, a, 1.0):
        if abs(float(b.f(s0))) > 1e-9:
            raise UnbalancedNonlinearity(f"f({s0}) = {float(b.f(s0)):.3e}, expected 0")
    if float(b.fp(0.0)) >= 0 or float(b.fp(1.0)) >= 0 or float(b.fp(a)) <= 0:
        raise UnbalancedNonlinearity("f' must be negative at 0 and 1 and positive at a")
    if float(b.F(1.0)) <= 0:
        raise UnbalancedNonlinearity("F(1) = int_0^1 f must be positive")
    lo = np.linspace(1e-3, a - 1e-3, 400) if a > 2e-3 else np.array([a / 2])
    hi = np.linspace(a + 1e-3, 1.0 - 1e-3, 400)
    if np.any(np.asarray(b.f(lo)) >= 0):
        raise UnbalancedNonlinearity("f must be negative on (0, a)")
    if np.any(np.asarray(b.f(hi)) <= 0):
        raise UnbalancedNonlinearity("f must be positive on (a, 1)")


def _find_beta(b: Bistable) -> float:
    lo, hi = b.a, 1.0
    # F(a) < 0 < F(1) guarantees the bracket
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(b.F(mid)) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < _BETA_TOL:
            break
    root = 0.5 * (lo + hi)
    return float(brentq(b.F, max(root - 1e-6, b.a), min(root + 1e-6, 1.0), xtol=1e-15)) \
        if abs(float(b.F(root))) > 1e-13 else root


def _find_delta0_sigma0(b: Bistable) -> tuple[float, float]:
    sigma0 = 0.5 * min(-float(b.fp(0.0)), -float(b.fp(1.0)))

    def margin_left(d):
        s = np.linspace(0.0, d, 200)
        return float(np.max(np.asarray(b.fp(s)))) + sigma0

    def margin_right(d):
        s = np.linspace(1.0 - d, 1.0, 200)
        return float(np.max(np.asarray(b.fp(s)))) + sigma0

    def largest(margin):
        if margin(_DELTA0_CAP) <= 0.0:
            return _DELTA0_CAP
        lo, hi = 1e-6, _DELTA0_CAP
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if margin(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
        return lo

    return min(largest(margin_left), largest(margin_right)), sigma0


def _find_f_max(b: Bistable) -> float:
    res = minimize_scalar(lambda s: -float(b.f(s)), bounds=(b.a, 1.0), method="bounded",
                          options={"xatol": 1e-12})
    return float(-res.fun)
