"""Per-frequency propagator factors for the linearized evolution.

At each wavevector the linear system splits into a 2x2 block coupling the
density to the longitudinal velocity and a scalar relaxation of the
transverse velocity.  Writing r = |k|, m = mu r^(2 alpha), a = -m/2 and
D = a^2 - kappa^2 r^2, the block propagator over time t is

    [[EC - a ES,  -i Q ],        EC = e^(a t) cosh(sqrt(D) t)
     [  -i Q,   EC + a ES]]      ES = e^(a t) sinh(sqrt(D) t)/sqrt(D)
                                 Q  = kappa r ES

evaluated through stable exponentials for D > 0, trig functions for
D < 0, and an even power series through the double-root crossover.  The
transverse factor is e^(-m t).  This kernel is the numerical hot spot:
it runs over every grid frequency each propagator application and over
every quadrature node in the decay oracle.

Two implementations are provided: a numba @njit loop and a vectorized
pure-numpy twin.  numba is used when importable; set FRACNS_NO_NUMBA=1
to force the numpy path (benchmarks/bench_kernels.py compares them).
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "semigroup_factors",
    "semigroup_factors_numpy",
    "active_backend",
]

# Below this value of |D| t^2 the cosh/sinhc pair is evaluated by its even
# Taylor series; the omitted term is O(z^4/8!) ~ 1e-21 at the switch point,
# so both branches agree far inside any 1e-8 tolerance.
_SERIES_CUT = 1e-4


def _factors_scalar(r, t, mu, kappa, alpha):
    m = mu * r ** (2.0 * alpha)
    a = -0.5 * m
    D = a * a - (kappa * r) ** 2
    z = D * t * t
    if abs(z) < _SERIES_CUT:
        e = math.exp(a * t)
        C = 1.0 + z * (0.5 + z * (1.0 / 24.0 + z / 720.0))
        S = t * (1.0 + z * (1.0 / 6.0 + z * (1.0 / 120.0 + z / 5040.0)))
        EC = e * C
        ES = e * S
    elif D > 0.0:
        root = math.sqrt(D)
        ep = math.exp((a + root) * t)
        em = math.exp((a - root) * t)
        EC = 0.5 * (ep + em)
        ES = 0.5 * (ep - em) / root
    else:
        w = math.sqrt(-D)
        e = math.exp(a * t)
        EC = e * math.cos(w * t)
        ES = e * math.sin(w * t) / w
    P = EC - a * ES
    Q = kappa * r * ES
    R = EC + a * ES
    E = math.exp(-m * t)
    return P, Q, R, E


def semigroup_factors_numpy(r, t, mu, kappa, alpha):
    """Vectorized factors (P, Q, R, E) over an array of radii |k|."""
    shape = np.shape(r)
    r = np.asarray(r, dtype=np.float64).ravel()
    m = mu * r ** (2.0 * alpha)
    a = -0.5 * m
    D = a * a - (kappa * r) ** 2
    z = D * t * t

    series = np.abs(z) < _SERIES_CUT
    grow = (~series) & (D > 0.0)
    osc = (~series) & (D <= 0.0)

    EC = np.empty_like(r)
    ES = np.empty_like(r)

    e = np.exp(a[series] * t)
    zs = z[series]
    EC[series] = e * (1.0 + zs * (0.5 + zs * (1.0 / 24.0 + zs / 720.0)))
    ES[series] = e * t * (1.0 + zs * (1.0 / 6.0 + zs * (1.0 / 120.0 + zs / 5040.0)))

    root = np.sqrt(D[grow])
    ep = np.exp((a[grow] + root) * t)
    em = np.exp((a[grow] - root) * t)
    EC[grow] = 0.5 * (ep + em)
    ES[grow] = 0.5 * (ep - em) / root

    w = np.sqrt(-D[osc])
    e = np.exp(a[osc] * t)
    EC[osc] = e * np.cos(w * t)
    ES[osc] = e * np.sin(w * t) / w

    P = EC - a * ES
    Q = kappa * r * ES
    R = EC + a * ES
    E = np.exp(-m * t)
    return P.reshape(shape), Q.reshape(shape), R.reshape(shape), E.reshape(shape)


try:  # pragma: no cover - exercised through the dispatcher
    if os.environ.get("FRACNS_NO_NUMBA"):
        raise ImportError("numba disabled by FRACNS_NO_NUMBA")
    from numba import njit

    _factors_scalar_jit = njit(cache=True)(_factors_scalar)

    @njit(cache=True)
    def _factors_loop(r, t, mu, kappa, alpha, P, Q, R, E):
        for i in range(r.size):
            P[i], Q[i], R[i], E[i] = _factors_scalar_jit(r[i], t, mu, kappa, alpha)

    def semigroup_factors_numba(r, t, mu, kappa, alpha):
        r = np.ascontiguousarray(r, dtype=np.float64)
        flat = r.ravel()
        P = np.empty_like(flat)
        Q = np.empty_like(flat)
        R = np.empty_like(flat)
        E = np.empty_like(flat)
        _factors_loop(flat, float(t), float(mu), float(kappa), float(alpha), P, Q, R, E)
        shape = r.shape
        return P.reshape(shape), Q.reshape(shape), R.reshape(shape), E.reshape(shape)

    _BACKEND = "numba"
    _factors_impl = semigroup_factors_numba
except ImportError:
    _BACKEND = "numpy"
    _factors_impl = semigroup_factors_numpy


def active_backend() -> str:
    return _BACKEND


def semigroup_factors(r, t, mu, kappa, alpha):
    """Dispatch to the active backend; see module docstring for the factors."""
    return _factors_impl(r, t, mu, kappa, alpha)
