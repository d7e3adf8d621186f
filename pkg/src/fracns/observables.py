"""Energy functionals, decay fitting, and inequality-shape checks.

Everything here is pure post-processing: the instantaneous and
time-integrated energy of a run, the time-weighted running supremum used
to certify power-law decay, the exponential-versus-low-frequency bound on
the top-derivative norm, and least-squares power-law fits with their
one-sided comparison against the predicted decay exponent
-3/(4 alpha) - sigma/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linear import DecayCurve
from .params import FluidParams
from .spectral import GridSpec, SpectralField, inner, lambda_power
from .state import State

__all__ = [
    "EnergyReport",
    "EnergyMonitor",
    "energy_E0",
    "energy_ET_running",
    "modified_energy_sigma0",
    "lambda_norms",
    "NormTracker",
    "MtDiagnostic",
    "m_functional",
    "m_functional_from_norms",
    "LowHighTracker",
    "GronwallReport",
    "gronwall_from_series",
    "highfreq_gronwall_check",
    "DecayFit",
    "fit_power_law",
    "default_fit_window",
    "decay_bound",
    "decay_report",
]


def _hs_weight(grid, s):
    return (1.0 + grid.ksq) ** s


def _lam_weight(grid, s):
    zero = (0,) * grid.dim
    base = grid.ksq.copy()
    base[zero] = 1.0
    w = base**s
    w[zero] = 1.0 if s == 0 else 0.0
    return w


def energy_E0(s0: State, s: float) -> float:
    """Squared H^(s+1) size of the initial data, rho and u together."""
    if not s > 1.5:
        raise ValueError(f"regularity index s must exceed 3/2, got {s}")
    w = _hs_weight(s0.grid, s + 1.0)
    return float(np.sum(w * np.abs(s0.fields) ** 2))


@dataclass
class EnergyReport:
    """Instantaneous norms plus running dissipation integrals at one time."""

    t: float
    rho_hs1: float
    u_hs1: float
    diss_rho: float
    diss_u: float
    et: float
    s: float


class EnergyMonitor:
    """Accumulates EnergyReport rows; usable as a simulate() observer.

    Tracks sup-in-time squared H^(s+1) norms of rho and u, trapezoidal
    integrals of ||grad rho||^2_{H^s} and ||Lap^(alpha/2) u||^2_{H^(s+1)},
    and their aggregate.  Flags a violation when the aggregate exceeds
    bootstrap_factor times the initial squared size.
    """

    def __init__(self, grid: GridSpec, p: FluidParams, s: float,
                 bootstrap_factor: float = 4.0):
        if not s > 1.5:
            raise ValueError(f"regularity index s must exceed 3/2, got {s}")
        self.grid = grid
        self.s = s
        self.bootstrap_factor = bootstrap_factor
        self._w_state = _hs_weight(grid, s + 1.0)
        self._w_grad_rho = grid.ksq * _hs_weight(grid, s)
        self._w_visc = _lam_weight(grid, p.alpha) * self._w_state
        self.reports: list[EnergyReport] = []
        self.e0 = None
        self.violation = False
        self._sup_rho = 0.0
        self._sup_u = 0.0
        self._diss_rho = 0.0
        self._diss_u = 0.0
        self._prev = None

    def update(self, t: float, fields: np.ndarray):
        rho_sq = float(np.sum(self._w_state * np.abs(fields[0]) ** 2))
        u_sq = float(sum(np.sum(self._w_state * np.abs(c) ** 2) for c in fields[1:]))
        grad_rho_sq = float(np.sum(self._w_grad_rho * np.abs(fields[0]) ** 2))
        visc_sq = float(sum(np.sum(self._w_visc * np.abs(c) ** 2) for c in fields[1:]))
        if self._prev is not None:
            t0, g0, v0 = self._prev
            h = t - t0
            self._diss_rho += 0.5 * h * (g0 + grad_rho_sq)
            self._diss_u += 0.5 * h * (v0 + visc_sq)
        self._prev = (t, grad_rho_sq, visc_sq)
        self._sup_rho = max(self._sup_rho, rho_sq)
        self._sup_u = max(self._sup_u, u_sq)
        et = self._sup_rho + self._sup_u + self._diss_rho + self._diss_u
        if self.e0 is None:
            self.e0 = rho_sq + u_sq
        if et > self.bootstrap_factor * self.e0:
            self.violation = True
        self.reports.append(
            EnergyReport(
                t=t,
                rho_hs1=float(np.sqrt(rho_sq)),
                u_hs1=float(np.sqrt(u_sq)),
                diss_rho=self._diss_rho,
                diss_u=self._diss_u,
                et=et,
                s=self.s,
            )
        )

    __call__ = update


def energy_ET_running(traj, s: float, bootstrap_factor: float = 4.0):
    """EnergyReport series of a stored trajectory, plus the violation flag."""
    states = traj.stored_states()
    if states is None:
        raise ValueError("energy_ET_running needs a trajectory with stored states")
    monitor = EnergyMonitor(traj.grid, traj.params, s, bootstrap_factor)
    for t, fields in zip(traj.times, states):
        monitor.update(t, fields)
    return monitor.reports, monitor.violation


def modified_energy_sigma0(s: State, sigma0: float, beta3: float,
                           alpha: float) -> float:
    """Top-order energy with the cross term 2 beta3 <grad L^(s0-1) rho, L^(s0-1) u>.

    Admissible range: 5/2 < sigma0 < (3 + 4 alpha)/2.  For beta3 < 1 the
    value is equivalent to the plain squared norms up to a (1 +- beta3)
    factor whenever every retained mode has |k| >= 1.
    """
    hi = (3.0 + 4.0 * alpha) / 2.0
    if not 2.5 < sigma0 < hi:
        raise ValueError(
            f"sigma0={sigma0} outside admissible interval (2.5, {hi}) for alpha={alpha}"
        )
    if beta3 < 0:
        raise ValueError("beta3 must be nonnegative")
    rho, u = s.rho, s.u
    plain = lambda_power(rho, sigma0).l2_norm() ** 2
    plain += sum(lambda_power(ui, sigma0).l2_norm() ** 2 for ui in u)
    cross = 0.0
    if beta3 > 0:
        grid = s.grid
        rho_low = lambda_power(rho, sigma0 - 1.0)
        for ki, ui in zip(grid.k, u):
            grad_i = SpectralField(grid, 1j * ki * rho_low.coeffs)
            cross += inner(grad_i, lambda_power(ui, sigma0 - 1.0))
    return float(plain + 2.0 * beta3 * cross)


def lambda_norms(fields: np.ndarray, grid: GridSpec, sigmas) -> np.ndarray:
    """||Lap^(sigma/2) (rho, u)|| for each sigma (joint rho+u norm)."""
    out = np.empty(len(sigmas))
    for i, sigma in enumerate(sigmas):
        w = _lam_weight(grid, float(sigma))
        out[i] = np.sqrt(sum(float(np.sum(w * np.abs(c) ** 2)) for c in fields))
    return out


class NormTracker:
    """simulate() observer recording ||Lap^(sigma/2) (rho,u)|| per output time."""

    def __init__(self, grid: GridSpec, sigmas):
        self.grid = grid
        self.sigmas = [float(s) for s in sigmas]
        self._weights = [_lam_weight(grid, s) for s in self.sigmas]
        self.times: list[float] = []
        self.norms: list[np.ndarray] = []

    def update(self, t: float, fields: np.ndarray):
        row = np.array(
            [
                np.sqrt(sum(float(np.sum(w * np.abs(c) ** 2)) for c in fields))
                for w in self._weights
            ]
        )
        self.times.append(t)
        self.norms.append(row)

    __call__ = update

    def curves(self, meta=None):
        times = np.asarray(self.times)
        norms = np.asarray(self.norms)
        return [
            DecayCurve(times, norms[:, i], sigma, meta=dict(meta or {}))
            for i, sigma in enumerate(self.sigmas)
        ]


@dataclass
class MtDiagnostic:
    """Running supremum of time-weighted norms, with per-sigma contributions."""

    times: np.ndarray
    values: np.ndarray
    sigma_grid: list
    contributions: np.ndarray  # shape (len(times), len(sigma_grid))


def m_functional_from_norms(times, norms, alpha: float, sigma_grid) -> MtDiagnostic:
    """M(t) = sup_{tau<=t} sum_sigma (1+tau)^(3/(4 alpha)+sigma/2) ||Lap^(sigma/2) U||."""
    times = np.asarray(times, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    sigma_grid = [float(s) for s in sigma_grid]
    weights = np.stack(
        [(1.0 + times) ** (3.0 / (4.0 * alpha) + s / 2.0) for s in sigma_grid], axis=1
    )
    contributions = weights * norms
    running = np.maximum.accumulate(contributions.sum(axis=1))
    return MtDiagnostic(times, running, sigma_grid, contributions)


def m_functional(traj, p: FluidParams, sigma_grid) -> MtDiagnostic:
    states = traj.stored_states()
    if states is None:
        raise ValueError("m_functional needs a trajectory with stored states")
    norms = np.array([lambda_norms(f, traj.grid, sigma_grid) for f in states])
    return m_functional_from_norms(traj.times, norms, p.alpha, sigma_grid)


class LowHighTracker:
    """simulate() observer for the top-derivative norm and its low part.

    Records ||Lap^(sigma0/2) U||^2 and the same with U replaced by its
    low-plus-medium part (sharp cutoff below R0).
    """

    def __init__(self, grid: GridSpec, sigma0: float, R0: float):
        self.grid = grid
        self.sigma0 = float(sigma0)
        self.R0 = float(R0)
        self._w = _lam_weight(grid, self.sigma0)
        self._w_low = np.where(grid.kmag < R0, self._w, 0.0)
        self.times: list[float] = []
        self.full_sq: list[float] = []
        self.low_sq: list[float] = []

    def update(self, t: float, fields: np.ndarray):
        self.times.append(t)
        self.full_sq.append(sum(float(np.sum(self._w * np.abs(c) ** 2)) for c in fields))
        self.low_sq.append(sum(float(np.sum(self._w_low * np.abs(c) ** 2)) for c in fields))

    __call__ = update


@dataclass
class GronwallReport:
    passed: bool
    c: float
    C: float
    c_grid: list
    C_by_c: list
    c_limit: float


def gronwall_from_series(times, full_sq, low_sq, c_grid=None,
                         c_limit: float = 100.0) -> GronwallReport:
    """Smallest admissible constants in the exponential-vs-low-part bound.

    Checks full(t) <= C (e^(-c t) full(0) + sup_{tau<=t} low(tau)) over the
    series; reports, for each decay rate c in the grid, the smallest C that
    makes the inequality hold, and passes when some c admits C <= c_limit.
    """
    times = np.asarray(times, dtype=np.float64)
    full_sq = np.asarray(full_sq, dtype=np.float64)
    low_sq = np.asarray(low_sq, dtype=np.float64)
    if c_grid is None:
        c_grid = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0]
    low_running = np.maximum.accumulate(low_sq)
    C_by_c = []
    for c in c_grid:
        rhs = np.exp(-c * (times - times[0])) * full_sq[0] + low_running
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(rhs > 0.0, full_sq / rhs, np.where(full_sq > 0, np.inf, 0.0))
        C_by_c.append(float(np.max(ratio)) if ratio.size else np.inf)
    best = int(np.argmin(C_by_c))
    passed = bool(C_by_c[best] <= c_limit)
    return GronwallReport(
        passed=passed,
        c=float(c_grid[best]),
        C=float(C_by_c[best]),
        c_grid=[float(c) for c in c_grid],
        C_by_c=C_by_c,
        c_limit=c_limit,
    )


def highfreq_gronwall_check(traj, p: FluidParams, sigma0: float, r0: float = 1.0,
                            R0: float = 4.0, c_grid=None,
                            c_limit: float = 100.0) -> GronwallReport:
    if not 0 < r0 < R0:
        raise ValueError(f"need 0 < r0 < R0, got r0={r0}, R0={R0}")
    states = traj.stored_states()
    if states is None:
        raise ValueError("highfreq_gronwall_check needs stored states")
    tracker = LowHighTracker(traj.grid, sigma0, R0)
    for t, fields in zip(traj.times, states):
        tracker.update(t, fields)
    return gronwall_from_series(tracker.times, tracker.full_sq, tracker.low_sq,
                                c_grid=c_grid, c_limit=c_limit)


# -- power-law fitting --------------------------------------------------------

@dataclass
class DecayFit:
    sigma: float
    exponent: float
    ci: float
    window: tuple
    bound: float | None = None

    @property
    def passed(self):
        if self.bound is None:
            return None
        return bool(self.exponent <= self.bound + 0.05)


def fit_power_law(curve: DecayCurve, window=None, bound=None) -> DecayFit:
    """Least-squares slope of log(value) against log(1+t) inside the window.

    The confidence half-width is twice the standard error of the slope
    estimated from the residual variance.  Nonpositive values inside the
    window are rejected (the curve already hit the numerical floor).
    """
    if window is None:
        window = (float(curve.times[0]), float(curve.times[-1]))
    t1, t2 = window
    if not t1 < t2:
        raise ValueError(f"fit window must be increasing, got {window}")
    sel = (curve.times >= t1) & (curve.times <= t2)
    if int(sel.sum()) < 10:
        raise ValueError(
            f"fit window {window} contains {int(sel.sum())} samples; need at least 10"
        )
    vals = curve.values[sel]
    if np.any(vals <= 0):
        raise ValueError("nonpositive values in fit window; curve reached the floor")
    x = np.log1p(curve.times[sel])
    y = np.log(vals)
    n = x.size
    xc = x - x.mean()
    slope = float(np.dot(xc, y) / np.dot(xc, xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    var = float(np.dot(resid, resid) / max(n - 2, 1))
    se = float(np.sqrt(var / np.dot(xc, xc)))
    return DecayFit(
        sigma=curve.sigma,
        exponent=slope,
        ci=2.0 * se,
        window=(float(t1), float(t2)),
        bound=bound,
    )


def default_fit_window(grid: GridSpec, p: FluidParams):
    """Pre-saturation window on the torus: the slowest retained mode sets t2."""
    t2 = 0.5 / (p.mu * grid.kmin_positive ** (2.0 * p.alpha))
    return (t2 / 10.0, t2)


def decay_bound(alpha: float, sigma: float) -> float:
    """Predicted decay exponent -3/(4 alpha) - sigma/2 of the L2 norm."""
    return -3.0 / (4.0 * alpha) - sigma / 2.0


def decay_report(curves, p: FluidParams, window=None, tol: float = 0.05):
    """One DecayFit per curve with the one-sided pass flag (exponent <= bound + tol)."""
    records = []
    for curve in curves:
        bound = decay_bound(p.alpha, curve.sigma)
        fit = fit_power_law(curve, window=window, bound=bound)
        records.append(
            {
                "sigma": float(curve.sigma),
                "exponent": fit.exponent,
                "ci": fit.ci,
                "bound": bound,
                "pass": bool(fit.exponent <= bound + tol),
            }
        )
    return records
