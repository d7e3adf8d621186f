"""Right-hand sides and time integration for the reformulated system.

The evolved unknowns are the perturbation variable rho and the velocity u:

    rho_t = -u.grad rho - (kappa + rho/a) div u
    u_t   = -nu(rho) Lap^alpha u - u.grad u - (kappa + rho/a) grad rho

with nu(rho) = mu'/(kappa + rho/a)^a.  Nonlinear products are formed in
physical space and dealiased with the 2/3 rule; the variable-coefficient
dissipation is the pointwise coefficient times the physical-space
Lap^alpha u.  The truncated variant wraps every nonlinear term in the
sharp projector J_eps and keeps the mu-centered split of the viscosity,
so band-limited states stay band-limited bit-exactly.

Integrators: classical RK4, and a Strang splitting that advances the
linear part by its exact propagator (useful when mu kmax^(2 alpha) makes
RK4's stability limit the cost driver).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError
from .linear import propagate_fields
from .params import FluidParams, viscosity_samples
from .spectral import GridSpec, coeffs_to_samples, samples_to_coeffs, _lambda_table
from .state import State

__all__ = [
    "rhs_full",
    "rhs_friedrich",
    "stable_dt",
    "step",
    "TimeStepSpec",
    "Trajectory",
    "simulate",
]

SCHEMES = ("rk4", "rk4-splitting", "rk4-with-linear-exponential-splitting")


def _mask_dealias(grid, coeffs):
    return np.where(grid.dealias_mask, coeffs, 0.0)


def rhs_full(s: State, p: FluidParams) -> np.ndarray:
    """Time derivative of the packed coefficients for the full system."""
    return _rhs_full(s.fields, s.grid, p)


def _rhs_full(fields, grid, p):
    d = grid.dim
    lam2a = _lambda_table(grid, 2.0 * p.alpha)
    rho_p = coeffs_to_samples(grid, fields[0])
    u_p = [coeffs_to_samples(grid, fields[1 + i]) for i in range(d)]
    grad_rho = [coeffs_to_samples(grid, 1j * ki * fields[0]) for ki in grid.k]
    div_u = coeffs_to_samples(
        grid, sum(1j * ki * fields[1 + i] for i, ki in enumerate(grid.k))
    )
    nu = viscosity_samples(rho_p, p)
    sound = p.kappa + rho_p / p.a

    rho_dot = -sound * div_u
    for ui, dri in zip(u_p, grad_rho):
        rho_dot -= ui * dri

    out = np.empty_like(fields)
    out[0] = _mask_dealias(grid, samples_to_coeffs(grid, rho_dot))
    for i in range(d):
        lap_ui = coeffs_to_samples(grid, lam2a * fields[1 + i])
        u_dot = -nu * lap_ui - sound * grad_rho[i]
        for j, kj in enumerate(grid.k):
            duij = coeffs_to_samples(grid, 1j * kj * fields[1 + i])
            u_dot -= u_p[j] * duij
        out[1 + i] = _mask_dealias(grid, samples_to_coeffs(grid, u_dot))
    return out


def rhs_friedrich(s: State, eps: float, p: FluidParams) -> np.ndarray:
    """Truncated right-hand side: linear terms of J u, J applied to the rest."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return _rhs_friedrich(s.fields, s.grid, p, s.grid.kmag <= 1.0 / eps)


def _rhs_friedrich(fields, grid, p, jmask):
    d = grid.dim
    lam2a = _lambda_table(grid, 2.0 * p.alpha)
    proj = [np.where(jmask, fields[c], 0.0) for c in range(d + 1)]
    rho_p = coeffs_to_samples(grid, proj[0])
    u_p = [coeffs_to_samples(grid, proj[1 + i]) for i in range(d)]
    grad_rho = [coeffs_to_samples(grid, 1j * ki * proj[0]) for ki in grid.k]
    div_u = coeffs_to_samples(
        grid, sum(1j * ki * proj[1 + i] for i, ki in enumerate(grid.k))
    )
    visc_dev = viscosity_samples(rho_p, p) - p.mu

    def project(phys):
        coeffs = _mask_dealias(grid, samples_to_coeffs(grid, phys))
        return np.where(jmask, coeffs, 0.0)

    out = np.empty_like(fields)
    transport = np.zeros(grid.shape)
    for ui, dri in zip(u_p, grad_rho):
        transport += ui * dri
    out[0] = (
        -p.kappa * sum(1j * ki * proj[1 + i] for i, ki in enumerate(grid.k))
        - project(transport)
        - (1.0 / p.a) * project(rho_p * div_u)
    )
    for i in range(d):
        lap_ui_coeffs = lam2a * proj[1 + i]
        lap_ui = coeffs_to_samples(grid, lap_ui_coeffs)
        advect = np.zeros(grid.shape)
        for j, kj in enumerate(grid.k):
            duij = coeffs_to_samples(grid, 1j * kj * proj[1 + i])
            advect += u_p[j] * duij
        out[1 + i] = (
            -p.kappa * 1j * grid.k[i] * proj[0]
            - p.mu * lap_ui_coeffs
            - project(visc_dev * lap_ui)
            - project(advect)
            - (1.0 / p.a) * project(rho_p * grad_rho[i])
        )
    return out


def stable_dt(s: State, p: FluidParams, g: GridSpec | None = None,
              c_cfl: float = 0.5) -> float:
    """CFL-style bound: acoustic, fractional-viscous, and advective limits."""
    grid = g if g is not None else s.grid
    u_max = 0.0
    for i in range(grid.dim):
        u_max = max(u_max, float(np.max(np.abs(coeffs_to_samples(grid, s.fields[1 + i])))))
    nu_max = float(np.max(viscosity_samples(coeffs_to_samples(grid, s.fields[0]), p)))
    kmax = grid.kmax
    acoustic = grid.dx / (p.kappa + u_max)
    viscous = 1.0 / (nu_max * kmax ** (2.0 * p.alpha))
    advective = grid.dx / u_max if u_max > 0 else np.inf
    return c_cfl * min(acoustic, viscous, advective)


def _make_rhs(grid, p, eps):
    if eps is None:
        return lambda fields: _rhs_full(fields, grid, p)
    jmask = grid.kmag <= 1.0 / eps
    return lambda fields: _rhs_friedrich(fields, grid, p, jmask)


def _rk4(fields, dt, rhs):
    k1 = rhs(fields)
    k2 = rhs(fields + (0.5 * dt) * k1)
    k3 = rhs(fields + (0.5 * dt) * k2)
    k4 = rhs(fields + dt * k3)
    return fields + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _nonlinear_remainder(rhs, grid, p):
    """rhs minus its exact linear part, for the splitting integrator."""
    d = grid.dim
    lam2a = _lambda_table(grid, 2.0 * p.alpha)

    def remainder(fields):
        out = rhs(fields)
        out[0] += p.kappa * sum(1j * ki * fields[1 + i] for i, ki in enumerate(grid.k))
        for i in range(d):
            out[1 + i] += p.mu * lam2a * fields[1 + i] + p.kappa * 1j * grid.k[i] * fields[0]
        return out

    return remainder


def step(s: State, dt: float, p: FluidParams, scheme: str = "rk4",
         eps: float | None = None) -> State:
    """One time step; scheme is 'rk4' or 'rk4-splitting'."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    rhs = _make_rhs(s.grid, p, eps)
    if scheme == "rk4":
        fields = _rk4(s.fields, dt, rhs)
    else:
        remainder = _nonlinear_remainder(rhs, s.grid, p)
        half = propagate_fields(s.fields, 0.5 * dt, s.grid, p)
        fields = propagate_fields(_rk4(half, dt, remainder), 0.5 * dt, s.grid, p)
    return State(s.grid, fields, s.t + dt)


@dataclass
class TimeStepSpec:
    """Scheme, step, horizon, and output cadence for simulate()."""

    t_end: float
    output_stride: float
    dt: float | str = "auto"
    scheme: str = "rk4"
    store_states: bool = True
    blowup_factor: float = 1e3
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.output_stride <= self.t_end:
            raise ValueError("output_stride must lie in (0, t_end]")
        if self.dt != "auto" and not float(self.dt) > 0:
            raise ValueError("dt must be positive or 'auto'")


@dataclass
class Trajectory:
    """Outputs of one run: times, optional stored states, final state."""

    grid: GridSpec
    params: FluidParams
    times: np.ndarray
    states: list | None
    stride: float
    final_state: State
    dt: float

    def stored_states(self):
        return self.states

    def state_at(self, index) -> State:
        if self.states is None:
            raise ValueError("trajectory did not store states")
        return State(self.grid, self.states[index], self.times[index])


def simulate(s0: State, p: FluidParams, tspec: TimeStepSpec, observers=(),
             eps: float | None = None) -> Trajectory:
    """March s0 to t_end, invoking observers(t, fields) at the output stride.

    dt = 'auto' starts from stable_dt; either way dt is rounded down so an
    integer number of steps lands exactly on each output time.  Detected
    blow-up (norm above blowup_factor times the initial norm, or any
    non-finite value) raises BlowUpError carrying the last valid state.
    """
    grid = s0.grid
    dt = stable_dt(s0, p, grid) if tspec.dt == "auto" else float(tspec.dt)
    per_out = max(1, int(np.ceil(tspec.output_stride / dt - 1e-12)))
    dt = tspec.output_stride / per_out
    n_out = int(round(tspec.t_end / tspec.output_stride))
    if abs(n_out * tspec.output_stride - tspec.t_end) > 1e-9 * tspec.t_end:
        raise ValueError("t_end must be an integer multiple of output_stride")

    norm0 = s0.l2_norm()
    ceiling = tspec.blowup_factor * norm0
    fields = s0.fields.copy()
    times = [s0.t]
    states = [fields.copy()] if tspec.store_states else None
    for obs in observers:
        obs(s0.t, fields)

    rhs = _make_rhs(grid, p, eps)
    use_split = tspec.scheme != "rk4"
    if use_split:
        remainder = _nonlinear_remainder(rhs, grid, p)

    last_good = fields.copy()
    t = s0.t
    for i_out in range(1, n_out + 1):
        for _ in range(per_out):
            if use_split:
                half = propagate_fields(fields, 0.5 * dt, grid, p)
                fields = propagate_fields(_rk4(half, dt, remainder), 0.5 * dt, grid, p)
            else:
                fields = _rk4(fields, dt, rhs)
        t = s0.t + i_out * tspec.output_stride
        norm = float(np.sqrt(np.sum(np.abs(fields) ** 2)))
        if not np.isfinite(norm) or norm > ceiling:
            raise BlowUpError(
                f"blow-up detected at t = {t:.6g}: norm {norm:.3e} "
                f"exceeds ceiling {ceiling:.3e}",
                last_state=State(grid, last_good, times[-1]),
                t=times[-1],
            )
        last_good = fields.copy()
        times.append(t)
        if tspec.store_states:
            states.append(fields.copy())
        for obs in observers:
            obs(t, fields)

    final = State(grid, fields.copy(), t)
    traj = Trajectory(
        grid=grid,
        params=p,
        times=np.asarray(times),
        states=states,
        stride=tspec.output_stride,
        final_state=final,
        dt=dt,
    )
    if tspec.checkpoint_path is not None:
        from .state import write_checkpoint

        write_checkpoint(tspec.checkpoint_path, final, p)
    return traj
