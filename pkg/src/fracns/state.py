"""State container, initial-data families, and checkpoint files."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .params import FluidParams, derive_constants, _positive_base
from .spectral import (
    GridSpec,
    RealField,
    SpectralField,
    coeffs_to_samples,
    hermitian_defect,
    samples_to_coeffs,
)

__all__ = [
    "State",
    "modulated_gaussian_state",
    "single_mode_state",
    "write_checkpoint",
    "read_checkpoint",
]

_CKPT_MAGIC = b"FNSCKPT1"
_CKPT_VERSION = 1


@dataclass
class State:
    """Perturbation density and velocity at one time, stored spectrally.

    `fields` stacks the coefficient arrays as [rho, u_1, ..., u_d].
    """

    grid: GridSpec
    fields: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.fields = np.asarray(self.fields, dtype=np.complex128)
        want = (self.grid.dim + 1,) + self.grid.shape
        if self.fields.shape != want:
            raise ValueError(f"fields shape {self.fields.shape}, expected {want}")

    @classmethod
    def zero(cls, grid, t=0.0):
        return cls(grid, np.zeros((grid.dim + 1,) + grid.shape, np.complex128), t)

    @classmethod
    def from_fields(cls, rho: SpectralField, u, t=0.0):
        u = tuple(u)
        if len(u) != rho.grid.dim:
            raise ValueError(f"expected {rho.grid.dim} velocity components, got {len(u)}")
        stack = np.stack([rho.coeffs] + [ui.coeffs for ui in u])
        return cls(rho.grid, stack, t)

    @property
    def rho(self) -> SpectralField:
        return SpectralField(self.grid, self.fields[0])

    @property
    def u(self):
        return tuple(SpectralField(self.grid, self.fields[1 + i]) for i in range(self.grid.dim))

    def copy(self):
        return State(self.grid, self.fields.copy(), self.t)

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.fields) ** 2)))

    def hermitian_defect(self):
        return max(hermitian_defect(SpectralField(self.grid, c)) for c in self.fields)

    def check_positive(self, p: FluidParams):
        """Raise VacuumError unless kappa + rho/a > 0 pointwise."""
        _positive_base(coeffs_to_samples(self.grid, self.fields[0]), p)


def single_mode_state(grid, mode, rho_amp=0.0, u_amp=(), t=0.0):
    """Real single-Fourier-mode state; `mode` is the integer wavevector."""
    st = State.zero(grid, t)
    amps = [rho_amp] + list(u_amp) + [0.0] * (grid.dim - len(tuple(u_amp)))
    idx = tuple(m % grid.n for m in mode)
    conj_idx = tuple((-m) % grid.n for m in mode)
    for c, amp in zip(st.fields, amps):
        c[idx] = amp / 2.0
        c[conj_idx] += amp / 2.0
    return st


def modulated_gaussian_state(
    grid,
    amplitude,
    seed,
    n_bumps=3,
    width=None,
    k_mod=0.0,
    target_e0=None,
    s=None,
):
    """Mean-zero Gaussian-modulated bumps away from the box boundary.

    Each of rho and the velocity components is a superposition of
    `n_bumps` Gaussian envelopes of the given physical `width`, optionally
    carrying a cosine modulation at wavenumber `k_mod` (which centers the
    spectrum near |k| = k_mod instead of 0).  The mean mode is removed and
    the 2/3 mask applied, so states start inside the dealiased band.

    If `target_e0` is given (with the regularity index `s`), the amplitude
    is rescaled so the squared H^(s+1) size of the state is exactly that.
    """
    if width is None:
        width = grid.length / 16.0
    rng = np.random.default_rng(seed)
    x = grid.x
    lo, hi = 0.25 * grid.length, 0.75 * grid.length
    fields = np.empty((grid.dim + 1,) + grid.shape, dtype=np.complex128)
    for c in range(grid.dim + 1):
        samples = np.zeros(grid.shape)
        for _ in range(n_bumps):
            center = rng.uniform(lo, hi, size=grid.dim)
            strength = rng.uniform(-1.0, 1.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            direction = rng.normal(size=grid.dim)
            direction /= np.linalg.norm(direction)
            rsq = sum((xi - ci) ** 2 for xi, ci in zip(x, center))
            bump = strength * np.exp(-rsq / (2.0 * width**2))
            if k_mod > 0.0:
                carrier = sum(
                    k_mod * di * (xi - ci) for di, xi, ci in zip(direction, x, center)
                )
                bump = bump * np.cos(carrier + phase)
            samples = samples + bump
        coeffs = samples_to_coeffs(grid, samples)
        coeffs[(0,) * grid.dim] = 0.0
        fields[c] = np.where(grid.dealias_mask, coeffs, 0.0)
    state = State(grid, amplitude * fields, 0.0)
    if target_e0 is not None:
        if s is None:
            raise ValueError("target_e0 needs the regularity index s")
        weight = (1.0 + grid.ksq) ** (s + 1.0)
        e0 = float(np.sum(weight * np.abs(state.fields) ** 2))
        if e0 == 0.0:
            raise ValueError("cannot rescale a zero state to a positive target")
        state.fields *= np.sqrt(target_e0 / e0)
    return state


# -- checkpoint files ---------------------------------------------------------
#
# Little-endian binary layout:
#   8s   magic "FNSCKPT1"
#   <I   version (1)
#   <I   dim
#   <I   n (points per axis)
#   <d   box length
#   <d   dealias fraction
#   <4d  A, gamma, mu, alpha
#   <d   t
# followed by (dim+1) * n^dim complex128 values in C order: the rho
# coefficients, then each velocity component, in numpy fftn index order.

_HEADER = struct.Struct("<8sIIIdd4dd")


def write_checkpoint(path, state: State, p: FluidParams):
    header = _HEADER.pack(
        _CKPT_MAGIC,
        _CKPT_VERSION,
        state.grid.dim,
        state.grid.n,
        state.grid.length,
        state.grid.dealias_fraction,
        p.A,
        p.gamma,
        p.mu,
        p.alpha,
        state.t,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.fields).astype("<c16").tobytes())


def read_checkpoint(path):
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, dim, n, length, frac, A, gamma, mu, alpha, t = _HEADER.unpack(raw)
        if magic != _CKPT_MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        if version != _CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        grid = GridSpec(dim=dim, n=n, length=length, dealias_fraction=frac)
        p = derive_constants(A, gamma, mu, alpha)
        count = (dim + 1) * grid.npoints
        data = np.frombuffer(fh.read(count * 16), dtype="<c16", count=count)
        fields = data.astype(np.complex128).reshape((dim + 1,) + grid.shape)
    return State(grid, fields, t), p
