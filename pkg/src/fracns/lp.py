"""Dyadic frequency blocks, Sobolev norms, and commutators.

Blocks are sharp indicators: j = -1 is the ball |k| < 1, and block j >= 0
is the annulus 2^j <= |k| < 2^(j+1).  Sharp blocks partition the retained
lattice exactly, are mutually L2-orthogonal, and make the two-sided
Bernstein bound an exact per-coefficient statement.
"""

from __future__ import annotations

import numpy as np

from .errors import MeanZeroError
from .spectral import (
    SpectralField,
    _check_same_grid,
    _lambda_table,
    gradient,
    lambda_power,
    multiply,
)

__all__ = [
    "lp_block",
    "block_range",
    "sobolev_norm",
    "bernstein_verify",
    "commutator_transport",
    "commutator_lambda",
    "transport_commutator_constants",
]


def _block_mask(grid, j):
    if j == -1:
        return grid.kmag < 1.0
    return (grid.kmag >= 2.0**j) & (grid.kmag < 2.0 ** (j + 1))


def lp_block(F: SpectralField, j: int) -> SpectralField:
    """Restrict to dyadic block j (j = -1 is the low ball)."""
    if j < -1:
        raise ValueError(f"block index must be >= -1, got {j}")
    return SpectralField(F.grid, np.where(_block_mask(F.grid, j), F.coeffs, 0.0))


def block_range(grid):
    """Indices of the blocks that are nonempty on this grid."""
    kmax = grid.kmax
    if kmax < 1.0:
        return range(-1, 0)
    return range(-1, int(np.floor(np.log2(kmax))) + 1)


def sobolev_norm(F: SpectralField, s: float, homogeneous: bool = False) -> float:
    """H^s norm (sum of (1+|k|^2)^s |f_hat|^2) or homogeneous |k|^(2s) variant."""
    grid = F.grid
    if homogeneous:
        if s < 0:
            zero = (0,) * grid.dim
            mean = abs(F.coeffs[zero])
            scale = max(float(np.max(np.abs(F.coeffs))), 1.0)
            if mean > 1e-13 * scale:
                raise MeanZeroError(
                    f"homogeneous norm with s={s} < 0 requires a mean-zero field"
                )
        weight = _lambda_table(grid, 2.0 * s)
    else:
        weight = (1.0 + grid.ksq) ** s
    return float(np.sqrt(np.sum(weight * np.abs(F.coeffs) ** 2)))


def bernstein_verify(F: SpectralField, j: int, alpha: float):
    """Per-coefficient extremes of |k|^(2 alpha) / 2^(2 j alpha) on block j.

    The field is restricted to block j first.  For any field supported there
    the returned pair (lo, hi) brackets the ratio
    ||(-Lap)^alpha f|| / (2^(2 j alpha) ||f||) and satisfies
    1 <= lo <= hi <= 2^(2 alpha) for the sharp annulus.
    """
    if j < 0:
        raise ValueError("annulus Bernstein check needs a block index j >= 0")
    if not alpha > 0:
        raise ValueError(f"fractional order must be positive, got {alpha}")
    blocked = lp_block(F, j)
    support = np.abs(blocked.coeffs) > 0.0
    if not np.any(support):
        raise ValueError(f"field has no content in block {j}; ratio undefined")
    ratios = F.grid.kmag[support] ** (2.0 * alpha) / 2.0 ** (2.0 * j * alpha)
    return float(ratios.min()), float(ratios.max())


def _transport(u, f: SpectralField, dealiased: bool = True) -> SpectralField:
    """u . grad f with pseudo-spectral products."""
    parts = gradient(f)
    out = SpectralField.zero(f.grid)
    for ui, dfi in zip(u, parts):
        _check_same_grid(ui, f)
        out = out + multiply(ui, dfi, dealiased=dealiased)
    return out


def commutator_transport(u, f: SpectralField, j: int, dealiased: bool = True) -> SpectralField:
    """[u . grad, block_j] f = u . grad(block_j f) - block_j(u . grad f)."""
    u = tuple(u)
    path1 = _transport(u, lp_block(f, j), dealiased=dealiased)
    path2 = lp_block(_transport(u, f, dealiased=dealiased), j)
    return path1 - path2


def commutator_lambda(g: SpectralField, h: SpectralField, alpha: float,
                      dealiased: bool = True) -> SpectralField:
    """[Lambda^alpha, g] h = Lambda^alpha(g h) - g Lambda^alpha(h)."""
    if alpha == 0:
        return SpectralField.zero(g.grid)
    term1 = lambda_power(multiply(g, h, dealiased=dealiased), alpha)
    term2 = multiply(g, lambda_power(h, alpha), dealiased=dealiased)
    return term1 - term2


def transport_commutator_constants(u, f: SpectralField, sigma: float, js=None):
    """Empirical block constants for the transport commutator.

    For each block j returns
        c_j = 2^(j (sigma+1)) ||[u.grad, block_j] f|| / (||grad u||_{H^(sigma+1)} ||f||_{H^(sigma+1)})
    with ||grad u|| summed over all Jacobian entries.  The sequence is
    reported raw; stability across resolutions is the testable statement.
    """
    u = tuple(u)
    if js is None:
        js = [j for j in block_range(f.grid) if j >= 0]
    grad_sq = 0.0
    for ui in u:
        for dui in gradient(ui):
            grad_sq += sobolev_norm(dui, sigma + 1.0) ** 2
    denom = np.sqrt(grad_sq) * sobolev_norm(f, sigma + 1.0)
    if denom == 0.0:
        raise ValueError("commutator constants undefined for zero input")
    out = {}
    for j in js:
        comm = commutator_transport(u, f, j)
        out[j] = float(2.0 ** (j * (sigma + 1.0)) * comm.l2_norm() / denom)
    return out
