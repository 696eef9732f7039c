"""Right-hand-side terms of the coupled Stokes / polar-order system.

All functions take and return half-spectrum coefficient arrays on a
:class:`~polarswim.spectral.Grid`. Gradient convention: ``(grad u)[i, j] =
d_j u_i``, so ``(grad u) p`` has components ``sum_j d_j u_i p_j``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ModelParams
from .spectral import (
    Grid,
    PAD_QUADRATIC,
    dealiased_product,
    from_padded_physical,
    gradient,
    leray_project,
    to_padded_physical,
)

__all__ = [
    "Residual",
    "advect",
    "cubic",
    "grad_times",
    "vorticity_coupling",
    "strain_coupling",
    "stokes_inverse",
    "solve_u",
    "linear_rate",
    "nonlinear_p",
    "stage",
    "rhs_p",
    "residual",
]


def _check(grid: Grid, *fields: np.ndarray) -> None:
    for f in fields:
        if f.shape != (grid.dim,) + grid.spectral_shape:
            raise ValueError(f"field shape {f.shape} does not match grid")


def advect(grid: Grid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dealiased ``(a . grad) b``; not projected."""
    _check(grid, a, b)
    return dealiased_product(
        grid,
        [a, gradient(grid, b)],
        lambda av, gb: np.einsum("j...,ij...->i...", av, gb),
        arity=2,
    )


def cubic(grid: Grid, p: np.ndarray) -> np.ndarray:
    """Dealiased ``|p|^2 p`` (padding factor 2)."""
    _check(grid, p)
    return dealiased_product(grid, [p], lambda pv: np.sum(pv * pv, axis=0) * pv, arity=3)


def _grad_part(grid: Grid, u: np.ndarray, p: np.ndarray, sign: float) -> np.ndarray:
    def combine(gu, pv):
        part = 0.5 * (gu + sign * np.swapaxes(gu, 0, 1))
        return np.einsum("ij...,j...->i...", part, pv)

    _check(grid, u, p)
    return dealiased_product(grid, [gradient(grid, u), p], combine, arity=2)


def grad_times(grid: Grid, u: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Dealiased ``(grad u) p``."""
    _check(grid, u, p)
    return dealiased_product(
        grid,
        [gradient(grid, u), p],
        lambda gu, pv: np.einsum("ij...,j...->i...", gu, pv),
        arity=2,
    )


def vorticity_coupling(grid: Grid, u: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Dealiased ``(grad u)_skw p``."""
    return _grad_part(grid, u, p, -1.0)


def strain_coupling(grid: Grid, u: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Dealiased ``(grad u)_sym p``."""
    return _grad_part(grid, u, p, 1.0)


def stokes_inverse(grid: Grid, f: np.ndarray) -> np.ndarray:
    """``P f / |k|^2`` per mode, zero mean."""
    return leray_project(grid, f) * grid.inv_k2


def solve_u(grid: Grid, p: np.ndarray, params: ModelParams) -> np.ndarray:
    """Velocity slaved to ``p`` through the Stokes equation.

    ``u = A^{-1} P(-mu1 lap^2 p + gamma1 lap p - lambda1 (p.grad) p)``.
    """
    _check(grid, p)
    if not params.coupled:
        return np.zeros_like(p)
    k2 = grid.k2
    force = -(params.mu1 * k2**2 + params.gamma1 * k2) * p
    if params.lambda1 != 0.0:
        force = force - params.lambda1 * advect(grid, p, p)
    return stokes_inverse(grid, force)


def linear_rate(grid: Grid, params: ModelParams) -> np.ndarray:
    """Per-mode growth rate ``-(mu2 |k|^4 + gamma2 |k|^2 + beta)``."""
    k2 = grid.k2
    return -(params.mu2 * k2**2 + params.gamma2 * k2 + params.beta)


def nonlinear_p(
    grid: Grid, p: np.ndarray, u: np.ndarray, params: ModelParams
) -> np.ndarray:
    """Projected non-diagonal part of the p tendency.

    The quadratic terms share one padded evaluation; the cubic term uses its
    own (finer) padding.
    """
    _check(grid, p, u)
    lam2, kappa = params.lambda2, params.kappa
    has_u = bool(np.any(u))
    acc = np.zeros_like(p)
    if lam2 != 0.0 or has_u:
        def combine(pv, gp, uv=None, gu=None):
            out = np.einsum("j...,ij...->i...", lam2 * pv + (uv if uv is not None else 0.0), gp)
            if gu is not None:
                # -(grad u)_skw p + kappa (grad u)_sym p
                w = 0.5 * (kappa - 1.0) * gu + 0.5 * (kappa + 1.0) * np.swapaxes(gu, 0, 1)
                out += np.einsum("ij...,j...->i...", w, pv)
            return out

        factors = [p, gradient(grid, p)]
        if has_u:
            factors += [u, gradient(grid, u)]
        acc += dealiased_product(grid, factors, combine, arity=2)
    if params.alpha != 0.0:
        acc += params.alpha * cubic(grid, p)
    return -leray_project(grid, acc)


def stage(grid: Grid, p: np.ndarray, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """``(nonlinear_p(p, u), u)`` with ``u = solve_u(p)``, sharing transforms.

    ``(p . grad) p`` feeds both the Stokes forcing and the polar tendency, so
    it is evaluated once.
    """
    _check(grid, p)
    if not params.coupled:
        u = np.zeros_like(p)
        return nonlinear_p(grid, p, u, params), u
    f = PAD_QUADRATIC
    pv = to_padded_physical(grid, p, f)
    gp = to_padded_physical(grid, gradient(grid, p), f)
    adv_pp = from_padded_physical(grid, np.einsum("j...,ij...->i...", pv, gp), f)
    k2 = grid.k2
    u = stokes_inverse(grid, -(params.mu1 * k2**2 + params.gamma1 * k2) * p
                       - params.lambda1 * adv_pp)
    uv = to_padded_physical(grid, u, f)
    gu = to_padded_physical(grid, gradient(grid, u), f)
    kappa = params.kappa
    w = 0.5 * (kappa - 1.0) * gu + 0.5 * (kappa + 1.0) * np.swapaxes(gu, 0, 1)
    rest = np.einsum("j...,ij...->i...", uv, gp) + np.einsum("ij...,j...->i...", w, pv)
    acc = params.lambda2 * adv_pp + from_padded_physical(grid, rest, f)
    if params.alpha != 0.0:
        acc += params.alpha * cubic(grid, p)
    return -leray_project(grid, acc), u


def rhs_p(grid: Grid, p: np.ndarray, u: np.ndarray, params: ModelParams) -> np.ndarray:
    """Full tendency ``dp/dt`` with the pressure gradient projected out."""
    return linear_rate(grid, params) * leray_project(grid, p) + nonlinear_p(grid, p, u, params)


@dataclass(frozen=True)
class Residual:
    """Strong-form defects of a candidate pair ``(u~, p~)``, both projected."""

    r1_hat: np.ndarray
    r2_hat: np.ndarray


def residual(
    grid: Grid,
    u_t: np.ndarray,
    p_t: np.ndarray,
    dpdt_t: np.ndarray,
    params: ModelParams,
) -> Residual:
    """Evaluate ``R1`` (Stokes) and ``R2`` (polar) on a candidate pair."""
    _check(grid, u_t, p_t, dpdt_t)
    k2 = grid.k2
    adv_pp = advect(grid, p_t, p_t)
    r1 = k2 * u_t + (params.mu1 * k2**2 + params.gamma1 * k2) * p_t + params.lambda1 * adv_pp

    r2 = (
        dpdt_t
        + (params.mu2 * k2**2 + params.gamma2 * k2 + params.beta) * p_t
        + params.lambda2 * adv_pp
        + params.alpha * cubic(grid, p_t)
    )
    if np.any(u_t):
        r2 = r2 + advect(grid, u_t, p_t) - vorticity_coupling(grid, u_t, p_t)
        if params.kappa != 0.0:
            r2 = r2 + params.kappa * strain_coupling(grid, u_t, p_t)
    return Residual(leray_project(grid, r1), leray_project(grid, r2))
