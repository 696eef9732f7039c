"""Direct-convolution Galerkin system, used as an independent oracle.

The state is the set of complex Fourier coefficients with ``|m_i| <= cutoff``
stored on a centred box. Every nonlinear term is assembled by explicit
convolution sums over that box (no transforms, no padding) and projected back
onto it; the coupling enters through the symmetrised trilinear form
``1/2 ((p.grad) w - (w.grad) p, u)``. Time stepping is plain explicit RK4.

This is slow by design; keep the mode count in the hundreds.
"""
from __future__ import annotations

import math

import numpy as np

from .params import ModelParams
from .spectral import Grid, full_spectrum
from .timestep import State

__all__ = [
    "GalerkinBasis",
    "to_box",
    "from_box",
    "galerkin_rhs",
    "galerkin_reference_step",
    "galerkin_energy_rate",
]


class GalerkinBasis:
    """Centred mode box ``|m_i| <= cutoff`` on a grid."""

    def __init__(self, grid: Grid, cutoff: int):
        if cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        if any(cutoff > ni // 2 - 1 for ni in grid.n):
            raise ValueError(f"cutoff {cutoff} exceeds the Nyquist-free range of {grid.n}")
        self.grid = grid
        self.cutoff = cutoff
        self.side = 2 * cutoff + 1
        self.kvec = self.wavevectors(cutoff)
        self.k2 = np.sum(self.kvec**2, axis=0)
        self.inv_k2 = np.zeros_like(self.k2)
        np.divide(1.0, self.k2, out=self.inv_k2, where=self.k2 > 0)

    @property
    def size(self) -> int:
        return self.side**self.grid.dim

    def wavevectors(self, c: int) -> np.ndarray:
        d = self.grid.dim
        m = np.arange(-c, c + 1)
        mesh = np.meshgrid(*[m] * d, indexing="ij")
        return np.stack([2 * math.pi / li * mi for mi, li in zip(mesh, self.grid.box)])

    def project(self, f: np.ndarray) -> np.ndarray:
        """Leray projection per box mode."""
        kf = np.sum(self.kvec * f, axis=0)
        return f - self.kvec * (kf * self.inv_k2)


def to_box(basis: GalerkinBasis, p_hat: np.ndarray) -> np.ndarray:
    """Half-spectrum coefficients to the centred box (orthogonal projection)."""
    grid, c = basis.grid, basis.cutoff
    full = full_spectrum(grid, p_hat)
    idx = np.ix_(*[np.arange(-c, c + 1) % ni for ni in grid.n])
    return np.stack([comp[idx] for comp in full])


def from_box(basis: GalerkinBasis, box: np.ndarray) -> np.ndarray:
    grid, c = basis.grid, basis.cutoff
    full = np.zeros((grid.dim,) + grid.n, dtype=complex)
    idx = np.ix_(*[np.arange(-c, c + 1) % ni for ni in grid.n])
    for i in range(grid.dim):
        full[i][idx] = box[i]
    return full[(Ellipsis,) + (slice(None),) * (grid.dim - 1) + (slice(0, grid.n[-1] // 2 + 1),)]


def _convolve(spec: str, a: np.ndarray, ca: int, b: np.ndarray, cb: int, cout: int):
    """``out(k) = sum_{m + n = k} einsum(spec, a(m), b(n))`` on centred boxes.

    ``a``, ``b`` carry their component axes first and ``dim`` box axes last,
    with half-widths ``ca`` and ``cb``; the result has half-width ``cout``.
    """
    dim = a.ndim - len(spec.split(",")[0])
    lead = len(spec.split("->")[1].replace("...", ""))
    sa = 2 * ca + 1
    so = 2 * cout + 1
    out = None
    for m in np.ndindex(*(sa,) * dim):
        am = a[(Ellipsis,) + m]
        if not np.any(am):
            continue
        shift = [mi - ca for mi in m]
        src, dst = [], []
        for s in shift:
            # output index o = s + n, with n in [-cb, cb] and o in [-cout, cout]
            lo = max(-cb, -cout - s)
            hi = min(cb, cout - s)
            if lo > hi:
                break
            src.append(slice(lo + cb, hi + cb + 1))
            dst.append(slice(lo + s + cout, hi + s + cout + 1))
        else:
            contrib = np.einsum(spec, am, b[(Ellipsis,) + tuple(src)])
            if out is None:
                out = np.zeros(contrib.shape[:lead] + (so,) * dim, dtype=complex)
            out[(Ellipsis,) + tuple(dst)] += contrib
    if out is None:
        comp = np.einsum(spec, a[(Ellipsis,) + (0,) * dim], b[(Ellipsis,) + (0,) * dim]).shape
        out = np.zeros(comp + (so,) * dim, dtype=complex)
    return out


def _grad(kvec: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``G[i, j] = i k_j f_i`` on a box."""
    return 1j * f[:, None] * kvec[None, :]


def galerkin_rhs(basis: GalerkinBasis, p: np.ndarray, params: ModelParams):
    """Right-hand side of the Galerkin ODE and the slaved velocity."""
    c = basis.cutoff
    k, k2 = basis.kvec, basis.k2
    gp = _grad(k, p)
    # (p.grad) p, truncated to the box
    adv_pp = _convolve("j,ij...->i...", p, c, gp, c, c)

    u = np.zeros_like(p)
    if params.coupled:
        force = -(params.mu1 * k2**2 + params.gamma1 * k2) * p - params.lambda1 * adv_pp
        u = basis.project(force) * basis.inv_k2

    acc = params.lambda2 * adv_pp
    if params.alpha != 0.0:
        sq = _convolve("i,i...->...", p, c, p, c, 2 * c)
        acc = acc + params.alpha * _convolve(",i...->i...", sq, 2 * c, p, c, c)
    if np.any(u):
        gu = _grad(k, u)
        acc = acc + _convolve("j,ij...->i...", u, c, gp, c, c)
        # Riesz representative of w -> 1/2 ((p.grad) w - (w.grad) p, u):
        # -1/2 [(p.grad) u + (grad p)^T u]
        trilinear = _convolve("j,ij...->i...", p, c, gu, c, c) + _convolve(
            "ij,i...->j...", gp, c, u, c, c
        )
        acc = acc - 0.5 * trilinear
        if params.kappa != 0.0:
            gu_p = _convolve("ij,j...->i...", gu, c, p, c, c)
            gut_p = _convolve("ji,j...->i...", gu, c, p, c, c)
            acc = acc + 0.5 * params.kappa * (gu_p + gut_p)
    lin = -(params.mu2 * k2**2 + params.gamma2 * k2 + params.beta)
    return lin * p - basis.project(acc), u


def galerkin_reference_step(
    state: State, dt: float, params: ModelParams, basis: GalerkinBasis
) -> State:
    """One explicit RK4 step of the Galerkin ODE.

    ``state.p_hat`` is a half-spectrum array on ``basis.grid``; it is first
    projected onto the box and the result is returned in the same layout.
    """
    p = to_box(basis, state.p_hat)
    if dt == 0:
        return State(state.t, from_box(basis, p))
    f = lambda q: galerkin_rhs(basis, q, params)[0]  # noqa: E731
    a = f(p)
    b = f(p + 0.5 * dt * a)
    c = f(p + 0.5 * dt * b)
    d = f(p + dt * c)
    p_new = p + dt / 6.0 * (a + 2 * b + 2 * c + d)
    return State(state.t + dt, from_box(basis, p_new))


def galerkin_energy_rate(basis: GalerkinBasis, p: np.ndarray, params: ModelParams):
    """``(d/dt p, p)`` and the dissipation it should equal, on the box."""
    rhs, _ = galerkin_rhs(basis, p, params)
    vol = basis.grid.volume
    rate = vol * float(np.real(np.sum(rhs * np.conj(p))))
    k2 = basis.k2
    sq = _convolve("i,i...->...", p, basis.cutoff, p, basis.cutoff, 2 * basis.cutoff)
    l4 = vol * float(np.real(np.sum(sq * np.conj(sq))))
    psq = np.sum(np.abs(p) ** 2, axis=0)
    diss = vol * float(np.sum((params.mu2 * k2**2 + params.gamma2 * k2 + params.beta) * psq))
    return rate, -(diss + params.alpha * l4)
