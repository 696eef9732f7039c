"""Periodic grids, real FFTs and the spectral calculus used by the solver.

Vector fields are plain arrays with the component axis first:

* physical values: real, shape ``(d, *grid.n)``
* spectral coefficients: complex, shape ``(d, *grid.spectral_shape)``, the
  half spectrum produced by ``rfftn`` over the spatial axes.

The forward transform divides by the number of collocation points, so a
field is ``f(x) = sum_k fhat(k) exp(i k.x)`` and Parseval reads
``||f||^2 = V sum_k |fhat(k)|^2`` over the *full* spectrum.

Fields evolved by the solver keep every Nyquist mode at zero; nonlinear
products are evaluated on zero-padded grids (3/2 rule for quadratic, 2 for
cubic terms) and truncated back, which is alias free for such fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "HermitianSymmetryError",
    "forward",
    "inverse",
    "full_spectrum",
    "hermitian_defect",
    "divergence_defect",
    "leray_project",
    "apply_laplacian",
    "gradient",
    "divergence",
    "to_padded_physical",
    "from_padded_physical",
    "dealiased_product",
    "truncate_nyquist",
    "inner",
    "norm_l2",
    "norm_grad",
    "norm_laplacian",
    "norm_l4",
    "norm_lq",
    "max_norm",
    "max_grad_norm",
    "random_solenoidal_field",
    "PAD_QUADRATIC",
    "PAD_CUBIC",
]

PAD_QUADRATIC = 1.5
PAD_CUBIC = 2.0


class HermitianSymmetryError(ValueError):
    """Spectral coefficients do not describe a real field."""


@dataclass(frozen=True)
class Grid:
    """Uniform collocation grid on the torus ``prod_i [0, L_i)``."""

    dim: int
    n: tuple[int, ...]
    box: tuple[float, ...]

    def __post_init__(self):
        n = tuple(int(v) for v in np.broadcast_to(self.n, (self.dim,)))
        box = tuple(float(v) for v in np.broadcast_to(self.box, (self.dim,)))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "box", box)
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        for ni in n:
            if ni < 4 or ni % 2:
                raise ValueError(f"mode counts must be even and >= 4, got {n}")
        for li in box:
            if not li > 0:
                raise ValueError(f"box lengths must be positive, got {box}")

    @classmethod
    def cube(cls, dim: int, n: int, box: float = 2 * math.pi) -> "Grid":
        return cls(dim, (n,) * dim, (box,) * dim)

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return self.n[:-1] + (self.n[-1] // 2 + 1,)

    @cached_property
    def volume(self) -> float:
        return float(np.prod(self.box))

    @cached_property
    def npts(self) -> int:
        return int(np.prod(self.n))

    @cached_property
    def modes(self) -> tuple[np.ndarray, ...]:
        """Integer mode numbers per axis, broadcastable over the half spectrum."""
        out = []
        for i, ni in enumerate(self.n):
            if i == self.dim - 1:
                m = np.arange(ni // 2 + 1)
            else:
                m = np.fft.fftfreq(ni, 1.0 / ni).astype(int)
            shape = [1] * self.dim
            shape[i] = m.size
            out.append(m.reshape(shape))
        return tuple(out)

    @cached_property
    def kvec(self) -> np.ndarray:
        """Wavevectors, shape ``(d, *spectral_shape)``."""
        k = np.zeros((self.dim,) + self.spectral_shape)
        for i, m in enumerate(self.modes):
            k[i] = 2 * math.pi / self.box[i] * m
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.kvec**2, axis=0)

    @cached_property
    def inv_k2(self) -> np.ndarray:
        """``1/|k|^2`` with the zero mode mapped to 0."""
        k2 = self.k2
        out = np.zeros_like(k2)
        np.divide(1.0, k2, out=out, where=k2 > 0)
        return out

    @cached_property
    def nyquist_free(self) -> np.ndarray:
        """True on modes with ``|m_i| < N_i/2`` in every direction."""
        mask = np.ones(self.spectral_shape, dtype=bool)
        for m, ni in zip(self.modes, self.n):
            mask = mask & (np.abs(m) < ni // 2)
        return mask

    @cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., -1] = 1.0
        return w

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        """Collocation coordinates as broadcastable 1-d arrays."""
        out = []
        for i, (ni, li) in enumerate(zip(self.n, self.box)):
            shape = [1] * self.dim
            shape[i] = ni
            out.append((np.arange(ni) * (li / ni)).reshape(shape))
        return tuple(out)

    def padded(self, factor: float) -> tuple[int, ...]:
        return tuple(int(round(factor * ni)) for ni in self.n)

    def zeros(self, ncomp: int | None = None) -> np.ndarray:
        ncomp = self.dim if ncomp is None else ncomp
        return np.zeros((ncomp,) + self.spectral_shape, dtype=complex)


# -- transforms -------------------------------------------------------------

def _check_physical(grid: Grid, f: np.ndarray) -> None:
    if f.shape[-grid.dim:] != grid.n:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.n}")


def _check_spectral(grid: Grid, f_hat: np.ndarray) -> None:
    if f_hat.shape[-grid.dim:] != grid.spectral_shape:
        raise ValueError(
            f"coefficient shape {f_hat.shape} does not match grid {grid.spectral_shape}"
        )


def forward(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Real values -> half-spectrum coefficients (normalised by ``npts``)."""
    f = np.asarray(f, dtype=float)
    _check_physical(grid, f)
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite values")
    return sfft.rfftn(f, axes=grid.axes) / grid.npts


def _mirror_index(n: int) -> np.ndarray:
    return (-np.arange(n)) % n


def _conj_mirror_plane(grid: Grid, plane: np.ndarray) -> np.ndarray:
    """``conj(plane[-m])`` over the non-last spatial axes of a last-axis plane."""
    out = plane
    for ax, ni in zip(range(-grid.dim + 1, 0), grid.n[:-1]):
        out = np.take(out, _mirror_index(ni), axis=ax)
    return np.conj(out)


def _self_conjugate_planes(grid: Grid) -> list[int]:
    return [0, grid.spectral_shape[-1] - 1]


def hermitian_defect(grid: Grid, f_hat: np.ndarray) -> float:
    """Largest violation of ``fhat(-k) = conj(fhat(k))``, relative to max |fhat|."""
    _check_spectral(grid, f_hat)
    scale = float(np.max(np.abs(f_hat))) if f_hat.size else 0.0
    if scale == 0.0:
        return 0.0
    worst = 0.0
    for j in _self_conjugate_planes(grid):
        plane = f_hat[..., j]
        worst = max(worst, float(np.max(np.abs(plane - _conj_mirror_plane(grid, plane)))))
    return worst / scale


def _symmetrize(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    out = f_hat.copy()
    for j in _self_conjugate_planes(grid):
        plane = f_hat[..., j]
        out[..., j] = 0.5 * (plane + _conj_mirror_plane(grid, plane))
    return out


def inverse(grid: Grid, f_hat: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Half-spectrum coefficients -> real values.

    Raises :class:`HermitianSymmetryError` when the coefficients are not
    those of a real field to within ``tol`` (relative); smaller defects are
    removed by symmetrising before the transform.
    """
    _check_spectral(grid, f_hat)
    defect = hermitian_defect(grid, f_hat)
    if defect > tol:
        raise HermitianSymmetryError(f"Hermitian symmetry defect {defect:.3e} > {tol:.1e}")
    return sfft.irfftn(_symmetrize(grid, f_hat) * grid.npts, s=grid.n, axes=grid.axes)


def full_spectrum(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    """Expand half-spectrum coefficients to the ``fftn`` layout."""
    _check_spectral(grid, f_hat)
    nl = grid.n[-1]
    full = np.zeros(f_hat.shape[: -grid.dim] + grid.n, dtype=complex)
    full[..., : nl // 2 + 1] = f_hat
    upper = np.arange(nl // 2 + 1, nl)
    if upper.size:
        src = f_hat[..., nl - upper]
        for ax, ni in zip(range(-grid.dim, -1), grid.n[:-1]):
            src = np.take(src, _mirror_index(ni), axis=ax)
        full[..., upper] = np.conj(src)
    return full


def truncate_nyquist(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    return f_hat * grid.nyquist_free


def _band_slices(n: int, m: int, last: bool) -> list[tuple[slice, slice]]:
    """(source, destination) index pairs for copying non-Nyquist modes."""
    h = n // 2
    if last:
        return [(slice(0, h), slice(0, h))]
    return [(slice(0, h), slice(0, h)), (slice(n - h + 1, n), slice(m - h + 1, m))]


def _pad(grid: Grid, f_hat: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    lead = f_hat.shape[: -grid.dim]
    out = np.zeros(lead + shape[:-1] + (shape[-1] // 2 + 1,), dtype=complex)
    pairs = [_band_slices(ni, mi, i == grid.dim - 1)
             for i, (ni, mi) in enumerate(zip(grid.n, shape))]
    for combo in _product(pairs):
        src = (Ellipsis,) + tuple(p[0] for p in combo)
        dst = (Ellipsis,) + tuple(p[1] for p in combo)
        out[dst] = f_hat[src]
    return out


def _truncate(grid: Grid, g_hat: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    lead = g_hat.shape[: -grid.dim]
    out = np.zeros(lead + grid.spectral_shape, dtype=complex)
    pairs = [_band_slices(ni, mi, i == grid.dim - 1)
             for i, (ni, mi) in enumerate(zip(grid.n, shape))]
    for combo in _product(pairs):
        src = (Ellipsis,) + tuple(p[1] for p in combo)
        dst = (Ellipsis,) + tuple(p[0] for p in combo)
        out[dst] = g_hat[src]
    return out


def _product(pairs):
    if not pairs:
        yield ()
        return
    for head in pairs[0]:
        for tail in _product(pairs[1:]):
            yield (head,) + tail


def to_padded_physical(grid: Grid, f_hat: np.ndarray, factor: float) -> np.ndarray:
    """Evaluate coefficients on the ``factor``-times refined collocation grid.

    Nyquist modes of ``f_hat`` are dropped.
    """
    shape = grid.padded(factor)
    npad = int(np.prod(shape))
    return sfft.irfftn(_pad(grid, f_hat, shape) * npad, s=shape, axes=grid.axes)


def from_padded_physical(grid: Grid, g: np.ndarray, factor: float) -> np.ndarray:
    """Transform values on the refined grid and truncate to Nyquist-free modes."""
    shape = grid.padded(factor)
    npad = int(np.prod(shape))
    return _truncate(grid, sfft.rfftn(g, axes=grid.axes) / npad, shape)


def dealiased_product(
    grid: Grid,
    factors: Sequence[np.ndarray],
    combine: Callable[..., np.ndarray],
    arity: int,
) -> np.ndarray:
    """Alias-free spectral coefficients of a pointwise polynomial product.

    ``factors`` are spectral arrays (any leading shape); ``combine`` receives
    their values on the padded grid and returns the pointwise product. The
    padding factor is 3/2 for ``arity=2`` and 2 for ``arity=3``.
    """
    factor = {2: PAD_QUADRATIC, 3: PAD_CUBIC}[arity]
    values = [to_padded_physical(grid, f, factor) for f in factors]
    return from_padded_physical(grid, combine(*values), factor)


# -- differential operators -------------------------------------------------

def leray_project(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    """Apply ``I - k k^T / |k|^2`` per mode; the zero mode is left as is."""
    k = grid.kvec
    kdotf = np.sum(k * f_hat, axis=0)
    return f_hat - k * (kdotf * grid.inv_k2)


def apply_laplacian(grid: Grid, f_hat: np.ndarray, order: int = 1) -> np.ndarray:
    """Multiply mode ``k`` by ``(-|k|^2)**order``."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    return (-grid.k2) ** order * f_hat


def gradient(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    """``G[i, j] = d_j f_i`` in spectral space, shape ``(d, d, ...)``."""
    return 1j * f_hat[:, None] * grid.kvec[None, :]


def divergence(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    return 1j * np.sum(grid.kvec * f_hat, axis=0)


def divergence_defect(grid: Grid, f_hat: np.ndarray) -> float:
    """``max_k |k.fhat(k)|/|k|`` relative to ``max_k |fhat(k)|``."""
    scale = float(np.max(np.sqrt(np.sum(np.abs(f_hat) ** 2, axis=0))))
    if scale == 0.0:
        return 0.0
    kf = np.abs(np.sum(grid.kvec * f_hat, axis=0)) * np.sqrt(grid.inv_k2)
    return float(np.max(kf)) / scale


# -- norms --------------------------------------------------------------------

def inner(grid: Grid, f_hat: np.ndarray, g_hat: np.ndarray) -> float:
    """L2 inner product of two real fields from their coefficients."""
    prod = np.real(f_hat * np.conj(g_hat)) * grid.weights
    return grid.volume * float(np.sum(prod))


def _weighted_sq(grid: Grid, f_hat: np.ndarray, weight=None) -> float:
    sq = np.sum(np.abs(f_hat) ** 2, axis=tuple(range(f_hat.ndim - grid.dim)))
    if weight is not None:
        sq = sq * weight
    return grid.volume * float(np.sum(sq * grid.weights))


def norm_l2(grid: Grid, f_hat: np.ndarray) -> float:
    return math.sqrt(_weighted_sq(grid, f_hat))


def norm_grad(grid: Grid, f_hat: np.ndarray) -> float:
    return math.sqrt(_weighted_sq(grid, f_hat, grid.k2))


def norm_laplacian(grid: Grid, f_hat: np.ndarray) -> float:
    return math.sqrt(_weighted_sq(grid, f_hat, grid.k2**2))


def norm_lq(grid: Grid, f_hat: np.ndarray, q: float, pad: float = 1.0) -> float:
    """``(int |f|^q)^(1/q)`` by collocation quadrature on a ``pad``-refined grid."""
    f = to_padded_physical(grid, f_hat, pad) if pad != 1.0 else _physical_nocheck(grid, f_hat)
    mag = np.sqrt(np.sum(f**2, axis=0))
    cell = grid.volume / mag.size
    return float(cell * np.sum(mag**q)) ** (1.0 / q)


def norm_l4(grid: Grid, f_hat: np.ndarray, pad: float = PAD_CUBIC) -> float:
    """L4 norm; with ``pad=2`` the quadrature is exact for Nyquist-free fields."""
    return norm_lq(grid, f_hat, 4.0, pad)


def _physical_nocheck(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    return sfft.irfftn(_symmetrize(grid, f_hat) * grid.npts, s=grid.n, axes=grid.axes)


def max_norm(grid: Grid, f_hat: np.ndarray) -> float:
    """Collocation maximum of ``|f(x)|``."""
    f = _physical_nocheck(grid, f_hat)
    return float(np.max(np.sqrt(np.sum(f**2, axis=0))))


def max_grad_norm(grid: Grid, f_hat: np.ndarray) -> float:
    """Collocation maximum of the Frobenius norm of ``grad f``."""
    g = _physical_nocheck(grid, gradient(grid, f_hat))
    return float(np.max(np.sqrt(np.sum(g**2, axis=(0, 1)))))


# -- initial data -------------------------------------------------------------

def _full_wavenumber_magnitude(grid: Grid) -> np.ndarray:
    ks = np.meshgrid(
        *[2 * math.pi / li * np.fft.fftfreq(ni, 1.0 / ni) for ni, li in zip(grid.n, grid.box)],
        indexing="ij",
    )
    return np.stack(ks)


def random_solenoidal_field(
    grid: Grid, seed: int, spectrum: Callable[[np.ndarray], np.ndarray]
) -> np.ndarray:
    """Seeded random divergence-free field with ``E|phat(k)|^2 = spectrum(|k|)^2``.

    Draws come from numpy's Philox 4x64 counter-based generator seeded with
    ``seed``: one ``standard_normal`` array of shape ``(2, d, *n)`` (real and
    imaginary parts over the full ``fftn`` layout), in that order. The draws
    are Hermitian-symmetrised, scaled by the envelope, Leray projected, and
    the zero and Nyquist modes are cleared.
    """
    d = grid.dim
    gen = np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))
    z = gen.standard_normal((2, d) + grid.n)
    xi = (z[0] + 1j * z[1]) / math.sqrt(2.0)
    mirrored = xi
    for ax, ni in zip(range(-d, 0), grid.n):
        mirrored = np.take(mirrored, _mirror_index(ni), axis=ax)
    xi = (xi + np.conj(mirrored)) / math.sqrt(2.0)

    k = _full_wavenumber_magnitude(grid)
    kmag = np.sqrt(np.sum(k**2, axis=0))
    amp = np.asarray(spectrum(kmag), dtype=float) / math.sqrt(d - 1)
    xi = xi * amp
    k2 = kmag**2
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    xi = xi - k * (np.sum(k * xi, axis=0) * inv)

    half = xi[..., : grid.n[-1] // 2 + 1].copy()
    half[(slice(None),) + (0,) * d] = 0.0
    return truncate_nyquist(grid, half)
