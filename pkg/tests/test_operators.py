import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import DirectConvolution, band_limited, rel, smooth_field
from polarswim import operators as ops
from polarswim.params import BaseCoefficients, apply_coupling
from polarswim.spectral import (
    Grid,
    apply_laplacian,
    dealiased_product,
    inner,
    leray_project,
    norm_l2,
    norm_l4,
    norm_laplacian,
    norm_grad,
)

seeds = st.integers(0, 2**32 - 1)
G = Grid.cube(3, 8)


def params(eps=0.3, **kw):
    base = dict(mu1_tilde=0.7, gamma1_tilde=-0.4, lambda1_tilde=1.3, mu2=0.2, gamma2=-0.3,
                lambda2=0.9, alpha=1.1, beta=0.25)
    base.update(kw)
    return apply_coupling(BaseCoefficients(**base), eps)


# -- nonlinear terms against direct convolution ------------------------------

@given(seeds)
def test_advect_direct(seed):
    D = DirectConvolution(G, 3)
    a, b = band_limited(G, seed, 3), band_limited(G, seed + 1, 3, False)
    assert rel(D.box(ops.advect(G, a, b)), D.advect(a, b)) <= 1e-11


@given(seeds)
def test_cubic_direct(seed):
    D = DirectConvolution(G, 3)
    p = band_limited(G, seed, 3, False)
    assert rel(D.box(ops.cubic(G, p)), D.cubic(p)) <= 1e-11


@given(seeds)
def test_coupling_terms_direct(seed):
    D = DirectConvolution(G, 3)
    u, p = band_limited(G, seed, 3), band_limited(G, seed + 1, 3, False)
    assert rel(D.box(ops.vorticity_coupling(G, u, p)), D.grad_times(u, p, "skw")) <= 1e-11
    assert rel(D.box(ops.strain_coupling(G, u, p)), D.grad_times(u, p, "sym")) <= 1e-11
    assert rel(D.box(ops.grad_times(G, u, p)), D.grad_times(u, p)) <= 1e-11


def test_advect_single_modes():
    a = G.zeros()
    b = G.zeros()
    a[1, 1, 0, 0] = a[1, -1, 0, 0] = 0.5        # a = (0, cos x, 0)
    b[0, 0, 1, 0], b[0, 0, -1, 0] = -0.5j, 0.5j  # b = (sin y, 0, 0)
    got = ops.advect(G, a, b)
    # (a.grad) b = cos x * cos y e_x: 1/4 at (+-1, +-1, 0)
    want = G.zeros()
    for i in (1, -1):
        for j in (1, -1):
            want[0, i, j, 0] = 0.25
    assert rel(got, want) <= 1e-15


def test_advect_constant_and_mean():
    const = G.zeros()
    const[:, 0, 0, 0] = [1.0, -2.0, 0.5]
    a = smooth_field(G, 1)
    assert np.max(np.abs(ops.advect(G, a, const))) <= 1e-15
    adv = ops.advect(G, a, smooth_field(G, 2))
    assert np.max(np.abs(adv[:, 0, 0, 0])) <= 1e-15 * np.max(np.abs(adv))


def test_cubic_single_mode_harmonics():
    a = 0.8
    p = G.zeros()
    p[1, 1, 0, 0] = p[1, -1, 0, 0] = a / 2      # p = a cos x e_y
    c = ops.cubic(G, p)
    # cos^3 = 3/4 cos + 1/4 cos 3x, each split over +-k
    assert c[1, 1, 0, 0] == pytest.approx(3 * a**3 / 8, abs=1e-15)
    assert c[1, 3, 0, 0] == pytest.approx(a**3 / 8, abs=1e-15)
    c[1, [1, -1, 3, -3], 0, 0] = 0
    assert np.max(np.abs(c)) <= 1e-15
    assert not np.any(ops.cubic(G, G.zeros()))


@given(seeds)
def test_cubic_pairing_is_l4(seed):
    p = smooth_field(G, seed, amp=1.0)
    assert abs(inner(G, ops.cubic(G, p), p) - norm_l4(G, p) ** 4) <= 1e-11 * norm_l4(G, p) ** 4


def test_vorticity_of_pure_strain_vanishes():
    u = G.zeros()
    # u = (sin x, -sin y, 0)... gradient diag(cos x, -cos y, 0) is symmetric
    u[0, 1, 0, 0], u[0, -1, 0, 0] = -0.5j, 0.5j
    u[1, 0, 1, 0], u[1, 0, -1, 0] = 0.5j, -0.5j
    p = smooth_field(G, 3)
    assert np.max(np.abs(ops.vorticity_coupling(G, u, p))) <= 1e-15


def test_rigid_rotation_pair():
    # u = (0, 0, sin y) -> (grad u)_skw has entries +-cos(y)/2 in (z, y)
    u = G.zeros()
    u[2, 0, 1, 0], u[2, 0, -1, 0] = -0.5j, 0.5j
    p = G.zeros()
    p[1, 0, 0, 0] = 1.0                       # p = e_y
    got = ops.vorticity_coupling(G, u, p)
    want = G.zeros()
    want[2, 0, 1, 0] = want[2, 0, -1, 0] = 0.25   # 1/2 cos y e_z
    assert rel(got, want) <= 1e-15


@given(seeds)
def test_strain_plus_skew_is_full_gradient(seed):
    u, p = smooth_field(G, seed), smooth_field(G, seed + 7)
    total = ops.strain_coupling(G, u, p) + ops.vorticity_coupling(G, u, p)
    assert rel(total, ops.grad_times(G, u, p)) <= 1e-12
    assert not np.any(ops.strain_coupling(G, G.zeros(), p))


@given(seeds, st.floats(0.01, 3.0))
def test_cancellations(seed, eps):
    p = smooth_field(G, seed, amp=1.0)
    u = ops.solve_u(G, p, params(eps))
    scale = norm_l2(G, u) * norm_l2(G, p) * max(1.0, norm_grad(G, u), norm_grad(G, p))
    assert abs(inner(G, ops.vorticity_coupling(G, u, p), p)) <= 1e-11 * scale
    assert abs(inner(G, ops.advect(G, u, p), p)) <= 1e-11 * scale


# -- Stokes solve -------------------------------------------------------------

def test_stokes_inverse_modes():
    f = G.zeros()
    f[0, 0, 2, 0] = f[0, 0, -2, 0] = 0.3      # along x, varies in y: solenoidal
    assert rel(ops.stokes_inverse(G, f), f / 4.0) <= 1e-15
    grad = 1j * G.kvec * (G.k2 > 0) * (1.0 + 0.0j)
    assert np.max(np.abs(ops.stokes_inverse(G, grad))) <= 1e-15


@given(seeds)
def test_stokes_round_trip(seed):
    f = smooth_field(G, seed) + ops.advect(G, smooth_field(G, seed + 1), smooth_field(G, seed + 2))
    back = leray_project(G, -apply_laplacian(G, ops.stokes_inverse(G, f)))
    Pf = leray_project(G, f)
    Pf[:, 0, 0, 0] = 0
    assert rel(back, Pf) <= 1e-13


def test_solve_u_decoupled():
    assert not np.any(ops.solve_u(G, smooth_field(G, 1), params(0.0)))


def test_solve_u_single_mode_closed_form():
    prm = params(0.5)
    p = G.zeros()
    p[2, 1, 1, 0], p[2, -1, -1, 0] = 0.3 + 0.1j, 0.3 - 0.1j  # e_z, k = (1, 1, 0)
    assert np.max(np.abs(ops.advect(G, p, p))) <= 1e-16     # so the lambda1 term drops
    k2 = 2.0
    assert rel(ops.solve_u(G, p, prm), -(prm.mu1 * k2 + prm.gamma1) * p) <= 1e-14


def test_solve_u_homogeneous_in_epsilon():
    p = smooth_field(G, 4)
    u1 = ops.solve_u(G, p, params(0.1))
    u2 = ops.solve_u(G, p, params(0.4))
    assert rel(u2, 4.0 * u1) <= 1e-13
    assert not np.any(u1[(slice(None),) + (0,) * 3])


def test_velocity_energy_estimate():
    """||u||^2 <= eps^2 C (||p||_4^4 + ||lap p||^2) with one C for all fields; ||u|| ~ eps."""
    ratios = []
    for s in range(8):
        p = smooth_field(G, s, amp=0.5 + 0.25 * s)
        u = ops.solve_u(G, p, params(1.0))
        ratios.append(norm_l2(G, u) ** 2 / (norm_l4(G, p) ** 4 + norm_laplacian(G, p) ** 2))
    C = max(ratios)
    assert 0 < C < np.inf
    p = smooth_field(G, 99)
    e = np.array([1e-3, 1e-2, 1e-1, 1.0])
    n = [norm_l2(G, ops.solve_u(G, p, params(x))) for x in e]
    slope = np.polyfit(np.log(e), np.log(n), 1)[0]
    assert abs(slope - 1.0) <= 0.05


# -- tendency -------------------------------------------------------------------

def test_rhs_linear_single_mode():
    prm = params(0.0, lambda2=1e-9, alpha=1e-9).with_epsilon(0.0)
    p = G.zeros()
    p[0, 0, 2, 1], p[0, 0, -2, 1] = 0.2, 0.2j
    p = leray_project(G, p * 1e-4)  # tiny amplitude: nonlinear terms negligible below
    rate = -(prm.mu2 * G.k2**2 + prm.gamma2 * G.k2 + prm.beta)
    got = ops.rhs_p(G, p, G.zeros(), prm)
    assert rel(got, rate * p) <= 1e-12


def test_rhs_zero():
    prm = params()
    assert not np.any(ops.rhs_p(G, G.zeros(), G.zeros(), prm))
    assert not np.any(ops.stage(G, G.zeros(), prm)[0])


@st.composite
def coefficient_sets(draw):
    f = lambda lo, hi: draw(st.floats(lo, hi))  # noqa: E731
    return apply_coupling(
        BaseCoefficients(mu1_tilde=f(0.1, 2), gamma1_tilde=f(-2, 2), lambda1_tilde=f(0.1, 2),
                         mu2=f(0.01, 2), gamma2=f(-2, 2), lambda2=f(0.1, 2), alpha=f(0.1, 2),
                         beta=f(-2, 2)),
        f(0.0, 2.0),
    )


@given(seeds, coefficient_sets())
def test_energy_identity(seed, prm):
    p = smooth_field(G, seed, amp=1.0)
    u = ops.solve_u(G, p, prm)
    lhs = inner(G, ops.rhs_p(G, p, u, prm), p)
    parts = [prm.mu2 * norm_laplacian(G, p) ** 2, prm.gamma2 * norm_grad(G, p) ** 2,
             prm.alpha * norm_l4(G, p) ** 4, prm.beta * norm_l2(G, p) ** 2]
    assert abs(lhs + sum(parts)) <= 1e-10 * sum(abs(x) for x in parts)


@given(seeds, coefficient_sets(), st.floats(-1, 1))
def test_stage_matches_separate_evaluation(seed, prm, kappa):
    prm = prm.with_base(kappa=kappa)
    p = smooth_field(G, seed, amp=1.0)
    n, u = ops.stage(G, p, prm)
    assert rel(u, ops.solve_u(G, p, prm)) <= 1e-13 if np.any(u) else True
    assert rel(n, ops.nonlinear_p(G, p, ops.solve_u(G, p, prm), prm)) <= 1e-12


def test_rhs_locally_lipschitz():
    prm = params()
    h = smooth_field(G, 50, amp=1.0)
    h = h / norm_l2(G, h)
    L = []
    for r in (0.25, 0.5, 1.0, 2.0):
        p = smooth_field(G, 51, amp=1.0)
        p = r * p / norm_l2(G, p)
        f = lambda q: ops.rhs_p(G, q, ops.solve_u(G, q, prm), prm)  # noqa: E731
        est = [norm_l2(G, f(p + s * h) - f(p)) / s for s in (1e-3, 2e-3)]
        assert est[1] == pytest.approx(est[0], rel=0.05)
        L.append(max(est))
    assert all(b >= a for a, b in zip(L, L[1:]))


# -- residual -----------------------------------------------------------------

def test_residual_of_exact_pair():
    prm = params()
    p = smooth_field(G, 5)
    u = ops.solve_u(G, p, prm)
    dpdt = ops.rhs_p(G, p, u, prm)
    r = ops.residual(G, u, p, dpdt, prm)
    assert norm_l2(G, r.r1_hat) <= 1e-9 * norm_l2(G, G.k2 * u)
    assert norm_l2(G, r.r2_hat) <= 1e-9 * norm_l2(G, dpdt)
    z = ops.residual(G, G.zeros(), G.zeros(), G.zeros(), prm)
    assert not np.any(z.r1_hat) and not np.any(z.r2_hat)


@given(st.floats(1e-3, 1.0))
def test_residual_of_reduced_pair(eps):
    prm = params(eps)
    p = smooth_field(G, 6)
    dpdt = ops.rhs_p(G, p, G.zeros(), prm.with_epsilon(0.0))
    r = ops.residual(G, G.zeros(), p, dpdt, prm)
    assert norm_l2(G, r.r2_hat) <= 1e-12 * norm_l2(G, dpdt)
    want = leray_project(G, (prm.mu1 * G.k2**2 + prm.gamma1 * G.k2) * p + prm.lambda1 * ops.advect(G, p, p))
    assert rel(r.r1_hat, want) <= 1e-13
    unit = ops.residual(G, G.zeros(), p, dpdt, prm.with_epsilon(1.0)).r1_hat
    assert rel(r.r1_hat, eps * unit) <= 1e-13


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        ops.advect(G, G.zeros(), Grid.cube(3, 16).zeros())
