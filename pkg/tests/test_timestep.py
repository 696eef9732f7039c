import math

import numpy as np
import pytest

from conftest import rel, smooth_field
from polarswim import operators as ops
from polarswim.config import InitSpectrum
from polarswim.params import BaseCoefficients, apply_coupling, linear_params
from polarswim.spectral import (
    Grid,
    divergence_defect,
    hermitian_defect,
    norm_l2,
    random_solenoidal_field,
)
from polarswim.timestep import (
    AprioriBoundViolation,
    NonFinite,
    State,
    advective_bound,
    apriori_rhs,
    if_rk4_step,
    integrate,
    linear_symbol,
    stable_dt,
)

G2 = Grid.cube(2, 32)
G3 = Grid.cube(3, 16)


def coupled(eps=0.1, **kw):
    base = dict(mu2=1e-2, gamma2=0.1, beta=0.1, gamma1_tilde=0.5)
    base.update(kw)
    return apply_coupling(BaseCoefficients(**base), eps)


def gauss(grid, seed=7, amp=0.25):
    return random_solenoidal_field(grid, seed, InitSpectrum("gauss", amp, 1.5))


# -- linear symbol ----------------------------------------------------------

def test_symbol_at_zero_is_minus_beta():
    assert linear_symbol(0.0, linear_params(2.0, -1.0, 0.3)) == -0.3


def test_symbol_marginal_mode():
    # 1 - 2 + 1 = 0
    assert linear_symbol(1.0, linear_params(1.0, -2.0, 1.0)) == 0.0


def test_symbol_fastest_band():
    mu2, gamma2, beta = 1e-2, -0.5, 0.1
    prm = linear_params(mu2, gamma2, beta)
    k = np.linspace(0, 20, 200001)
    k_star = math.sqrt(-gamma2 / (2 * mu2))
    assert abs(k[np.argmax(linear_symbol(k, prm))] - k_star) <= 1e-3
    assert linear_symbol(k_star, prm) == pytest.approx(gamma2**2 / (4 * mu2) - beta, rel=1e-14)


def test_linear_rate_matches_symbol():
    prm = linear_params(1e-2, -0.3, 0.2)
    rate = ops.linear_rate(G3, prm)
    assert rel(rate, linear_symbol(np.sqrt(G3.k2), prm)) <= 1e-14


# -- single-step properties -------------------------------------------------

def test_linear_step_exact():
    prm = linear_params(1e-2, -0.4, 0.1)
    p = smooth_field(G3, 2)
    dt = 0.3
    out = if_rk4_step(G3, State(0.0, p), dt, prm)
    exact = np.exp(dt * linear_symbol(np.sqrt(G3.k2), prm)) * p
    assert rel(out.p_hat, exact) <= 1e-14
    assert out.t == dt


def test_zero_dt_returns_state():
    s = State(0.5, smooth_field(G3, 1))
    assert if_rk4_step(G3, s, 0.0, coupled()) is s
    with pytest.raises(ValueError):
        if_rk4_step(G3, s, -1e-3, coupled())


def test_zero_state_is_fixed_point():
    z = G3.zeros()
    out = if_rk4_step(G3, State(0.0, z), 1e-2, coupled())
    assert np.all(out.p_hat == 0)


def test_rk4_order():
    prm = coupled(0.01)
    p0 = gauss(G2)
    dt = stable_dt(G2, prm, p0, dt_max=0.05)
    ends = [integrate(G2, p0, prm, dt=dt / 2**i, t_end=1.0, diagnostics=False).states[-1].p_hat
            for i in range(3)]
    order = math.log2(norm_l2(G2, ends[0] - ends[1]) / norm_l2(G2, ends[1] - ends[2]))
    assert order >= 3.9


# -- integrate --------------------------------------------------------------

def test_t_end_zero_single_state():
    p0 = gauss(G2)
    traj = integrate(G2, p0, coupled(), dt=1e-3, t_end=0.0)
    assert len(traj) == 1
    assert traj.states[0].t == 0.0


def test_step_adjusted_to_hit_t_end():
    traj = integrate(G2, gauss(G2), coupled(), dt=0.03, t_end=0.1, diagnostics=False)
    assert traj.states[-1].t == pytest.approx(0.1, abs=1e-15)
    assert traj.dt <= 0.03


def test_bad_arguments():
    with pytest.raises(ValueError):
        integrate(G2, gauss(G2), coupled(), dt=0.0, t_end=1.0)
    with pytest.raises(ValueError):
        integrate(G2, gauss(G2), coupled(), dt=1e-3, t_end=1.0, sample_every=0)


def test_linear_run_matches_exponential():
    prm = linear_params(1e-2, -0.5, 0.1)
    p0 = G3.zeros()
    p0[0, 0, 3, 1] = 0.2 - 0.1j  # e_x, k = (0, 3, 1); the partner is implied by the half spectrum
    traj = integrate(G3, p0, prm, dt=0.01, t_end=1.0, sample_every=10, diagnostics=False)
    lam = linear_symbol(math.sqrt(10.0), prm)
    for s in traj.states:
        assert rel(s.p_hat, math.exp(lam * s.t) * p0) <= 1e-8


def test_sampling_and_invariants():
    traj = integrate(G2, gauss(G2), coupled(0.1), dt=1e-3, t_end=0.05, sample_every=5,
                     diagnostics=False)
    assert len(traj) == 11
    assert np.allclose(traj.times, np.linspace(0, 0.05, 11), atol=1e-15)
    for s in traj.states:
        assert divergence_defect(G2, s.p_hat) <= 1e-11
        assert hermitian_defect(G2, s.p_hat) <= 1e-12


def test_deterministic():
    p0 = gauss(G2)
    a, b = (integrate(G2, p0, coupled(), dt=1e-3, t_end=0.02, diagnostics=False)
            for _ in range(2))
    assert all(np.array_equal(x.p_hat, y.p_hat) for x, y in zip(a.states, b.states))


def test_energy_decays_without_destabilising_terms():
    prm = coupled(0.1, alpha=5.0, gamma2=0.2, beta=0.5)
    traj = integrate(G2, gauss(G2, amp=0.5), prm, dt=2e-3, t_end=0.5, diagnostics=True)
    E = traj.ledger["E"]
    assert np.all(np.diff(E) < 0)


def test_saturation_under_bound():
    prm = coupled(0.1, gamma2=-0.2, beta=-0.5, mu2=1e-2)
    p0 = gauss(G2, amp=0.05)
    traj = integrate(G2, p0, prm, dt=5e-3, t_end=2.0, diagnostics=True)
    E = traj.ledger["E"]
    assert E[-1] > E[0]  # linearly unstable, grows
    rhs = apriori_rhs(prm, 2.0, G2.volume, 2 * E[0])
    assert np.all(2 * E <= rhs)


def test_nonfinite_reported():
    prm = coupled(0.0, alpha=1.0)
    p0 = gauss(G2, amp=30.0)
    with np.errstate(all="ignore"), pytest.raises(NonFinite) as info:
        integrate(G2, p0, prm, dt=1.0, t_end=200.0, diagnostics=False, check_bound=False)
    assert info.value.step is not None and info.value.step >= 1


def test_apriori_violation_aborts():
    # gamma2, beta >= 0 so the bound is ||p0||^2 itself; an unstable step breaks it
    prm = coupled(0.0, alpha=1.0)
    p0 = gauss(G2, amp=3.0)
    with np.errstate(all="ignore"), pytest.raises(AprioriBoundViolation) as info:
        integrate(G2, p0, prm, dt=1.0, t_end=50.0, diagnostics=False)
    assert info.value.lhs > 1.01 * info.value.rhs


def test_apriori_rhs_linear_model():
    assert apriori_rhs(linear_params(1.0, 0.5, 0.1), 1.0, 8.0, 2.0) == 2.0
    assert apriori_rhs(linear_params(1.0, -0.5, 0.1), 1.0, 8.0, 2.0) == math.inf


# -- stable_dt --------------------------------------------------------------

def test_stable_dt_linear_model_is_dt_max():
    assert stable_dt(G3, linear_params(1.0, -1.0, 0.0), smooth_field(G3, 0), dt_max=0.25) == 0.25


def test_stable_dt_respects_all_bounds():
    prm = coupled(0.5)
    p = gauss(G2, amp=1.0)
    dt = stable_dt(G2, prm, p, dt_max=1.0)
    assert 0 < dt < 1.0
    assert dt <= stable_dt(G2, prm, p, dt_max=1.0, c_adv=1.0)


def test_advective_bound_scales_with_resolution():
    k16 = math.sqrt(np.max(Grid.cube(2, 16).k2[Grid.cube(2, 16).nyquist_free]))
    k32 = math.sqrt(np.max(Grid.cube(2, 32).k2[Grid.cube(2, 32).nyquist_free]))
    a, b = advective_bound(Grid.cube(2, 16), 2.0), advective_bound(Grid.cube(2, 32), 2.0)
    assert b / a == pytest.approx(k16 / k32, rel=1e-14)
    assert b / a <= 0.5
    assert a * k16 * 2.0 == pytest.approx(0.5, rel=1e-14)
