"""Integrating-factor RK4 time stepping for the polar field.

The diagonal linear part ``-(mu2|k|^4 + gamma2|k|^2 + beta)`` is removed
exactly by an integrating factor; the remaining terms are advanced with
classical RK4. The velocity is not a state variable: it is recomputed from
``p`` at every stage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from . import operators as ops
from .params import ModelParams, neg_part
from .spectral import Grid, leray_project, max_grad_norm, max_norm

__all__ = [
    "NonFinite",
    "AprioriBoundViolation",
    "State",
    "Trajectory",
    "linear_symbol",
    "if_rk4_step",
    "integrate",
    "stable_dt",
    "apriori_rhs",
]


class NonFinite(FloatingPointError):
    """A coefficient became NaN or infinite."""

    def __init__(self, message: str, step: int | None = None, t: float | None = None):
        super().__init__(message)
        self.step = step
        self.t = t


class AprioriBoundViolation(RuntimeError):
    def __init__(self, t: float, lhs: float, rhs: float):
        super().__init__(
            f"a priori bound violated at t={t:.6g}: lhs={lhs:.6e} > 1.01 * rhs={rhs:.6e}"
        )
        self.t, self.lhs, self.rhs = t, lhs, rhs


@dataclass(frozen=True)
class State:
    t: float
    p_hat: np.ndarray


@dataclass
class Trajectory:
    """Sampled solution; ``u`` is recovered on demand from ``p``."""

    grid: Grid
    params: ModelParams
    dt: float
    sample_every: int
    states: list[State] = field(default_factory=list)
    ledger: object | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def fields(self) -> np.ndarray:
        return np.stack([s.p_hat for s in self.states])

    def __len__(self) -> int:
        return len(self.states)

    def u(self, i: int) -> np.ndarray:
        return ops.solve_u(self.grid, self.states[i].p_hat, self.params)

    def dpdt(self) -> np.ndarray:
        """Time derivative by second-order finite differences on the samples."""
        if len(self) < 3:
            raise ValueError("need at least three samples for second-order differences")
        return np.gradient(self.fields, self.times, axis=0, edge_order=2)


def linear_symbol(k, params: ModelParams):
    """``L(k) = -(mu2 |k|^4 + gamma2 |k|^2 + beta)`` for wavenumber magnitude ``k``."""
    k2 = np.square(k)
    return -(params.mu2 * k2**2 + params.gamma2 * k2 + params.beta)


def _nonlinear(grid: Grid, p: np.ndarray, params: ModelParams) -> np.ndarray:
    return ops.stage(grid, p, params)[0]


def if_rk4_step(
    grid: Grid, state: State, dt: float, params: ModelParams, rate: np.ndarray | None = None
) -> State:
    """Advance one step of integrating-factor RK4."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return state
    if rate is None:
        rate = ops.linear_rate(grid, params)
    e_half = np.exp(0.5 * dt * rate)
    e_full = e_half * e_half
    p = state.p_hat

    a = _nonlinear(grid, p, params)
    b = _nonlinear(grid, e_half * (p + 0.5 * dt * a), params)
    c = _nonlinear(grid, e_half * p + 0.5 * dt * b, params)
    d = _nonlinear(grid, e_full * p + dt * e_half * c, params)
    p_new = e_full * p + (dt / 6.0) * (e_full * a + 2.0 * e_half * (b + c) + d)
    p_new = leray_project(grid, p_new)
    if not np.all(np.isfinite(p_new)):
        raise NonFinite(f"non-finite coefficients at t={state.t + dt:.6g}", t=state.t + dt)
    return State(state.t + dt, p_new)


def apriori_rhs(params: ModelParams, T: float, volume: float, p0_sq: float) -> float:
    """``||p0||^2 + T |Omega| / alpha * ((gamma2^-)^2/(2 mu2) + beta^-)^2``."""
    defect = neg_part(params.gamma2) ** 2 / (2 * params.mu2) + neg_part(params.beta)
    if params.alpha == 0.0:  # linear test model: no cubic control
        return p0_sq if defect == 0.0 else math.inf
    return p0_sq + T * volume / params.alpha * defect**2


def _step_plan(t_end: float, dt: float) -> tuple[int, float]:
    if t_end == 0:
        return 0, dt
    n = round(t_end / dt)
    if n < 1 or abs(n * dt - t_end) > 1e-12 * max(1.0, t_end):
        n = math.ceil(t_end / dt - 1e-12)
        dt = t_end / n
    return n, dt


def integrate(
    grid: Grid,
    p0: np.ndarray,
    params: ModelParams,
    *,
    dt: float,
    t_end: float,
    sample_every: int = 1,
    diagnostics: bool = True,
    check_bound: bool = True,
) -> Trajectory:
    """Integrate from ``t=0`` to ``t_end`` with a uniform step.

    If ``t_end`` is not a multiple of ``dt`` the step is shortened slightly so
    that it is. With ``diagnostics`` an energy ledger (rows at the sample
    times, integrals over every step) is attached to the trajectory. With
    ``check_bound`` and ``kappa = 0`` the a priori bound is monitored and a
    violation by more than 1% aborts the run.
    """
    from .diagnostics import build_energy_ledger, energy_terms

    if dt <= 0:
        raise ValueError("dt must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    nsteps, dt = _step_plan(t_end, dt)
    rate = ops.linear_rate(grid, params)
    state = State(0.0, leray_project(grid, np.asarray(p0, dtype=complex)))
    traj = Trajectory(grid, params, dt, sample_every, [state])

    terms = []
    bound = check_bound and params.kappa == 0.0
    if diagnostics or bound:
        terms.append(energy_terms(grid, state.p_hat, params))
    if bound:
        p0_sq = 2 * terms[0]["E"]
        rhs = apriori_rhs(params, t_end, grid.volume, p0_sq)
        running = 0.0
        prev = terms[0]["d_visc"] + terms[0]["d_quart"]

    for step in range(1, nsteps + 1):
        try:
            state = if_rk4_step(grid, state, dt, params, rate)
        except NonFinite as exc:
            raise NonFinite(str(exc), step=step, t=step * dt) from None
        state = State(step * dt, state.p_hat)
        if step % sample_every == 0:
            traj.states.append(state)
        if diagnostics or bound:
            row = energy_terms(grid, state.p_hat, params)
            terms.append(row)
        if bound:
            cur = row["d_visc"] + row["d_quart"]
            running += 0.5 * dt * (prev + cur)
            prev = cur
            lhs = 2 * row["E"] + running
            if lhs > 1.01 * rhs:
                raise AprioriBoundViolation(state.t, lhs, rhs)

    if diagnostics:
        t = dt * np.arange(nsteps + 1)
        keep = np.arange(0, nsteps + 1, sample_every)
        traj.ledger = build_energy_ledger(t, terms, keep)
    return traj


def stable_dt(
    grid: Grid,
    params: ModelParams,
    p_hat: np.ndarray | None = None,
    *,
    dt_max: float = 1e-3,
    c_adv: float = 0.5,
    c_cub: float = 0.5,
    c_cpl: float = 0.5,
) -> float:
    """Explicit step bound for the non-diagonal terms.

    ``min(dt_max, c_adv/(k_max U), c_cub/(alpha P^2), c_cpl/R_cpl)`` where
    ``P = max|p|``, ``U = lambda2 P + max|u|`` and, for a coupled model,
    ``R_cpl = (mu1 k_max^2 + |gamma1|)(max|grad p| + k_max P)`` bounds the
    rate of the velocity feedback. Without ``p_hat`` the estimates use
    ``P = 1`` and ``max|grad p| = k_max``. The linear part is exact and
    imposes nothing.
    """
    k_max = float(np.sqrt(np.max(grid.k2[grid.nyquist_free])))
    if p_hat is None:
        P, G, umax = 1.0, k_max, 0.0
    else:
        P = max_norm(grid, p_hat)
        G = max_grad_norm(grid, p_hat)
        umax = max_norm(grid, ops.solve_u(grid, p_hat, params))
    bounds = [dt_max]
    U = abs(params.lambda2) * P + umax
    if U > 0:
        bounds.append(c_adv / (k_max * U))
    if params.alpha * P**2 > 0:
        bounds.append(c_cub / (params.alpha * P**2))
    r_cpl = (params.mu1 * k_max**2 + abs(params.gamma1)) * (G + k_max * P)
    if r_cpl > 0:
        bounds.append(c_cpl / r_cpl)
    return float(min(bounds))


def advective_bound(grid: Grid, speed: float, c_adv: float = 0.5) -> float:
    """``c_adv / (k_max * speed)``."""
    k_max = float(np.sqrt(np.max(grid.k2[grid.nyquist_free])))
    return c_adv / (k_max * speed)
