"""Experiment harnesses: plain simulation, epsilon sweep, oracle twin run."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, initial_field
from .diagnostics import (
    EnergyLedger,
    WeakStrongReport,
    relative_energy,
    weak_strong_report,
)
from .galerkin import GalerkinBasis, from_box, galerkin_reference_step, to_box
from .io import write_energy_csv, write_snapshot, write_timeseries
from .params import ModelParams
from .timestep import State, Trajectory, integrate

__all__ = [
    "SimulationResult",
    "SweepResult",
    "TwinResult",
    "simulate",
    "epsilon_sweep",
    "twin_run",
    "SWEEP_COLUMNS",
]

SWEEP_COLUMNS = ("eps", "p_distance", "u_sq_integral", "p_slope", "u_slope")


@dataclass
class SimulationResult:
    traj: Trajectory
    ledger: EnergyLedger | None
    files: list[Path] = field(default_factory=list)


def simulate(
    cfg: RunConfig, params: ModelParams, out_dir: str | os.PathLike | None = None
) -> SimulationResult:
    """Integrate the configured run; with ``out_dir`` write snapshots and ``energy.csv``.

    Files are only written once the run has finished, so a failed run leaves
    nothing behind.
    """
    p0 = initial_field(cfg)
    traj = integrate(
        cfg.grid, p0, params, dt=cfg.dt, t_end=cfg.t_end, sample_every=cfg.sample_every,
        diagnostics=cfg.energy, check_bound=cfg.apriori_check,
    )
    result = SimulationResult(traj, traj.ledger)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.energy:
            write_energy_csv(traj.ledger, out / "energy.csv")
            result.files.append(out / "energy.csv")
        if cfg.snapshots:
            snap_dir = out / "snapshots"
            snap_dir.mkdir(exist_ok=True)
            for i, state in enumerate(traj.states):
                path = snap_dir / f"snap_{i:06d}.apfs"
                write_snapshot(state, path, cfg.grid)
                result.files.append(path)
    return result


def _slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass
class SweepResult:
    eps: np.ndarray
    p_distance: np.ndarray  # sup_t ||p_eps - p_ref||
    u_sq_integral: np.ndarray  # int_0^T ||u_eps||^2
    p_slope: float = math.nan
    u_slope: float = math.nan
    trajectories: dict = field(default_factory=dict, repr=False)

    @property
    def sufficient(self) -> bool:
        return len(self.eps) >= 2

    @property
    def note(self) -> str:
        return "" if self.sufficient else "insufficient for slope"

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.p_distance) < 0))

    def columns(self) -> dict[str, np.ndarray]:
        n = len(self.eps)
        return {
            "eps": self.eps, "p_distance": self.p_distance, "u_sq_integral": self.u_sq_integral,
            "p_slope": np.full(n, self.p_slope), "u_slope": np.full(n, self.u_slope),
        }


def epsilon_sweep(
    cfg: RunConfig,
    params: ModelParams,
    eps_list,
    out_dir: str | os.PathLike | None = None,
    keep_trajectories: bool = False,
    workers: int = 1,
) -> SweepResult:
    """Compare runs at decreasing epsilon with the decoupled (epsilon = 0) run.

    All runs share the initial field and time grid. After every completed
    epsilon the partial table is flushed to ``sweep.csv`` in ``out_dir``.
    With ``workers > 1`` the coupled runs go to a process pool; rows are
    still consumed in epsilon order, so the output does not depend on it.
    """
    eps = np.asarray([float(e) for e in eps_list])
    if eps.size == 0 or np.any(eps <= 0):
        raise ValueError("eps list must be non-empty and positive")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps list must be strictly decreasing")
    ref = _sweep_run(cfg, params.with_epsilon(0.0))
    res = SweepResult(np.zeros(0), np.zeros(0), np.zeros(0))
    if keep_trajectories:
        res.trajectories[0.0] = ref
    out = None if out_dir is None else Path(out_dir)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    jobs = [params.with_epsilon(e) for e in eps]
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        runs = pool.map(_sweep_run, [cfg] * len(jobs), jobs) if pool else (
            _sweep_run(cfg, prm) for prm in jobs)
        _collect(cfg, eps, ref, runs, res, out, keep_trajectories)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return res


def _sweep_run(cfg: RunConfig, prm: ModelParams) -> Trajectory:
    return integrate(
        cfg.grid, initial_field(cfg), prm, dt=cfg.dt, t_end=cfg.t_end,
        sample_every=cfg.sample_every, diagnostics=True, check_bound=cfg.apriori_check,
    )


def _collect(cfg, eps, ref, runs, res, out, keep_trajectories) -> None:
    for e, traj in zip(eps, runs):
        dist = max(
            math.sqrt(2.0 * relative_energy(cfg.grid, a.p_hat, b.p_hat))
            for a, b in zip(traj.states, ref.states)
        )
        res.eps = np.append(res.eps, e)
        res.p_distance = np.append(res.p_distance, dist)
        res.u_sq_integral = np.append(res.u_sq_integral, traj.ledger.cum_u_sq[-1])
        if keep_trajectories:
            res.trajectories[float(e)] = traj
        if res.sufficient:
            res.p_slope = _slope(res.eps, res.p_distance)
            res.u_slope = _slope(res.eps, res.u_sq_integral)
        if out is not None:
            write_timeseries(out / "sweep.csv", SWEEP_COLUMNS, res.columns())


@dataclass
class TwinResult:
    report: WeakStrongReport
    spectral: Trajectory
    galerkin: Trajectory
    tol: float = 1e-8

    @property
    def passed(self) -> bool:
        return self.report.max_distance <= self.tol


def twin_run(
    cfg: RunConfig,
    params: ModelParams,
    steps: int = 10,
    cutoff: int | None = None,
    dt: float | None = None,
    tol: float = 1e-8,
) -> TwinResult:
    """Spectral integrator against the direct-convolution Galerkin oracle.

    Both start from the configured initial field projected onto the oracle's
    mode box (by default every Nyquist-free mode of the grid) and take
    ``steps`` steps of size ``dt`` (default ``cfg.dt``).
    """
    grid = cfg.grid
    cutoff = min(grid.n) // 2 - 1 if cutoff is None else cutoff
    basis = GalerkinBasis(grid, cutoff)
    dt = cfg.dt if dt is None else dt
    p0 = from_box(basis, to_box(basis, initial_field(cfg)))
    spec = integrate(grid, p0, params, dt=dt, t_end=steps * dt, diagnostics=False,
                     check_bound=False)
    gal = Trajectory(grid, params, spec.dt, 1, [State(0.0, p0)])
    state = gal.states[0]
    for i in range(1, steps + 1):
        state = galerkin_reference_step(state, spec.dt, params, basis)
        state = State(i * spec.dt, state.p_hat)
        gal.states.append(state)
    return TwinResult(weak_strong_report(spec, gal), spec, gal, tol)
