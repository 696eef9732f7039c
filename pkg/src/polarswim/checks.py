"""Desk-scale invariant suite run by ``polarswim check``.

Each check returns ``(passed, detail)``. Checks that exercise operator
identities use the configured coefficients (with ``kappa`` forced to 0 where
the identity needs it); the dynamic checks use fixed small settings so that
their tolerances stay meaningful for any configuration.
"""
from __future__ import annotations

import io as _stdio
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import diagnostics as dg
from . import operators as ops
from .config import InitSpectrum, RunConfig
from .io import Snapshot, decode_snapshot, encode_snapshot
from .params import BaseCoefficients, ModelParams, apply_coupling
from .spectral import (
    Grid,
    dealiased_product,
    divergence_defect,
    forward,
    hermitian_defect,
    inner,
    inverse,
    leray_project,
    norm_grad,
    norm_l2,
    norm_laplacian,
    random_solenoidal_field,
)
from .timestep import integrate, stable_dt

__all__ = ["CHECKS", "CheckResult", "run_checks", "format_table"]

CheckFn = Callable[[RunConfig, ModelParams], tuple[bool, str]]
CHECKS: dict[str, CheckFn] = {}


def _check(name: str):
    def deco(fn: CheckFn) -> CheckFn:
        CHECKS[name] = fn
        return fn
    return deco


def _field(grid: Grid, seed: int, amp: float = 0.5, slope: float = 4.0) -> np.ndarray:
    return random_solenoidal_field(grid, seed, InitSpectrum("power", amp, 1.0, slope))


def _kappa0(params: ModelParams) -> ModelParams:
    """Configured coefficients with ``kappa = 0`` and a nonzero cubic term."""
    return params.with_base(kappa=0.0, alpha=params.alpha or 1.0)


def _coupled(params: ModelParams) -> ModelParams:
    return params if params.epsilon > 0 else params.with_epsilon(0.1)


G3 = Grid.cube(3, 16)
G2 = Grid.cube(2, 32)


@_check("parseval")
def _parseval(cfg, params):
    p = _field(G3, cfg.seed)
    quad = G3.volume / G3.npts * float(np.sum(inverse(G3, p) ** 2))
    err = abs(quad - norm_l2(G3, p) ** 2) / quad
    return err <= 1e-12, f"rel err {err:.2e}"


@_check("leray_projection")
def _leray(cfg, params):
    rng = np.random.default_rng(cfg.seed)
    f = forward(G3, rng.standard_normal((3,) + G3.n))
    g = forward(G3, rng.standard_normal((3,) + G3.n))
    P = leray_project(G3, f)
    idem = np.max(np.abs(leray_project(G3, P) - P)) / np.max(np.abs(P))
    adj = abs(inner(G3, P, g) - inner(G3, f, leray_project(G3, g))) / (
        norm_l2(G3, f) * norm_l2(G3, g))
    return max(idem, adj) <= 1e-13, f"idempotence {idem:.1e}, adjointness {adj:.1e}"


@_check("solenoidal_init")
def _solenoidal(cfg, params):
    p = _field(G3, cfg.seed)
    d = divergence_defect(G3, p)
    return d <= 1e-12, f"divergence defect {d:.1e}"


@_check("interpolation")
def _interp(cfg, params):
    worst = -math.inf
    for s in range(5):
        p = _field(G3, cfg.seed + s, slope=3.0 + s)
        worst = max(worst, norm_grad(G3, p) ** 2 / (norm_l2(G3, p) * norm_laplacian(G3, p)))
    return worst <= 1.0, f"max ||grad p||^2 / (||p|| ||lap p||) = {worst:.4f}"


@_check("divergence_form")
def _divform(cfg, params):
    p = _field(G3, cfg.seed)
    adv = ops.advect(G3, p, p)
    pp = dealiased_product(G3, [p], lambda v: v[:, None] * v[None, :], arity=2)
    div = 1j * np.einsum("ij...,j...->i...", pp, G3.kvec)
    err = np.max(np.abs(adv - div)) / np.max(np.abs(adv))
    return err <= 1e-11, f"rel err {err:.1e}"


@_check("skew_cancellation")
def _skew(cfg, params):
    p = _field(G3, cfg.seed)
    u = ops.solve_u(G3, p, _coupled(params))
    val = abs(inner(G3, ops.vorticity_coupling(G3, u, p), p))
    scale = norm_l2(G3, ops.vorticity_coupling(G3, u, p)) * norm_l2(G3, p)
    return val <= 1e-11 * max(scale, 1.0), f"|((grad u)_skw p, p)| = {val:.1e}"


@_check("transport_cancellation")
def _transport(cfg, params):
    p = _field(G3, cfg.seed)
    u = ops.solve_u(G3, p, _coupled(params))
    val = abs(inner(G3, ops.advect(G3, u, p), p))
    scale = norm_l2(G3, ops.advect(G3, u, p)) * norm_l2(G3, p)
    return val <= 1e-11 * max(scale, 1.0), f"|((u.grad) p, p)| = {val:.1e}"


@_check("energy_identity")
def _energy_identity(cfg, params):
    prm = _kappa0(params)
    p = _field(G3, cfg.seed)
    u = ops.solve_u(G3, p, prm)
    lhs = inner(G3, ops.rhs_p(G3, p, u, prm), p)
    t = dg.energy_terms(G3, p, prm)
    rhs = -(t["d_visc"] + t["d_grad"] + t["d_quart"] + t["d_lin"])
    scale = t["d_visc"] + abs(t["d_grad"]) + t["d_quart"] + abs(t["d_lin"])
    err = abs(lhs - rhs) / scale
    return err <= 1e-10, f"rel err {err:.1e}"


@_check("velocity_zero_mode")
def _zero_mode(cfg, params):
    u = ops.solve_u(G3, _field(G3, cfg.seed), _coupled(params))
    z = float(np.max(np.abs(u[(slice(None),) + (0,) * 3])))
    return z == 0.0, f"|u(k=0)| = {z:.1e}"


@_check("coupling_bilinear")
def _bilinear(cfg, params):
    base = params.base
    worst = 0.0
    for e1, e2 in [(0.5, 0.2), (3.0, 1e-3), (0.0, 2.0)]:
        a = apply_coupling(base, e1 * e2).mu1
        b = e1 * apply_coupling(base, e2).mu1
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    return worst <= 1e-15, f"rel err {worst:.1e}"


def _ref_params() -> ModelParams:
    base = BaseCoefficients(mu2=1e-2, gamma2=0.1, beta=0.1, gamma1_tilde=0.5)
    return apply_coupling(base, 0.01)


def _ref_field(grid: Grid, seed: int) -> np.ndarray:
    return random_solenoidal_field(grid, seed, InitSpectrum("gauss", 0.25, 1.5))


@_check("rk4_order")
def _rk4_order(cfg, params):
    prm = _ref_params()
    p0 = _ref_field(G2, 7)
    dt = stable_dt(G2, prm, p0, dt_max=0.05)
    ends = [integrate(G2, p0, prm, dt=dt / 2**i, t_end=1.0, diagnostics=False).states[-1].p_hat
            for i in range(3)]
    e1 = norm_l2(G2, ends[0] - ends[1])
    e2 = norm_l2(G2, ends[1] - ends[2])
    order = math.log2(e1 / e2)
    return order >= 3.9, f"observed order {order:.3f} from dt = {dt:.3g}"


@_check("run_invariants")
def _run_invariants(cfg, params):
    prm = _ref_params().with_epsilon(0.1)
    traj = integrate(G2, _ref_field(G2, cfg.seed), prm, dt=1e-3, t_end=0.05,
                     sample_every=5, diagnostics=False)
    div = max(divergence_defect(G2, s.p_hat) for s in traj.states)
    her = max(hermitian_defect(G2, s.p_hat) for s in traj.states)
    return div <= 1e-11 and her <= 1e-12, f"divergence {div:.1e}, hermitian {her:.1e}"


@_check("determinism")
def _determinism(cfg, params):
    prm = _ref_params().with_epsilon(0.1)
    p0 = _ref_field(G2, cfg.seed)
    a, b = (integrate(G2, p0, prm, dt=1e-3, t_end=0.02, diagnostics=False) for _ in range(2))
    same = all(np.array_equal(x.p_hat, y.p_hat) for x, y in zip(a.states, b.states))
    return same, "bit-identical" if same else "trajectories differ"


@_check("energy_balance")
def _energy_balance(cfg, params):
    base = BaseCoefficients(mu2=1e-3, gamma2=0.1, beta=0.1)
    prm = apply_coupling(base, 0.01)
    p0 = _field(G2, cfg.seed)
    d = []
    for dt in (4e-3, 2e-3):
        led = integrate(G2, p0, prm, dt=dt, t_end=0.5).ledger
        d.append(float(np.max(np.abs(led["balance_defect"]))) / led["E"][0])
    order = math.log2(d[0] / d[1])
    return d[1] <= 1e-6 and order >= 2.0, f"defect {d[1]:.1e} E(0), order {order:.2f}"


@_check("oracle_equivalence")
def _oracle(cfg, params):
    from .experiments import twin_run

    g8 = Grid.cube(3, 8)
    base = BaseCoefficients(mu2=0.05, gamma2=-0.2, beta=0.1, gamma1_tilde=0.5)
    prm = apply_coupling(base, 0.5)
    c = RunConfig(grid=g8, dt=1e-3, t_end=1e-2, seed=3,
                  init_spectrum=InitSpectrum("power", 1.0, 1.0, 4.0))
    res = twin_run(c, prm, steps=10)
    return res.report.max_distance <= 1e-9, f"max distance {res.report.max_distance:.1e}"


@_check("relative_symmetry")
def _rel_sym(cfg, params):
    p, q = _field(G3, cfg.seed), _field(G3, cfg.seed + 1)
    prm = _kappa0(params)
    e = abs(dg.relative_energy(G3, p, q) - dg.relative_energy(G3, q, p))
    w1, w2 = dg.relative_dissipation(G3, p, q, prm), dg.relative_dissipation(G3, q, p, prm)
    w = abs(w1 - w2) / w1
    low = w1 >= prm.mu2 * norm_laplacian(G3, p - q) ** 2
    return e == 0.0 and w <= 1e-13 and low, f"E asym {e:.1e}, W asym {w:.1e}"


@_check("snapshot_roundtrip")
def _snapshot(cfg, params):
    rng = np.random.default_rng(cfg.seed)
    snap = Snapshot(G3, 0.125, rng.standard_normal((3,) + G3.n))
    blob = encode_snapshot(snap)
    back = decode_snapshot(blob)
    ok = back == snap and encode_snapshot(back) == blob
    return ok, "bit-exact" if ok else "mismatch"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def run_checks(cfg: RunConfig, params: ModelParams, names=None) -> list[CheckResult]:
    """Run the named checks (all by default); unknown names raise ``KeyError``."""
    selected = list(CHECKS) if not names else list(names)
    for n in selected:
        if n not in CHECKS:
            raise KeyError(f"unknown check {n!r}; available: {', '.join(CHECKS)}")
    out = []
    for n in selected:
        t0 = time.perf_counter()
        try:
            ok, detail = CHECKS[n](cfg, params)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(n, bool(ok), detail, time.perf_counter() - t0))
    return out


def format_table(results: list[CheckResult]) -> str:
    buf = _stdio.StringIO()
    width = max((len(r.name) for r in results), default=4)
    for r in results:
        buf.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.seconds:6.2f}s  {r.detail}\n")
    return buf.getvalue()
