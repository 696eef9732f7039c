"""Energy bookkeeping, relative energy functionals and the Gronwall monitor."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from . import operators as ops
from .params import ModelParams, pos_part
from .spectral import (
    PAD_CUBIC,
    Grid,
    inner,
    max_grad_norm,
    norm_grad,
    norm_l2,
    norm_l4,
    norm_laplacian,
    norm_lq,
)

__all__ = [
    "ENERGY_COLUMNS",
    "RELATIVE_COLUMNS",
    "EnergyLedger",
    "GronwallReport",
    "WeakStrongReport",
    "energy_terms",
    "build_energy_ledger",
    "energy_ledger",
    "apriori_bound_check",
    "velocity_bound_check",
    "relative_energy",
    "relative_dissipation",
    "k_functional",
    "gronwall_check",
    "weak_strong_report",
]

ENERGY_COLUMNS = (
    "t", "E", "d_visc", "d_grad", "d_quart", "d_lin", "u_sq",
    "cum_visc", "cum_grad", "cum_quart", "cum_lin", "balance_defect",
)
RELATIVE_COLUMNS = (
    "t", "E_rel", "W_rel", "K_val", "r1_norm", "r2_norm",
    "pairing1", "pairing2", "lhs", "rhs",
)
_RATES = ("d_visc", "d_grad", "d_quart", "d_lin")


# -- energy ---------------------------------------------------------------------

def energy_terms(grid: Grid, p: np.ndarray, params: ModelParams) -> dict[str, float]:
    """Energy and the four dissipation rates of a single state."""
    sq = norm_l2(grid, p) ** 2
    return {
        "E": 0.5 * sq,
        "d_visc": params.mu2 * norm_laplacian(grid, p) ** 2,
        "d_grad": params.gamma2 * norm_grad(grid, p) ** 2,
        "d_quart": params.alpha * norm_l4(grid, p) ** 4,
        "d_lin": params.beta * sq,
        "u_sq": norm_l2(grid, ops.solve_u(grid, p, params)) ** 2 if params.coupled else 0.0,
        "mean_sq": grid.volume * float(np.sum(np.abs(p[(slice(None),) + (0,) * grid.dim]) ** 2)),
    }


@dataclass
class EnergyLedger:
    """Per-sample energy rows; cumulative columns integrate from ``t = 0``.

    ``mean_sq`` is ``||mean(p)||^2``, the part of ``||p||^2`` carried by the
    zero mode. On the torus ``||lap p||`` does not see it, so it is kept
    apart from the CSV columns.
    """

    columns: dict[str, np.ndarray]
    cum_u_sq: np.ndarray
    mean_sq: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return len(self.columns["t"])

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    def rows(self) -> np.ndarray:
        return np.column_stack([self.columns[c] for c in ENERGY_COLUMNS]) if len(self) else (
            np.zeros((0, len(ENERGY_COLUMNS))))

    @classmethod
    def empty(cls) -> "EnergyLedger":
        return cls({c: np.zeros(0) for c in ENERGY_COLUMNS}, np.zeros(0), np.zeros(0))


def _cumulative(y: np.ndarray, t: np.ndarray, rule: str) -> np.ndarray:
    if len(t) < 2:
        return np.zeros_like(y)
    if rule == "trapezoid" or len(t) < 3:
        return cumulative_trapezoid(y, t, initial=0.0)
    if rule == "simpson":
        return cumulative_simpson(y, x=t, initial=0.0)
    raise ValueError(f"unknown quadrature rule {rule!r}")


def build_energy_ledger(
    t: np.ndarray,
    terms: Sequence[dict[str, float]],
    keep: np.ndarray | None = None,
    rule: str = "simpson",
) -> EnergyLedger:
    """Assemble a ledger from per-time energy terms.

    The time integrals use every entry of ``terms``; ``keep`` selects which
    rows are reported.
    """
    t = np.asarray(t, dtype=float)
    cols = {k: np.array([row[k] for row in terms], dtype=float)
            for k in ("E", "u_sq", "mean_sq") + _RATES}
    cum = {k: _cumulative(cols[k], t, rule) for k in _RATES}
    cum_u = _cumulative(cols["u_sq"], t, rule)
    defect = cols["E"] + sum(cum.values()) - cols["E"][0]
    mean_sq = cols.pop("mean_sq")
    out = {"t": t, **cols, "balance_defect": defect}
    for k in _RATES:
        out["cum_" + k[2:]] = cum[k]
    if keep is not None:
        out = {k: v[keep] for k, v in out.items()}
        cum_u, mean_sq = cum_u[keep], mean_sq[keep]
    return EnergyLedger({c: out[c] for c in ENERGY_COLUMNS}, cum_u, mean_sq)


def energy_ledger(traj, rule: str = "trapezoid") -> EnergyLedger:
    """Ledger from the sampled states of a trajectory alone.

    :func:`~polarswim.timestep.integrate` already attaches a ledger built from
    every step; this post-hoc variant only sees the samples.
    """
    if traj.params.kappa != 0.0:
        warnings.warn("kappa != 0: the energy balance is not an inequality", stacklevel=2)
    if len(traj) == 0:
        return EnergyLedger.empty()
    terms = [energy_terms(traj.grid, s.p_hat, traj.params) for s in traj.states]
    return build_energy_ledger(traj.times, terms, rule=rule)


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    margin: float
    lhs: np.ndarray
    rhs: float


def apriori_bound_check(
    ledger: EnergyLedger, params: ModelParams, T: float, volume: float
) -> BoundCheck:
    """``||p||^2 + int(mu2||lap p||^2 + alpha||p||_4^4) <= ||p0||^2 + defect term``."""
    from .timestep import apriori_rhs

    lhs = 2 * ledger["E"] + ledger["cum_visc"] + ledger["cum_quart"]
    rhs = apriori_rhs(params, T, volume, 2 * ledger["E"][0])
    margin = float(rhs - np.max(lhs))
    return BoundCheck(bool(np.all(lhs <= rhs)), margin, lhs, rhs)


def velocity_bound_check(ledger: EnergyLedger, params: ModelParams) -> float:
    """``int ||u||^2 / (eps^2 (||p0||^2 + 1))`` over the whole ledger."""
    if not params.epsilon > 0:
        raise ValueError("velocity bound needs epsilon > 0")
    p0_sq = 2 * ledger["E"][0]
    return float(ledger.cum_u_sq[-1] / (params.epsilon**2 * (p0_sq + 1.0)))


# -- relative energy ------------------------------------------------------------

def relative_energy(grid: Grid, p: np.ndarray, p_tilde: np.ndarray) -> float:
    """``1/2 ||p - p~||^2``."""
    if p.shape != p_tilde.shape:
        raise ValueError("fields live on different grids")
    return 0.5 * norm_l2(grid, p - p_tilde) ** 2


def relative_dissipation(
    grid: Grid, p: np.ndarray, p_tilde: np.ndarray, params: ModelParams
) -> float:
    """Dissipation distance with positive parts of ``gamma2`` and ``beta``."""
    if p.shape != p_tilde.shape:
        raise ValueError("fields live on different grids")
    d = p - p_tilde
    sq = norm_l2(grid, d) ** 2
    return (
        params.mu2 * norm_laplacian(grid, d) ** 2
        + pos_part(params.gamma2) * norm_grad(grid, d) ** 2
        + params.alpha * norm_l4(grid, d) ** 4
        + pos_part(params.beta) * sq
    )


def l65_norm(grid: Grid, p: np.ndarray) -> float:
    """``||p||_{L^{6/5}}`` by quadrature on the doubly refined grid."""
    return norm_lq(grid, p, 1.2, PAD_CUBIC)


def k_functional(
    grid: Grid,
    p_tilde: np.ndarray,
    params: ModelParams,
    c: float,
    sup_l65: float | None = None,
) -> float:
    """Gronwall weight ``eps c (1 + G^2 + S^2 G^2 + ||p~||_4^4)``.

    ``G`` is the collocation maximum of ``|grad p~|`` and ``S`` the supremum
    of ``||p~||_{L^{6/5}}`` over the time window seen so far; if ``sup_l65``
    is omitted the current value is used.
    """
    if params.epsilon == 0.0 or c == 0.0:
        return 0.0
    G2 = max_grad_norm(grid, p_tilde) ** 2
    S = l65_norm(grid, p_tilde) if sup_l65 is None else sup_l65
    return params.epsilon * c * (1.0 + G2 + S**2 * G2 + norm_l4(grid, p_tilde) ** 4)


@dataclass
class GronwallReport:
    """Both sides of the integrated relative energy inequality.

    ``pairing2`` already contains the defect of the weak trajectory itself,
    see :func:`gronwall_check`. ``fitted_c_min`` is the smallest ``c`` for
    which ``lhs <= rhs`` holds at every sample.
    """

    t: np.ndarray
    E_rel: np.ndarray
    W_rel: np.ndarray
    K_val: np.ndarray
    r1_norm: np.ndarray
    r2_norm: np.ndarray
    pairing1: np.ndarray
    pairing2: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    c: float
    w_weight: float
    fitted_c_min: float
    passed: bool
    k_shape: np.ndarray = field(repr=False)

    def rows(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in RELATIVE_COLUMNS])


def _phi12(z: float) -> tuple[float, float]:
    """``phi1 = (e^z - 1)/z`` and ``phi2 = (e^z - 1 - z)/z^2``."""
    if abs(z) < 1e-4:
        return 1.0 + z / 2 + z * z / 6, 0.5 + z / 6 + z * z / 24
    em1 = math.expm1(z)
    return em1 / z, (em1 - z) / (z * z)


def _gronwall_sides(t, E, W, K, pair, w_weight):
    """Left side ``E + w int W`` and the Gronwall bound ``y`` with
    ``y' = K y + pair``, ``y(0) = E(0)``.

    ``W`` is integrated with cumulative Simpson. ``y`` is propagated exactly
    per interval for ``pair`` linear and ``K`` constant (its interval mean),
    so the bound stays accurate when ``K`` is large on the sample spacing.
    """
    lhs = E + w_weight * _cumulative(np.asarray(W, float), np.asarray(t, float), "simpson")
    rhs = np.empty(len(t))
    y = rhs[0] = float(E[0])
    for j in range(len(t) - 1):
        h = float(t[j + 1] - t[j])
        z = float(0.5 * (K[j] + K[j + 1]) * h)
        a, b = float(pair[j]), float(pair[j + 1])
        if math.isinf(y):
            pass
        elif z > 700.0:
            # e^z overflows; only the sign of the bracket survives
            lead = y + h * (a * (1 / z - 1 / z**2) + b / z**2)
            y = math.copysign(math.inf, lead) if lead else 0.0
        else:
            p1, p2 = _phi12(z)
            y = y * math.exp(z) + h * (a * (p1 - p2) + b * p2)
        rhs[j + 1] = y
    return lhs, rhs


def _passes(lhs, rhs, rtol) -> bool:
    scale = max(float(np.max(np.abs(lhs))), np.finfo(float).tiny)
    with np.errstate(invalid="ignore"):
        return bool(np.all(lhs <= rhs + rtol * scale))


def gronwall_check(
    traj,
    traj_tilde,
    params: ModelParams | None = None,
    *,
    c: float = 1.0,
    delta: float = 0.1,
    rtol: float = 1e-10,
) -> GronwallReport:
    """Evaluate the relative energy inequality of ``traj`` against ``traj_tilde``.

    ``traj`` plays the weak solution ``(u, p)``, ``traj_tilde`` the comparison
    pair ``(u~, p~)``, with ``u~`` recovered from ``p~`` through the comparison
    trajectory's own coefficients (zero for a decoupled run). Residuals use
    ``params`` (default ``traj.params``); time derivatives are second-order
    finite differences on the samples. The bound is propagated as described
    in :func:`_gronwall_sides`.

    ``delta`` is the Young weight spent on each of the five dissipative
    cross terms, so the dissipation enters the left side with weight
    ``1 - 5 delta`` (one half for the default).

    A discrete trajectory does not satisfy the energy inequality exactly, so
    ``pairing2`` is ``(R2[u~, p~] - R2[u, p], p~ - p)``: the weak trajectory's
    own measured defect is accounted for alongside the comparison residual.
    """
    params = traj.params if params is None else params
    grid = traj.grid
    if traj_tilde.grid != grid:
        raise ValueError("trajectories live on different grids")
    t = traj.times
    if len(t) != len(traj_tilde) or not np.allclose(t, traj_tilde.times, rtol=0, atol=1e-12):
        raise ValueError("time-grid mismatch between trajectories")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    w_weight = max(1.0 - 5.0 * delta, 0.0)

    dp = traj.dpdt()
    dpt = traj_tilde.dpdt()
    n = len(t)
    cols = {k: np.zeros(n) for k in ("E", "W", "K1", "r1", "r2", "pair1", "pair2")}
    sup_l65 = 0.0
    for i in range(n):
        p = traj.states[i].p_hat
        pt = traj_tilde.states[i].p_hat
        u = ops.solve_u(grid, p, params)
        ut = traj_tilde.u(i)
        res_t = ops.residual(grid, ut, pt, dpt[i], params)
        res = ops.residual(grid, u, p, dp[i], params)
        cols["E"][i] = relative_energy(grid, p, pt)
        cols["W"][i] = relative_dissipation(grid, p, pt, params)
        sup_l65 = max(sup_l65, l65_norm(grid, pt))
        cols["K1"][i] = k_functional(grid, pt, params, 1.0, sup_l65)
        cols["r1"][i] = norm_l2(grid, res_t.r1_hat)
        cols["r2"][i] = norm_l2(grid, res_t.r2_hat)
        cols["pair1"][i] = inner(grid, res_t.r1_hat, ops.stokes_inverse(grid, ut - u))
        cols["pair2"][i] = inner(grid, res_t.r2_hat - res.r2_hat, pt - p)

    E, W, K1 = cols["E"], cols["W"], cols["K1"]
    pair = cols["pair1"] + cols["pair2"]

    def sides(cv):
        return _gronwall_sides(t, E, W, cv * K1, pair, w_weight)

    def ok(cv):
        return _passes(*sides(cv), rtol)

    c_min = _fit_c(ok)
    lhs, rhs = sides(c)
    return GronwallReport(
        t=t, E_rel=E, W_rel=W, K_val=c * K1, r1_norm=cols["r1"], r2_norm=cols["r2"],
        pairing1=cols["pair1"], pairing2=cols["pair2"], lhs=lhs, rhs=rhs, c=c,
        w_weight=w_weight, fitted_c_min=c_min, passed=_passes(lhs, rhs, rtol), k_shape=K1,
    )


def _fit_c(ok, rtol: float = 1e-6, max_doublings: int = 200) -> float:
    """Smallest ``c >= 0`` with ``ok(c)``, assuming monotonicity in ``c``."""
    if ok(0.0):
        return 0.0
    hi = 1.0
    for _ in range(max_doublings):
        if ok(hi):
            break
        hi *= 2.0
    else:
        return math.inf
    lo = 0.0 if hi == 1.0 else hi / 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class WeakStrongReport:
    max_E_rel: float
    terminal_E_rel: float

    @property
    def max_distance(self) -> float:
        """``max_t ||p_a - p_b||_{L^2}``."""
        return math.sqrt(2.0 * self.max_E_rel)

    @property
    def terminal_distance(self) -> float:
        return math.sqrt(2.0 * self.terminal_E_rel)


def weak_strong_report(traj_a, traj_b) -> WeakStrongReport:
    """Relative energy between two trajectories sampled at the same times."""
    if traj_a.grid != traj_b.grid:
        raise ValueError("trajectories live on different grids")
    if len(traj_a) != len(traj_b) or not np.allclose(traj_a.times, traj_b.times, atol=1e-12):
        raise ValueError("time-grid mismatch between trajectories")
    grid = traj_a.grid
    E = [relative_energy(grid, a.p_hat, b.p_hat) for a, b in zip(traj_a.states, traj_b.states)]
    return WeakStrongReport(float(max(E)), float(E[-1]))
