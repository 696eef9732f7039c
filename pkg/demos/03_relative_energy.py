# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Relative energy monitor and the Galerkin oracle
#
# A coarse-step run is compared with a restart of the same data at half the
# step. The monitor reports the smallest constant `c` in the Gronwall weight
# for which the integrated relative energy inequality holds at every sample.

# %%
import numpy as np

from polarswim import (
    BaseCoefficients,
    Grid,
    InitSpectrum,
    apply_coupling,
    gronwall_check,
    integrate,
    random_solenoidal_field,
)

G = Grid.cube(2, 16)
params = apply_coupling(BaseCoefficients(mu2=1e-3, gamma2=-0.1, beta=0.1, gamma1_tilde=0.5), 0.1)
p0 = random_solenoidal_field(G, 7, InitSpectrum("gauss", 0.2, 1.5))
runs = [integrate(G, p0, params, dt=0.01 / 2**j, t_end=1.0, sample_every=2**j,
                  diagnostics=False) for j in range(3)]

# %%
for j in range(2):
    rep = gronwall_check(runs[j], runs[j + 1])
    print(f"dt {0.01 / 2**j:g} vs {0.005 / 2**j:g}: c_min = {rep.fitted_c_min:.4f}, "
          f"max E_rel = {np.max(rep.E_rel):.2e}")

# %% [markdown]
# The step-size pair must not be stiff: with `mu2 |k|^4 dt` large the coarse
# run carries an O(1) damping error in the highest modes from its first step,
# and no finite `c` covers a jump that the right side cannot see.
#
# The oracle twin runs the spectral integrator against a plain RK4 solve of
# the Galerkin system assembled by explicit convolution sums.

# %%
from polarswim.config import RunConfig
from polarswim.experiments import twin_run

g8 = Grid.cube(3, 8)
tw_params = apply_coupling(BaseCoefficients(mu2=0.05, gamma2=-0.2, beta=0.1, gamma1_tilde=0.5), 0.5)
for dt in (2e-3, 1e-3, 5e-4):
    cfg = RunConfig(grid=g8, dt=dt, t_end=10 * dt, seed=3,
                    init_spectrum=InitSpectrum("power", 1.0, 1.0, 4.0))
    print(f"dt {dt:g}: max distance {twin_run(cfg, tw_params).report.max_distance:.2e}")
