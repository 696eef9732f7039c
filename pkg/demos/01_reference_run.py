# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Reference run and the energy ledger
#
# Integrate the reference configuration and look at how well the sampled
# energy balance closes: `E(t) + int (dissipation) - E(0)` should be zero up
# to the time discretisation.

# %%
from pathlib import Path

import numpy as np

from polarswim import load_config, simulate

ROOT = Path.cwd() if (Path.cwd() / "configs").exists() else Path.cwd().parent
cfg, params = load_config(ROOT / "configs" / "reference.ini")
print(cfg.grid, "dt =", cfg.dt)

# %%
res = simulate(cfg, params)
led = res.ledger
for t, E, d in zip(led["t"], led["E"], led["balance_defect"]):
    print(f"t={t:5.2f}  E={E:.6e}  defect/E0={d / led['E'][0]: .2e}")

# %% [markdown]
# Only the gradient and linear terms can feed energy in, and only when
# `gamma2` or `beta` is negative. Here all four rates dissipate, so `E` decays.

# %%
print("cumulative terms at T:",
      {k: float(led[k][-1]) for k in ("cum_visc", "cum_grad", "cum_quart", "cum_lin")})
print("velocity energy int ||u||^2 dt =", float(led.cum_u_sq[-1]))
print("monotone decay:", bool(np.all(np.diff(led["E"]) < 0)))
