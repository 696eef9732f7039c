# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Weak coupling limit
#
# With the same initial field, runs at decreasing `epsilon` approach the
# decoupled run linearly in `epsilon`, and the velocity energy shrinks like
# `epsilon^2`. The 2-D reference configuration makes this a few seconds.

# %%
from pathlib import Path

import numpy as np

from polarswim import epsilon_sweep, load_config

ROOT = Path.cwd() if (Path.cwd() / "configs").exists() else Path.cwd().parent
cfg, params = load_config(ROOT / "configs" / "reference.ini")
eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
res = epsilon_sweep(cfg, params, eps)

# %%
for e, d, u in zip(res.eps, res.p_distance, res.u_sq_integral):
    print(f"eps={e:7.0e}  sup||p_eps - p_0||={d:.4e}  int||u||^2={u:.4e}")
print(f"slopes: p {res.p_slope:.4f}, u {res.u_slope:.4f}; monotone: {res.monotone}")

# %% [markdown]
# Ratios between neighbouring rows show the same thing without a fit.

# %%
print(np.round(res.p_distance[:-1] / res.p_distance[1:], 3))
print(np.round(res.u_sq_integral[:-1] / res.u_sq_integral[1:], 3))
