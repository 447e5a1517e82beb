# %% [markdown]
# # Closed forms
# Unguided mean, the post-switch prediction, the effective potential and
# the DDPM time map.

# %%
import numpy as np

from cfglab import (GuidanceSpec, MixtureSpec, Schedule, SimPlan, ddpm_time_reparam, effective_potential,
                    mean_closed_form, simulate)
from cfglab.analysis import ensemble_stats

plan = SimPlan(MixtureSpec.symmetric_pair(16, 4.0), GuidanceSpec.none(), Schedule(5.0, 500, 50),
               n_traj=20_000, seed=5, mode="projected_q")
st = ensemble_stats(simulate(plan))
pred = mean_closed_form(0.0, 5.0, 5.0 - st.times, 16, 4.0)
for t, m, s, p in zip(st.times, st.mean, st.sem, pred):
    print(f"t={t:4.2f}  sim={m:.4f} +- {s:.4f}  closed form={p:.4f}")

# %%
qs = np.linspace(-4, 4, 9)
for t in (0.0, 0.5, 2.0):
    v = effective_potential(qs, t, np.e, 2.0)
    print(f"t={t}", np.round(v.v_total, 3))

# %%
print("DDPM step -> OU time:", [round(ddpm_time_reparam(k), 4) for k in (1, 100, 500, 1000)])
