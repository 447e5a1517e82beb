# %% [markdown]
# # Ensemble diagnostics
# k-NN Jensen-Shannon divergence and score-difference onset times.

# %%
import math

import numpy as np

from cfglab import knn_jsd

rng = np.random.default_rng(2)
a = rng.normal(size=50_000)
for shift in (0.0, 0.5, 1.0, 3.0, 50.0):
    print(f"shift={shift:5.1f}  JSD={knn_jsd(a, rng.normal(shift, 1.0, 50_000)):.4f}  (ln 2 = {math.log(2):.4f})")

# %%
from cfglab import GuidanceSpec, MixtureSpec, Schedule, SimPlan, onset_time, score_diff_curve, simulate

for d in (1, 5, 20, 50, 200):
    plan = SimPlan(MixtureSpec.symmetric_pair(d, 1.0), GuidanceSpec.standard(5.0), Schedule(8.0, 800, 10),
                   n_traj=2000, seed=d, mode="projected_q")
    curve = score_diff_curve(simulate(plan))
    print(f"d={d:3d}  onset={onset_time(curve):.2f}  peak={curve.mean.max():.3e}  final={curve.mean[-1]:.2e}")
