# %% [markdown]
# # Mixture, OU schedule and exact scores
# Speciation time, the noised-mixture variance and the closed-form scores
# checked against a numerical gradient of the log-density.

# %%
import numpy as np

from cfglab import MixtureSpec, cond_score, delta, gamma, log_density, score_diff, speciation_time, uncond_score

for d in (2, 16, 200):
    print(f"d={d:4d}  t_s={speciation_time(d):.4f}")
print("Delta(0.5) =", delta(0.5), " Gamma(0.5, 4) =", gamma(0.5, 4.0))

# %%
spec = MixtureSpec.symmetric_pair(16, 4.0)
rng = np.random.default_rng(0)
x, t = rng.normal(size=16), 0.8
h = 1e-6
fd = np.array([(log_density(x + h * e, t, spec) - log_density(x - h * e, t, spec)) / (2 * h) for e in np.eye(16)])
print("max |score - fd| =", np.abs(uncond_score(x, t, spec).vector - fd).max())

# %%
# score difference is tiny far inside the target class, and stays finite for huge inputs
for lam in (0.0, 1.0, 5.0, 50.0, 1e6):
    _, norm = score_diff(lam * spec.mean_vectors[0], 0.5, 1, spec)
    print(f"x = {lam:g} m   |dS| = {float(norm):.3e}")
print("conditional score at origin:", cond_score(np.zeros(16), 0.5, 1, spec).vector[:3])
