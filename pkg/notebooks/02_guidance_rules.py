# %% [markdown]
# # Guidance weights
# The weight applied to the score difference for each rule, and the
# Regime-II inertness bound.

# %%
import numpy as np

from cfglab import GuidanceSpec, MixtureSpec, guidance_term, phi_weight, regime2_inertness_bound

rules = {
    "standard": GuidanceSpec.standard(8.0),
    "power_law a=-0.75": GuidanceSpec.power_law(1.5, -0.75),
    "power_law a=0.9": GuidanceSpec.power_law(5.0, 0.9),
    "rescaled g=4": GuidanceSpec.rescaled_power_law(8.0, 4.0),
    "interval [0.5,2)": GuidanceSpec.limited_interval(8.0, 0.5, 2.0),
    "interrupted t1=1.38": GuidanceSpec.interrupted(8.0, 1.38),
}
for name, g in rules.items():
    print(f"{name:22s}", [round(float(phi_weight(0.3, t, g)), 4) for t in (0.1, 1.0, 3.0)])

# %%
spec = MixtureSpec.symmetric_pair(200, 1.0)
for t in (0.5, 1.0, 2.0, 2.65, 4.0):
    # a point sitting on the target class centre at time t
    term, _ = guidance_term(spec.mean_vectors[0] * np.exp(-t), t, 1, spec, GuidanceSpec.standard(15.0))
    print(f"t={t:4.2f}  |term|={np.linalg.norm(term):.3e}  bound={2 * 15 * regime2_inertness_bound(t, spec):.3e}")
