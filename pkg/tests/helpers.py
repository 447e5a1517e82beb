"""Shared generators for randomized checks."""

import numpy as np

from cfglab.mixture import MixtureSpec
from cfglab.scores import log_density


def random_spec(rng, kind):
    d = int(rng.integers(1, 7)) if kind != "orthogonal_quad" else int(rng.integers(2, 7))
    sigma2 = float(rng.uniform(0.3, 4.0))
    if kind == "symmetric_pair":
        return MixtureSpec.symmetric_pair(d, sigma2, m=rng.normal(0, 1.5, d))
    if kind == "general_pair":
        return MixtureSpec.general_pair(rng.normal(0, 1.5, d), rng.normal(0, 1.5, d), sigma2)
    q, _ = np.linalg.qr(rng.normal(size=(d, 2)))
    return MixtureSpec.orthogonal_quad(q[:, 0] * rng.uniform(0.5, 2), q[:, 1] * rng.uniform(0.5, 2), sigma2)


def fd_gradient(x, t, spec, h=1e-6):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (log_density(x + e, t, spec) - log_density(x - e, t, spec)) / (2 * h)
    return g


def relative_error(a, b, floor=1e-3):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))
