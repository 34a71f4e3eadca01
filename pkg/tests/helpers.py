import numpy as np

from cellavg import make_custom_grid


def random_grid(rng, n_max=32, n_min=2, left_zero=None, k_max=3.0, scale=None):
    """Random quasi-uniform custom grid (width ratio at most k_max)."""
    n = int(rng.integers(n_min, n_max + 1))
    w = rng.uniform(1.0, k_max, size=n)
    scale = rng.uniform(0.5, 2.0) if scale is None else scale
    w *= scale / w.sum()
    if left_zero is None:
        left_zero = rng.random() < 0.5
    left = 0.0 if left_zero else rng.uniform(0.0, 0.2) * scale
    return make_custom_grid(np.concatenate([[left], left + np.cumsum(w)]))
