"""Small numerical helpers shared by trackers, controllers and reports."""

from __future__ import annotations

import numpy as np


def running_average(prev, count: int, values, decay: float):
    """Fold rows of ``values`` into a running average, one row at a time.

    The t-th folded row (counting from 1 over the tracker's lifetime) gets
    weight ``max(1 - decay, 1/t)``: a plain cumulative mean while
    ``t < 1/(1 - decay)`` and an exponential moving average afterwards.
    ``decay = 1`` is the plain mean throughout.  Returns ``(new, new_count)``.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    B = values.shape[0]
    if B == 0:
        return np.array(prev, dtype=float), count
    t = np.arange(count + 1, count + B + 1, dtype=float)
    w = np.maximum(1.0 - decay, 1.0 / t)
    keep = 1.0 - w
    # suffix[t] = prod_{s > t} keep[s]
    suffix = np.ones(B)
    suffix[:-1] = np.cumprod(keep[::-1])[::-1][1:]
    total_keep = keep.prod()
    new = np.asarray(prev, dtype=float) * total_keep + (w * suffix) @ values
    return new, count + B


def weighted_moments(samples, weights=None):
    """Column means and (population) variances, optionally probability-weighted."""
    samples = np.asarray(samples, dtype=float)
    if weights is None:
        mean = samples.mean(axis=0)
        var = samples.var(axis=0)
    else:
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        mean = w @ samples
        var = w @ (samples - mean) ** 2
    return mean, var
