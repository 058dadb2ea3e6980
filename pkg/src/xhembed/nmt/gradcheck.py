"""Finite-difference verification of the analytic gradients."""

import numpy as np

from .model import forward_loss


def gradient_check(params, cfg, batch, sample_size=100, seed=0):
    """Compare analytic gradients against central differences for
    `sample_size` randomly chosen scalar parameters (dropout off, double
    precision).  Returns the max relative error; a zero analytic gradient
    with zero finite difference counts as error 0."""
    rng = np.random.default_rng(seed)
    _, grads = forward_loss(params, cfg, batch, dropout_on=False)
    names = sorted(params)
    sizes = np.array([params[n].size for n in names], dtype=np.float64)
    max_err = 0.0
    for _ in range(sample_size):
        name = names[int(rng.integers(len(names)))]
        flat = params[name].reshape(-1)
        i = int(rng.integers(flat.size))
        theta = flat[i]
        h = 1e-5 * max(1.0, abs(theta))
        flat[i] = theta + h
        lp, _ = forward_loss(params, cfg, batch, dropout_on=False,
                             compute_grads=False)
        flat[i] = theta - h
        lm, _ = forward_loss(params, cfg, batch, dropout_on=False,
                             compute_grads=False)
        flat[i] = theta
        numeric = (lp - lm) / (2.0 * h)
        analytic = grads[name].reshape(-1)[i]
        denom = max(abs(numeric), abs(analytic))
        err = 0.0 if denom == 0.0 else abs(numeric - analytic) / denom
        max_err = max(max_err, err)
    return max_err
