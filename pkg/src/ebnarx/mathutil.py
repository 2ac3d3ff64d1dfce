"""Small numerical helpers shared across the package."""

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


def logsumexp(a, axis=None, keepdims=False):
    """Stabilized log(sum(exp(a))) along ``axis``."""
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if not keepdims:
        out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())
    if out.ndim == 0:
        return float(out)
    return out


def trapezoid_weights(x):
    """Quadrature weights w such that sum(w * f) == np.trapezoid(f, x)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("grid must be a 1-D array with at least two points")
    w = np.empty_like(x)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    return w


def log_trapezoid(log_f, x):
    """log of the trapezoidal integral of exp(log_f) over grid x, stabilized."""
    log_w = np.log(trapezoid_weights(x))
    return logsumexp(np.asarray(log_f, dtype=float) + log_w)


def normal_log_pdf(x, mean, std):
    """Log density of a normal distribution, broadcasting over all arguments."""
    z = (np.asarray(x, dtype=float) - mean) / std
    return -0.5 * (z * z + LOG_2PI) - np.log(std)
