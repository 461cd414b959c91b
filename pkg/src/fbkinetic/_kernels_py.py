"""Pure-numpy reference for the Duhamel segment kernels.

Forcing samples ``F[j]`` at ``xs[j]`` are interpolated linearly; per mode with
rate ``lam >= 0`` the kernels accumulate

    forward:   I(x) = int_0^x   exp(-lam (x - y)) f(y) dy
    backward:  K(x) = int_x^X   exp(-lam (y - x)) f(y) dy

exactly on each segment, using ``phi1(z) = (1 - e^-z)/z`` and
``phi2(z) = (1 - e^-z (1 + z))/z^2``.
"""
import numpy as np

SERIES_CUTOFF = 0.1
_NTERMS = 10
_FACT = np.cumprod(np.r_[1.0, np.arange(1, _NTERMS + 3, dtype=float)])  # _FACT[k] = k!


def phi1(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_CUTOFF
    zs = np.where(small, z, 0.0)
    series = np.zeros_like(zs)
    for k in range(_NTERMS - 1, -1, -1):
        series = series * (-zs) + 1.0 / _FACT[k + 1]
    zl = np.where(small, 1.0, z)
    return np.where(small, series, -np.expm1(-zl) / zl)


def phi2(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_CUTOFF
    zs = np.where(small, z, 0.0)
    series = np.zeros_like(zs)
    for k in range(_NTERMS - 1, -1, -1):
        series = series * (-zs) + (k + 1) / _FACT[k + 2]
    zl = np.where(small, 1.0, z)
    return np.where(small, series, (phi1(zl) - np.exp(-zl)) / zl)


def forward_scan(lam, xs, F):
    lam = np.asarray(lam, dtype=float)
    xs = np.asarray(xs, dtype=float)
    F = np.asarray(F, dtype=float)
    out = np.zeros((xs.size, lam.size))
    for j in range(xs.size - 1):
        h = xs[j + 1] - xs[j]
        z = lam * h
        out[j + 1] = (np.exp(-z) * out[j] + F[j + 1] * h * phi1(z)
                      - (F[j + 1] - F[j]) * h * phi2(z))
    return out


def backward_scan(lam, xs, F, end=None):
    lam = np.asarray(lam, dtype=float)
    xs = np.asarray(xs, dtype=float)
    F = np.asarray(F, dtype=float)
    out = np.zeros((xs.size, lam.size))
    if end is not None:
        out[-1] = end
    for j in range(xs.size - 2, -1, -1):
        h = xs[j + 1] - xs[j]
        z = lam * h
        out[j] = (np.exp(-z) * out[j + 1] + F[j] * h * phi1(z)
                  + (F[j + 1] - F[j]) * h * phi2(z))
    return out


def _locate(xs, xq):
    j = np.searchsorted(xs, xq, side="right") - 1
    return np.clip(j, 0, xs.size - 2)


def eval_forward(lam, xs, F, I, xq):
    lam = np.asarray(lam, dtype=float)
    xs = np.asarray(xs, dtype=float)
    xq = np.asarray(xq, dtype=float)
    j = _locate(xs, xq)
    h = (xs[j + 1] - xs[j])[:, None]
    slope = (F[j + 1] - F[j]) / h
    d = (xq - xs[j])[:, None]
    fx = F[j] + slope * d
    z = lam[None, :] * d
    return np.exp(-z) * I[j] + fx * d * phi1(z) - slope * d * d * phi2(z)


def eval_backward(lam, xs, F, K, xq):
    lam = np.asarray(lam, dtype=float)
    xs = np.asarray(xs, dtype=float)
    xq = np.asarray(xq, dtype=float)
    j = _locate(xs, xq)
    h = (xs[j + 1] - xs[j])[:, None]
    slope = (F[j + 1] - F[j]) / h
    d = (xs[j + 1] - xq)[:, None]
    fx = F[j + 1] - slope * d
    z = lam[None, :] * d
    return np.exp(-z) * K[j + 1] + fx * d * phi1(z) + slope * d * d * phi2(z)
