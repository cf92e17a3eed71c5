"""Truncated multivariate power series on dense numpy arrays.

A series in ``d`` variables truncated at total degree ``N`` is an array of
shape ``(N + 1,) * d`` whose entry ``[e1, ..., ed]`` is the coefficient of
``z1^e1 ... zd^ed``; entries above total degree ``N`` are kept at zero.
Used for moment generating functions, characteristic functions and the
moment <-> cumulant conversion.
"""
from __future__ import annotations

import numpy as np
from scipy.signal import convolve
from scipy.special import factorial


def degree_grid(order: int, dims: int) -> np.ndarray:
    grids = np.indices((order + 1,) * dims)
    return grids.sum(axis=0)


def truncate(coeffs: np.ndarray, order: int) -> np.ndarray:
    out = np.array(coeffs, dtype=complex)
    out[degree_grid(order, out.ndim) > order] = 0
    return out


def zeros(order: int, dims: int) -> np.ndarray:
    return np.zeros((order + 1,) * dims, dtype=complex)


def multiply(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    full = convolve(a, b, method="direct" if a.size <= 729 else "fft")
    window = tuple(slice(0, order + 1) for _ in range(a.ndim))
    return truncate(full[window], order)


def exp_series(a: np.ndarray, order: int) -> np.ndarray:
    """``exp(a)`` truncated at ``order``."""
    origin = (0,) * a.ndim
    constant = a[origin]
    u = np.array(a, dtype=complex)
    u[origin] = 0
    result = zeros(order, a.ndim)
    result[origin] = 1.0
    term = result.copy()
    for j in range(1, order + 1):
        term = multiply(term, u, order) / j
        result = result + term
    return np.exp(constant) * result


def log_series(a: np.ndarray, order: int) -> np.ndarray:
    """``log(a)`` truncated at ``order``; ``a`` needs a non-zero constant term."""
    origin = (0,) * a.ndim
    constant = a[origin]
    if constant == 0:
        raise ValueError("log_series needs a non-zero constant term")
    u = np.array(a, dtype=complex) / constant
    u[origin] = 0
    result = zeros(order, a.ndim)
    power = zeros(order, a.ndim)
    power[origin] = 1.0
    for j in range(1, order + 1):
        power = multiply(power, u, order)
        result = result + ((-1) ** (j + 1) / j) * power
    result[origin] = np.log(constant)
    return result


def factorial_weights(order: int, dims: int) -> np.ndarray:
    """Entry ``[e1..ed] = e1! ... ed!`` (moments = coefficients * weights)."""
    weights = np.ones((order + 1,) * dims)
    single = factorial(np.arange(order + 1), exact=False)
    for axis in range(dims):
        shape = [1] * dims
        shape[axis] = order + 1
        weights = weights * single.reshape(shape)
    return weights


def evaluate(coeffs: np.ndarray, axes) -> np.ndarray:
    """Evaluate the polynomial on the tensor grid spanned by ``axes``."""
    order = coeffs.shape[0] - 1
    powers = np.arange(order + 1)
    result = np.asarray(coeffs)
    for axis in axes:
        vander = np.asarray(axis)[:, None] ** powers
        result = np.tensordot(result, vander, axes=([0], [1]))
    return result


def homogeneous_part(coeffs: np.ndarray, degree: int) -> np.ndarray:
    out = np.array(coeffs, copy=True)
    out[degree_grid(coeffs.shape[0] - 1, coeffs.ndim) != degree] = 0
    return out
