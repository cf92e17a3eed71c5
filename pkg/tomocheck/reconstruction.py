"""Characteristic functions from finitely many moments, and their inversion.

The tomogram characteristic function ``<exp(i K1 X1 + i K2 X2)>`` and the
Wigner characteristic function ``<exp(i xi . z)>`` are power series in the
moments. Truncated at order N they are evaluated on a window where the
order-N term stays below ``epsilon`` and then inverted with a direct
Fourier sum.

Two truncations are available: ``"moment"`` is the plain Taylor series;
``"cumulant"`` exponentiates the cumulant series of the same order (same
moment information, exact for Gaussian states).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from tomocheck import series, weyl_algebra
from tomocheck.errors import DegreeOverflowError, ImaginaryResidueError, InvalidStateError, WindowAdmissionError
from tomocheck.homodyne_lab import lattice_phases
from tomocheck.moment_engine import MomentSource, build_moment_table
from tomocheck.quantum_state import GridWigner, StateDescriptor
from tomocheck.tomography import JointTomogram

logger = logging.getLogger(__name__)

SERIES_KINDS = ("moment", "cumulant")


@dataclass(frozen=True, eq=False)
class GridField:
    '''
    Complex characteristic function on a uniform grid.

    ``center`` and ``covariance`` are the first two moments carried along
    to place the inverse grid.
    '''

    values: np.ndarray
    axes: Tuple[np.ndarray, ...]
    center: np.ndarray
    covariance: np.ndarray
    order: int
    series: str
    truncation_bound: float
    forms: Tuple[Tuple[float, float], ...] = ()

    @property
    def window(self) -> Tuple[float, ...]:
        return tuple(float(axis[-1]) for axis in self.axes)


def _first_two_moments(moments: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    dims = moments.ndim
    unit = np.eye(dims, dtype=int)
    mean = np.array([moments[tuple(unit[i])] for i in range(dims)]).real
    cov = np.empty((dims, dims))
    for i in range(dims):
        for j in range(dims):
            idx = unit[i] + unit[j]
            cov[i, j] = moments[tuple(idx)].real - mean[i] * mean[j]
    return mean, cov


def series_coefficients(moments: np.ndarray, order: int, kind: str = "cumulant") -> np.ndarray:
    '''
    Coefficients of the characteristic function in ``u = i K``.

    :param moments: raw moments indexed by exponent, total degree <= order
    :param kind: ``"moment"`` returns ``M_e / e!`` (Taylor series of the
        function itself); ``"cumulant"`` returns its truncated logarithm
    '''
    if kind not in SERIES_KINDS:
        raise ValueError(f"Unknown series kind {kind!r}, expected one of {SERIES_KINDS}")
    coeffs = series.truncate(moments / series.factorial_weights(order, moments.ndim), order)
    if kind == "moment":
        return coeffs
    return series.log_series(coeffs, order)


def top_order_bound(coeffs: np.ndarray, order: int, window: Sequence[float], kind: str) -> float:
    """Largest possible magnitude of the order-N terms on the window's box."""
    if kind == "cumulant" and order <= 2:
        return 0.0
    top = np.abs(series.homogeneous_part(coeffs, order))
    return float(series.evaluate(top, [np.array([w]) for w in window]).ravel()[0])


def _choose_window(coeffs, order, kind, covariance, window, epsilon, decay_floor) -> Tuple[Tuple[float, ...], float]:
    dims = coeffs.ndim
    if window is not None:
        window = tuple(float(w) for w in np.broadcast_to(np.asarray(window, dtype=float), (dims,)))
        bound = top_order_bound(coeffs, order, window, kind)
        if bound > epsilon:
            raise WindowAdmissionError(
                f"Window {window} too large for order {order}: order-{order} term reaches {bound:.3e} > {epsilon:g}")
        return window, bound
    lam_min = float(np.linalg.eigvalsh(covariance).min())
    if lam_min <= 0:
        raise InvalidStateError(f"Moment covariance is not positive definite (min eigenvalue {lam_min:.3e})")
    edge = math.sqrt(2 * math.log(1 / decay_floor) / lam_min)
    window = (edge,) * dims
    bound = top_order_bound(coeffs, order, window, kind)
    if bound > epsilon:
        shrink = (epsilon / bound) ** (1.0 / order)
        window = tuple(w * shrink for w in window)
        bound = top_order_bound(coeffs, order, window, kind)
        logger.info(f"Order-{order} {kind} series admits a window of half-width {window[0]:.3f}")
    return window, bound


def _evaluate(coeffs: np.ndarray, axes, kind: str) -> np.ndarray:
    values = series.evaluate(coeffs, [1j * axis for axis in axes])
    return np.exp(values) if kind == "cumulant" else values


def joint_moment_array(source: MomentSource, theta1: float, theta2: float, order: int) -> np.ndarray:
    moments = np.zeros((order + 1, order + 1), dtype=complex)
    for n in range(order + 1):
        for m in range(order + 1 - n):
            moments[n, m] = 1.0 if n == m == 0 else source.joint_moment(theta1, theta2, n, m)
    return moments


def charfn_from_moments(source: MomentSource, theta1: float, theta2: float, order: int = 8,
                        window=None, kind: str = "cumulant", points: int = 129,
                        epsilon: float = 1e-3, decay_floor: float = 1e-6) -> GridField:
    '''
    Tomogram characteristic function at ``(theta1, theta2)`` from the joint
    moments ``<X1^n X2^m>``, n + m <= order.

    :param window: half-width (scalar or per axis); default is the decay
        window of the second moments, shrunk until admitted
    :raises WindowAdmissionError: an explicit window where the order-N term
        exceeds ``epsilon``
    '''
    if order > weyl_algebra.MAX_ORDER:
        raise DegreeOverflowError(f"Truncation order {order} exceeds {weyl_algebra.MAX_ORDER}")
    moments = joint_moment_array(source, theta1, theta2, order)
    center, covariance = _first_two_moments(moments)
    coeffs = series_coefficients(moments, order, kind)
    window, bound = _choose_window(coeffs, order, kind, covariance, window, epsilon, decay_floor)
    axes = tuple(np.linspace(-w, w, points) for w in window)
    values = _evaluate(coeffs, axes, kind)
    forms = ((math.cos(theta1), math.sin(theta1)), (math.cos(theta2), math.sin(theta2)))
    logger.debug(f"Charfn at ({theta1:.4f}, {theta2:.4f}), order {order}, window {window}, bound {bound:.2e}")
    return GridField(values, axes, center, covariance, order, kind, bound, forms)


def _fourier_matrix(out_axis: np.ndarray, k_axis: np.ndarray) -> np.ndarray:
    weights = np.full(k_axis.shape, k_axis[1] - k_axis[0])
    weights[[0, -1]] *= 0.5
    return np.exp(-1j * np.outer(out_axis, k_axis)) * weights


def _inverse_fourier(field: GridField, out_axes) -> np.ndarray:
    result = field.values
    for out_axis, k_axis in zip(out_axes, field.axes):
        result = np.tensordot(result, _fourier_matrix(out_axis, k_axis), axes=([0], [1]))
    return result / (2 * math.pi) ** len(out_axes)


def _output_axes(field: GridField, points: int, width: float):
    sigmas = np.sqrt(np.clip(np.diag(field.covariance), 1e-12, None))
    return tuple(np.linspace(c - width * s, c + width * s, points) for c, s in zip(field.center, sigmas))


def _check_real(values: np.ndarray, tolerance: float, label: str) -> np.ndarray:
    scale = float(np.abs(values.real).max()) or 1.0
    residue = float(np.abs(values.imag).max()) / scale
    if residue > tolerance:
        raise ImaginaryResidueError(f"{label} has relative imaginary residue {residue:.3e} > {tolerance:g}")
    return values.real


def invert_to_tomogram(field: GridField, points: int = 201, width: float = 6.0,
                       imaginary_tolerance: float = 1e-3) -> JointTomogram:
    """Joint tomogram ``w(X1, X2) = int F(K) exp(-i K . X) dK / (2 pi)^2``, renormalized."""
    if len(field.axes) != 2:
        raise InvalidStateError("invert_to_tomogram needs a two-variable characteristic function")
    x1, x2 = _output_axes(field, points, width)
    density = _check_real(_inverse_fourier(field, (x1, x2)), imaginary_tolerance, "Inverted tomogram")
    total = float(trapezoid(trapezoid(density, x2, axis=1), x1))
    forms = field.forms or ((1.0, 0.0), (1.0, 0.0))
    return JointTomogram(x1=x1, x2=x2, density=density / total, forms=forms, drift=abs(total - 1.0))


def symmetric_moments(source: MomentSource, order: int, solver_phases=None, tol: float = 1e-10) -> np.ndarray:
    '''
    Weyl-symmetric phase-space moments ``<{Q1^a P1^b} {Q2^c P2^d}>``,
    indexed ``[a, b, c, d]`` with a + b + c + d <= order.

    Single-mode parts symmetrize the ordered-moment table; mixed parts solve
    the joint moments on the phase lattice ``j pi / (order + 1)``, using
    ``(mu Q + nu P)^n = sum_a C(n, a) mu^a nu^(n-a) {Q^a P^(n-a)}``.
    '''
    if order > weyl_algebra.MAX_ORDER:
        raise DegreeOverflowError(f"Order {order} exceeds {weyl_algebra.MAX_ORDER}")
    table = build_moment_table(source, (1, 2), order, phases=solver_phases, cross=False, bootstrap=False, tol=tol)
    moments = np.zeros((order + 1,) * 4)
    moments[0, 0, 0, 0] = 1.0
    for degree in range(1, order + 1):
        for a in range(degree + 1):
            sym = weyl_algebra.symmetrize(a, degree - a)
            moments[a, degree - a, 0, 0] = weyl_algebra.evaluate(sym, table.lookup(1)).real
            moments[0, 0, a, degree - a] = weyl_algebra.evaluate(sym, table.lookup(2)).real

    lattice = lattice_phases(order)
    cos, sin = np.cos(lattice), np.sin(lattice)

    def design(n):
        return np.array([[math.comb(n, a) * c ** a * s ** (n - a) for a in range(n + 1)] for c, s in zip(cos, sin)])

    pinv = {n: np.linalg.pinv(design(n)) for n in range(1, order)}
    for n in range(1, order):
        for m in range(1, order + 1 - n):
            observed = np.array([[source.joint_moment(t1, t2, n, m) for t2 in lattice] for t1 in lattice])
            block = pinv[n] @ observed @ pinv[m].T
            for a in range(n + 1):
                for c in range(m + 1):
                    moments[a, n - a, c, m - c] = block[a, c]
    logger.info(f"Assembled symmetric moments up to order {order}")
    return moments


def wigner_charfn_from_moments(moments: np.ndarray, order: int, points: int = 32, window=None,
                               kind: str = "cumulant", epsilon: float = 1e-3,
                               decay_floor: float = 1e-6) -> GridField:
    """Wigner characteristic function on a ``points^4`` grid from symmetric moments."""
    moments = np.asarray(moments, dtype=complex)
    if moments.ndim != 4:
        raise InvalidStateError("Wigner characteristic function needs moments indexed [a, b, c, d]")
    center, covariance = _first_two_moments(moments)
    coeffs = series_coefficients(moments, order, kind)
    window, bound = _choose_window(coeffs, order, kind, covariance, window, epsilon, decay_floor)
    axes = tuple(np.linspace(-w, w, points) for w in window)
    values = _evaluate(coeffs, axes, kind)
    return GridField(values, axes, center, covariance, order, kind, bound)


def invert_to_wigner(field: GridField, points: Optional[int] = None, width: float = 6.0,
                     imaginary_tolerance: float = 1e-3) -> GridWigner:
    """``W(z) = int W~(xi) exp(-i xi . z) d^4 xi / (2 pi)^2`` on a grid, renormalized."""
    if len(field.axes) != 4:
        raise InvalidStateError("invert_to_wigner needs a four-variable characteristic function")
    points = points or field.axes[0].shape[0]
    out_axes = _output_axes(field, points, width)
    # the d^4 xi / (2 pi)^4 Fourier sum, times (2 pi)^2 for the phase-space measure
    values = _inverse_fourier(field, out_axes) * (2 * math.pi) ** 2
    values = _check_real(values, imaginary_tolerance, "Inverted Wigner function")
    descriptor = StateDescriptor("reconstructed", {"order": field.order, "series": field.series})
    return GridWigner(values, out_axes, descriptor).normalized()


def tomogram_error(recovered: JointTomogram, reference: JointTomogram) -> float:
    """Maximum absolute density difference on the recovered grid."""
    grid1, grid2 = np.meshgrid(recovered.x1, recovered.x2, indexing="ij")
    return float(np.abs(recovered.density - reference.pdf(grid1, grid2)).max())
