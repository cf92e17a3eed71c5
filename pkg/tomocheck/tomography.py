"""Optical and symplectic tomograms of one- and two-mode states.

Gaussian states give analytic (normal) tomograms. Gridded Wigner functions
are projected with line integrals evaluated by spline interpolation
(rotate-and-accumulate Radon transform); the joint tomogram of a 4D grid is
two sequential 2D transforms.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage
from scipy.integrate import trapezoid
from scipy.linalg import null_space
from scipy.stats import norm

from tomocheck import series
from tomocheck.errors import DegenerateFormError, InvalidModeError
from tomocheck.mode_network import quadrature_form
from tomocheck.quantum_state import GaussianState, GridWigner, reduce_to_mode

logger = logging.getLogger(__name__)

NEGATIVITY_FLOOR = -1e-9


@dataclass(frozen=True)
class RadonSettings:
    interpolation_order: int = 3
    slice_points: int = 256
    joint_points: int = 64


DEFAULT_RADON = RadonSettings()


def normal_moments(mean, cov, order: int) -> np.ndarray:
    """Raw moments ``E[X1^a X2^b ...]`` of a multivariate normal, all orders up to ``order``."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    dims = mean.shape[0]
    exponent = series.zeros(max(order, 2), dims)
    for i in range(dims):
        unit = [0] * dims
        unit[i] = 1
        exponent[tuple(unit)] += mean[i]
        for j in range(i, dims):
            idx = [0] * dims
            idx[i] += 1
            idx[j] += 1
            exponent[tuple(idx)] += 0.5 * cov[i, i] if i == j else cov[i, j]
    exponent = series.truncate(exponent[(slice(0, order + 1),) * dims], order)
    return (series.exp_series(exponent, order) * series.factorial_weights(order, dims)).real


@dataclass(frozen=True, eq=False)
class TomogramSlice:
    """Probability density of one homodyne quadrature.

    Either analytic (``loc``/``scale`` of a normal law) or gridded
    (``x``/``density``). ``drift`` is the normalization defect of a gridded
    projection before renormalization.
    """

    loc: Optional[float] = None
    scale: Optional[float] = None
    x: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None
    mode: Optional[int] = None
    theta: Optional[float] = None
    drift: float = 0.0

    @property
    def is_analytic(self) -> bool:
        return self.loc is not None

    @property
    def mean(self) -> float:
        if self.is_analytic:
            return self.loc
        return float(trapezoid(self.x * self.density, self.x))

    @property
    def variance(self) -> float:
        if self.is_analytic:
            return self.scale ** 2
        return self.moment(2) - self.mean ** 2

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_analytic:
            return norm.pdf(x, loc=self.loc, scale=self.scale)
        return np.interp(x, self.x, self.density, left=0.0, right=0.0)

    def moment(self, n: int) -> float:
        if n == 0:
            return 1.0
        if self.is_analytic:
            return float(norm.moment(n, loc=self.loc, scale=self.scale))
        return float(trapezoid(self.x ** n * self.density, self.x))

    def sample_grid(self, points: int = 256, width: float = 6.0) -> Tuple[np.ndarray, np.ndarray]:
        if not self.is_analytic:
            return self.x, self.density
        x = np.linspace(self.loc - width * self.scale, self.loc + width * self.scale, points)
        return x, self.pdf(x)

    def to_csv(self, path, points: int = 256):
        x, density = self.sample_grid(points)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["x", "w"])
            for xv, wv in zip(x, density):
                writer.writerow([repr(float(xv)), repr(float(wv))])


@dataclass(frozen=True, eq=False)
class JointTomogram:
    """Joint density of the two signal-mode quadratures.

    Analytic form: bivariate normal ``mean``/``cov``. Gridded form:
    ``x1``, ``x2`` axes and ``density[i, j]`` at ``(x1[i], x2[j])``.
    """

    mean: Optional[np.ndarray] = None
    cov: Optional[np.ndarray] = None
    x1: Optional[np.ndarray] = None
    x2: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None
    forms: Tuple[Tuple[float, float], Tuple[float, float]] = ((1.0, 0.0), (1.0, 0.0))
    drift: float = 0.0
    _moments: dict = field(default_factory=dict, repr=False)

    @property
    def is_analytic(self) -> bool:
        return self.mean is not None

    def pdf(self, x1, x2) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self.is_analytic:
            delta = np.stack([x1 - self.mean[0], x2 - self.mean[1]], axis=-1)
            inv = np.linalg.inv(self.cov)
            exponent = np.einsum("...i,ij,...j->...", delta, inv, delta)
            return np.exp(-0.5 * exponent) / (2 * math.pi * math.sqrt(np.linalg.det(self.cov)))
        ix = np.interp(x1, self.x1, np.arange(self.x1.size), left=-1, right=-1)
        jx = np.interp(x2, self.x2, np.arange(self.x2.size), left=-1, right=-1)
        coords = np.stack([np.atleast_1d(ix).ravel(), np.atleast_1d(jx).ravel()])
        values = ndimage.map_coordinates(self.density, coords, order=1, mode="constant", cval=0.0)
        return values.reshape(np.broadcast(x1, x2).shape)

    def moment(self, n: int, m: int) -> float:
        if self.is_analytic:
            order = n + m
            if order not in self._moments:
                self._moments[order] = normal_moments(self.mean, self.cov, order)
            return float(self._moments[order][n, m])
        integrand = (self.x1[:, None] ** n) * (self.x2[None, :] ** m) * self.density
        return float(trapezoid(trapezoid(integrand, self.x2, axis=1), self.x1))


def _check_form(mu: float, nu: float, label: str):
    if mu == 0 and nu == 0:
        raise DegenerateFormError(f"Quadrature form {label} has mu = nu = 0")


def _finish_density(x: np.ndarray, density: np.ndarray, context: str) -> Tuple[np.ndarray, float]:
    """Clamp interpolation negativity, renormalize, and return the drift."""
    minimum = float(density.min())
    if minimum < NEGATIVITY_FLOOR:
        logger.warning(f"Negative tomogram values down to {minimum:.2e} clamped ({context})")
    density = np.clip(density, 0.0, None)
    total = density
    axes = [x] if not isinstance(x, tuple) else list(x)
    for axis in reversed(axes):
        total = trapezoid(total, axis, axis=-1)
    total = float(total)
    return density / total, abs(total - 1.0)


def _line_frame(q_axis, p_axis, theta):
    center = np.array([(q_axis[0] + q_axis[-1]) / 2, (p_axis[0] + p_axis[-1]) / 2])
    radius = 0.5 * math.hypot(q_axis[-1] - q_axis[0], p_axis[-1] - p_axis[0])
    u = np.array([math.cos(theta), math.sin(theta)])
    u_perp = np.array([-math.sin(theta), math.cos(theta)])
    return center, radius, u, u_perp


def radon_2d(values: np.ndarray, q_axis: np.ndarray, p_axis: np.ndarray, theta: float,
             x_out: np.ndarray, order: int = 3) -> np.ndarray:
    """Line integrals ``int W(X u + t u_perp) dt / (2 pi)`` of a 2D grid.

    ``values`` may carry trailing batch axes; the result has shape
    ``(len(x_out),) + batch``.
    """
    center, radius, u, u_perp = _line_frame(q_axis, p_axis, theta)
    dq, dp = q_axis[1] - q_axis[0], p_axis[1] - p_axis[0]
    step = 0.5 * min(dq, dp)
    t = np.arange(-radius, radius + step, step)
    x0 = float(center @ u)
    base = center[:, None, None] + (np.asarray(x_out)[None, :, None] - x0) * u[:, None, None] \
        + t[None, None, :] * u_perp[:, None, None]
    coords = np.stack([(base[0] - q_axis[0]) / dq, (base[1] - p_axis[0]) / dp])
    batch_shape = values.shape[2:]
    flat = values.reshape(values.shape[0], values.shape[1], -1)
    out = np.empty((len(x_out), flat.shape[2]))
    for b in range(flat.shape[2]):
        sampled = ndimage.map_coordinates(flat[:, :, b], coords, order=order, mode="constant", cval=0.0)
        out[:, b] = trapezoid(sampled, t, axis=-1) / (2 * math.pi)
    return out.reshape((len(x_out),) + batch_shape)


def _unit_output_axis(q_axis, p_axis, theta, points):
    center, radius, u, _ = _line_frame(q_axis, p_axis, theta)
    x0 = float(center @ u)
    return np.linspace(x0 - radius, x0 + radius, points)


def _one_mode_slice(grid: GridWigner, mu: float, nu: float, settings: RadonSettings,
                    mode=None, theta=None) -> TomogramSlice:
    scale = math.hypot(mu, nu)
    angle = math.atan2(nu, mu)
    q_axis, p_axis = grid.axes
    x_unit = _unit_output_axis(q_axis, p_axis, angle, settings.slice_points)
    density = radon_2d(grid.values, q_axis, p_axis, angle, x_unit, settings.interpolation_order)
    density, drift = _finish_density(x_unit, density, f"mode {mode}, theta {theta}")
    # homogeneity: w(X; lambda mu, lambda nu) = w(X / lambda; mu, nu) / lambda
    return TomogramSlice(x=x_unit * scale, density=density / scale, mode=mode, theta=theta, drift=drift)


def slice_tomogram(state, mu: float, nu: float, settings: RadonSettings = DEFAULT_RADON) -> TomogramSlice:
    """Tomogram of a one-mode state for the form ``mu Q + nu P``."""
    _check_form(mu, nu, "(mu, nu)")
    if state.n_modes != 1:
        raise InvalidModeError("slice_tomogram needs a one-mode state")
    if isinstance(state, GaussianState):
        vector = np.array([mu, nu])
        return TomogramSlice(loc=float(vector @ state.mean), scale=math.sqrt(float(vector @ state.cov @ vector)),
                             theta=math.atan2(nu, mu))
    return _one_mode_slice(state, mu, nu, settings, theta=math.atan2(nu, mu))


def symplectic_tomogram(state, mu1: float, nu1: float, mu2: float, nu2: float,
                        settings: RadonSettings = DEFAULT_RADON) -> JointTomogram:
    """Joint tomogram of ``X1 = mu1 Q1 + nu1 P1`` and ``X2 = mu2 Q2 + nu2 P2``."""
    _check_form(mu1, nu1, "(mu1, nu1)")
    _check_form(mu2, nu2, "(mu2, nu2)")
    if state.n_modes != 2:
        raise InvalidModeError("symplectic_tomogram needs a two-mode state")
    forms = ((float(mu1), float(nu1)), (float(mu2), float(nu2)))
    if isinstance(state, GaussianState):
        a = np.array([[mu1, nu1, 0.0, 0.0], [0.0, 0.0, mu2, nu2]])
        return JointTomogram(mean=a @ state.mean, cov=a @ state.cov @ a.T, forms=forms)

    order = settings.interpolation_order
    q1, p1, q2, p2 = state.axes
    angle1, scale1 = math.atan2(nu1, mu1), math.hypot(mu1, nu1)
    angle2, scale2 = math.atan2(nu2, mu2), math.hypot(mu2, nu2)
    x1 = _unit_output_axis(q1, p1, angle1, settings.joint_points)
    x2 = _unit_output_axis(q2, p2, angle2, settings.joint_points)
    stage1 = radon_2d(state.values, q1, p1, angle1, x1, order)  # (x1, q2, p2)
    stage2 = radon_2d(np.moveaxis(stage1, 0, -1), q2, p2, angle2, x2, order)  # (x2, x1)
    density, drift = _finish_density((x1, x2), stage2.T, f"joint ({angle1:.4f}, {angle2:.4f})")
    logger.debug(f"Joint grid tomogram at ({angle1:.4f}, {angle2:.4f}), drift {drift:.2e}")
    return JointTomogram(x1=x1 * scale1, x2=x2 * scale2, density=density / (scale1 * scale2),
                         forms=forms, drift=drift)


def optical_tomogram(state, theta1: float, theta2: float,
                     settings: RadonSettings = DEFAULT_RADON) -> JointTomogram:
    return symplectic_tomogram(state, math.cos(theta1), math.sin(theta1),
                               math.cos(theta2), math.sin(theta2), settings)


def _hyperplane_projection(grid: GridWigner, vector: np.ndarray, settings: RadonSettings,
                           mode: int, theta: float) -> TomogramSlice:
    """``w(X) = int delta(X - v . z) W(z) d^4 z / (2 pi)^2`` on a 4D grid."""
    norm_v = float(np.linalg.norm(vector))
    unit = vector / norm_v
    basis = null_space(unit[None, :])  # 4 x 3 orthonormal complement
    lows = np.array([a[0] for a in grid.axes])
    highs = np.array([a[-1] for a in grid.axes])
    steps = np.array([a[1] - a[0] for a in grid.axes])
    center = (lows + highs) / 2
    radius = 0.5 * float(np.linalg.norm(highs - lows))
    t = np.arange(-radius, radius + steps.min(), steps.min())
    tt = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=0).reshape(3, -1)
    offsets = basis @ tt
    reach = (highs - lows) / 2 + radius * np.abs(unit) + steps
    inside = np.all(np.abs(offsets) <= reach[:, None], axis=0)
    offsets = offsets[:, inside]
    cell = float(np.prod([t[1] - t[0]] * 3))
    s_axis = np.linspace(-radius, radius, settings.joint_points)
    density = np.empty_like(s_axis)
    for i, s in enumerate(s_axis):
        points = center[:, None] + s * unit[:, None] + offsets
        coords = (points - lows[:, None]) / steps[:, None]
        sampled = ndimage.map_coordinates(grid.values, coords, order=1, mode="constant", cval=0.0)
        density[i] = sampled.sum() * cell / (2 * math.pi) ** 2
    x = float(vector @ center) + s_axis * norm_v
    density = density / norm_v
    density, drift = _finish_density(x, density, f"mode {mode}, theta {theta}")
    return TomogramSlice(x=x, density=density, mode=mode, theta=theta, drift=drift)


def derived_mode_tomogram(state, mode: int, theta: float,
                          settings: RadonSettings = DEFAULT_RADON) -> TomogramSlice:
    """Tomogram of ``X_mode(theta)`` for any of the six measured modes."""
    form = quadrature_form(mode, theta)
    if state.n_modes == 1:
        if mode != 1:
            raise InvalidModeError(f"One-mode states only have mode 1, got {mode}")
        sliced = slice_tomogram(state, form.mu, form.nu, settings)
        return TomogramSlice(loc=sliced.loc, scale=sliced.scale, x=sliced.x, density=sliced.density,
                             mode=mode, theta=float(theta), drift=sliced.drift)
    vector = form.vector
    if isinstance(state, GaussianState):
        return TomogramSlice(loc=float(vector @ state.mean), scale=math.sqrt(float(vector @ state.cov @ vector)),
                             mode=mode, theta=float(theta))
    if mode in (1, 2):
        return _one_mode_slice(reduce_to_mode(state, mode), form.mu, form.nu, settings, mode, float(theta))
    return _hyperplane_projection(state, vector, settings, mode, float(theta))


def marginalize(joint: JointTomogram, keep: int) -> TomogramSlice:
    """Single-mode tomogram of mode ``keep`` (1 or 2) from a joint tomogram."""
    if keep not in (1, 2):
        raise InvalidModeError(f"keep must be 1 or 2, got {keep}")
    i = keep - 1
    mu, nu = joint.forms[i]
    theta = math.atan2(nu, mu)
    if joint.is_analytic:
        return TomogramSlice(loc=float(joint.mean[i]), scale=math.sqrt(float(joint.cov[i, i])),
                             mode=keep, theta=theta)
    if keep == 1:
        density = trapezoid(joint.density, joint.x2, axis=1)
        x = joint.x1
    else:
        density = trapezoid(joint.density, joint.x1, axis=0)
        x = joint.x2
    return TomogramSlice(x=x, density=density, mode=keep, theta=theta, drift=joint.drift)
