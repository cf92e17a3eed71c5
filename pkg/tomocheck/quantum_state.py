"""Ground-truth Gaussian and gridded Wigner states for one or two modes.

Conventions: hbar = 1, [Q, P] = i, vacuum variance 1/2, quadrature order
(Q1, P1, Q2, P2), Wigner measure dq dp / (2 pi) per mode.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator

from tomocheck import series
from tomocheck.errors import InvalidModeError, InvalidStateError, OutOfDomainError, SchemaVersionError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

CANONICAL = "Q1P1Q2P2"
SIGMA = "P1P2Q1Q2"
SIGMA_PRIME = "Q1Q2P1P2"
ORDERINGS: Dict[str, Tuple[int, ...]] = {
    CANONICAL: (0, 1, 2, 3),
    SIGMA: (1, 3, 0, 2),
    SIGMA_PRIME: (0, 2, 1, 3),
}
CANONICAL_LABELS = ("Q1", "P1", "Q2", "P2")

ONE_MODE_KINDS = ("vacuum", "coherent", "squeezed", "thermal")
STATE_KINDS = ONE_MODE_KINDS + ("two_mode_squeezed", "product", "grid")


def ordering_labels(ordering: str) -> Tuple[str, ...]:
    return tuple(CANONICAL_LABELS[i] for i in _permutation(ordering))


def _permutation(ordering: str) -> Tuple[int, ...]:
    try:
        return ORDERINGS[ordering]
    except KeyError:
        raise InvalidStateError(f"Unknown quadrature ordering '{ordering}', expected one of {sorted(ORDERINGS)}")


@dataclass(frozen=True)
class CommutatorMatrix:
    """``J[A, B] = -i <[A, B]>`` for the canonical pairs in a given ordering."""

    ordering: str
    values: np.ndarray

    @classmethod
    def for_ordering(cls, ordering: str = CANONICAL, n_modes: int = 2) -> "CommutatorMatrix":
        block = np.array([[0.0, 1.0], [-1.0, 0.0]])
        canonical = np.kron(np.eye(n_modes), block)
        if n_modes == 1:
            return cls(CANONICAL, canonical)
        perm = _permutation(ordering)
        return cls(ordering, canonical[np.ix_(perm, perm)])

    @property
    def labels(self) -> Tuple[str, ...]:
        return ordering_labels(self.ordering)


def permute(matrix: np.ndarray, ordering: str) -> np.ndarray:
    """Re-express a canonical-order 4x4 matrix in ``ordering``."""
    perm = _permutation(ordering)
    return np.asarray(matrix)[np.ix_(perm, perm)]


@dataclass(frozen=True)
class StateDescriptor:
    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "StateDescriptor":
        if not isinstance(data, dict) or "kind" not in data:
            raise InvalidStateError(f"State descriptor needs a 'kind': {data!r}")
        return cls(str(data["kind"]), dict(data.get("params") or {}))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params}


def _readonly(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray
    descriptor: StateDescriptor = field(default_factory=lambda: StateDescriptor("custom"))

    def __post_init__(self):
        mean = _readonly(self.mean)
        cov = _readonly(self.cov)
        dim = mean.shape[0]
        if dim not in (2, 4) or cov.shape != (dim, dim):
            raise InvalidStateError(f"Gaussian state needs a 2- or 4-vector mean and matching cov, got {mean.shape} / {cov.shape}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise InvalidStateError("Gaussian state has non-finite entries")
        if not np.allclose(cov, cov.T, atol=1e-12, rtol=0):
            raise InvalidStateError("Covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.shape[0] // 2


@dataclass(frozen=True, eq=False)
class GridWigner:
    """Wigner function sampled on a uniform tensor grid.

    ``axes`` are the coordinate vectors in canonical order: (q, p) for one
    mode, (q1, p1, q2, p2) for two.
    """

    values: np.ndarray
    axes: Tuple[np.ndarray, ...]
    descriptor: StateDescriptor = field(default_factory=lambda: StateDescriptor("grid"))

    def __post_init__(self):
        values = _readonly(self.values)
        axes = tuple(_readonly(a) for a in self.axes)
        if values.ndim not in (2, 4) or len(axes) != values.ndim:
            raise InvalidStateError(f"Grid Wigner needs 2 or 4 axes, got values {values.shape} and {len(axes)} axes")
        for axis, size in zip(axes, values.shape):
            if axis.ndim != 1 or axis.shape[0] != size or size < 2:
                raise InvalidStateError("Grid axes do not match the value array")
            steps = np.diff(axis)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6):
                raise InvalidStateError("Grid axes must be uniform and increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "axes", axes)

    @property
    def n_modes(self) -> int:
        return self.values.ndim // 2

    def normalization(self) -> float:
        total = self.values
        for axis in reversed(self.axes):
            total = trapezoid(total, axis, axis=-1)
        return float(total) / (2 * math.pi) ** self.n_modes

    def normalized(self) -> "GridWigner":
        return GridWigner(self.values / self.normalization(), self.axes, self.descriptor)

    @classmethod
    def from_gaussian(cls, state: GaussianState, points: int, width_sigmas: float = 6.0) -> "GridWigner":
        sigmas = np.sqrt(np.diag(state.cov))
        axes = tuple(np.linspace(m - width_sigmas * s, m + width_sigmas * s, points)
                     for m, s in zip(state.mean, sigmas))
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        values = _gaussian_wigner(state, mesh)
        logger.debug(f"Sampled {state.descriptor.kind} on a {points}^{len(axes)} grid")
        return cls(values, axes, state.descriptor)


def _single_mode(kind: str, params: dict, suffix: str = "") -> Tuple[np.ndarray, np.ndarray]:
    def get(name, default=0.0):
        if name + suffix in params:
            return params[name + suffix]
        return params.get(name, default)

    if kind == "vacuum":
        return np.zeros(2), 0.5 * np.eye(2)
    if kind == "coherent":
        alpha = _as_complex(get("alpha", 0.0))
        return np.array([math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag]), 0.5 * np.eye(2)
    if kind == "squeezed":
        r = _finite(get("r", 0.0), "r")
        phi = _finite(get("phi", 0.0), "phi")
        rot = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
        cov = 0.5 * rot @ np.diag([math.exp(-2 * r), math.exp(2 * r)]) @ rot.T
        return np.zeros(2), cov
    if kind == "thermal":
        nbar = _finite(get("nbar", 0.0), "nbar")
        if nbar < 0:
            raise InvalidStateError(f"Thermal occupation must be non-negative, got nbar={nbar}")
        return np.zeros(2), (nbar + 0.5) * np.eye(2)
    raise InvalidStateError(f"Unknown one-mode state kind '{kind}', expected one of {ONE_MODE_KINDS}")


def _finite(value, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidStateError(f"Parameter '{name}' must be a number, got {value!r}")
    if not math.isfinite(value):
        raise InvalidStateError(f"Parameter '{name}' must be finite, got {value}")
    return value


def _as_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InvalidStateError(f"Complex amplitude must be [re, im], got {value!r}")
        value = complex(_finite(value[0], "alpha.re"), _finite(value[1], "alpha.im"))
    try:
        value = complex(value)
    except (TypeError, ValueError):
        raise InvalidStateError(f"Cannot read complex amplitude {value!r}")
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise InvalidStateError(f"Complex amplitude must be finite, got {value}")
    return value


def _block_diag(first, second):
    (m1, c1), (m2, c2) = first, second
    cov = np.zeros((4, 4))
    cov[:2, :2] = c1
    cov[2:, 2:] = c2
    return np.concatenate([m1, m2]), cov


def make_state(desc) -> GaussianState | GridWigner:
    """Build a state from a ``StateDescriptor`` (or its dict form)."""
    if isinstance(desc, dict):
        desc = StateDescriptor.from_dict(desc)
    kind, params = desc.kind, desc.params
    if kind == "grid":
        if "path" not in params:
            raise InvalidStateError("Grid state descriptor needs a 'path'")
        return load_grid(params["path"])
    if kind == "two_mode_squeezed":
        r = _finite(params.get("r", 0.0), "r")
        c, s = math.cosh(2 * r) / 2, math.sinh(2 * r) / 2
        cov = np.array([
            [c, 0.0, s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, -s, 0.0, c],
        ])
        return GaussianState(np.zeros(4), cov, desc)
    if kind == "product":
        parts = []
        for key in ("mode1", "mode2"):
            sub = StateDescriptor.from_dict(params.get(key, {"kind": "vacuum"}))
            parts.append(_single_mode(sub.kind, sub.params))
        mean, cov = _block_diag(*parts)
        return GaussianState(mean, cov, desc)
    if kind not in ONE_MODE_KINDS:
        raise InvalidStateError(f"Unknown state kind '{kind}', expected one of {STATE_KINDS}")
    modes = int(params.get("modes", 2))
    if modes == 1:
        mean, cov = _single_mode(kind, params, "1")
    elif modes == 2:
        mean, cov = _block_diag(_single_mode(kind, params, "1"), _single_mode(kind, params, "2"))
    else:
        raise InvalidStateError(f"Only one- and two-mode states are supported, got modes={modes}")
    return GaussianState(mean, cov, desc)


def validate_physicality(state: GaussianState, tol: float = 1e-10) -> Tuple[bool, float]:
    """Check ``cov + (i/2) J >= 0``; returns ``(ok, min_eigenvalue)``."""
    cov = np.asarray(state.cov)
    if not np.allclose(cov, cov.T, atol=1e-12, rtol=0):
        raise InvalidStateError("Covariance matrix is not symmetric")
    j = CommutatorMatrix.for_ordering(CANONICAL, cov.shape[0] // 2).values
    eigenvalues = np.linalg.eigvalsh(cov + 0.5j * j)
    min_eig = float(eigenvalues.min())
    return min_eig >= -tol, min_eig


def _gaussian_wigner(state: GaussianState, points: np.ndarray) -> np.ndarray:
    delta = np.asarray(points, dtype=float) - state.mean
    inv = np.linalg.inv(state.cov)
    exponent = np.einsum("...i,ij,...j->...", delta, inv, delta)
    return np.exp(-0.5 * exponent) / math.sqrt(np.linalg.det(state.cov))


def wigner_eval(state, *point) -> float | np.ndarray:
    """Wigner function at ``point`` (2 or 4 coordinates, canonical order).

    Accepts either separate coordinates or one array whose last axis holds
    the coordinates.
    """
    coords = np.asarray(point[0] if len(point) == 1 else point, dtype=float)
    dim = 2 * state.n_modes
    if coords.shape[-1] != dim:
        raise InvalidStateError(f"Expected {dim} coordinates, got shape {coords.shape}")
    if isinstance(state, GaussianState):
        value = _gaussian_wigner(state, coords)
    else:
        interpolator = RegularGridInterpolator(state.axes, state.values, method="linear", bounds_error=True)
        try:
            value = interpolator(coords)
        except ValueError as e:
            raise OutOfDomainError(f"Point {coords.tolist()} lies outside the grid: {e}")
    return float(value) if np.ndim(value) == 0 else value


def reduce_to_mode(state, k: int):
    """Single-mode state of mode ``k`` (1 or 2)."""
    if k not in (1, 2):
        raise InvalidModeError(f"Mode index must be 1 or 2, got {k}")
    if state.n_modes != 2:
        raise InvalidModeError("reduce_to_mode needs a two-mode state")
    keep = slice(0, 2) if k == 1 else slice(2, 4)
    descriptor = StateDescriptor("reduced", {"mode": k, "parent": state.descriptor.to_dict()})
    if isinstance(state, GaussianState):
        return GaussianState(state.mean[keep], state.cov[keep, keep], descriptor)
    other = (2, 3) if k == 1 else (0, 1)
    values = state.values
    for axis_index in sorted(other, reverse=True):
        values = trapezoid(values, state.axes[axis_index], axis=axis_index)
    values = values / (2 * math.pi)
    reduced = GridWigner(values, tuple(state.axes[i] for i in range(4) if i not in other), descriptor)
    return reduced.normalized()


def ordered_moment_array(mean: Sequence[float], cov: np.ndarray, order: int) -> np.ndarray:
    """All antistandard moments of a Gaussian state up to total degree ``order``.

    Entry ``[e_Q1, e_P1, (e_Q2, e_P2)]`` is ``<P1^e_P1 Q1^e_Q1 P2^e_P2 Q2^e_Q2>``.
    Built from the ordered generating function
    ``<e^{sP} e^{tQ}> = exp(s<P> + t<Q> + z^T V z / 2 - i s t / 2)``;
    operators of different modes commute.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
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
    for mode in range(dims // 2):
        idx = [0] * dims
        idx[2 * mode] = 1
        idx[2 * mode + 1] = 1
        exponent[tuple(idx)] += -0.5j
    exponent = series.truncate(exponent[(slice(0, order + 1),) * dims], order)
    generating = series.exp_series(exponent, order)
    return generating * series.factorial_weights(order, dims)


def ordered_moment(state: GaussianState, p_powers: Sequence[int], q_powers: Sequence[int]) -> complex:
    """``<prod_k P_k^m_k Q_k^n_k>`` for a Gaussian state, exactly."""
    if len(p_powers) != state.n_modes or len(q_powers) != state.n_modes:
        raise InvalidModeError(f"Need one power per mode ({state.n_modes} modes)")
    index = []
    for m, n in zip(p_powers, q_powers):
        index.extend([n, m])
    order = sum(index)
    table = ordered_moment_array(state.mean, state.cov, order)
    return complex(table[tuple(index)])


def state_to_dict(state) -> dict:
    if isinstance(state, GridWigner):
        raise InvalidStateError("Grid states are stored with save_grid, not as JSON")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "gaussian-state",
        "descriptor": state.descriptor.to_dict(),
        "mean": state.mean.tolist(),
        "cov": state.cov.tolist(),
    }


def state_from_dict(data: dict):
    _check_schema(data)
    descriptor = StateDescriptor.from_dict(data.get("descriptor", {"kind": "custom"}))
    if "mean" not in data or "cov" not in data:
        return make_state(descriptor)
    return GaussianState(np.array(data["mean"]), np.array(data["cov"]), descriptor)


def _check_schema(data: dict):
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"Unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")


def save_grid(path, grid: GridWigner):
    """Write a grid as ``.npz``: values, one array per axis, JSON header."""
    header = json.dumps({
        "schema_version": SCHEMA_VERSION,
        "kind": "grid-wigner",
        "n_modes": grid.n_modes,
        "descriptor": grid.descriptor.to_dict(),
    })
    arrays = {f"axis{i}": axis for i, axis in enumerate(grid.axes)}
    np.savez(path, values=grid.values, header=np.array(header), **arrays)


def load_grid(path) -> GridWigner:
    path = Path(path)
    if not path.exists():
        raise InvalidStateError(f"Grid file {path} does not exist")
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        _check_schema(header)
        values = data["values"]
        axes = tuple(data[f"axis{i}"] for i in range(values.ndim))
    return GridWigner(values, axes, StateDescriptor.from_dict(header["descriptor"]))
