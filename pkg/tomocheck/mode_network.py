"""Linear quadrature forms of the six measured modes and the S matrix.

Modes 1 and 2 are the signal modes a, b. Modes 3-6 are the beam-splitter
combinations c = (a+b)/sqrt2, d = (a-b)/sqrt2, e = (a+ib)/sqrt2,
f = (a-ib)/sqrt2 whose homodyne quadratures are written with a global 1/2
factor, e.g. X3(mu, nu) = 1/2 mu (Q1 + Q2) + 1/2 nu (P1 + P2).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np

from tomocheck.errors import InvalidModeError, SingularConfigurationError

logger = logging.getLogger(__name__)

MODES = (1, 2, 3, 4, 5, 6)
SIGNAL_MODES = (1, 2)
DERIVED_MODES = (3, 4, 5, 6)

# coefficient rows (Q1, P1, Q2, P2) for the mu and nu parts of each mode
_MU_NU = {
    1: ((1.0, 0.0, 0.0, 0.0), (0.0, 1.0, 0.0, 0.0)),
    2: ((0.0, 0.0, 1.0, 0.0), (0.0, 0.0, 0.0, 1.0)),
    3: ((0.5, 0.0, 0.5, 0.0), (0.0, 0.5, 0.0, 0.5)),
    4: ((0.5, 0.0, -0.5, 0.0), (0.0, 0.5, 0.0, -0.5)),
    5: ((0.5, 0.0, 0.0, -0.5), (0.0, 0.5, 0.5, 0.0)),
    6: ((0.5, 0.0, 0.0, 0.5), (0.0, 0.5, -0.5, 0.0)),
}

# S-matrix columns (P1, P2, Q1, Q2) as canonical indices
S_COLUMNS = (1, 3, 0, 2)


def check_mode(mode: int) -> int:
    if mode not in MODES:
        raise InvalidModeError(f"Mode label must be one of {MODES}, got {mode!r}")
    return mode


@dataclass(frozen=True)
class QuadratureForm:
    """``X_mode(theta) = coefficients . (Q1, P1, Q2, P2)``."""

    mode: int
    theta: float
    coefficients: Tuple[float, float, float, float]

    @property
    def mu(self) -> float:
        return math.cos(self.theta)

    @property
    def nu(self) -> float:
        return math.sin(self.theta)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.coefficients)


def quadrature_form(mode: int, theta: float) -> QuadratureForm:
    check_mode(mode)
    mu_part, nu_part = _MU_NU[mode]
    mu, nu = math.cos(theta), math.sin(theta)
    coeffs = tuple(mu * a + nu * b for a, b in zip(mu_part, nu_part))
    return QuadratureForm(mode, float(theta), coeffs)


def symplectic_form(a, b) -> float:
    """``-i [a . z, b . z]`` for real forms over (Q1, P1, Q2, P2)."""
    a = a.vector if isinstance(a, QuadratureForm) else np.asarray(a, dtype=float)
    b = b.vector if isinstance(b, QuadratureForm) else np.asarray(b, dtype=float)
    total = 0.0
    for k in range(a.shape[0] // 2):
        total += a[2 * k] * b[2 * k + 1] - a[2 * k + 1] * b[2 * k]
    return float(total)


def canonical_scale(mode: int) -> float:
    """Factor turning ``X_mode`` into a quadrature with ``[X(0), X(pi/2)] = i``."""
    check_mode(mode)
    bracket = symplectic_form(quadrature_form(mode, 0.0), quadrature_form(mode, math.pi / 2))
    return 1.0 / math.sqrt(bracket)


@dataclass(frozen=True, eq=False)
class SMatrix:
    """Map from ``<(P1, P2, Q1, Q2)>`` to ``<(X3, X4, X5, X6)>`` at fixed phases."""

    phases: Tuple[float, float, float, float]
    values: np.ndarray

    @cached_property
    def determinant(self) -> float:
        return float(np.linalg.det(self.values))

    @cached_property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.values))

    def relative_determinant(self) -> float:
        norm = np.linalg.norm(self.values)
        return abs(self.determinant) / norm ** 4 if norm > 0 else 0.0


def build_s_matrix(t3: float, t4: float, t5: float, t6: float) -> SMatrix:
    rows = []
    for mode, theta in zip(DERIVED_MODES, (t3, t4, t5, t6)):
        vector = quadrature_form(mode, theta).vector
        rows.append(vector[list(S_COLUMNS)])
    values = np.array(rows)
    values.setflags(write=False)
    return SMatrix((float(t3), float(t4), float(t5), float(t6)), values)


def invert_s(s_matrix: SMatrix, tol: float = 1e-10) -> np.ndarray:
    if s_matrix.relative_determinant() < tol:
        raise SingularConfigurationError(
            f"S matrix is singular for phases {s_matrix.phases} "
            f"(det={s_matrix.determinant:.3e}, cond={s_matrix.condition_number:.3e})",
            phases=s_matrix.phases, condition_number=s_matrix.condition_number)
    logger.debug(f"Inverting S at phases {s_matrix.phases}, cond={s_matrix.condition_number:.3g}")
    return np.linalg.inv(s_matrix.values)


def mode_relation_residual(mode: int, theta: float, observed_mean: float, signal_means) -> float:
    """``<X_mode(theta)> - form . (<Q1>, <P1>, <Q2>, <P2>)``."""
    predicted = float(quadrature_form(mode, theta).vector @ np.asarray(signal_means, dtype=float))
    return observed_mean - predicted
