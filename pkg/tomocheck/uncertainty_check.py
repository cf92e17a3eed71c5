"""Robertson-type uncertainty relations evaluated on tomographic moments.

Robertson matrix: ``Sigma_AB = sigma_AB + 1/2 <[A, B]>`` over
``(P1, P2, Q1, Q2)`` (or ``(Q1, Q2, P1, P2)``). Every principal minor of a
physical state's Robertson matrix is non-negative; the single-mode and
quartic relations below are corollaries.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from tomocheck.bootstrap import estimate, estimate_array
from tomocheck.config import CheckConfig
from tomocheck.errors import InternalConsistencyError, MissingDataError, TomoCheckError
from tomocheck.mode_network import MODES, SIGNAL_MODES, check_mode
from tomocheck.moment_engine import (HALF_PI, canonical_moment, canonical_variance, cross_covariance_values,
                                     cross_validate, frame_variances, solve_ordered_moments,
                                     CrossValidationReport, MomentSource)
from tomocheck.quantum_state import SIGMA, SIGMA_PRIME, CommutatorMatrix, ordering_labels, permute

logger = logging.getLogger(__name__)

PASS = "pass"
VIOLATION = "violation"
INCONCLUSIVE = "inconclusive"
ERROR = "error"

EXIT_CODES = {PASS: 0, ERROR: 1, VIOLATION: 2, INCONCLUSIVE: 3}
VERDICT_PRIORITY = (VIOLATION, ERROR, INCONCLUSIVE, PASS)


def worst_verdict(verdicts) -> str:
    """Summary verdict of several checks: violation > error > inconclusive > pass."""
    verdicts = set(verdicts)
    return next((v for v in VERDICT_PRIORITY if v in verdicts), PASS)


@dataclass(frozen=True)
class InequalityReport:
    '''
    One inequality ``lhs >= bound`` with ``margin = lhs - bound``.

    ``planck_free`` marks relations that hold for classical distributions
    as well (no hbar in the bound).
    '''

    name: str
    lhs: float
    bound: float
    margin: float
    stderr: float
    verdict: str
    saturated: bool
    planck_free: bool = False
    leading: bool = False

    def to_dict(self):
        return {
            "name": self.name, "lhs": self.lhs, "bound": self.bound, "margin": self.margin,
            "stderr": self.stderr, "verdict": self.verdict, "saturated": self.saturated,
            "planck_free": self.planck_free, "leading": self.leading,
        }


def classify(margin: float, stderr: float, z: float = 3.0, tol: float = 1e-10) -> str:
    """pass if ``margin >= -tol``; violation if below ``-z * stderr``; otherwise inconclusive."""
    if margin >= -tol:
        return PASS
    if margin < -z * stderr:
        return VIOLATION
    return INCONCLUSIVE


def make_report(name: str, lhs: float, bound: float, stderr: float, z: float = 3.0, tol: float = 1e-10,
                planck_free: bool = False, leading: bool = False) -> InequalityReport:
    margin = lhs - bound
    verdict = classify(margin, stderr, z, tol)
    saturated = abs(margin) <= max(1e-9, z * stderr)
    if verdict == VIOLATION:
        logger.warning(f"{name}: margin {margin:.3e} below -{z}*stderr ({stderr:.2e})")
    return InequalityReport(name, float(lhs), float(bound), float(margin), float(stderr), verdict,
                            bool(saturated), planck_free, leading)


@dataclass(frozen=True, eq=False)
class DispersionMatrix:
    """Symmetrized covariances ``sigma_AB`` in a labelled ordering."""

    values: np.ndarray
    stderr: np.ndarray
    ordering: str

    @property
    def labels(self) -> Tuple[str, ...]:
        return ordering_labels(self.ordering)

    def determinant(self) -> float:
        return float(np.linalg.det(self.values))


@dataclass(frozen=True, eq=False)
class RobertsonMatrix:
    """``dispersion + (i/2) J`` in the dispersion's ordering."""

    values: np.ndarray
    stderr: np.ndarray
    ordering: str

    @property
    def labels(self) -> Tuple[str, ...]:
        return ordering_labels(self.ordering)


def dispersion_values(source: MomentSource) -> np.ndarray:
    """Canonical-order (Q1, P1, Q2, P2) dispersion matrix of the signal modes."""
    q1, p1, qp1 = frame_variances(source, 1)
    q2, p2, qp2 = frame_variances(source, 2)
    cross = cross_covariance_values(source)
    d = np.diag([q1, p1, q2, p2])
    d[0, 1] = d[1, 0] = qp1
    d[2, 3] = d[3, 2] = qp2
    d[0, 2] = d[2, 0] = cross["Q1Q2"]
    d[1, 3] = d[3, 1] = cross["P1P2"]
    d[0, 3] = d[3, 0] = cross["Q1P2"]
    d[2, 1] = d[1, 2] = cross["Q2P1"]
    return d


def dispersion_matrix(source: MomentSource, ordering: str = SIGMA) -> DispersionMatrix:
    values, stderr = estimate_array(dispersion_values, source)
    return DispersionMatrix(permute(values, ordering), permute(stderr, ordering), ordering)


def assemble(source: MomentSource, ordering: str = SIGMA) -> RobertsonMatrix:
    dispersion = dispersion_matrix(source, ordering)
    j = CommutatorMatrix.for_ordering(ordering).values
    return RobertsonMatrix(dispersion.values + 0.5j * j, dispersion.stderr, ordering)


def _robertson_values(source: MomentSource, ordering: str) -> np.ndarray:
    return permute(dispersion_values(source), ordering) + 0.5j * CommutatorMatrix.for_ordering(ordering).values


def minor_indices(size: int = 4) -> List[Tuple[int, ...]]:
    return [combo for r in range(1, size + 1) for combo in itertools.combinations(range(size), r)]


def principal_minors(sigma, imaginary_tolerance: float = 1e-8) -> Dict[Tuple[int, ...], float]:
    '''
    All principal minors of a Hermitian matrix.

    :param sigma: ``RobertsonMatrix`` or a square array
    :raises InternalConsistencyError: when a minor's imaginary part exceeds
        ``imaginary_tolerance`` (the input is not Hermitian)
    '''
    values = sigma.values if isinstance(sigma, RobertsonMatrix) else np.asarray(sigma)
    minors = {}
    for idx in minor_indices(values.shape[0]):
        det = complex(np.linalg.det(values[np.ix_(idx, idx)]))
        if abs(det.imag) > imaginary_tolerance:
            raise InternalConsistencyError(
                f"Principal minor {idx} has imaginary residue {det.imag:.3e}; matrix is not Hermitian")
        minors[idx] = det.real
    return minors


def _minor_vector(source, ordering, imaginary_tolerance):
    minors = principal_minors(_robertson_values(source, ordering), imaginary_tolerance)
    return np.array([minors[idx] for idx in minor_indices()])


def minor_reports(source: MomentSource, ordering: str = SIGMA, z: float = 3.0, tol: float = 1e-10,
                  imaginary_tolerance: float = 1e-8) -> List[InequalityReport]:
    values, stderr = estimate_array(lambda s: _minor_vector(s, ordering, imaginary_tolerance), source)
    labels = ordering_labels(ordering)
    reports = []
    for (idx, value, err) in zip(minor_indices(), values, stderr):
        name = f"minor[{ordering}]({','.join(labels[i] for i in idx)})"
        leading = idx == tuple(range(len(idx)))
        reports.append(make_report(name, value, 0.0, err, z, tol, leading=leading))
    return reports


def sr_per_mode(source: MomentSource, k: int, z: float = 3.0, tol: float = 1e-10) -> InequalityReport:
    """Schrodinger-Robertson relation ``sigma_QQ sigma_PP - sigma_QP^2 >= 1/4``."""
    check_mode(k)

    def lhs(s):
        qq, pp, qp = frame_variances(s, k)
        return qq * pp - qp * qp

    result = estimate(lhs, source)
    return make_report(f"SR(mode {k})", result.value, 0.25, result.stderr, z, tol)


def f_value(source: MomentSource, k: int, theta: float) -> float:
    s0 = canonical_variance(source, k, theta)
    s90 = canonical_variance(source, k, theta + HALF_PI)
    s45 = canonical_variance(source, k, theta + math.pi / 4)
    return s0 * s90 - (s45 - 0.5 * (s0 + s90)) ** 2 - 0.25


def f_theta(source: MomentSource, k: int, theta: float, z: float = 3.0, tol: float = 1e-10) -> InequalityReport:
    '''
    ``F(theta) = s(theta) s(theta + pi/2) - [s(theta + pi/4) - (s(theta) + s(theta + pi/2)) / 2]^2 - 1/4``

    with ``s`` the canonical tomogram variance of mode ``k``; ``F >= 0`` for
    every state and every ``theta``.
    '''
    check_mode(k)
    result = estimate(lambda s: f_value(s, k, theta), source)
    return make_report(f"F(mode {k}, theta={theta:.4f})", result.value + 0.25, 0.25, result.stderr, z, tol)


def cubic_value(source: MomentSource, k: int, theta: float, phases: Sequence[float] = (math.pi / 3, 2 * math.pi / 3),
                tol: float = 1e-10) -> float:
    known = solve_ordered_moments(source, k, 1, frame=theta, tol=tol)
    known[(0, 0)] = 1.0
    third = solve_ordered_moments(source, k, 3, phases, known, frame=theta, tol=tol)
    q2 = canonical_moment(source, k, theta, 2)
    p4 = canonical_moment(source, k, theta + HALF_PI, 4)
    return q2 * p4 - abs(third[(2, 1)]) ** 2


def cubic_quadrature_inequality(source: MomentSource, k: int, theta: float = 0.0,
                                phases: Sequence[float] = (math.pi / 3, 2 * math.pi / 3),
                                z: float = 3.0, tol: float = 1e-10) -> InequalityReport:
    '''
    ``<Q_theta^2> <P_theta^4> - |<P_theta^2 Q_theta>|^2 >= 0`` (Cauchy-Schwarz
    for the operators Q and P^2 in the rotated frame). Vacuum gives 3/8.
    '''
    check_mode(k)
    result = estimate(lambda s: cubic_value(s, k, theta, phases, tol), source)
    return make_report(f"cubic(mode {k}, theta={theta:.4f})", result.value, 0.0, result.stderr, z, tol)


def m2_classical(source: MomentSource, z: float = 3.0, tol: float = 1e-10) -> InequalityReport:
    """``sigma_Q1Q1 sigma_Q2Q2 - sigma_Q1Q2^2 >= 0``: holds classically too."""

    def lhs(s):
        d = dispersion_values(s)
        return d[0, 0] * d[2, 2] - d[0, 2] ** 2

    result = estimate(lhs, source)
    return make_report("M2(Q1,Q2)", result.value, 0.0, result.stderr, z, tol, planck_free=True)


def quartic_bound(source: MomentSource, z: float = 3.0, tol: float = 1e-10) -> InequalityReport:
    """``det(dispersion) >= 1/16``."""
    result = estimate(lambda s: float(np.linalg.det(dispersion_values(s))), source)
    return make_report("det(dispersion)", result.value, 1.0 / 16, result.stderr, z, tol)


@dataclass
class FullReport:
    entries: List[InequalityReport] = field(default_factory=list)
    cross_validation: Optional[CrossValidationReport] = None
    skipped: List[str] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        verdicts = {entry.verdict for entry in self.entries}
        if self.cross_validation is not None and self.cross_validation.flagged:
            verdicts.add(VIOLATION)
        if self.errors:
            verdicts.add(ERROR)
        return worst_verdict(verdicts)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def counts(self) -> Dict[str, int]:
        out = {PASS: 0, VIOLATION: 0, INCONCLUSIVE: 0}
        for entry in self.entries:
            out[entry.verdict] += 1
        return out

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "counts": self.counts(),
            "entries": [entry.to_dict() for entry in self.entries],
            "cross_validation": None if self.cross_validation is None else self.cross_validation.to_dict(),
            "skipped": list(self.skipped),
            "errors": list(self.errors),
        }


def full_report(source: MomentSource, config: CheckConfig = CheckConfig(),
                cubic_phases: Sequence[float] = (math.pi / 3, 2 * math.pi / 3)) -> FullReport:
    '''
    Run every relation the source has data for.

    Entries whose phases are missing are listed under ``skipped``; other
    failures (singular configurations, consistency errors) under ``errors``.
    '''
    report = FullReport()
    z, tol = config.z, config.tolerance

    def attempt(label, fn):
        try:
            result = fn()
        except MissingDataError as e:
            report.skipped.append(f"{label}: {e}")
            logger.debug(f"Skipped {label}: {e}")
            return
        except TomoCheckError as e:
            report.errors.append(f"{label}: {e}")
            logger.error(f"{label} failed: {e}")
            return
        if isinstance(result, list):
            report.entries.extend(result)
        else:
            report.entries.append(result)

    for ordering in (SIGMA, SIGMA_PRIME):
        attempt(f"minors[{ordering}]",
                lambda ordering=ordering: minor_reports(source, ordering, z, tol, config.imaginary_tolerance))
    attempt("det(dispersion)", lambda: quartic_bound(source, z, tol))
    for k in SIGNAL_MODES:
        attempt(f"SR(mode {k})", lambda k=k: sr_per_mode(source, k, z, tol))
    for k in MODES:
        for theta in config.f_theta_grid:
            attempt(f"F(mode {k}, theta={theta:.4f})", lambda k=k, theta=theta: f_theta(source, k, theta, z, tol))
        for theta in config.cubic_theta_grid:
            attempt(f"cubic(mode {k}, theta={theta:.4f})",
                    lambda k=k, theta=theta: cubic_quadrature_inequality(source, k, theta, cubic_phases, z, tol))
    attempt("M2(Q1,Q2)", lambda: m2_classical(source, z, tol))
    try:
        report.cross_validation = cross_validate(source, config.s_phases, config.crossval_z, config.crossval_floor)
    except TomoCheckError as e:
        report.errors.append(f"cross-validation: {e}")
    logger.info(f"Uncertainty report: {report.counts()} -> {report.verdict}")
    return report
