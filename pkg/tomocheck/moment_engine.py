"""Moments of quadrature observables from tomograms or homodyne records.

A moment source answers ``<X_mode(theta)^n>`` and joint
``<X1(theta1)^n X2(theta2)^m>``. Analytic sources read exact Gaussian
tomograms; empirical sources read a ``HomodyneDataset`` and expose bootstrap
replicate views, so any derived quantity gets a standard error through
``tomocheck.bootstrap.estimate``.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from tomocheck import weyl_algebra
from tomocheck.bootstrap import Estimate, estimate, group_seed, power_means, replicate_power_sums
from tomocheck.errors import DegreeOverflowError, InsufficientRecordsError, MissingDataError, SingularConfigurationError
from tomocheck.homodyne_lab import JOINT_MODE, MIN_RECORDS, HomodyneDataset, default_solver_phases
from tomocheck.mode_network import (DERIVED_MODES, MODES, build_s_matrix, canonical_scale, check_mode,
                                    invert_s, quadrature_form)
from tomocheck.quantum_state import ordered_moment_array
from tomocheck.tomography import DEFAULT_RADON, RadonSettings, derived_mode_tomogram, optical_tomogram

logger = logging.getLogger(__name__)

PI = math.pi
HALF_PI = math.pi / 2
_PERIOD_SHIFTS = (0, -1, 1, -2, 2)


class MomentSource(Protocol):
    def moment(self, mode: int, theta: float, n: int) -> float: ...

    def joint_moment(self, theta1: float, theta2: float, n: int, m: int) -> float: ...

    def has_slice(self, mode: int, theta: float) -> bool: ...

    def has_joint(self, theta1: float, theta2: float) -> bool: ...

    def available_slices(self) -> List[Tuple[int, float]]: ...

    def replicates(self) -> Sequence["MomentSource"]: ...


class AnalyticSource:
    """Exact tomogram moments of a known state (no sampling error)."""

    def __init__(self, state, settings: RadonSettings = DEFAULT_RADON):
        self.state = state
        self.settings = settings
        self._slices = {}
        self._joints = {}

    def _slice(self, mode, theta):
        check_mode(mode)
        key = (mode, round(theta, 12))
        if key not in self._slices:
            self._slices[key] = derived_mode_tomogram(self.state, mode, theta, self.settings)
        return self._slices[key]

    def moment(self, mode: int, theta: float, n: int) -> float:
        return self._slice(mode, theta).moment(n)

    def joint_moment(self, theta1: float, theta2: float, n: int, m: int) -> float:
        key = (round(theta1, 12), round(theta2, 12))
        if key not in self._joints:
            self._joints[key] = optical_tomogram(self.state, theta1, theta2, self.settings)
        return self._joints[key].moment(n, m)

    def has_slice(self, mode: int, theta: float) -> bool:
        return mode in MODES if self.state.n_modes == 2 else mode == 1

    def has_joint(self, theta1: float, theta2: float) -> bool:
        return self.state.n_modes == 2

    def available_slices(self) -> List[Tuple[int, float]]:
        modes = MODES if self.state.n_modes == 2 else (1,)
        return [(mode, theta) for mode in modes for theta in (0.0, PI / 4, HALF_PI)]

    def replicates(self) -> Sequence["AnalyticSource"]:
        return ()


class EmpiricalSource:
    '''
    Plug-in moments of a homodyne dataset.

    Phases are matched modulo pi using ``X(theta + pi) = -X(theta)``.
    Bootstrap replicates are computed lazily per group, ``n_boot`` resamples
    seeded from ``(seed, mode, theta)``.
    '''

    def __init__(self, dataset: HomodyneDataset, n_boot: int = 200, seed: int = 0,
                 max_order: int = 8, min_records: int = MIN_RECORDS):
        self.dataset = dataset
        self.n_boot = n_boot
        self.seed = seed
        self.max_order = max_order
        self.min_records = min_records
        self._point: Dict[tuple, np.ndarray] = {}
        self._boot: Dict[tuple, np.ndarray] = {}
        self._views = None

    def _resolve(self, mode: int, theta: float) -> Tuple[tuple, int]:
        for shift in _PERIOD_SHIFTS:
            if self.dataset.has_group(mode, theta + shift * PI):
                return ("slice", mode, theta + shift * PI), shift
        raise MissingDataError(f"No records for mode {mode} at theta={theta:.6f} (mod pi)")

    def _resolve_joint(self, theta1: float, theta2: float) -> Tuple[tuple, int, int]:
        for s1 in _PERIOD_SHIFTS:
            for s2 in _PERIOD_SHIFTS:
                if self.dataset.has_joint(theta1 + s1 * PI, theta2 + s2 * PI):
                    return ("joint", theta1 + s1 * PI, theta2 + s2 * PI), s1, s2
        raise MissingDataError(f"No joint records at ({theta1:.6f}, {theta2:.6f}) (mod pi)")

    def _data(self, key) -> np.ndarray:
        if key[0] == "slice":
            x = self.dataset.group(key[1], key[2])
            label = f"mode {key[1]} at theta={key[2]:.6f}"
        else:
            x = self.dataset.joint(key[1], key[2])
            label = f"joint ({key[1]:.6f}, {key[2]:.6f})"
        if x.shape[0] < self.min_records:
            raise InsufficientRecordsError(f"{label} has {x.shape[0]} records, need at least {self.min_records}")
        return x

    def _point_moments(self, key) -> np.ndarray:
        if key not in self._point:
            self._point[key] = power_means(self._data(key), self.max_order)
        return self._point[key]

    def _boot_moments(self, key) -> np.ndarray:
        if key not in self._boot:
            if key[0] == "slice":
                seed = group_seed(self.seed, key[1], key[2])
            else:
                seed = group_seed(self.seed, JOINT_MODE, key[1], key[2])
            self._boot[key] = replicate_power_sums(self._data(key), self.max_order, self.n_boot, seed)
            logger.debug(f"Bootstrapped {key} with {self.n_boot} replicates")
        return self._boot[key]

    def _check_order(self, n: int):
        if n > self.max_order:
            raise DegreeOverflowError(f"Moment order {n} exceeds the source's maximum order {self.max_order}")

    def moment(self, mode: int, theta: float, n: int, replicate: Optional[int] = None) -> float:
        self._check_order(n)
        key, shift = self._resolve(mode, theta)
        table = self._point_moments(key) if replicate is None else self._boot_moments(key)[replicate]
        return float(table[n]) * (-1) ** (n * shift)

    def joint_moment(self, theta1: float, theta2: float, n: int, m: int,
                     replicate: Optional[int] = None) -> float:
        self._check_order(max(n, m))
        key, s1, s2 = self._resolve_joint(theta1, theta2)
        table = self._point_moments(key) if replicate is None else self._boot_moments(key)[replicate]
        return float(table[n, m]) * (-1) ** (n * s1 + m * s2)

    def has_slice(self, mode: int, theta: float) -> bool:
        try:
            self._resolve(mode, theta)
        except MissingDataError:
            return False
        return True

    def has_joint(self, theta1: float, theta2: float) -> bool:
        try:
            self._resolve_joint(theta1, theta2)
        except MissingDataError:
            return False
        return True

    def available_slices(self) -> List[Tuple[int, float]]:
        return self.dataset.group_keys()

    def replicates(self) -> Sequence["_ReplicateView"]:
        if self._views is None:
            self._views = tuple(_ReplicateView(self, b) for b in range(self.n_boot))
        return self._views


class _ReplicateView:
    """One bootstrap replicate of an ``EmpiricalSource``."""

    def __init__(self, parent: EmpiricalSource, index: int):
        self.parent = parent
        self.index = index

    def moment(self, mode, theta, n):
        return self.parent.moment(mode, theta, n, replicate=self.index)

    def joint_moment(self, theta1, theta2, n, m):
        return self.parent.joint_moment(theta1, theta2, n, m, replicate=self.index)

    def has_slice(self, mode, theta):
        return self.parent.has_slice(mode, theta)

    def has_joint(self, theta1, theta2):
        return self.parent.has_joint(theta1, theta2)

    def available_slices(self):
        return self.parent.available_slices()

    def replicates(self):
        return ()


def canonical_moment(source: MomentSource, mode: int, theta: float, n: int) -> float:
    """``<(s X_mode(theta))^n>`` with ``s`` making the quadrature pair canonical."""
    return canonical_scale(mode) ** n * source.moment(mode, theta, n)


def tomogram_variance(source: MomentSource, mode: int, theta: float) -> float:
    """Variance of the raw tomogram of ``mode`` at ``theta``."""
    first = source.moment(mode, theta, 1)
    return source.moment(mode, theta, 2) - first ** 2


def canonical_variance(source: MomentSource, mode: int, theta: float) -> float:
    return canonical_scale(mode) ** 2 * tomogram_variance(source, mode, theta)


@dataclass(frozen=True)
class ModeVariances:
    """Second moments of one mode in the frame rotated by ``theta``."""

    mode: int
    theta: float
    sigma_qq: Estimate
    sigma_pp: Estimate
    sigma_qp: Estimate


def frame_variances(source: MomentSource, mode: int, theta: float = 0.0) -> Tuple[float, float, float]:
    """``(sigma_QQ, sigma_PP, sigma_QP)`` of the canonical pair rotated by ``theta``."""
    s0 = canonical_variance(source, mode, theta)
    s90 = canonical_variance(source, mode, theta + HALF_PI)
    s45 = canonical_variance(source, mode, theta + PI / 4)
    return s0, s90, s45 - 0.5 * (s0 + s90)


def variances_covariances(source: MomentSource, mode: int, theta: float = 0.0) -> ModeVariances:
    check_mode(mode)
    return ModeVariances(
        mode, theta,
        estimate(lambda s: frame_variances(s, mode, theta)[0], source),
        estimate(lambda s: frame_variances(s, mode, theta)[1], source),
        estimate(lambda s: frame_variances(s, mode, theta)[2], source),
    )


CROSS_NAMES = ("Q1Q2", "P1P2", "Q1P2", "Q2P1")


def cross_covariance_values(source: MomentSource, redundant: bool = False) -> Dict[str, float]:
    """Inter-mode covariances from the mixed-mode tomogram variances.

    Modes 3 and 5 give the primary values; ``redundant=True`` uses modes 4
    and 6 instead.
    """
    v = functools.partial(tomogram_variance, source)
    q1, p1 = v(1, 0.0), v(1, HALF_PI)
    q2, p2 = v(2, 0.0), v(2, HALF_PI)
    if not redundant:
        return {
            "Q1Q2": 2 * v(3, 0.0) - 0.5 * (q1 + q2),
            "P1P2": 2 * v(3, HALF_PI) - 0.5 * (p1 + p2),
            "Q1P2": -2 * v(5, 0.0) + 0.5 * (q1 + p2),
            "Q2P1": 2 * v(5, HALF_PI) - 0.5 * (q2 + p1),
        }
    return {
        "Q1Q2": -2 * v(4, 0.0) + 0.5 * (q1 + q2),
        "P1P2": -2 * v(4, HALF_PI) + 0.5 * (p1 + p2),
        "Q1P2": 2 * v(6, 0.0) - 0.5 * (q1 + p2),
        "Q2P1": -2 * v(6, HALF_PI) + 0.5 * (q2 + p1),
    }


@dataclass(frozen=True)
class CrossCovariances:
    q1q2: Estimate
    p1p2: Estimate
    q1p2: Estimate
    q2p1: Estimate

    def as_dict(self) -> Dict[str, Estimate]:
        return {"Q1Q2": self.q1q2, "P1P2": self.p1p2, "Q1P2": self.q1p2, "Q2P1": self.q2p1}


def cross_covariances(source: MomentSource, redundant: bool = False) -> CrossCovariances:
    values = [estimate(lambda s, name=name: cross_covariance_values(s, redundant)[name], source)
              for name in CROSS_NAMES]
    return CrossCovariances(*values)


def signal_means(source: MomentSource) -> np.ndarray:
    """``(<Q1>, <P1>, <Q2>, <P2>)`` from the signal-mode tomograms."""
    return np.array([source.moment(1, 0.0, 1), source.moment(1, HALF_PI, 1),
                     source.moment(2, 0.0, 1), source.moment(2, HALF_PI, 1)])


def means_from_derived_modes(source: MomentSource, phases: Sequence[float], tol: float = 1e-10) -> np.ndarray:
    """``<(P1, P2, Q1, Q2)> = S^-1 <(X3, X4, X5, X6)>`` at the given phases."""
    s_inv = invert_s(build_s_matrix(*phases), tol)
    observed = np.array([source.moment(mode, theta, 1) for mode, theta in zip(DERIVED_MODES, phases)])
    return s_inv @ observed


@dataclass(frozen=True)
class Discrepancy:
    name: str
    primary: float
    alternate: float
    difference: float
    stderr: float
    flagged: bool

    def to_dict(self):
        return {"name": self.name, "primary": self.primary, "alternate": self.alternate,
                "difference": self.difference, "stderr": self.stderr, "flagged": self.flagged}


@dataclass(frozen=True)
class CrossValidationReport:
    entries: Tuple[Discrepancy, ...] = ()
    skipped: Tuple[str, ...] = ()

    @property
    def flagged(self) -> bool:
        return any(entry.flagged for entry in self.entries)

    def to_dict(self):
        return {"flagged": self.flagged, "entries": [e.to_dict() for e in self.entries],
                "skipped": list(self.skipped)}


def _discrepancy(name, primary_fn, alternate_fn, source, z, floor) -> Discrepancy:
    diff = estimate(lambda s: primary_fn(s) - alternate_fn(s), source)
    flagged = abs(diff.value) > max(z * diff.stderr, floor)
    if flagged:
        logger.warning(f"Cross-validation discrepancy on {name}: {diff.value:.3e} (stderr {diff.stderr:.2e})")
    return Discrepancy(name, primary_fn(source), alternate_fn(source), diff.value, diff.stderr, flagged)


def cross_validate(source: MomentSource, s_phases: Sequence[float] = (0.0, HALF_PI, 0.0, 0.0),
                   z: float = 5.0, floor: float = 1e-9, tol: float = 1e-10) -> CrossValidationReport:
    '''
    Compare redundant routes to the same quantities.

    * cross covariances from modes 3/5 against modes 4/6;
    * each derived-mode mean against its linear form applied to the
      signal-mode means;
    * signal-mode means against the ``S^-1`` recovery from modes 3-6.
    '''
    entries: List[Discrepancy] = []
    skipped: List[str] = []
    try:
        signal_means(source)
    except MissingDataError as e:
        return CrossValidationReport((), (f"signal means: {e}",))

    for name in CROSS_NAMES:
        try:
            entries.append(_discrepancy(
                f"cov-{name}",
                lambda s, name=name: cross_covariance_values(s)[name],
                lambda s, name=name: cross_covariance_values(s, redundant=True)[name],
                source, z, floor))
        except MissingDataError as e:
            skipped.append(f"cov-{name}: {e}")

    for mode, theta in source.available_slices():
        if mode not in DERIVED_MODES:
            continue
        vector = quadrature_form(mode, theta).vector
        entries.append(_discrepancy(
            f"mean-X{mode}({theta:.4f})",
            lambda s, mode=mode, theta=theta: s.moment(mode, theta, 1),
            lambda s, vector=vector: float(vector @ signal_means(s)),
            source, z, floor))

    try:
        labels = ("P1", "P2", "Q1", "Q2")
        direct_index = (1, 3, 0, 2)
        for i, label in enumerate(labels):
            entries.append(_discrepancy(
                f"S-inverse-{label}",
                lambda s, i=i: float(signal_means(s)[direct_index[i]]),
                lambda s, i=i: float(means_from_derived_modes(s, s_phases, tol)[i]),
                source, z, floor))
    except (MissingDataError, SingularConfigurationError) as e:
        skipped.append(f"S-inverse: {e}")
    logger.info(f"Cross-validation: {len(entries)} checks, {sum(e.flagged for e in entries)} flagged")
    return CrossValidationReport(tuple(entries), tuple(skipped))


@functools.lru_cache(maxsize=4096)
def _expansion(n: int, phi: float) -> Tuple[Tuple[Tuple[int, int], complex], ...]:
    poly = weyl_algebra.expand_quadrature_power(math.cos(phi), math.sin(phi), n, max(n, weyl_algebra.MAX_ORDER))
    return tuple(((m.p_power, m.q_power), c) for m, c in poly.terms.items())


def solve_ordered_moments(source: MomentSource, mode: int, n: int, phases: Optional[Sequence[float]] = None,
                          known: Optional[Dict[Tuple[int, int], complex]] = None, frame: float = 0.0,
                          tol: float = 1e-10) -> Dict[Tuple[int, int], complex]:
    '''
    Antistandard moments ``<P^m Q^k>`` (m + k = n) of one mode in the frame
    rotated by ``frame``.

    ``<P^n>`` and ``<Q^n>`` come straight from the tomograms at
    ``frame + pi/2`` and ``frame``; the n - 1 mixed moments solve a real
    linear system built from ``<X^n>`` at ``frame + phase`` after
    subtracting the lower-degree terms of ``(mu Q + nu P)^n``, which must be
    present in ``known``.
    '''
    check_mode(mode)
    if n < 1:
        raise DegreeOverflowError(f"Degree must be positive, got {n}")
    if n > weyl_algebra.MAX_ORDER:
        raise DegreeOverflowError(f"Degree {n} exceeds the maximum order {weyl_algebra.MAX_ORDER}")
    known = dict(known or {})
    known.setdefault((0, 0), 1.0)
    result = {
        (0, n): complex(canonical_moment(source, mode, frame, n)),
        (n, 0): complex(canonical_moment(source, mode, frame + HALF_PI, n)),
    }
    if n == 1:
        return result
    phases = tuple(phases) if phases is not None else default_solver_phases(n)
    if len(phases) != n - 1:
        raise SingularConfigurationError(
            f"Degree {n} needs {n - 1} phases, got {len(phases)}", phases=phases)

    design = np.empty((n - 1, n - 1))
    rhs = np.empty(n - 1, dtype=complex)
    for row, phi in enumerate(phases):
        mu, nu = math.cos(phi), math.sin(phi)
        for k in range(1, n):
            design[row, k - 1] = math.comb(n, k) * mu ** k * nu ** (n - k)
        value = complex(canonical_moment(source, mode, frame + phi, n))
        for (m, k), coeff in _expansion(n, phi):
            if m + k == n:
                if k in (0, n):
                    value -= coeff * result[(m, k)]
                continue
            try:
                value -= coeff * known[(m, k)]
            except KeyError:
                raise MissingDataError(f"Lower-degree moment <P^{m} Q^{k}> of mode {mode} is not known")
        rhs[row] = value

    scale = np.linalg.norm(design)
    relative = abs(np.linalg.det(design)) / scale ** (n - 1) if scale > 0 else 0.0
    if relative < tol:
        raise SingularConfigurationError(
            f"Degree-{n} solver phases {tuple(round(p, 6) for p in phases)} give a singular system "
            f"(relative determinant {relative:.2e})",
            phases=phases, condition_number=float(np.linalg.cond(design)))
    solution = np.linalg.solve(design.astype(complex), rhs)
    for k in range(1, n):
        result[(n - k, k)] = complex(solution[k - 1])
    return result


@dataclass
class OrderedMomentTable:
    '''
    Antistandard moments ``<P^m Q^k>`` per mode (canonical frame rotated by
    ``frame``) plus cross-mode products such as ``<Q1^2 P2^2>``.
    '''

    frame: float
    max_degree: int
    entries: Dict[int, Dict[Tuple[int, int], complex]]
    cross: Dict[str, float] = field(default_factory=dict)
    stderr: Dict[int, Dict[Tuple[int, int], float]] = field(default_factory=dict)
    cross_stderr: Dict[str, float] = field(default_factory=dict)
    replicate_tables: List["OrderedMomentTable"] = field(default_factory=list, repr=False)

    def value(self, mode: int, m: int, k: int) -> complex:
        if (m, k) == (0, 0):
            return 1.0 + 0j
        try:
            return self.entries[mode][(m, k)]
        except KeyError:
            raise MissingDataError(f"Table has no entry <P^{m} Q^{k}> for mode {mode}")

    def lookup(self, mode: int):
        return lambda m, k: self.value(mode, m, k)

    def cross_value(self, name: str) -> float:
        try:
            return self.cross[name]
        except KeyError:
            raise MissingDataError(f"Table has no cross-mode entry <{name}>")

    def quadrature_moment(self, mode: int, mu: float, nu: float, n: int) -> complex:
        """``<(mu Q + nu P)^n>`` recomposed from the table (real for a consistent table)."""
        return weyl_algebra.evaluate(weyl_algebra.expand_quadrature_power(mu, nu, n), self.lookup(mode))

    def replicates(self) -> Sequence["OrderedMomentTable"]:
        return self.replicate_tables

    def to_json_rows(self) -> List[dict]:
        rows = []
        for mode in sorted(self.entries):
            for (m, k) in sorted(self.entries[mode], key=lambda mk: (mk[0] + mk[1], -mk[0])):
                value = self.entries[mode][(m, k)]
                rows.append({"mode": mode, "m": m, "k": k, "re": value.real, "im": value.imag,
                             "stderr": self.stderr.get(mode, {}).get((m, k), 0.0)})
        return rows

    def cross_rows(self) -> List[dict]:
        return [{"name": name, "value": value, "stderr": self.cross_stderr.get(name, 0.0)}
                for name, value in self.cross.items()]


def _cross_entries(source: MomentSource, frame: float) -> Dict[str, float]:
    phases = {"Q": frame, "P": frame + HALF_PI}
    out = {}
    for a1, t1 in phases.items():
        for a2, t2 in phases.items():
            if not source.has_joint(t1, t2):
                continue
            for n in (1, 2):
                for m in (1, 2):
                    out[f"{a1}1^{n} {a2}2^{m}"] = source.joint_moment(t1, t2, n, m)
    return out


def _table_point(source, modes, max_degree, frame, phases, cross, tol):
    entries = {}
    for mode in modes:
        known: Dict[Tuple[int, int], complex] = {(0, 0): 1.0}
        for degree in range(1, max_degree + 1):
            known.update(solve_ordered_moments(source, mode, degree, (phases or {}).get(degree),
                                               known, frame, tol))
        known.pop((0, 0))
        entries[mode] = known
    cross_values = _cross_entries(source, frame) if cross else {}
    return entries, cross_values


def build_moment_table(source: MomentSource, modes: Sequence[int] = (1, 2), max_degree: int = 4,
                       frame: float = 0.0, phases: Optional[Dict[int, Sequence[float]]] = None,
                       cross: bool = True, tol: float = 1e-10, bootstrap: bool = True) -> OrderedMomentTable:
    """Solve degrees 1..max_degree for each mode, with bootstrap replicate tables."""
    for mode in modes:
        check_mode(mode)
    entries, cross_values = _table_point(source, modes, max_degree, frame, phases, cross, tol)
    replicate_tables = []
    for replicate in (source.replicates() if bootstrap else ()):
        rep_entries, rep_cross = _table_point(replicate, modes, max_degree, frame, phases, cross, tol)
        replicate_tables.append(OrderedMomentTable(frame, max_degree, rep_entries, rep_cross))
    stderr: Dict[int, Dict[Tuple[int, int], float]] = {}
    cross_stderr: Dict[str, float] = {}
    if replicate_tables:
        for mode in modes:
            stderr[mode] = {}
            for key in entries[mode]:
                values = np.array([t.entries[mode][key] for t in replicate_tables])
                stderr[mode][key] = float(np.sqrt(np.var(values.real, ddof=1) + np.var(values.imag, ddof=1)))
        for name in cross_values:
            cross_stderr[name] = float(np.std([t.cross[name] for t in replicate_tables], ddof=1))
    logger.info(f"Built ordered-moment table for modes {tuple(modes)} up to degree {max_degree}"
                f" ({len(replicate_tables)} replicates)")
    return OrderedMomentTable(frame, max_degree, entries, cross_values, stderr, cross_stderr, replicate_tables)


def joint_moment(source: MomentSource, theta1: float, theta2: float, n: int, m: int) -> Estimate:
    """``<X1(theta1)^n X2(theta2)^m>`` from the joint tomogram."""
    return estimate(lambda s: s.joint_moment(theta1, theta2, n, m), source)


def gaussianity_residuals(table: OrderedMomentTable, mode: int) -> Dict[Tuple[int, int], complex]:
    '''
    Degree >= 3 entries minus their Gaussian closure.

    The closure is the exact moment set of the Gaussian state with the
    table's first and second moments; for Gaussian states every residual
    vanishes.
    '''
    q = table.value(mode, 0, 1).real
    p = table.value(mode, 1, 0).real
    sigma_qq = table.value(mode, 0, 2).real - q * q
    sigma_pp = table.value(mode, 2, 0).real - p * p
    sigma_qp = table.value(mode, 1, 1).real - p * q
    closure = ordered_moment_array([q, p], np.array([[sigma_qq, sigma_qp], [sigma_qp, sigma_pp]]),
                                   table.max_degree)
    residuals = {}
    for (m, k), value in table.entries[mode].items():
        if m + k >= 3:
            residuals[(m, k)] = value - complex(closure[k, m])
    return residuals
