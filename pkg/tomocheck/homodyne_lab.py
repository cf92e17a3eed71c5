"""Simulated balanced-homodyne acquisition and homodyne datasets.

Records carry the mode label (1-6), the local-oscillator phase and the
outcome. Paired detection of the two signal modes produces joint records
(theta1, theta2, x1, x2), grouped under the pseudo-mode ``JOINT_MODE``.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from tomocheck.bootstrap import Estimate, group_seed, power_means, replicate_power_sums
from tomocheck.errors import (ConfigError, EmptyScheduleError, InsufficientRecordsError, InvalidModeError,
                              MissingDataError, SchemaVersionError)
from tomocheck.mode_network import MODES, check_mode
from tomocheck.tomography import (DEFAULT_RADON, JointTomogram, RadonSettings, TomogramSlice,
                                  derived_mode_tomogram, optical_tomogram)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
JOINT_MODE = 0
THETA_TOL = 1e-9
MIN_RECORDS = 30

PI = math.pi


@dataclass(frozen=True)
class HomodyneRecord:
    mode: int
    theta: float
    x: float

    def to_dict(self):
        return {"mode": self.mode, "theta": self.theta, "x": self.x}


@dataclass(frozen=True)
class JointRecord:
    theta1: float
    theta2: float
    x1: float
    x2: float

    def to_dict(self):
        return {"theta1": self.theta1, "theta2": self.theta2, "x1": self.x1, "x2": self.x2}


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian detector noise of standard deviation ``sigma``."""

    sigma: float = 0.0

    def apply(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.sigma <= 0:
            return x
        return x + rng.normal(0.0, self.sigma, size=x.shape)


@dataclass(frozen=True)
class AcquisitionJob:
    mode: int
    theta: float
    shots: int
    theta2: Optional[float] = None

    @property
    def is_joint(self) -> bool:
        return self.mode == JOINT_MODE


def _same_phase(a: float, b: float, tol: float = THETA_TOL) -> bool:
    return abs(a - b) <= tol


class HomodyneDataset:
    '''
    Outcomes grouped by (mode, theta) and joint outcomes grouped by
    (theta1, theta2). Phases match within ``THETA_TOL``.
    '''

    def __init__(self, metadata: Optional[dict] = None):
        self.metadata = dict(metadata or {})
        self._groups: Dict[Tuple[int, float], np.ndarray] = {}
        self._joint: Dict[Tuple[float, float], np.ndarray] = {}

    def __len__(self) -> int:
        return sum(v.shape[0] for v in self._groups.values()) + sum(v.shape[0] for v in self._joint.values())

    def _key(self, mode: int, theta: float) -> Optional[Tuple[int, float]]:
        for key in self._groups:
            if key[0] == mode and _same_phase(key[1], theta):
                return key
        return None

    def _joint_key(self, theta1: float, theta2: float) -> Optional[Tuple[float, float]]:
        for key in self._joint:
            if _same_phase(key[0], theta1) and _same_phase(key[1], theta2):
                return key
        return None

    def add_group(self, mode: int, theta: float, x) -> None:
        check_mode(mode)
        x = np.asarray(x, dtype=float).ravel()
        key = self._key(mode, theta) or (mode, float(theta))
        existing = self._groups.get(key)
        self._groups[key] = x if existing is None else np.concatenate([existing, x])

    def add_joint(self, theta1: float, theta2: float, xy) -> None:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        key = self._joint_key(theta1, theta2) or (float(theta1), float(theta2))
        existing = self._joint.get(key)
        self._joint[key] = xy if existing is None else np.concatenate([existing, xy])

    def has_group(self, mode: int, theta: float) -> bool:
        return self._key(mode, theta) is not None

    def has_joint(self, theta1: float, theta2: float) -> bool:
        return self._joint_key(theta1, theta2) is not None

    def group(self, mode: int, theta: float) -> np.ndarray:
        key = self._key(mode, theta)
        if key is None:
            raise MissingDataError(f"No records for mode {mode} at theta={theta:.6f}")
        return self._groups[key]

    def joint(self, theta1: float, theta2: float) -> np.ndarray:
        key = self._joint_key(theta1, theta2)
        if key is None:
            raise MissingDataError(f"No joint records at (theta1, theta2)=({theta1:.6f}, {theta2:.6f})")
        return self._joint[key]

    def group_keys(self) -> List[Tuple[int, float]]:
        return sorted(self._groups)

    def joint_keys(self) -> List[Tuple[float, float]]:
        return sorted(self._joint)

    def records(self) -> Iterator:
        for (mode, theta), values in self._groups.items():
            for x in values:
                yield HomodyneRecord(mode, theta, float(x))
        for (theta1, theta2), values in self._joint.items():
            for x1, x2 in values:
                yield JointRecord(theta1, theta2, float(x1), float(x2))

    def shifted(self, mode: int, offset: float) -> "HomodyneDataset":
        """Copy with every outcome of ``mode`` displaced by ``offset`` (fault injection)."""
        out = HomodyneDataset(dict(self.metadata, shifted_mode=mode, shift=offset))
        for (m, theta), values in self._groups.items():
            out._groups[(m, theta)] = values + offset if m == mode else values.copy()
        out._joint = {k: v.copy() for k, v in self._joint.items()}
        return out

    def write_jsonl(self, path) -> Path:
        '''
        Write one JSON record per line plus ``<name>.meta.json``.

        Floats are written with ``repr`` precision, so reading back is bit-exact.
        '''
        path = Path(path)
        with open(path, "w", encoding="utf-8") as handle:
            for record in self.records():
                handle.write(json.dumps(record.to_dict()) + "\n")
        meta_path = metadata_path(path)
        with open(meta_path, "w", encoding="utf-8") as handle:
            json.dump({"schema_version": SCHEMA_VERSION, "kind": "homodyne-dataset",
                       "records": len(self), **self.metadata}, handle, indent=4)
        logger.info(f"Wrote {len(self)} records to {path}")
        return path

    @classmethod
    def read_jsonl(cls, path) -> "HomodyneDataset":
        path = Path(path)
        if not path.exists():
            raise MissingDataError(f"Dataset file {path} does not exist")
        metadata = {}
        meta_path = metadata_path(path)
        if meta_path.exists():
            with open(meta_path, "r", encoding="utf-8") as handle:
                metadata = json.load(handle)
            if metadata.get("schema_version") != SCHEMA_VERSION:
                raise SchemaVersionError(
                    f"{meta_path} has schema_version {metadata.get('schema_version')!r}, expected {SCHEMA_VERSION}")
            for key in ("schema_version", "kind", "records"):
                metadata.pop(key, None)
        singles: Dict[Tuple[int, float], list] = {}
        joints: Dict[Tuple[float, float], list] = {}
        with open(path, "r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise MissingDataError(f"{path}:{line_number}: malformed record: {e}")
                if "mode" in record:
                    singles.setdefault((int(record["mode"]), float(record["theta"])), []).append(float(record["x"]))
                elif "theta1" in record:
                    joints.setdefault((float(record["theta1"]), float(record["theta2"])), []).append(
                        (float(record["x1"]), float(record["x2"])))
                else:
                    raise MissingDataError(f"{path}:{line_number}: record has neither 'mode' nor 'theta1'")
        dataset = cls(metadata)
        for (mode, theta), values in singles.items():
            dataset.add_group(mode, theta, values)
        for (theta1, theta2), values in joints.items():
            dataset.add_joint(theta1, theta2, values)
        logger.info(f"Read {len(dataset)} records from {path}")
        return dataset


def metadata_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def sample(tomogram: TomogramSlice, n: int, seed, noise: NoiseModel = NoiseModel()) -> np.ndarray:
    """Draw ``n`` outcomes from a one-quadrature tomogram."""
    rng = np.random.default_rng(seed)
    if tomogram.is_analytic:
        x = rng.normal(tomogram.loc, tomogram.scale, size=n)
    else:
        cdf = cumulative_trapezoid(tomogram.density, tomogram.x, initial=0.0)
        cdf = cdf / cdf[-1]
        x = np.interp(rng.random(n), cdf, tomogram.x)
    return noise.apply(x, rng)


def sample_joint(tomogram: JointTomogram, n: int, seed, noise: NoiseModel = NoiseModel()) -> np.ndarray:
    """Draw ``n`` paired outcomes ``(x1, x2)``."""
    rng = np.random.default_rng(seed)
    if tomogram.is_analytic:
        xy = rng.multivariate_normal(tomogram.mean, tomogram.cov, size=n, method="eigh")
    else:
        dx1 = tomogram.x1[1] - tomogram.x1[0]
        dx2 = tomogram.x2[1] - tomogram.x2[0]
        weights = np.clip(tomogram.density, 0.0, None).ravel()
        cells = rng.choice(weights.size, size=n, p=weights / weights.sum())
        i, j = np.unravel_index(cells, tomogram.density.shape)
        xy = np.stack([tomogram.x1[i] + dx1 * (rng.random(n) - 0.5),
                       tomogram.x2[j] + dx2 * (rng.random(n) - 0.5)], axis=1)
    return noise.apply(xy, rng)


def _run_job(state, job: AcquisitionJob, seed, noise: NoiseModel, settings: RadonSettings):
    if job.is_joint:
        joint = optical_tomogram(state, job.theta, job.theta2, settings)
        return sample_joint(joint, job.shots, seed, noise)
    tomogram = derived_mode_tomogram(state, job.mode, job.theta, settings)
    return sample(tomogram, job.shots, seed, noise)


def acquire(state, jobs: Sequence[AcquisitionJob], seed: int, noise: NoiseModel = NoiseModel(),
            workers: int = 1, settings: RadonSettings = DEFAULT_RADON,
            metadata: Optional[dict] = None) -> HomodyneDataset:
    '''
    Run a phase schedule against a state.

    Each job draws from its own child of ``SeedSequence(seed)``, so the
    dataset does not depend on ``workers``.
    '''
    if not jobs:
        raise EmptyScheduleError("Acquisition schedule is empty")
    children = np.random.SeedSequence(seed).spawn(len(jobs))
    logger.info(f"Acquiring {len(jobs)} groups with {workers} worker(s)")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda pair: _run_job(state, pair[0], pair[1], noise, settings),
                                zip(jobs, children)))
    dataset = HomodyneDataset(dict(metadata or {}, seed=seed, noise_sigma=noise.sigma,
                                   descriptor=state.descriptor.to_dict()))
    for job, outcome in zip(jobs, results):
        if job.is_joint:
            dataset.add_joint(job.theta, job.theta2, outcome)
        else:
            dataset.add_group(job.mode, job.theta, outcome)
    return dataset


def empirical_moment(dataset: HomodyneDataset, mode: int, theta: float, n: int,
                     n_boot: int = 200, seed: int = 0, min_records: int = MIN_RECORDS) -> Estimate:
    """Plug-in ``<X^n>`` of one group with a bootstrap standard error."""
    x = dataset.group(mode, theta)
    if x.shape[0] < min_records:
        raise InsufficientRecordsError(
            f"Mode {mode} at theta={theta:.6f} has {x.shape[0]} records, need at least {min_records}")
    value = float(power_means(x, n)[n])
    replicates = replicate_power_sums(x, n, n_boot, group_seed(seed, mode, theta))[:, n]
    return Estimate(value, float(np.std(replicates, ddof=1)))


def default_solver_phases(degree: int) -> Tuple[float, ...]:
    """Phases besides 0 and pi/2 used to solve the ordered moments of ``degree``."""
    if degree <= 1:
        return ()
    if degree == 2:
        return (PI / 4,)
    if degree == 3:
        return (PI / 3, 2 * PI / 3)
    candidates = [j * PI / (degree + 1) for j in range(1, degree + 1)]
    candidates = [c for c in candidates if not _same_phase(c, PI / 2)]
    return tuple(candidates[:degree - 1])


def lattice_phases(order: int) -> Tuple[float, ...]:
    """``j pi / (order + 1)``, j = 0..order: distinct phases in [0, pi)."""
    return tuple(j * PI / (order + 1) for j in range(order + 1))


def _single(modes, phases, shots):
    return [AcquisitionJob(mode, theta, shots) for mode in modes for theta in phases]


def _table_phases(max_degree: int) -> List[float]:
    phases = [0.0, PI / 2]
    for degree in range(2, max_degree + 1):
        phases.extend(default_solver_phases(degree))
    return phases


def _named_schedule(name: str, shots: int, order: int) -> List[AcquisitionJob]:
    core = [0.0, PI / 4, PI / 2]
    cubic = core + [PI / 3, 2 * PI / 3]
    if name == "uncertainty":
        return _single((1, 2, 3, 5), core, shots)
    if name == "cubic":
        return _single((1, 2, 3, 5), cubic, shots)
    if name == "redundant":
        return _single(MODES, core, shots)
    if name == "photon":
        jobs = _single((1, 2), _table_phases(4), shots)
        jobs += [AcquisitionJob(JOINT_MODE, t1, shots, t2) for t1 in (0.0, PI / 2) for t2 in (0.0, PI / 2)]
        return jobs
    if name == "sweep":
        return _single((1, 2), [k * PI / 8 for k in range(13)], shots)
    if name == "wigner":
        lattice = lattice_phases(order)
        jobs = _single((1, 2), _table_phases(order), shots)
        jobs += [AcquisitionJob(JOINT_MODE, t1, shots, t2) for t1 in lattice for t2 in lattice]
        return jobs
    if name == "full":
        return _single(MODES, cubic, shots) + _named_schedule("photon", shots, order)
    raise ConfigError(
        f"Unknown schedule '{name}', expected one of uncertainty, cubic, redundant, photon, sweep, wigner, full")


def make_phase_schedule(spec, shots: int = 100000, order: int = 8) -> List[AcquisitionJob]:
    '''
    Expand a schedule specification into acquisition jobs.

    :param spec: a schedule name, a list of names, or a mapping with
        ``names`` and optionally ``shots``/``order``/``extra`` (explicit
        ``[mode, theta]`` or ``[0, theta1, theta2]`` entries)
    :return: jobs sorted by mode and phase, duplicates removed
    '''
    extra = []
    if isinstance(spec, dict):
        shots = int(spec.get("shots", shots))
        order = int(spec.get("order", order))
        extra = spec.get("extra", [])
        spec = spec.get("names", [])
    names = [spec] if isinstance(spec, str) else list(spec)
    jobs: List[AcquisitionJob] = []
    for name in names:
        jobs.extend(_named_schedule(name, shots, order))
    for entry in extra:
        if int(entry[0]) == JOINT_MODE:
            jobs.append(AcquisitionJob(JOINT_MODE, float(entry[1]), shots, float(entry[2])))
        else:
            jobs.append(AcquisitionJob(check_mode(int(entry[0])), float(entry[1]), shots))
    if not jobs:
        raise EmptyScheduleError(f"Schedule {spec!r} produced no jobs")
    unique: Dict[tuple, AcquisitionJob] = {}
    for job in jobs:
        key = (job.mode, round(job.theta, 9), None if job.theta2 is None else round(job.theta2, 9))
        unique.setdefault(key, job)
    ordered = [unique[k] for k in sorted(unique, key=lambda k: (k[0], k[1], k[2] if k[2] is not None else -1.0))]
    logger.debug(f"Schedule {names} expanded to {len(ordered)} jobs")
    return ordered
