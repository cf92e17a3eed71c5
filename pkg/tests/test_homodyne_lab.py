import math

import numpy as np
import pytest

from tomocheck.bootstrap import Estimate, estimate, group_seed, power_means, replicate_power_sums
from tomocheck.errors import (ConfigError, EmptyScheduleError, InsufficientRecordsError, InvalidModeError,
                              MissingDataError)
from tomocheck.homodyne_lab import (JOINT_MODE, AcquisitionJob, HomodyneDataset, HomodyneRecord, JointRecord,
                                    NoiseModel, acquire, default_solver_phases, empirical_moment, lattice_phases,
                                    make_phase_schedule, metadata_path, sample, sample_joint)
from tomocheck.tomography import JointTomogram, TomogramSlice

HALF_PI = math.pi / 2


def small_jobs(shots=2000):
    return [AcquisitionJob(1, 0.0, shots), AcquisitionJob(3, HALF_PI, shots),
            AcquisitionJob(JOINT_MODE, 0.0, shots, HALF_PI)]


def test_sampling_is_deterministic():
    tomogram = TomogramSlice(loc=0.0, scale=1.0)
    assert np.array_equal(sample(tomogram, 100, 5), sample(tomogram, 100, 5))
    assert not np.array_equal(sample(tomogram, 100, 5), sample(tomogram, 100, 6))


def test_gridded_tomogram_sampling():
    x = np.linspace(-5, 5, 401)
    tomogram = TomogramSlice(x=x, density=np.exp(-x ** 2 / 2) / math.sqrt(2 * math.pi))
    draws = sample(tomogram, 20000, 1)
    assert draws.mean() == pytest.approx(0.0, abs=0.05)
    assert draws.var() == pytest.approx(1.0, rel=0.05)


def test_noise_adds_variance():
    tomogram = TomogramSlice(loc=0.0, scale=1.0)
    noisy = sample(tomogram, 50000, 3, NoiseModel(0.5))
    assert noisy.var() == pytest.approx(1.25, rel=0.05)


def test_joint_sampling_reproduces_covariance():
    cov = np.array([[1.0, 0.5], [0.5, 2.0]])
    xy = sample_joint(JointTomogram(mean=np.array([0.5, -1.0]), cov=cov), 50000, 2)
    assert xy.shape == (50000, 2)
    np.testing.assert_allclose(xy.mean(axis=0), [0.5, -1.0], atol=0.03)
    np.testing.assert_allclose(np.cov(xy, rowvar=False), cov, atol=0.05)


def test_gridded_joint_sampling():
    x = np.linspace(-5, 5, 201)
    density = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / 2) / (2 * math.pi)
    xy = sample_joint(JointTomogram(x1=x, x2=x, density=density), 20000, 4)
    np.testing.assert_allclose(xy.var(axis=0), [1.0, 1.0], rtol=0.05)
    assert abs(np.corrcoef(xy, rowvar=False)[0, 1]) < 0.03


def test_records_cover_single_and_joint_groups():
    dataset = HomodyneDataset()
    dataset.add_group(1, 0.0, [1.0, 2.0])
    dataset.add_joint(0.0, HALF_PI, [[0.1, 0.2]])
    records = list(dataset.records())
    assert records[:2] == [HomodyneRecord(1, 0.0, 1.0), HomodyneRecord(1, 0.0, 2.0)]
    assert records[2] == JointRecord(0.0, HALF_PI, 0.1, 0.2)
    assert len(dataset) == 3


def test_acquire_groups_and_statistics(vacuum):
    dataset = acquire(vacuum, small_jobs(20000), seed=11)
    assert len(dataset) == 60000
    assert dataset.group(1, 0.0).var() == pytest.approx(0.5, rel=0.05)
    assert dataset.group(3, HALF_PI).var() == pytest.approx(0.25, rel=0.05)
    assert dataset.joint(0.0, HALF_PI).shape == (20000, 2)
    assert dataset.metadata["seed"] == 11


def test_acquire_does_not_depend_on_workers(tmsv):
    serial = acquire(tmsv, small_jobs(), seed=2, workers=1)
    threaded = acquire(tmsv, small_jobs(), seed=2, workers=3)
    for mode, theta in serial.group_keys():
        assert np.array_equal(serial.group(mode, theta), threaded.group(mode, theta))
    assert np.array_equal(serial.joint(0.0, HALF_PI), threaded.joint(0.0, HALF_PI))


def test_empty_schedule(vacuum):
    with pytest.raises(EmptyScheduleError):
        acquire(vacuum, [], seed=0)
    with pytest.raises(EmptyScheduleError):
        make_phase_schedule([])


def test_jsonl_round_trip_is_bit_exact(tmp_path, tmsv):
    dataset = acquire(tmsv, small_jobs(500), seed=4, metadata={"schedule": "test"})
    path = dataset.write_jsonl(tmp_path / "dataset.jsonl")
    assert metadata_path(path).name == "dataset.meta.json"
    loaded = HomodyneDataset.read_jsonl(path)
    assert loaded.group_keys() == dataset.group_keys()
    for mode, theta in dataset.group_keys():
        assert np.array_equal(loaded.group(mode, theta), dataset.group(mode, theta))
    assert np.array_equal(loaded.joint(0.0, HALF_PI), dataset.joint(0.0, HALF_PI))
    assert loaded.metadata["schedule"] == "test"


def test_malformed_record(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"mode": 1, "theta": 0.0, "x": 0.1}\n{"x": 2}\n')
    with pytest.raises(MissingDataError, match="neither"):
        HomodyneDataset.read_jsonl(path)


def test_missing_group():
    dataset = HomodyneDataset()
    dataset.add_group(1, 0.0, [0.1, 0.2])
    assert dataset.has_group(1, 1e-12)
    with pytest.raises(MissingDataError):
        dataset.group(2, 0.0)
    with pytest.raises(InvalidModeError):
        dataset.add_group(7, 0.0, [0.1])


def test_shifted_copy():
    dataset = HomodyneDataset()
    dataset.add_group(4, 0.0, [0.0, 1.0])
    dataset.add_group(3, 0.0, [0.0, 1.0])
    shifted = dataset.shifted(4, 0.5)
    assert np.array_equal(shifted.group(4, 0.0), [0.5, 1.5])
    assert np.array_equal(shifted.group(3, 0.0), [0.0, 1.0])
    assert np.array_equal(dataset.group(4, 0.0), [0.0, 1.0])


def test_empirical_moment():
    dataset = HomodyneDataset()
    dataset.add_group(1, 0.0, np.arange(100, dtype=float))
    result = empirical_moment(dataset, 1, 0.0, 1, n_boot=50, seed=1)
    assert result.value == pytest.approx(49.5)
    assert 1.0 < result.stderr < 5.0
    dataset.add_group(2, 0.0, np.arange(10, dtype=float))
    with pytest.raises(InsufficientRecordsError):
        empirical_moment(dataset, 2, 0.0, 2)


def test_bootstrap_error_shrinks_with_shots(vacuum):
    errors = []
    for shots in (10000, 20000):
        dataset = acquire(vacuum, [AcquisitionJob(1, 0.0, shots)], seed=shots)
        errors.append(empirical_moment(dataset, 1, 0.0, 2, n_boot=1000, seed=5).stderr)
    # 1 / sqrt(2) up to bootstrap noise
    assert 0.6 <= errors[1] / errors[0] <= 0.82


@pytest.mark.parametrize("name,count", [("uncertainty", 12), ("cubic", 20), ("redundant", 18),
                                        ("photon", 20), ("sweep", 26)])
def test_named_schedules(name, count):
    assert len(make_phase_schedule(name, shots=10)) == count


def test_schedule_union_removes_duplicates():
    jobs = make_phase_schedule(["uncertainty", "cubic"], shots=10)
    assert len(jobs) == 20
    assert jobs == sorted(jobs, key=lambda job: (job.mode, job.theta))


def test_schedule_mapping_with_extra_entries():
    jobs = make_phase_schedule({"names": ["uncertainty"], "shots": 7, "extra": [[6, 0.3], [0, 0.1, 0.2]]})
    assert len(jobs) == 14
    assert all(job.shots == 7 for job in jobs)
    assert any(job.is_joint and job.theta2 == pytest.approx(0.2) for job in jobs)


def test_wigner_schedule_covers_lattice():
    jobs = make_phase_schedule("wigner", shots=10, order=4)
    joints = [job for job in jobs if job.is_joint]
    assert len(joints) == 25


def test_unknown_schedule():
    with pytest.raises(ConfigError, match="Unknown schedule"):
        make_phase_schedule("everything")


def test_solver_phase_rules():
    assert default_solver_phases(1) == ()
    assert default_solver_phases(2) == (math.pi / 4,)
    assert default_solver_phases(3) == pytest.approx((math.pi / 3, 2 * math.pi / 3))
    fourth = default_solver_phases(4)
    assert len(fourth) == 3
    assert fourth == pytest.approx((math.pi / 5, 2 * math.pi / 5, 3 * math.pi / 5))
    # pi/2 is never used as a mixing phase
    assert all(abs(phi - HALF_PI) > 1e-9 for phi in default_solver_phases(5))
    assert lattice_phases(2) == pytest.approx((0.0, math.pi / 3, 2 * math.pi / 3))


def test_bootstrap_helpers():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(power_means(x, 2), [1.0, 2.5, 7.5])
    pairs = np.stack([x, -x], axis=1)
    assert power_means(pairs, 1)[1, 1] == pytest.approx(-7.5)
    first = replicate_power_sums(x, 2, 10, group_seed(3, 1, 0.5))
    again = replicate_power_sums(x, 2, 10, group_seed(3, 1, 0.5))
    assert first.shape == (10, 3)
    assert np.array_equal(first, again)


def test_estimate_without_replicates():
    class Fixed:
        def replicates(self):
            return ()

    assert estimate(lambda obj: 2.0, Fixed()) == Estimate(2.0, 0.0)
    assert Estimate(1 + 2j, 0.1).to_dict() == {"re": 1.0, "im": 2.0, "stderr": 0.1}
