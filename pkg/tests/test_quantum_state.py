import math

import numpy as np
import pytest

from tomocheck.errors import InvalidModeError, InvalidStateError, OutOfDomainError, SchemaVersionError
from tomocheck.quantum_state import (SIGMA, SIGMA_PRIME, CommutatorMatrix, GaussianState, GridWigner,
                                     StateDescriptor, load_grid, make_state, ordered_moment,
                                     ordered_moment_array, ordering_labels, permute, reduce_to_mode,
                                     save_grid, state_from_dict, state_to_dict, validate_physicality,
                                     wigner_eval)


def test_vacuum_wigner_values(vacuum):
    assert wigner_eval(vacuum, 0, 0, 0, 0) == pytest.approx(4.0)
    assert wigner_eval(vacuum, 1, 0, 0, 0) == pytest.approx(4.0 * math.exp(-1.0))


def test_wigner_accepts_point_arrays(vacuum):
    points = np.zeros((3, 4))
    points[1, 2] = 1.0
    values = wigner_eval(vacuum, points)
    assert values.shape == (3,)
    assert np.allclose(values, [4.0, 4.0 * math.exp(-1.0), 4.0])


def test_coherent_mean():
    state = make_state({"kind": "coherent", "params": {"alpha1": [1.0, 0.5], "alpha2": 0.0}})
    assert np.allclose(state.mean, [math.sqrt(2), math.sqrt(2) * 0.5, 0.0, 0.0])
    assert np.allclose(state.cov, 0.5 * np.eye(4))


def test_squeezed_covariance():
    state = make_state({"kind": "squeezed", "params": {"r": 0.5, "modes": 1}})
    assert state.n_modes == 1
    assert np.allclose(state.cov, np.diag([math.exp(-1.0) / 2, math.exp(1.0) / 2]))


def test_two_mode_squeezed_covariance(tmsv, tmsv_terms):
    c, s = tmsv_terms
    assert tmsv.cov[0, 0] == pytest.approx(c)
    assert tmsv.cov[0, 2] == pytest.approx(s)
    assert tmsv.cov[1, 3] == pytest.approx(-s)
    assert tmsv.cov[0, 3] == 0.0


def test_state_arrays_are_read_only(vacuum):
    with pytest.raises(ValueError):
        vacuum.cov[0, 0] = 3.0


@pytest.mark.parametrize("desc", [
    {"kind": "thermal", "params": {"nbar": -0.1}},
    {"kind": "squeezed", "params": {"r": "wide"}},
    {"kind": "coherent", "params": {"alpha": [1.0, float("nan")]}},
    {"kind": "cat"},
    {"kind": "vacuum", "params": {"modes": 3}},
    {"params": {}},
])
def test_invalid_descriptors(desc):
    with pytest.raises(InvalidStateError):
        make_state(desc)


def test_asymmetric_covariance_rejected():
    cov = 0.5 * np.eye(2)
    cov[0, 1] = 0.1
    with pytest.raises(InvalidStateError, match="not symmetric"):
        GaussianState(np.zeros(2), cov)


def test_physicality(vacuum, thermal, unphysical):
    ok, min_eig = validate_physicality(vacuum)
    assert ok and min_eig == pytest.approx(0.0, abs=1e-12)
    assert validate_physicality(thermal)[0]
    ok, min_eig = validate_physicality(unphysical)
    assert not ok
    assert min_eig == pytest.approx(-0.3)


def test_commutator_matrix_orderings():
    sigma = CommutatorMatrix.for_ordering(SIGMA)
    assert sigma.labels == ("P1", "P2", "Q1", "Q2")
    # J[P1, Q1] = -i <[P1, Q1]> = -1
    assert sigma.values[0, 2] == -1.0
    assert sigma.values[2, 0] == 1.0
    prime = CommutatorMatrix.for_ordering(SIGMA_PRIME)
    assert ordering_labels(SIGMA_PRIME) == ("Q1", "Q2", "P1", "P2")
    assert prime.values[0, 2] == 1.0
    for matrix in (sigma.values, prime.values):
        assert np.allclose(matrix @ matrix, -np.eye(4))


def test_permute_relabels_covariance(tmsv, tmsv_terms):
    _, s = tmsv_terms
    sigma = permute(tmsv.cov, SIGMA)
    # (P1, P2) block carries -s off the diagonal
    assert sigma[0, 1] == pytest.approx(-s)
    assert sigma[2, 3] == pytest.approx(s)


def test_reduce_to_mode(tmsv, tmsv_terms):
    c, _ = tmsv_terms
    reduced = reduce_to_mode(tmsv, 2)
    assert reduced.n_modes == 1
    assert np.allclose(reduced.cov, c * np.eye(2))
    with pytest.raises(InvalidModeError):
        reduce_to_mode(tmsv, 3)


def test_ordered_moments_of_vacuum(vacuum):
    assert ordered_moment(vacuum, (1, 0), (1, 0)) == pytest.approx(-0.5j)
    assert ordered_moment(vacuum, (2, 0), (2, 0)) == pytest.approx(-0.25)
    assert ordered_moment(vacuum, (0, 0), (4, 0)) == pytest.approx(0.75)
    assert ordered_moment(vacuum, (1, 1), (1, 1)) == pytest.approx(-0.25)


def test_ordered_moment_array_matches_gaussian_moments(tmsv, tmsv_terms):
    c, s = tmsv_terms
    table = ordered_moment_array(tmsv.mean, tmsv.cov, 4)
    assert table[1, 0, 1, 0] == pytest.approx(s)
    assert table[0, 1, 0, 1] == pytest.approx(-s)
    assert table[2, 0, 2, 0] == pytest.approx(c * c + 2 * s * s)
    assert table[0, 0, 0, 0] == pytest.approx(1.0)


def test_displaced_first_moments(displaced):
    table = ordered_moment_array(displaced.mean, displaced.cov, 1)
    assert np.allclose(table[1, 0, 0, 0], displaced.mean[0])
    assert np.allclose(table[0, 0, 0, 1], displaced.mean[3])


def test_grid_normalization(vacuum):
    grid = GridWigner.from_gaussian(vacuum, 24)
    assert grid.normalization() == pytest.approx(1.0, abs=1e-6)
    one_mode = GridWigner.from_gaussian(make_state({"kind": "thermal", "params": {"nbar": 0.5, "modes": 1}}), 128)
    assert one_mode.normalization() == pytest.approx(1.0, abs=1e-6)


def test_grid_wigner_eval_and_domain(vacuum):
    grid = GridWigner.from_gaussian(vacuum, 25)
    assert wigner_eval(grid, 0, 0, 0, 0) == pytest.approx(4.0)
    with pytest.raises(OutOfDomainError):
        wigner_eval(grid, 10.0, 0, 0, 0)


def test_grid_reduction(tmsv):
    grid = GridWigner.from_gaussian(tmsv, 24)
    reduced = reduce_to_mode(grid, 1)
    assert reduced.n_modes == 1
    assert reduced.normalization() == pytest.approx(1.0)


def test_non_uniform_grid_rejected():
    axes = (np.array([0.0, 1.0, 3.0]), np.array([0.0, 1.0, 2.0]))
    with pytest.raises(InvalidStateError, match="uniform"):
        GridWigner(np.ones((3, 3)), axes)


def test_grid_file_round_trip(tmp_path):
    grid = GridWigner.from_gaussian(make_state({"kind": "vacuum", "params": {"modes": 1}}), 16)
    path = tmp_path / "grid.npz"
    save_grid(path, grid)
    loaded = load_grid(path)
    assert np.array_equal(loaded.values, grid.values)
    assert all(np.array_equal(a, b) for a, b in zip(loaded.axes, grid.axes))
    assert make_state({"kind": "grid", "params": {"path": str(path)}}).n_modes == 1


def test_state_json_round_trip(tmsv):
    data = state_to_dict(tmsv)
    assert data["schema_version"] == 1
    restored = state_from_dict(data)
    assert np.array_equal(restored.cov, tmsv.cov)
    assert restored.descriptor == tmsv.descriptor
    with pytest.raises(SchemaVersionError):
        state_from_dict(dict(data, schema_version=2))


def test_descriptor_only_document_builds_state():
    state = state_from_dict({"schema_version": 1, "descriptor": {"kind": "thermal", "params": {"nbar": 2}}})
    assert np.allclose(state.cov, 2.5 * np.eye(4))
    assert StateDescriptor.from_dict({"kind": "vacuum"}).params == {}
