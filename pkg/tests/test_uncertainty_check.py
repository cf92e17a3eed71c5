import math

import numpy as np
import pytest

from tomocheck.config import CheckConfig
from tomocheck.errors import InternalConsistencyError
from tomocheck.homodyne_lab import acquire, make_phase_schedule
from tomocheck.moment_engine import AnalyticSource, EmpiricalSource
from tomocheck.quantum_state import SIGMA, SIGMA_PRIME, make_state
from tomocheck.uncertainty_check import (ERROR, INCONCLUSIVE, PASS, VIOLATION, FullReport, assemble, classify,
                                         cubic_quadrature_inequality, dispersion_matrix, f_theta, full_report,
                                         m2_classical, make_report, minor_indices, minor_reports,
                                         principal_minors, quartic_bound, sr_per_mode, worst_verdict)


@pytest.mark.parametrize("margin,stderr,expected", [
    (0.1, 0.0, PASS),
    (-1e-12, 0.0, PASS),
    (-0.1, 0.01, VIOLATION),
    (-0.01, 0.01, INCONCLUSIVE),
    (-0.1, 0.0, VIOLATION),
])
def test_classify(margin, stderr, expected):
    assert classify(margin, stderr) == expected


def test_make_report_marks_saturation():
    report = make_report("x", 0.25, 0.25, 0.0)
    assert report.margin == 0.0
    assert report.saturated
    assert not make_report("y", 1.0, 0.25, 0.0).saturated


def test_vacuum_saturates_f(vacuum_source):
    for k in (1, 3, 6):
        report = f_theta(vacuum_source, k, 0.3)
        assert report.lhs == pytest.approx(0.25)
        assert report.margin == pytest.approx(0.0, abs=1e-12)
        assert report.verdict == PASS
        assert report.saturated


def test_two_mode_squeezed_f_in_derived_mode(tmsv_source):
    report = f_theta(tmsv_source, 3, 0.0)
    assert report.margin == pytest.approx(0.0, abs=1e-12)
    assert report.verdict == PASS


def test_thermal_sr_margin(thermal):
    report = sr_per_mode(AnalyticSource(thermal), 1)
    assert report.margin == pytest.approx(2.0)
    assert report.verdict == PASS


def test_cubic_inequality_values(vacuum_source):
    assert cubic_quadrature_inequality(vacuum_source, 1).lhs == pytest.approx(0.375)
    coherent = make_state({"kind": "coherent", "params": {"alpha": 1 / math.sqrt(2)}})
    assert cubic_quadrature_inequality(AnalyticSource(coherent), 1).lhs == pytest.approx(0.875)


def test_cubic_inequality_is_rotation_invariant_for_vacuum(vacuum_source):
    assert cubic_quadrature_inequality(vacuum_source, 2, theta=0.9).lhs == pytest.approx(0.375)


def test_classical_and_quartic_bounds(tmsv_source, vacuum_source):
    m2 = m2_classical(tmsv_source)
    assert m2.lhs == pytest.approx(0.25)
    assert m2.planck_free
    quartic = quartic_bound(vacuum_source)
    assert quartic.lhs == pytest.approx(1 / 16)
    assert quartic.margin == pytest.approx(0.0, abs=1e-12)


def test_dispersion_matrix_ordering(tmsv_source, tmsv_terms):
    c, s = tmsv_terms
    dispersion = dispersion_matrix(tmsv_source, SIGMA)
    assert dispersion.labels == ("P1", "P2", "Q1", "Q2")
    assert dispersion.values[0, 1] == pytest.approx(-s)
    assert dispersion.values[2, 3] == pytest.approx(s)
    assert dispersion.values[0, 0] == pytest.approx(c)
    assert np.all(dispersion.stderr == 0.0)


def test_robertson_matrix_is_hermitian(tmsv_source):
    sigma = assemble(tmsv_source)
    assert np.allclose(sigma.values, sigma.values.conj().T)
    assert sigma.values[0, 2] == pytest.approx(0.0 - 0.5j, abs=1e-12)


def test_minors_agree_between_orderings(tmsv_source):
    first = principal_minors(assemble(tmsv_source, SIGMA))
    second = principal_minors(assemble(tmsv_source, SIGMA_PRIME))
    assert len(first) == len(minor_indices()) == 15
    assert sorted(first.values()) == pytest.approx(sorted(second.values()), abs=1e-12)


def test_vacuum_full_determinant_vanishes(vacuum_source):
    minors = principal_minors(assemble(vacuum_source))
    assert minors[(0, 1, 2, 3)] == pytest.approx(0.0, abs=1e-12)
    assert minors[(0,)] == pytest.approx(0.5)


def test_non_hermitian_input():
    with pytest.raises(InternalConsistencyError):
        principal_minors(np.array([[1.0 + 1.0j]]))


def test_minor_reports_flag_unphysical_state(unphysical):
    reports = minor_reports(AnalyticSource(unphysical))
    assert len(reports) == 15
    assert any(report.verdict == VIOLATION for report in reports)
    assert sum(report.leading for report in reports) == 4


def test_full_report_of_two_mode_squeezed(tmsv_source):
    report = full_report(tmsv_source)
    assert len(report.entries) == 46
    assert report.verdict == PASS
    assert report.exit_code == 0
    assert not report.errors
    assert report.counts()[PASS] == 46
    assert report.to_dict()["cross_validation"]["flagged"] is False


def test_full_report_of_unphysical_state(unphysical):
    report = full_report(AnalyticSource(unphysical))
    assert report.verdict == VIOLATION
    assert report.exit_code == 2


def test_full_report_skips_missing_phases():
    vacuum = make_state({"kind": "vacuum"})
    dataset = acquire(vacuum, make_phase_schedule("uncertainty", shots=4000), seed=5)
    config = CheckConfig(z=5.0)
    report = full_report(EmpiricalSource(dataset, n_boot=30, seed=2, max_order=4), config)
    # modes 4 and 6 were not measured
    assert any(item.startswith("F(mode 4") for item in report.skipped)
    assert any(item.startswith("cubic(mode 1") for item in report.skipped)
    assert not report.errors


def test_exit_codes_of_synthetic_reports():
    inconclusive = FullReport(entries=[make_report("x", 0.2, 0.25, 0.1)])
    assert inconclusive.verdict == INCONCLUSIVE
    assert inconclusive.exit_code == 3
    errored = FullReport(entries=[make_report("x", 0.2, 0.25, 0.1)], errors=["singular"])
    assert errored.exit_code == 1
    violated = FullReport(entries=[make_report("x", 0.0, 0.25, 0.01)], errors=["singular"])
    assert violated.exit_code == 2


def test_worst_verdict():
    assert worst_verdict([]) == PASS
    assert worst_verdict([PASS, INCONCLUSIVE]) == INCONCLUSIVE
    assert worst_verdict([INCONCLUSIVE, ERROR, PASS]) == ERROR
    assert worst_verdict([ERROR, VIOLATION]) == VIOLATION


SWEEP = tuple(k * math.pi / 8 for k in range(9))


@pytest.fixture(scope="module")
def sampled_vacuum():
    vacuum = make_state({"kind": "vacuum"})
    dataset = acquire(vacuum, make_phase_schedule("sweep", shots=100000), seed=41)
    return EmpiricalSource(dataset, n_boot=100, seed=6, max_order=4)


@pytest.mark.parametrize("mode", [1, 2])
def test_sampled_vacuum_f_theta_is_within_noise(sampled_vacuum, mode):
    for theta in SWEEP:
        report = f_theta(sampled_vacuum, mode, theta)
        assert report.stderr > 0.0
        assert abs(report.margin) < 3 * report.stderr, report.name


def test_sampled_vacuum_report_is_inconclusive(sampled_vacuum):
    # saturated relations sit at margin 0, so sampling noise leaves some just below the bound
    report = full_report(sampled_vacuum, CheckConfig(f_theta_grid=SWEEP, cubic_theta_grid=()))
    assert report.counts()[VIOLATION] == 0
    assert report.counts()[INCONCLUSIVE] > 0
    assert not report.errors
    assert report.verdict == INCONCLUSIVE
    assert report.exit_code == 3
    assert len(report.entries) == 2 + 2 * len(SWEEP)


@pytest.mark.parametrize("nbar", [0.5, 2.0])
def test_sampled_thermal_minors_hold(nbar):
    thermal = make_state({"kind": "thermal", "params": {"nbar": nbar}})
    dataset = acquire(thermal, make_phase_schedule("uncertainty", shots=100000), seed=17)
    source = EmpiricalSource(dataset, n_boot=100, seed=9, max_order=4)
    for ordering in (SIGMA, SIGMA_PRIME):
        reports = minor_reports(source, ordering)
        assert len(reports) == 15
        for report in reports:
            assert report.stderr > 0.0
            assert report.margin >= -3 * report.stderr, report.name
            assert report.verdict == PASS


def test_sampled_two_mode_squeezed_has_no_violations():
    tmsv = make_state({"kind": "two_mode_squeezed", "params": {"r": 0.4}})
    dataset = acquire(tmsv, make_phase_schedule("full", shots=100000), seed=29)
    report = full_report(EmpiricalSource(dataset, n_boot=50, seed=11, max_order=4))
    assert not report.errors
    assert not report.cross_validation.flagged
    assert [entry.name for entry in report.entries if entry.verdict == VIOLATION] == []
    assert report.verdict in (PASS, INCONCLUSIVE)
