"""Photon-number moments from ordered quadrature moments.

``n = (Q^2 + P^2 - 1) / 2`` per mode, so ``<n>``, ``<n^2>`` and the
cross moment ``<n1 n2>`` follow from moments up to degree four.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

from tomocheck import weyl_algebra
from tomocheck.bootstrap import Estimate, estimate
from tomocheck.moment_engine import OrderedMomentTable
from tomocheck.uncertainty_check import InequalityReport, make_report

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def number_operator() -> weyl_algebra.OperatorPolynomial:
    """``(Q^2 + P^2 - 1) / 2`` in antistandard order."""
    q2 = weyl_algebra.OperatorPolynomial.monomial(0, 2)
    p2 = weyl_algebra.OperatorPolynomial.monomial(2, 0)
    return (q2 + p2 - weyl_algebra.OperatorPolynomial.constant(1)).scale(0.5)


@lru_cache(maxsize=None)
def number_squared() -> weyl_algebra.OperatorPolynomial:
    n = number_operator()
    return weyl_algebra.multiply(n, n)


def mean_number(table: OrderedMomentTable, mode: int) -> float:
    return weyl_algebra.evaluate(number_operator(), table.lookup(mode)).real


def mean_number_squared(table: OrderedMomentTable, mode: int) -> float:
    value = weyl_algebra.evaluate(number_squared(), table.lookup(mode))
    if abs(value.imag) > 1e-6 * max(1.0, abs(value.real)):
        logger.warning(f"<n^2> of mode {mode} has imaginary residue {value.imag:.3e}")
    return value.real


def mean_number_product(table: OrderedMomentTable) -> float:
    '''
    ``<n1 n2> = 1/4 [<(Q1^2 + P1^2)(Q2^2 + P2^2)> - <Q1^2 + P1^2> - <Q2^2 + P2^2> + 1]``

    using the joint fourth moments stored as cross entries.
    '''
    joint = (table.cross_value("Q1^2 Q2^2") + table.cross_value("Q1^2 P2^2")
             + table.cross_value("P1^2 Q2^2") + table.cross_value("P1^2 P2^2"))
    first = (table.value(1, 0, 2) + table.value(1, 2, 0)).real
    second = (table.value(2, 0, 2) + table.value(2, 2, 0)).real
    return 0.25 * (joint - first - second + 1.0)


@dataclass(frozen=True)
class PhotonMomentSet:
    n1: Estimate
    n2: Estimate
    n1_sq: Estimate
    n2_sq: Estimate
    n1n2: Estimate

    def mandel_q(self, mode: int) -> float:
        n = self.n1.value if mode == 1 else self.n2.value
        n_sq = self.n1_sq.value if mode == 1 else self.n2_sq.value
        if n == 0:
            return 0.0
        return (n_sq - n * n) / n - 1.0

    def to_dict(self):
        return {
            "n1": self.n1.to_dict(), "n2": self.n2.to_dict(),
            "n1_sq": self.n1_sq.to_dict(), "n2_sq": self.n2_sq.to_dict(),
            "n1n2": self.n1n2.to_dict(),
            "mandel_q1": self.mandel_q(1), "mandel_q2": self.mandel_q(2),
        }


def photon_moments(table: OrderedMomentTable) -> PhotonMomentSet:
    return PhotonMomentSet(
        estimate(lambda t: mean_number(t, 1), table),
        estimate(lambda t: mean_number(t, 2), table),
        estimate(lambda t: mean_number_squared(t, 1), table),
        estimate(lambda t: mean_number_squared(t, 2), table),
        photon_cross_correlation(table),
    )


def photon_cross_correlation(table: OrderedMomentTable) -> Estimate:
    return estimate(mean_number_product, table)


def cauchy_schwarz_value(table: OrderedMomentTable) -> float:
    return mean_number_squared(table, 1) * mean_number_squared(table, 2) - mean_number_product(table) ** 2


def cauchy_schwarz_report(table: OrderedMomentTable, z: float = 3.0, tol: float = 1e-10) -> InequalityReport:
    """``<n1^2><n2^2> - <n1 n2>^2 >= 0``; holds for any joint number distribution."""
    result = estimate(cauchy_schwarz_value, table)
    return make_report("photon Cauchy-Schwarz", result.value, 0.0, result.stderr, z, tol, planck_free=True)
