"""Polynomials in the canonical pair Q, P ([Q, P] = i) in antistandard order.

Every operator polynomial is stored as a combination of monomials
``P^m Q^k`` (all P to the left of all Q). Products and words are reduced
with the closed reordering rule

    (P^a Q^b)(P^c Q^d) = sum_j j! C(b, j) C(c, j) i^j P^(a+c-j) Q^(b+d-j)

which is exact with integer arithmetic; coefficients are complex numbers
whose parts are integers or the caller's scalars.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, Dict, Iterable, NamedTuple

from tomocheck.errors import DegreeOverflowError, InvalidOperatorError

MAX_ORDER = 8

_I_POWERS = (1, 1j, -1, -1j)


class OrderedMonomial(NamedTuple):
    """``P^p_power Q^q_power``."""

    p_power: int
    q_power: int

    @property
    def degree(self) -> int:
        return self.p_power + self.q_power

    def render(self) -> str:
        parts = []
        for symbol, power in (("P", self.p_power), ("Q", self.q_power)):
            if power == 1:
                parts.append(symbol)
            elif power > 1:
                parts.append(f"{symbol}^{power}")
        return " ".join(parts) or "1"


class OperatorPolynomial:
    """Mapping ``OrderedMonomial -> complex`` with no zero coefficients."""

    __slots__ = ("_terms", "max_order")

    def __init__(self, terms: Dict[OrderedMonomial, complex] | None = None, max_order: int = MAX_ORDER):
        self.max_order = max_order
        self._terms: Dict[OrderedMonomial, complex] = {}
        for monomial, coeff in (terms or {}).items():
            monomial = OrderedMonomial(*monomial)
            if monomial.degree > max_order:
                raise DegreeOverflowError(
                    f"Monomial {monomial.render()} exceeds the maximum order {max_order}")
            if coeff != 0:
                self._terms[monomial] = self._terms.get(monomial, 0) + complex(coeff)
        self._terms = {m: c for m, c in self._terms.items() if c != 0}

    @classmethod
    def constant(cls, value: complex = 1, max_order: int = MAX_ORDER) -> "OperatorPolynomial":
        return cls({OrderedMonomial(0, 0): value}, max_order)

    @classmethod
    def monomial(cls, p_power: int, q_power: int, coeff: complex = 1,
                 max_order: int = MAX_ORDER) -> "OperatorPolynomial":
        return cls({OrderedMonomial(p_power, q_power): coeff}, max_order)

    @property
    def terms(self) -> Dict[OrderedMonomial, complex]:
        return dict(self._terms)

    @property
    def degree(self) -> int:
        return max((m.degree for m in self._terms), default=0)

    def coefficient(self, p_power: int, q_power: int) -> complex:
        return self._terms.get(OrderedMonomial(p_power, q_power), 0j)

    def __iter__(self):
        return iter(sorted(self._terms.items(), key=lambda kv: (-kv[0].degree, -kv[0].p_power)))

    def __len__(self):
        return len(self._terms)

    def __add__(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        merged = dict(self._terms)
        for monomial, coeff in other._terms.items():
            merged[monomial] = merged.get(monomial, 0) + coeff
        return OperatorPolynomial(merged, max(self.max_order, other.max_order))

    def __sub__(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        return self + other.scale(-1)

    def __mul__(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        return multiply(self, other)

    def scale(self, factor: complex) -> "OperatorPolynomial":
        return OperatorPolynomial({m: c * factor for m, c in self._terms.items()}, self.max_order)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def isclose(self, other: "OperatorPolynomial", tol: float = 1e-12) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= tol for k in keys)

    def render(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for monomial, coeff in self:
            pieces.append(_render_term(coeff, monomial))
        text = " + ".join(pieces)
        return text.replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"OperatorPolynomial({self.render()})"


def _render_scalar(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return f"{value:g}"


def _render_term(coeff: complex, monomial: OrderedMonomial) -> str:
    body = monomial.render()
    if coeff.imag == 0:
        scalar = _render_scalar(coeff.real)
    elif coeff.real == 0:
        im = coeff.imag
        scalar = "i" if im == 1 else "-i" if im == -1 else f"{_render_scalar(im)}i"
    else:
        scalar = f"({_render_scalar(coeff.real)}{coeff.imag:+g}i)"
    if body == "1":
        return scalar
    if scalar == "1":
        return body
    if scalar == "-1":
        return f"-{body}"
    return f"{scalar} {body}"


def _product_of_monomials(left: OrderedMonomial, right: OrderedMonomial) -> Dict[OrderedMonomial, complex]:
    a, b = left
    c, d = right
    out = {}
    for j in range(min(b, c) + 1):
        coeff = math.factorial(j) * math.comb(b, j) * math.comb(c, j) * _I_POWERS[j % 4]
        out[OrderedMonomial(a + c - j, b + d - j)] = coeff
    return out


def multiply(a: OperatorPolynomial, b: OperatorPolynomial) -> OperatorPolynomial:
    """Antistandard-ordered product ``a * b``."""
    cap = max(a.max_order, b.max_order)
    if a.degree + b.degree > cap and a._terms and b._terms:
        raise DegreeOverflowError(
            f"Product of degree {a.degree + b.degree} exceeds the maximum order {cap}")
    merged: Dict[OrderedMonomial, complex] = {}
    for left, lc in a._terms.items():
        for right, rc in b._terms.items():
            for monomial, coeff in _product_of_monomials(left, right).items():
                merged[monomial] = merged.get(monomial, 0) + lc * rc * coeff
    return OperatorPolynomial(merged, cap)


def reduce_to_antistandard(word: Iterable[str] | str, max_order: int = MAX_ORDER) -> OperatorPolynomial:
    """Reduce a word over ``{"Q", "P"}`` (e.g. ``"QPP"``) to antistandard order."""
    letters = [letter.upper() for letter in word]
    if len(letters) > max_order:
        raise DegreeOverflowError(
            f"Word of length {len(letters)} exceeds the maximum order {max_order}")
    result = OperatorPolynomial.constant(1, max_order)
    for letter in letters:
        if letter == "Q":
            factor = OperatorPolynomial.monomial(0, 1, max_order=max_order)
        elif letter == "P":
            factor = OperatorPolynomial.monomial(1, 0, max_order=max_order)
        else:
            raise InvalidOperatorError(f"Unknown operator symbol {letter!r}; expected 'Q' or 'P'")
        result = multiply(result, factor)
    return result


def expand_quadrature_power(mu: float, nu: float, n: int, max_order: int = MAX_ORDER) -> OperatorPolynomial:
    """``(mu Q + nu P)^n`` in antistandard order."""
    if n > max_order:
        raise DegreeOverflowError(f"Power {n} exceeds the maximum order {max_order}")
    linear = OperatorPolynomial({OrderedMonomial(0, 1): mu, OrderedMonomial(1, 0): nu}, max_order)
    result = OperatorPolynomial.constant(1, max_order)
    for _ in range(n):
        result = multiply(result, linear)
    return result


def symmetrize(q_power: int, p_power: int, max_order: int = MAX_ORDER) -> OperatorPolynomial:
    """Weyl-symmetric product of ``Q^q_power`` and ``P^p_power``."""
    length = q_power + p_power
    if length > max_order:
        raise DegreeOverflowError(f"Symmetric product of degree {length} exceeds {max_order}")
    arrangements = list(itertools.combinations(range(length), q_power))
    total = OperatorPolynomial({}, max_order)
    for positions in arrangements:
        chosen = set(positions)
        word = "".join("Q" if i in chosen else "P" for i in range(length))
        total = total + reduce_to_antistandard(word, max_order)
    return total.scale(1 / len(arrangements))


def conjugate(poly: OperatorPolynomial) -> OperatorPolynomial:
    """Hermitian conjugate: ``(c P^m Q^k)^+ = conj(c) Q^k P^m``, re-reduced."""
    total = OperatorPolynomial({}, poly.max_order)
    for monomial, coeff in poly._terms.items():
        word = "Q" * monomial.q_power + "P" * monomial.p_power
        total = total + reduce_to_antistandard(word, poly.max_order).scale(coeff.conjugate())
    return total


def evaluate(poly: OperatorPolynomial, lookup: Callable[[int, int], complex]) -> complex:
    """Expectation of ``poly`` given ``lookup(p_power, q_power) = <P^m Q^k>``."""
    value = 0j
    for monomial, coeff in poly._terms.items():
        if monomial.degree == 0:
            value += coeff
        else:
            value += coeff * lookup(monomial.p_power, monomial.q_power)
    return value
