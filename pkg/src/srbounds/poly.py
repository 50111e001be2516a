"""Exact sparse multivariate polynomial arithmetic over the rationals.

A polynomial in ``nvars`` variables is stored as a mapping from exponent
tuples (one non-negative integer per variable) to ``Fraction`` coefficients.
Zero-coefficient terms are never stored, so the zero polynomial is the empty
mapping and polynomial equality is plain dictionary equality.

All arithmetic here is exact; floating point enters only at the solver
boundary in :mod:`srbounds.sdp`.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

# One exponent per variable, e.g. (1, 0, 2) is x0 * x2^2 in three variables.
MultiIndex = tuple[int, ...]

RationalLike = int | Fraction | str


def total_degree(alpha: MultiIndex) -> int:
    """Total degree |alpha| of a multi-index."""
    return sum(alpha)


def enumerate_monomials(nvars: int, max_degree: int) -> list[MultiIndex]:
    """All multi-indices with |alpha| <= max_degree, in graded lex order.

    Graded lex: ascending total degree, then lexicographically descending
    exponent tuples within each degree, so (1, 2) -> [(0,0), (1,0), (0,1),
    (2,0), (1,1), (0,2)].  The output has C(max_degree + nvars, nvars)
    entries and is prefix-stable as max_degree grows.
    """
    if nvars < 1:
        raise ValueError(f"nvars must be >= 1, got {nvars}")
    if max_degree < 0:
        raise ValueError(f"max_degree must be >= 0, got {max_degree}")
    out: list[MultiIndex] = []

    def fill(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            out.append(tuple(prefix) + (remaining,))
            return
        for e in range(remaining, -1, -1):
            prefix.append(e)
            fill(prefix, remaining - e, slots - 1)
            prefix.pop()

    for degree in range(max_degree + 1):
        fill([], degree, nvars)
    return out


class Polynomial:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[MultiIndex, RationalLike] | None = None):
        if nvars < 1:
            raise ValueError(f"nvars must be >= 1, got {nvars}")
        clean: dict[MultiIndex, Fraction] = {}
        for alpha, coeff in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != nvars:
                raise ValueError(f"multi-index {alpha} has length {len(alpha)}, expected {nvars}")
            if any(e < 0 for e in alpha):
                raise ValueError(f"negative exponent in multi-index {alpha}")
            c = Fraction(coeff)
            if c != 0:
                clean[alpha] = c
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors --------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: RationalLike) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: Fraction(value)})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise ValueError(f"variable index {index} out of range for nvars={nvars}")
        alpha = [0] * nvars
        alpha[index] = 1
        return cls(nvars, {tuple(alpha): Fraction(1)})

    @classmethod
    def monomial(cls, alpha: MultiIndex, coeff: RationalLike = 1) -> "Polynomial":
        return cls(len(alpha), {tuple(alpha): Fraction(coeff)})

    # -- inspection ----------------------------------------------------

    @property
    def terms(self) -> dict[MultiIndex, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterable[tuple[MultiIndex, Fraction]]:
        return self._terms.items()

    def coefficient(self, alpha: MultiIndex) -> Fraction:
        return self._terms.get(tuple(alpha), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1 by convention."""
        if not self._terms:
            return -1
        return max(total_degree(a) for a in self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self._terms.items())))

    # -- arithmetic ----------------------------------------------------

    def _check_compatible(self, other: "Polynomial") -> None:
        if self.nvars != other.nvars:
            raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        out = dict(self._terms)
        for alpha, c in other._terms.items():
            out[alpha] = out.get(alpha, Fraction(0)) + c
        return Polynomial(self.nvars, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return self.scale(-1)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        out: dict[MultiIndex, Fraction] = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, Fraction(0)) + ca * cb
        return Polynomial(self.nvars, out)

    def scale(self, c: RationalLike) -> "Polynomial":
        c = Fraction(c)
        return Polynomial(self.nvars, {a: v * c for a, v in self._terms.items()})

    def differentiate(self, var: int) -> "Polynomial":
        """Exact partial derivative with respect to variable ``var``."""
        if not 0 <= var < self.nvars:
            raise ValueError(f"variable index {var} out of range for nvars={self.nvars}")
        out: dict[MultiIndex, Fraction] = {}
        for alpha, c in self._terms.items():
            e = alpha[var]
            if e == 0:
                continue
            beta = list(alpha)
            beta[var] = e - 1
            out[tuple(beta)] = c * e
        return Polynomial(self.nvars, out)

    def evaluate(self, point: Sequence[RationalLike]) -> Fraction:
        """Exact evaluation at a rational point."""
        if len(point) != self.nvars:
            raise ValueError(f"point has length {len(point)}, expected {self.nvars}")
        pt = [Fraction(v) for v in point]
        total = Fraction(0)
        for alpha, c in self._terms.items():
            term = c
            for v, e in zip(pt, alpha):
                term *= v**e
            total += term
        return total

    def substitute_signs(self, signs: Sequence[int]) -> "Polynomial":
        """Substitute Y_i -> signs[i] * Y_i for signs in {-1, +1}."""
        if len(signs) != self.nvars:
            raise ValueError("sign vector length mismatch")
        out: dict[MultiIndex, Fraction] = {}
        for alpha, c in self._terms.items():
            s = 1
            for sign, e in zip(signs, alpha):
                if sign == -1 and e % 2 == 1:
                    s = -s
            out[alpha] = c * s
        return Polynomial(self.nvars, out)

    # -- rendering and parsing -----------------------------------------

    def render(self, names: Sequence[str] | None = None) -> str:
        """Human-readable form, e.g. ``x^3*y - 3*x*y``, in graded lex order."""
        if self.is_zero():
            return "0"
        if names is None:
            names = default_names(self.nvars)
        order = {a: i for i, a in enumerate(enumerate_monomials(self.nvars, self.degree()))}
        pieces = []
        for alpha in sorted(self._terms, key=order.__getitem__):
            c = self._terms[alpha]
            factors = []
            for name, e in zip(names, alpha):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            if not factors:
                body = str(abs(c))
            elif abs(c) == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(abs(c))] + factors)
            sign = "-" if c < 0 else "+"
            pieces.append((sign, body))
        first_sign, first_body = pieces[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {self.render()!r})"


def default_names(nvars: int) -> list[str]:
    """Variable names used for rendering and parsing: x,y,z then x0,x1,..."""
    if nvars <= 3:
        return ["x", "y", "z"][:nvars]
    return [f"x{i}" for i in range(nvars)]


_TERM_FACTOR = re.compile(r"^([a-zA-Z_]\w*)(?:\^(\d+))?$")


def parse_polynomial(text: str, nvars: int, names: Sequence[str] | None = None) -> Polynomial:
    """Parse a polynomial like ``x - x^3 + 3/10*y`` with rational coefficients.

    Accepts terms separated by + / -, factors separated by ``*``, integer or
    rational (``p/q``) or decimal coefficients, and ``name^k`` powers.
    Decimal coefficients are converted exactly (0.3 becomes 3/10).
    """
    if names is None:
        names = default_names(nvars)
    name_index = {n: i for i, n in enumerate(names)}
    text = text.strip()
    if not text or text == "0":
        return Polynomial.zero(nvars)
    # split into signed terms at top level
    terms: dict[MultiIndex, Fraction] = {}
    chunks = re.findall(r"[+-]?[^+-]+", text.replace(" ", ""))
    for chunk in chunks:
        sign = Fraction(1)
        if chunk.startswith("-"):
            sign, chunk = Fraction(-1), chunk[1:]
        elif chunk.startswith("+"):
            chunk = chunk[1:]
        coeff = sign
        alpha = [0] * nvars
        for factor in chunk.split("*"):
            if not factor:
                raise ValueError(f"empty factor in term {chunk!r}")
            if factor[0].isdigit() or factor[0] == ".":
                coeff *= Fraction(factor)
                continue
            if "/" in factor:
                raise ValueError(f"cannot parse factor {factor!r}")
            m = _TERM_FACTOR.match(factor)
            if m is None:
                raise ValueError(f"cannot parse factor {factor!r}")
            name, power = m.group(1), int(m.group(2) or 1)
            if name not in name_index:
                raise ValueError(f"unknown variable {name!r}; expected one of {list(names)}")
            alpha[name_index[name]] += power
        key = tuple(alpha)
        terms[key] = terms.get(key, Fraction(0)) + coeff
    return Polynomial(nvars, terms)
