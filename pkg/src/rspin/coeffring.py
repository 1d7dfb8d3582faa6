"""Exact arithmetic in Q[q]/(q^{2(r+1)} + r).

The generator ``q`` stands for a fixed root (-r)^{1/(2(r+1))}, so every
fractional power of (-r) with denominator 2(r+1) is a monomial in ``q``:
``q**(r+1)`` squares to ``-r`` and plays the part of sqrt(-r).

Only the quotient ring is used; x^{2(r+1)} + r need not be irreducible.
Nothing here divides by a general ring element, so zero divisors are harmless.
"""
from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational


class NonRationalError(ValueError):
    """Raised when a ring element has nonzero q-components."""

    def __init__(self, elem: "RingElem"):
        self.elem = elem
        bad = {i: c for i, c in enumerate(elem.coeffs) if i and c}
        super().__init__(f"value {elem} is not rational; offending q-components {bad}")


class RingElem:
    """Element sum_i c_i q^i of Q[q]/(q^{2(r+1)} + r), stored densely."""

    __slots__ = ("r", "coeffs", "_hash")

    def __init__(self, r: int, coeffs=None):
        if r < 2:
            raise ValueError(f"r must be >= 2, got {r}")
        n = 2 * (r + 1)
        if coeffs is None:
            coeffs = ()
        cs = [Fraction(0)] * n
        # fold any overlong input through q^n = -r
        for i, c in enumerate(coeffs):
            c = Fraction(c)
            if not c:
                continue
            k, j = divmod(i, n)
            cs[j] += c * (-r) ** k
        self.r = r
        self.coeffs = tuple(cs)
        self._hash = None

    @property
    def degree(self) -> int:
        """Number of stored coefficients, 2(r+1)."""
        return 2 * (self.r + 1)

    @classmethod
    def scalar(cls, r: int, c) -> "RingElem":
        return cls(r, (c,))

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def __bool__(self):
        return any(self.coeffs)

    def _coerce(self, other) -> "RingElem":
        if isinstance(other, RingElem):
            if other.r != self.r:
                raise ValueError(f"mixing r={self.r} and r={other.r}")
            return other
        if isinstance(other, (int, Rational)):
            return RingElem(self.r, (other,))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElem(self.r, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return RingElem(self.r, [-a for a in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElem(self.r, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            other = Fraction(other)
            return RingElem(self.r, [a * other for a in self.coeffs])
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = self.degree
        out = [Fraction(0)] * (2 * n)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if b:
                    out[i + j] += a * b
        return RingElem(self.r, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Rational)) and other:
            inv = 1 / Fraction(other)
            return RingElem(self.r, [a * inv for a in self.coeffs])
        return NotImplemented

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers only exist for monomials; use q_power")
        result = RingElem.scalar(self.r, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, RingElem):
            return self.r == other.r and self.coeffs == other.coeffs
        if isinstance(other, (int, Rational)):
            return self.is_rational() and self.coeffs[0] == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.r, self.coeffs))
        return self._hash

    def __repr__(self):
        return f"RingElem(r={self.r}, {self})"

    def __str__(self):
        return format_elem(self)


def q_power(e: int, r: int) -> RingElem:
    """Reduced representative of q^e; q^{-1} = -q^{2r+1}/r."""
    if r < 2:
        raise ValueError(f"r must be >= 2, got {r}")
    n = 2 * (r + 1)
    k, j = divmod(e, n)
    # q^e = q^{nk} q^j = (-r)^k q^j, valid for negative k too
    cs = [Fraction(0)] * n
    cs[j] = Fraction(-r) ** k
    return RingElem(r, cs)


def rational_part(x: RingElem) -> Fraction:
    """The q^0 coefficient; raises NonRationalError if any other component is nonzero."""
    if not x.is_rational():
        raise NonRationalError(x)
    return x.coeffs[0]


def format_elem(x: RingElem) -> str:
    parts = []
    for i, c in enumerate(x.coeffs):
        if not c:
            continue
        if i == 0:
            parts.append(str(c))
        elif i == 1:
            parts.append(f"{c}*q")
        else:
            parts.append(f"{c}*q^{i}")
    return " + ".join(parts) if parts else "0"


_TERM = re.compile(r"^\s*([-+]?\d+(?:/\d+)?)\s*(?:\*\s*q(?:\^(\d+))?)?\s*$")


def parse_elem(text: str, r: int) -> RingElem:
    """Inverse of ``format_elem``: e.g. ``"3/2 + 1/5*q^4"``."""
    text = text.strip()
    if text == "0":
        return RingElem(r)
    cs = [Fraction(0)] * (2 * (r + 1))
    for raw in re.split(r"\s+\+\s+", text):
        m = _TERM.match(raw)
        if not m:
            raise ValueError(f"cannot parse ring term {raw!r} in {text!r}")
        coeff, expo = m.group(1), m.group(2)
        has_q = "q" in raw
        e = int(expo) if expo is not None else (1 if has_q else 0)
        if e >= len(cs):
            raise ValueError(f"exponent {e} not reduced for r={r}")
        cs[e] += Fraction(coeff)
    return RingElem(r, cs)
