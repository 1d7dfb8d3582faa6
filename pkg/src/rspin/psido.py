"""Pseudo-differential operators sum_e a_e Dx^e with MSeries coefficients.

``x`` is the series variable ``T_1`` (index 0) and d/dx is ``derive(., 0)``.

Truncation is filtered by order: an operator of nominal order ``D`` in a
weight-``W`` computation keeps its ``Dx^e`` coefficient up to weight
``W - (D - e)``.  Composition adds orders, and a product of two reliable
coefficients is reliable to exactly the weight this rule asks for, so the
filtration is closed under every operation below.  As a consequence
coefficients with ``e < D - W`` vanish identically and the window is finite.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .series import MSeries, VarSystem, multiply

X = 0  # index of x = T_1


def gen_binomial(k: int, l: int) -> int:
    """k(k-1)...(k-l+1)/l! for any integer k."""
    c = 1
    for i in range(l):
        # each partial product is itself a binomial coefficient, so // is exact
        c = c * (k - i) // (i + 1)
    return c


class PsiDO:
    """Truncated pseudo-differential operator.

    ``terms`` maps an exponent ``e`` to its coefficient.  ``order`` is the
    nominal order ``D`` (defaults to the top exponent); ``e_min`` is the lowest
    exponent kept.
    """

    __slots__ = ("vars", "W", "order", "e_min", "terms")

    def __init__(self, vars: VarSystem, W: int, terms: Mapping[int, MSeries] | None = None,
                 order: int | None = None, e_min: int | None = None):
        terms = {e: c for e, c in (terms or {}).items() if c}
        if order is None:
            order = max(terms) if terms else 0
        if terms and max(terms) > order:
            raise ValueError(f"exponent {max(terms)} above nominal order {order}")
        self.vars = vars
        self.W = W
        self.order = order
        self.e_min = order - W - 1 if e_min is None else e_min
        self.terms = {}
        for e, c in terms.items():
            if c.vars != vars:
                raise ValueError("coefficient variable system mismatch")
            if e < self.e_min:
                continue
            c = c.truncate(self.coeff_weight(e))
            if c and self.coeff_weight(e) >= 0:
                self.terms[e] = c

    @classmethod
    def _raw(cls, vars, W, order, e_min, terms) -> "PsiDO":
        out = cls.__new__(cls)
        out.vars, out.W, out.order, out.e_min, out.terms = vars, W, order, e_min, terms
        return out

    def coeff_weight(self, e: int) -> int:
        """Weight to which the Dx^e coefficient is reliable."""
        return self.W - (self.order - e)

    @classmethod
    def dx(cls, vars: VarSystem, W: int, k: int = 1, e_min: int | None = None) -> "PsiDO":
        return cls(vars, W, {k: MSeries.const(vars, W, 1)}, order=k, e_min=e_min)

    @classmethod
    def function(cls, f: MSeries, W: int | None = None, e_min: int | None = None) -> "PsiDO":
        """Multiplication operator by f (order 0)."""
        W = f.W if W is None else W
        return cls(f.vars, W, {0: f}, order=0, e_min=e_min)

    def coeff(self, e: int) -> MSeries:
        c = self.terms.get(e)
        if c is None:
            return MSeries.zero(self.vars, max(self.coeff_weight(e), -1))
        return c

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, PsiDO):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    __hash__ = None

    def with_window(self, e_min: int) -> "PsiDO":
        return PsiDO(self.vars, self.W, self.terms, order=self.order, e_min=e_min)

    # linear structure ---------------------------------------------------

    def _combine(self, other: "PsiDO", sign: int) -> "PsiDO":
        if self.vars != other.vars:
            raise ValueError("variable system mismatch")
        W = min(self.W, other.W)
        order = max(self.order, other.order)
        e_min = max(self.e_min, other.e_min)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            c = c if sign > 0 else -c
            terms[e] = terms[e] + c if e in terms else c
        return PsiDO(self.vars, W, terms, order=order, e_min=e_min)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return PsiDO._raw(self.vars, self.W, self.order, self.e_min,
                          {e: -c for e, c in self.terms.items()})

    def scale(self, c, lam_shift: int = 0) -> "PsiDO":
        return PsiDO(self.vars, self.W, {e: a.scale(c, lam_shift) for e, a in self.terms.items()},
                     order=self.order, e_min=self.e_min)

    def positive_part(self) -> "PsiDO":
        return PsiDO._raw(self.vars, self.W, self.order, self.e_min,
                          {e: c for e, c in self.terms.items() if e >= 0})

    def negative_part(self) -> "PsiDO":
        return PsiDO._raw(self.vars, self.W, self.order, self.e_min,
                          {e: c for e, c in self.terms.items() if e < 0})

    def residue(self) -> MSeries:
        if self.e_min > -1:
            raise ValueError(f"window starts at {self.e_min}; the Dx^-1 coefficient is not kept")
        return self.coeff(-1)

    # multiplicative structure -------------------------------------------

    def __matmul__(self, other: "PsiDO") -> "PsiDO":
        return compose(self, other)

    def apply(self, f: MSeries) -> MSeries:
        """Action of a differential operator on a function."""
        if any(e < 0 for e in self.terms):
            raise ValueError("only differential operators act on functions")
        W = min(self.W, f.W) - self.order
        out = MSeries.zero(self.vars, W)
        deriv = f
        for e in range(0, self.order + 1):
            if e:
                deriv = deriv.derive(X)
            a = self.terms.get(e)
            if a is not None and deriv:
                out = out + multiply(a, deriv, W)
        return out.truncate(W)

    def format(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"[{self.terms[e].format()}] * Dx^{e}" for e in sorted(self.terms, reverse=True))

    def to_json(self) -> dict:
        return {
            "W": self.W, "order": self.order, "e_min": self.e_min,
            "terms": [{"e": e, "coeff": self.terms[e].to_json()} for e in sorted(self.terms, reverse=True)],
        }

    def __repr__(self):
        return f"PsiDO(order={self.order}, W={self.W}, {self.format()})"


def compose(A: PsiDO, B: PsiDO, e_min: int | None = None) -> PsiDO:
    """A o B via Dx^k o f = sum_l binom(k, l) f^(l) Dx^(k-l)."""
    if A.vars != B.vars:
        raise ValueError("variable system mismatch")
    W = min(A.W, B.W)
    order = A.order + B.order
    floor = max(A.e_min, B.e_min) if e_min is None else e_min
    derivs: dict[int, list[MSeries]] = {}
    acc: dict[int, MSeries] = {}
    for e2, b in B.terms.items():
        derivs[e2] = [b]
    for e1, a in A.terms.items():
        for e2 in B.terms:
            ds = derivs[e2]
            l = 0
            while True:
                e = e1 + e2 - l
                trunc = W - order + e
                if trunc < 0 or e < floor:
                    break
                if e1 >= 0 and l > e1:
                    break
                if l >= len(ds):
                    ds.append(ds[-1].derive(X))
                db = ds[l]
                if not db:
                    break
                term = multiply(a, db, trunc)
                if term:
                    c = gen_binomial(e1, l)
                    if c != 1:
                        term = term.scale(c)
                    prev = acc.get(e)
                    acc[e] = term if prev is None else prev + term
                l += 1
    return PsiDO(A.vars, W, acc, order=order, e_min=floor)


def power(A: PsiDO, n: int, e_min: int | None = None) -> PsiDO:
    if n < 0:
        raise ValueError("negative power")
    if e_min is None:
        e_min = A.e_min
    if n == 0:
        return PsiDO.dx(A.vars, A.W, 0, e_min=min(e_min, 0))
    out = A
    for k in range(2, n + 1):
        # later factors of positive order lift low exponents back up
        floor = e_min - (n - k) * max(A.order, 0)
        out = compose(out, A, max(floor, A.e_min))
    return out


def commutator(A: PsiDO, B: PsiDO) -> PsiDO:
    return compose(A, B) - compose(B, A)


def positive_part(A: PsiDO) -> PsiDO:
    return A.positive_part()


def residue(A: PsiDO) -> MSeries:
    return A.residue()


def rth_root(A: PsiDO, r: int) -> PsiDO:
    """Unique B = Dx + sum_{m>=0} b_m Dx^{-m} with B^r = A.

    Solved top-down: the Dx^{r-1-m} coefficient of B^r is r*b_m plus terms in
    b_0..b_{m-1}, so each b_m is one exact division by r.
    """
    top = A.terms.get(r)
    one = MSeries.const(A.vars, A.coeff_weight(r), 1)
    if A.order != r or top is None or top != one:
        raise ValueError(f"rth_root needs a monic operator Dx^{r} + lower terms")
    W = A.W
    B = PsiDO.dx(A.vars, W, 1, e_min=A.e_min - r + 1)
    m = 0
    while True:
        e = r - 1 - m
        if W - 1 - m < 0 or -m < B.e_min:
            break
        cur = power(B, r, e_min=e).coeff(e)
        b = (A.coeff(e) - cur).scale(_inv(r))
        if b:
            terms = dict(B.terms)
            terms[-m] = b
            B = PsiDO(A.vars, W, terms, order=1, e_min=B.e_min)
        m += 1
    return B


def _inv(r: int) -> Fraction:
    return Fraction(1, r)
