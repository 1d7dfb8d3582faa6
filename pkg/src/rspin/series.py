"""Truncated multivariate power series with Laurent-in-lambda coefficients.

A series lives in a :class:`VarSystem` (either ``T_1..T_N`` or the
``t^a_d, s`` variables of a fixed r) and carries a truncation weight ``W``:
every stored monomial has weighted degree ``<= W`` and everything above it is
unknown, not zero.  Terms are keyed by ``(exponent tuple, lambda exponent)``.

Coefficients are any exact ring scalar supporting ``+``, ``*`` and truth
testing (``Fraction`` in the hierarchy, ``RingElem`` after the change of
variables).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from operator import add
from typing import Callable, Iterable, Mapping

from .coeffring import RingElem, format_elem, parse_elem


class TruncationError(ValueError):
    """A request reached beyond the weight up to which a series is reliable."""


@dataclass(frozen=True)
class VarSystem:
    """Ordered variables with positive integer weights.

    ``T`` systems hold ``T_1..T_N`` with ``wt(T_n) = n``.  ``ts`` systems hold
    ``t^a_d`` for ``a + 1 + r*d <= N`` ordered so that position ``k-1`` is the
    variable of weight ``k`` (the image of ``T_k``), followed by ``s``.
    """

    kind: str
    names: tuple[str, ...]
    weights: tuple[int, ...]
    r: int | None = None

    @classmethod
    def T(cls, n: int) -> "VarSystem":
        return cls("T", tuple(f"T{i}" for i in range(1, n + 1)), tuple(range(1, n + 1)))

    @classmethod
    def ts(cls, r: int, n: int) -> "VarSystem":
        names, weights = [], []
        for k in range(1, n + 1):
            a, d = t_label(k, r)
            names.append(f"t{a}_{d}")
            weights.append(k)
        names.append("s")
        weights.append(r)
        return cls("ts", tuple(names), tuple(weights), r)

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"{name!r} is not a variable of {self.kind}-system") from None

    def t_index(self, a: int, d: int) -> int:
        return self.index(f"t{a}_{d}")

    @property
    def s_index(self) -> int:
        return self.index("s")

    def weight(self, expo: tuple[int, ...]) -> int:
        return sum(e * w for e, w in zip(expo, self.weights) if e)

    def unit(self, i: int) -> tuple[int, ...]:
        e = [0] * len(self.names)
        e[i] = 1
        return tuple(e)

    @property
    def zero_expo(self) -> tuple[int, ...]:
        return (0,) * len(self.names)

    def to_json(self) -> dict:
        if self.kind == "T":
            return {"kind": "T", "n": len(self.names)}
        return {"kind": "ts", "r": self.r, "n": len(self.names) - 1}

    @classmethod
    def from_json(cls, d: Mapping) -> "VarSystem":
        if d["kind"] == "T":
            return cls.T(d["n"])
        return cls.ts(d["r"], d["n"])


def t_label(k: int, r: int) -> tuple[int, int]:
    """The pair (a, d) with k = a + 1 + r*d, 0 <= a <= r-1."""
    d, a1 = divmod(k - 1, r)
    return a1, d


class LaurentSeries:
    """Finitely supported Laurent polynomial in lambda."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, object] | None = None):
        self.terms = {p: c for p, c in (terms or {}).items() if c}

    @property
    def window(self) -> tuple[int, int] | None:
        if not self.terms:
            return None
        return min(self.terms), max(self.terms)

    def __getitem__(self, p: int):
        return self.terms.get(p, 0)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, LaurentSeries):
            return self.terms == other.terms
        if not other:
            return not self.terms
        return self.terms == {0: other}

    def __repr__(self):
        body = " + ".join(f"({c})*lam^{p}" for p, c in sorted(self.terms.items()))
        return f"LaurentSeries({body or '0'})"


Key = tuple[tuple[int, ...], int]


class MSeries:
    """Truncated power series: ``{(expo, lam_exp): coeff}`` below weight ``W``."""

    __slots__ = ("vars", "W", "terms")

    def __init__(self, vars: VarSystem, W: int, terms: Mapping[Key, object] | None = None):
        self.vars = vars
        self.W = W
        self.terms: dict[Key, object] = {}
        if terms:
            wt = vars.weight
            for key, c in terms.items():
                if c and wt(key[0]) <= W:
                    self.terms[key] = c

    # construction -------------------------------------------------------

    @classmethod
    def _raw(cls, vars, W, terms) -> "MSeries":
        # trusted constructor: terms already truncated and zero-free
        out = cls.__new__(cls)
        out.vars, out.W, out.terms = vars, W, terms
        return out

    @classmethod
    def zero(cls, vars: VarSystem, W: int) -> "MSeries":
        return cls._raw(vars, W, {})

    @classmethod
    def const(cls, vars: VarSystem, W: int, c=1, lam: int = 0) -> "MSeries":
        return cls(vars, W, {(vars.zero_expo, lam): c})

    @classmethod
    def var(cls, vars: VarSystem, W: int, i: int, c=1, lam: int = 0) -> "MSeries":
        return cls(vars, W, {(vars.unit(i), lam): c})

    @classmethod
    def monomial(cls, vars: VarSystem, W: int, expo: Mapping[int, int] | tuple, c=1, lam: int = 0):
        if isinstance(expo, Mapping):
            e = [0] * len(vars)
            for i, p in expo.items():
                e[i] = p
            expo = tuple(e)
        return cls(vars, W, {(tuple(expo), lam): c})

    # basic protocol -----------------------------------------------------

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def items(self):
        return self.terms.items()

    def __eq__(self, other):
        if isinstance(other, MSeries):
            return self.vars == other.vars and self.terms == other.terms
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        return f"MSeries(W={self.W}, {self.format()})"

    def format(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (expo, lam), c in sorted(self.terms.items(), key=lambda kv: (self.vars.weight(kv[0][0]), kv[0])):
            mono = "*".join(
                n if p == 1 else f"{n}^{p}" for n, p in zip(self.vars.names, expo) if p
            )
            lam_s = f"lam^{lam}" if lam else ""
            factors = [x for x in (lam_s, mono) if x]
            parts.append(f"({c})" + ("*" + "*".join(factors) if factors else ""))
        return " + ".join(parts)

    def _check(self, other: "MSeries"):
        if self.vars != other.vars:
            raise ValueError(f"variable systems differ: {self.vars.kind}/{len(self.vars)} vs "
                             f"{other.vars.kind}/{len(other.vars)}")

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, MSeries):
            other = MSeries.const(self.vars, self.W, other)
        self._check(other)
        W = min(self.W, other.W)
        wt = self.vars.weight
        out = {k: c for k, c in self.terms.items() if W == self.W or wt(k[0]) <= W}
        for k, c in other.terms.items():
            if W != other.W and wt(k[0]) > W:
                continue
            v = out.get(k)
            if v is None:
                out[k] = c
            else:
                v = v + c
                if v:
                    out[k] = v
                else:
                    del out[k]
        return MSeries._raw(self.vars, W, out)

    __radd__ = __add__

    def __neg__(self):
        return MSeries._raw(self.vars, self.W, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, MSeries):
            other = MSeries.const(self.vars, self.W, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c, lam_shift: int = 0) -> "MSeries":
        """Multiply by a scalar times lambda^lam_shift."""
        if not c:
            return MSeries.zero(self.vars, self.W)
        return MSeries._raw(
            self.vars, self.W,
            {(e, l + lam_shift): v * c for (e, l), v in self.terms.items() if v * c},
        )

    def __mul__(self, other):
        if not isinstance(other, MSeries):
            return self.scale(other)
        return multiply(self, other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int) -> "MSeries":
        if n < 0:
            raise ValueError("negative power")
        out = MSeries.const(self.vars, self.W, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def truncate(self, W: int) -> "MSeries":
        if W >= self.W:
            return MSeries._raw(self.vars, W if W == self.W else self.W, dict(self.terms))
        wt = self.vars.weight
        return MSeries._raw(self.vars, W, {k: c for k, c in self.terms.items() if wt(k[0]) <= W})

    def restrict(self, keep: Callable[[tuple[int, ...], int], bool]) -> "MSeries":
        """Keep the terms whose ``(expo, lam)`` satisfies ``keep``."""
        return MSeries._raw(self.vars, self.W, {k: c for k, c in self.terms.items() if keep(*k)})

    def map_coeffs(self, fn: Callable) -> "MSeries":
        return MSeries(self.vars, self.W, {k: fn(c) for k, c in self.terms.items()})

    # calculus -----------------------------------------------------------

    def derive(self, i: int) -> "MSeries":
        """Partial derivative in variable ``i``; reliable to ``W - wt(i)``."""
        w = self.vars.weights[i]
        out = {}
        for (e, l), c in self.terms.items():
            p = e[i]
            if p:
                e2 = e[:i] + (p - 1,) + e[i + 1:]
                out[(e2, l)] = c * p
        return MSeries._raw(self.vars, self.W - w, out)

    def coefficient(self, expo, lam: int = 0):
        """Exact coefficient of ``expo * lambda^lam``; 0 if absent."""
        expo = self._expo(expo)
        if self.vars.weight(expo) > self.W:
            raise TruncationError(
                f"monomial of weight {self.vars.weight(expo)} above reliable weight {self.W}")
        return self.terms.get((expo, lam), 0)

    def laurent(self, expo) -> LaurentSeries:
        expo = self._expo(expo)
        if self.vars.weight(expo) > self.W:
            raise TruncationError(f"monomial above reliable weight {self.W}")
        return LaurentSeries({l: c for (e, l), c in self.terms.items() if e == expo})

    def _expo(self, expo) -> tuple[int, ...]:
        if isinstance(expo, Mapping):
            e = [0] * len(self.vars)
            for i, p in expo.items():
                e[i if isinstance(i, int) else self.vars.index(i)] = p
            return tuple(e)
        return tuple(expo)

    def lambda_component(self, p: int) -> "MSeries":
        """The lambda^p part, returned lambda-free."""
        return MSeries._raw(self.vars, self.W, {(e, 0): c for (e, l), c in self.terms.items() if l == p})

    def lambda_exponents(self) -> set[int]:
        return {l for (_, l) in self.terms}

    def constant_term(self) -> LaurentSeries:
        z = self.vars.zero_expo
        return LaurentSeries({l: c for (e, l), c in self.terms.items() if e == z})

    def min_weight(self) -> int | None:
        if not self.terms:
            return None
        return min(self.vars.weight(e) for e, _ in self.terms)

    # serialization ------------------------------------------------------

    def to_json(self) -> dict:
        terms = []
        for (expo, lam), c in sorted(self.terms.items()):
            terms.append({"expo": list(expo), "lambda": lam, "coeff": _format_coeff(c)})
        return {"vars": self.vars.to_json(), "W": self.W, "terms": terms}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d: Mapping) -> "MSeries":
        vars = VarSystem.from_json(d["vars"])
        terms = {}
        for t in d["terms"]:
            terms[(tuple(t["expo"]), t["lambda"])] = _parse_coeff(t["coeff"], vars.r)
        return cls(vars, d["W"], terms)


def _format_coeff(c) -> str:
    if isinstance(c, RingElem):
        return format_elem(c)
    return str(Fraction(c))


def _parse_coeff(text: str, r: int | None):
    if "q" in text:
        if r is None:
            raise ValueError("q-coefficients need an r-parametrized variable system")
        return parse_elem(text, r)
    return Fraction(text)


def _weighted_terms(f: MSeries):
    wt = f.vars.weight
    return sorted(((wt(e), e, l, c) for (e, l), c in f.terms.items()), key=lambda t: t[0])


def multiply(f: MSeries, g: MSeries, W: int | None = None) -> MSeries:
    """Truncated product; the result is reliable to ``min(f.W, g.W)`` (or ``W`` if lower)."""
    f._check(g)
    top = min(f.W, g.W) if W is None else min(f.W, g.W, W)
    if not f.terms or not g.terms:
        return MSeries._raw(f.vars, top, {})
    if len(f.terms) > len(g.terms):
        f, g = g, f
    gs = _weighted_terms(g)
    wt = f.vars.weight
    out: dict[Key, object] = {}
    get = out.get
    for (e1, l1), c1 in f.terms.items():
        room = top - wt(e1)
        if room < 0:
            continue
        for w2, e2, l2, c2 in gs:
            if w2 > room:
                break
            key = (tuple(map(add, e1, e2)), l1 + l2)
            v = get(key)
            out[key] = c1 * c2 if v is None else v + c1 * c2
    return MSeries._raw(f.vars, top, {k: c for k, c in out.items() if c})


def derive(f: MSeries, i: int) -> MSeries:
    return f.derive(i)


def log_series(f: MSeries) -> MSeries:
    """log(1 + h) = sum (-1)^{m+1} h^m / m for h without constant term."""
    const = f.constant_term()
    if const != 1:
        raise ValueError(f"log_series needs constant term 1, got {const}")
    h = f - 1
    return _power_sum(h, lambda m: Fraction((-1) ** (m + 1), m))


def exp_series(h: MSeries) -> MSeries:
    """exp(h) for h without constant term."""
    if h.constant_term():
        raise ValueError("exp_series needs a series without constant term")
    return MSeries.const(h.vars, h.W, 1) + _power_sum(h, lambda m: Fraction(1, factorial(m)))


def _power_sum(h: MSeries, coeff: Callable[[int], Fraction]) -> MSeries:
    out = MSeries.zero(h.vars, h.W)
    if h.is_zero():
        return out
    lowest = h.min_weight()
    power = h
    m = 1
    # h^m has weight >= m*lowest, so the sum is finite under truncation
    while not power.is_zero() and m * lowest <= h.W:
        out = out + power.scale(coeff(m))
        m += 1
        power = power * h
    return out


Rule = Iterable[tuple[int, object]]


def substitute(f: MSeries, rules: Mapping[int, Rule], target: VarSystem | None = None) -> MSeries:
    """Replace variable ``v`` by ``sum c * target_var`` for each rule ``v -> [(j, c), ...]``.

    Rules must be weight-preserving.  Variables without a rule map to
    themselves, which needs ``target`` to be ``f.vars``.
    """
    target = f.vars if target is None else target
    W = f.W
    images: dict[int, MSeries] = {}
    for v, terms in rules.items():
        img = {}
        for j, c in terms:
            if target.weights[j] != f.vars.weights[v]:
                raise ValueError(
                    f"rule for {f.vars.names[v]} (weight {f.vars.weights[v]}) hits "
                    f"{target.names[j]} of weight {target.weights[j]}")
            key = (target.unit(j), 0)
            img[key] = img.get(key, 0) + c
        images[v] = MSeries(target, W, img)
    for v in range(len(f.vars)):
        if v not in images:
            if target != f.vars:
                if any(e[v] for e, _ in f.terms):
                    raise ValueError(f"no rule for {f.vars.names[v]} across variable systems")
                continue
            images[v] = MSeries.var(target, W, v)

    powers: dict[tuple[int, int], MSeries] = {}

    def power(v: int, p: int) -> MSeries:
        key = (v, p)
        if key not in powers:
            powers[key] = images[v] if p == 1 else power(v, p - 1) * images[v]
        return powers[key]

    out: dict[Key, object] = {}
    for (e, l), c in f.terms.items():
        term = None
        for v, p in enumerate(e):
            if p:
                term = power(v, p) if term is None else term * power(v, p)
        if term is None:
            term = MSeries.const(target, W, 1)
        for (e2, l2), c2 in term.terms.items():
            key = (e2, l + l2)
            out[key] = out.get(key, 0) + c * c2
    return MSeries(target, W, out)
