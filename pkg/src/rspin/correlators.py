"""Pipeline B: correlators from topological recursion, string and dilaton relations.

Every relation is expanded into a list of terms ``(coefficient, factors)``,
a sum of products of correlators.  The same expansions serve three purposes:
recursive evaluation, checking identities against pipeline-A values, and
assembling the linear system that fits the extended primaries.

Boundary markings are a count ``k``; a labeled split of the boundary set
becomes a binomial coefficient.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .keys import (EXT, OPEN, CorrelatorKey, InvalidKey, dimension_gate, ext_key,
                   gate_or_zero, open_key, open_keys, validate)

STRING = (0, 0)
DILATON = (0, 1)

Term = tuple[Fraction, tuple[CorrelatorKey, ...]]
ValueFn = Callable[[CorrelatorKey], Fraction]


class NeedsBase(LookupError):
    """A primary correlator the recursions cannot reduce is missing from the base table."""

    def __init__(self, key: CorrelatorKey):
        super().__init__(f"base value needed for {key}")
        self.key = key


class TableConflict(ValueError):
    pass


# -- base tables -----------------------------------------------------------

@dataclass
class CorrelatorTable:
    """Exact values with a provenance tag per entry; conflicting re-insertion is an error."""

    values: dict[CorrelatorKey, Fraction] = field(default_factory=dict)
    provenance: dict[CorrelatorKey, str] = field(default_factory=dict)

    def add(self, key: CorrelatorKey, value, provenance: str, where: str = "") -> None:
        value = Fraction(value)
        old = self.values.get(key)
        if old is not None and old != value:
            raise TableConflict(f"{where}{key}: {old} ({self.provenance[key]}) vs {value} ({provenance})")
        if old is None:
            self.values[key] = value
            self.provenance[key] = provenance

    def merge(self, other: "CorrelatorTable") -> "CorrelatorTable":
        for key, v in other.values.items():
            self.add(key, v, other.provenance[key])
        return self

    def get(self, key: CorrelatorKey):
        return self.values.get(key)

    def __contains__(self, key):
        return key in self.values

    def __len__(self):
        return len(self.values)

    def items(self):
        return sorted(self.values.items())

    def dumps(self) -> str:
        lines = [json.dumps(dict(k.to_json(), value=str(v)), sort_keys=True) for k, v in self.items()]
        return "\n".join(lines) + ("\n" if lines else "")


def load_base_table(path, r: int) -> CorrelatorTable:
    """Read a JSON-lines base table; rejects parse errors, conflicts and impossible entries."""
    table = CorrelatorTable()
    text = Path(path).read_text()
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        where = f"{path}:{n}: "
        try:
            row = json.loads(line)
            key = CorrelatorKey.from_json(row)
            value = Fraction(row["value"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"{where}cannot parse entry: {exc}") from None
        try:
            ok = dimension_gate(key, r)
        except InvalidKey as exc:
            raise ValueError(f"{where}{exc}") from None
        if value and not ok:
            raise ValueError(f"{where}{key} is forced to vanish but has value {value}")
        table.add(key, value, "base", where)
    return table


# -- expansions ------------------------------------------------------------

def _subsets(items: list) -> Iterable[tuple[list, list]]:
    n = len(items)
    for mask in range(1 << n):
        yield ([items[i] for i in range(n) if mask >> i & 1],
               [items[i] for i in range(n) if not mask >> i & 1])


class _Acc:
    """Collects terms, dropping factors that vanish and merging equal products."""

    def __init__(self, r: int):
        self.r = r
        self.terms: dict[tuple[CorrelatorKey, ...], Fraction] = defaultdict(Fraction)

    def add(self, coef, *factors: CorrelatorKey):
        if not coef:
            return
        for f in factors:
            if not gate_or_zero(f, self.r):
                return
        self.terms[tuple(factors)] += coef

    def result(self) -> list[Term]:
        return [(c, f) for f, c in sorted(self.terms.items()) if c]


def _lowered(key: CorrelatorKey, i1: int):
    a1, d1 = key.ins[i1]
    if d1 < 1:
        raise ValueError(f"insertion {key.ins[i1]} of {key} has no descendent to lower")
    rest = [p for i, p in enumerate(key.ins) if i != i1]
    return (a1, d1 - 1), rest


def string_expansion(key: CorrelatorKey, r: int) -> list[Term] | None:
    """<tau^0_0 prod sigma^k>_g = sum_j <... tau^{a_j}_{d_j - 1} ...>_g, when it applies."""
    if key.sector != OPEN or STRING not in key.ins:
        return None
    i = key.ins.index(STRING)
    rest = list(key.ins[:i] + key.ins[i + 1:])
    if 2 * key.g - 2 + key.k + 2 * len(rest) <= 0:
        return None
    acc = _Acc(r)
    for j, (a, d) in enumerate(rest):
        if d >= 1:
            acc.add(Fraction(1), key.replace(ins=rest[:j] + [(a, d - 1)] + rest[j + 1:]))
    return acc.result()


def dilaton_expansion(key: CorrelatorKey, r: int) -> list[Term] | None:
    """<tau^0_1 prod sigma^k>_g = (g + l + k - 1) <prod sigma^k>_g, when it applies."""
    if key.sector != OPEN or DILATON not in key.ins:
        return None
    i = key.ins.index(DILATON)
    rest = list(key.ins[:i] + key.ins[i + 1:])
    if 2 * key.g - 2 + key.k + 2 * len(rest) <= 0:
        return None
    acc = _Acc(r)
    acc.add(Fraction(key.g + len(rest) + key.k - 1), key.replace(ins=rest))
    return acc.result()


def trr_a_expansion(key: CorrelatorKey, r: int, i1: int) -> list[Term]:
    """Genus-zero TRR with respect to an internal descendent and a boundary marking."""
    if key.sector != OPEN or key.g != 0 or key.k < 1:
        raise ValueError(f"TRR (a) needs an open genus-0 key with k >= 1, got {key}")
    low, rest = _lowered(key, i1)
    k = key.k
    acc = _Acc(r)
    for R1, R2 in _subsets(rest):
        for a in range(-1, r - 1):
            acc.add(Fraction(1), ext_key([(a, 0), low] + R1), open_key(0, [(r - 2 - a, 0)] + R2, k))
        for k1 in range(k):
            acc.add(Fraction(comb(k - 1, k1)), open_key(0, [low] + R1, k1),
                    open_key(0, R2, k - 1 - k1 + 2))
    return acc.result()


def trr_b_expansion(key: CorrelatorKey, r: int, i1: int, j: int) -> list[Term]:
    """Genus-zero TRR with respect to an internal descendent and a second internal marking."""
    if key.sector != OPEN or key.g != 0 or key.l < 2 or i1 == j:
        raise ValueError(f"TRR (b) needs an open genus-0 key with two internal markings, got {key}")
    low, _ = _lowered(key, i1)
    pj = key.ins[j]
    rest = [p for i, p in enumerate(key.ins) if i not in (i1, j)]
    k = key.k
    acc = _Acc(r)
    for R1, R2 in _subsets(rest):
        for a in range(-1, r - 1):
            acc.add(Fraction(1), ext_key([(a, 0), low] + R1), open_key(0, [(r - 2 - a, 0), pj] + R2, k))
        for k1 in range(k + 1):
            acc.add(Fraction(comb(k, k1)), open_key(0, [low] + R1, k1),
                    open_key(0, [pj] + R2, k - k1 + 1))
    return acc.result()


def trr_g1_expansion(key: CorrelatorKey, r: int, i1: int) -> list[Term]:
    """Genus-one TRR with respect to an internal descendent."""
    if key.sector != OPEN or key.g != 1:
        raise ValueError(f"genus-one TRR needs an open genus-1 key, got {key}")
    low, rest = _lowered(key, i1)
    k = key.k
    acc = _Acc(r)
    for R1, R2 in _subsets(rest):
        for a in range(-1, r - 1):
            acc.add(Fraction(1), ext_key([(a, 0), low] + R1), open_key(1, [(r - 2 - a, 0)] + R2, k))
        for k1 in range(k + 1):
            acc.add(Fraction(comb(k, k1)), open_key(0, [low] + R1, k1), open_key(1, R2, k - k1 + 1))
    acc.add(Fraction(1, 2), open_key(0, [low] + rest, k + 1))
    return acc.result()


def trr_ext_expansion(key: CorrelatorKey, r: int, i1: int, j1: int, j2: int) -> list[Term]:
    """Extended genus-zero TRR with respect to (i1, {j1, j2})."""
    if key.sector != EXT or len({i1, j1, j2}) != 3:
        raise ValueError(f"extended TRR needs three distinct markings of an extended key, got {key}")
    low, _ = _lowered(key, i1)
    p1, p2 = key.ins[j1], key.ins[j2]
    rest = [p for i, p in enumerate(key.ins) if i not in (i1, j1, j2)]
    acc = _Acc(r)
    for R1, R2 in _subsets(rest):
        for a in range(-1, r - 1):
            acc.add(Fraction(1), ext_key([(a, 0), low] + R1), ext_key([(r - 2 - a, 0), p1, p2] + R2))
    return acc.result()


def evaluate_terms(terms: list[Term], value: ValueFn) -> Fraction:
    total = Fraction(0)
    for c, factors in terms:
        v = c
        for f in factors:
            v *= value(f)
            if not v:
                break
        total += v
    return total


def descendent_positions(key: CorrelatorKey) -> list[int]:
    """One position per distinct descendent insertion (equal insertions give equal expansions)."""
    seen, out = set(), []
    for i, (a, d) in enumerate(key.ins):
        if d >= 1 and (a, d) not in seen:
            seen.add((a, d))
            out.append(i)
    return out


def legal_expansions(key: CorrelatorKey, r: int) -> list[tuple[str, tuple, list[Term]]]:
    """Every applicable relation for the key, as (rule, choice, terms).

    Choices that differ only by swapping equal insertions are listed once.
    """
    out = []
    if key.sector == OPEN:
        for name, fn in (("string", string_expansion), ("dilaton", dilaton_expansion)):
            t = fn(key, r)
            if t is not None:
                out.append((name, (), t))
        for i1 in descendent_positions(key):
            if key.g == 1:
                out.append(("trr_g1", (i1,), trr_g1_expansion(key, r, i1)))
                continue
            if key.k >= 1:
                out.append(("trr_a", (i1,), trr_a_expansion(key, r, i1)))
            for (j,) in _distinct_choices(key, i1, 1):
                out.append(("trr_b", (i1, j), trr_b_expansion(key, r, i1, j)))
    else:
        for i1 in descendent_positions(key):
            for j1, j2 in _distinct_choices(key, i1, 2):
                out.append(("trr_ext", (i1, j1, j2), trr_ext_expansion(key, r, i1, j1, j2)))
    return out


def _distinct_choices(key: CorrelatorKey, i1: int, size: int) -> list[tuple[int, ...]]:
    others = [i for i in range(key.l) if i != i1]
    seen, out = set(), []
    for combo in combinations(others, size):
        values = tuple(sorted(key.ins[i] for i in combo))
        if values not in seen:
            seen.add(values)
            out.append(combo)
    return out


# -- recursive evaluation --------------------------------------------------

class Evaluator:
    """Memoized pipeline-B evaluation over a base table of primaries.

    Reduction order for open genus 0: string, dilaton, TRR (a), TRR (b), base.
    ``choice`` picks the distinguished descendent among the legal ones
    ("first" or "last"); by choice-independence the values must not depend on it.
    """

    def __init__(self, r: int, base: CorrelatorTable, choice: str = "first"):
        if choice not in ("first", "last"):
            raise ValueError(f"unknown choice {choice!r}")
        self.r = r
        self.base = base
        self.choice = choice
        self.memo: dict[CorrelatorKey, Fraction] = {}
        self.rule: dict[CorrelatorKey, tuple[str, tuple]] = {}

    def __call__(self, key: CorrelatorKey) -> Fraction:
        return self.value(key)

    def value(self, key: CorrelatorKey) -> Fraction:
        v = self.memo.get(key)
        if v is not None:
            return v
        validate(key, self.r)
        if not dimension_gate(key, self.r):
            v, rule = Fraction(0), ("gate", ())
        else:
            rule, terms = self._reduce(key)
            v = self._lookup(key) if terms is None else evaluate_terms(terms, self.value)
        self.memo[key] = v
        self.rule[key] = rule
        return v

    def _pick(self, positions: list[int]) -> int:
        return positions[0] if self.choice == "first" else positions[-1]

    def _reduce(self, key: CorrelatorKey):
        r = self.r
        desc = descendent_positions(key)
        if key.sector == EXT:
            if not desc:
                return ("base", ()), None
            i1 = self._pick(desc)
            others = [i for i in range(key.l) if i != i1]
            j1, j2 = (others[0], others[1]) if self.choice == "first" else (others[-2], others[-1])
            return ("trr_ext", (i1, j1, j2)), trr_ext_expansion(key, r, i1, j1, j2)
        if key.g == 1:
            if not desc:
                return ("genus-one primary", ()), []
            i1 = self._pick(desc)
            return ("trr_g1", (i1,)), trr_g1_expansion(key, r, i1)
        for name, fn in (("string", string_expansion), ("dilaton", dilaton_expansion)):
            t = fn(key, r)
            if t is not None:
                return (name, ()), t
        if not desc:
            return ("base", ()), None
        i1 = self._pick(desc)
        if key.k >= 1:
            return ("trr_a", (i1,)), trr_a_expansion(key, r, i1)
        j = self._pick([i for i in range(key.l) if i != i1])
        return ("trr_b", (i1, j)), trr_b_expansion(key, r, i1, j)

    def _lookup(self, key: CorrelatorKey) -> Fraction:
        v = self.base.get(key)
        if v is None:
            raise NeedsBase(key)
        return v

    def trace(self, key: CorrelatorKey, depth: int = 6) -> list[str]:
        """The reduction steps used for ``key`` and (up to ``depth``) its factors."""
        lines = []

        def walk(k, level):
            rule = self.rule.get(k)
            lines.append("  " * level + f"{k} = {self.memo.get(k)} via {rule}")
            if level >= depth or rule is None or rule[0] in ("base", "gate", "genus-one primary"):
                return
            _, terms = self._reduce(k)
            for _, factors in terms or []:
                for f in factors:
                    if f in self.memo and self.memo[f]:
                        walk(f, level + 1)
        walk(key, 0)
        return lines


# -- fitting extended primaries --------------------------------------------

@dataclass
class FitResult:
    table: CorrelatorTable
    undetermined: list[CorrelatorKey]
    equations: int
    unknowns: int
    residuals: list[Fraction]


class InconsistentSystem(ValueError):
    def __init__(self, message: str, equation=None):
        super().__init__(message)
        self.equation = equation


def fit_extended_primaries(open_values: Mapping[CorrelatorKey, Fraction] | ValueFn,
                           r: int, W: int) -> FitResult:
    """Solve TRR (a) instances for the extended primary correlators.

    ``open_values`` supplies genus-0 open correlators (pipeline A) for every
    key of weight <= W.  Instances whose extended factors are all primary are
    linear in those primaries; the overdetermined system is solved exactly
    and must be consistent.
    """
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    value = open_values if callable(open_values) else (lambda k: open_values.get(k, Fraction(0)))
    rows: list[tuple[dict[CorrelatorKey, Fraction], Fraction, tuple]] = []
    for key in open_keys(r, W, 0):
        if key.k < 1:
            continue
        for i1 in descendent_positions(key):
            coeffs: dict[CorrelatorKey, Fraction] = defaultdict(Fraction)
            rhs = value(key)
            linear = True
            for c, factors in trr_a_expansion(key, r, i1):
                ext = [f for f in factors if f.sector == EXT]
                opens = [f for f in factors if f.sector == OPEN]
                v = c
                for f in opens:
                    v *= value(f)
                if not v:
                    continue
                if not ext:
                    rhs -= v
                elif ext[0].is_primary():
                    coeffs[ext[0]] += v
                else:
                    linear = False
                    break
            if linear:
                coeffs = {k: v for k, v in coeffs.items() if v}
                if coeffs or rhs:
                    rows.append((coeffs, rhs, (key, i1)))

    unknowns = sorted({k for c, _, _ in rows for k in c})
    col = {k: i for i, k in enumerate(unknowns)}
    n = len(unknowns)
    for coeffs, rhs, origin in rows:
        if not coeffs and rhs:
            raise InconsistentSystem(f"TRR (a) for {origin[0]} has no extended unknowns but "
                                     f"leaves residual {rhs}", origin)
    table = CorrelatorTable()
    if not n:
        return FitResult(table, [], len(rows), 0, [])
    dense = []
    for coeffs, rhs, _ in rows:
        row = [QQ(0)] * (n + 1)
        for k, v in coeffs.items():
            row[col[k]] = QQ(v.numerator, v.denominator)
        row[n] = QQ(rhs.numerator, rhs.denominator)
        dense.append(row)
    M = DomainMatrix(dense, (len(dense), n + 1), QQ)
    R, pivots = M.rref()
    if n in pivots:
        bad = pivots.index(n)
        raise InconsistentSystem(f"extended-primary system is inconsistent (row {bad} of the reduced form)")
    Rl = R.to_Matrix().tolist() if hasattr(R, "to_Matrix") else R.to_list()
    undetermined = set(unknowns)
    for i, p in enumerate(pivots):
        row = Rl[i]
        if all(row[j] == 0 for j in range(n) if j != p):
            v = Fraction(int(row[n].p), int(row[n].q)) if hasattr(row[n], "p") else Fraction(str(row[n]))
            table.add(unknowns[p], v, "base")
            undetermined.discard(unknowns[p])
    residuals = []
    for coeffs, rhs, _ in rows:
        if all(k in table for k in coeffs):
            residuals.append(sum((v * table.get(k) for k, v in coeffs.items()), Fraction(0)) - rhs)
    return FitResult(table, sorted(undetermined), len(rows), n, residuals)


def pipeline_b_base(open_g0: Mapping[CorrelatorKey, Fraction], r: int, W: int,
                    override: CorrelatorTable | None = None) -> tuple[CorrelatorTable, FitResult]:
    """Default seed: pipeline-A open primaries plus fitted extended primaries."""
    base = CorrelatorTable()
    for key, v in sorted(open_g0.items()):
        if key.g == 0 and key.is_primary():
            base.add(key, v, "pipeline-A")
    fit = fit_extended_primaries(open_g0, r, W)
    base.merge(fit.table)
    if override is not None:
        base.merge(override)
    return base, fit
