"""Open potentials F_0, F_1 from the genus components of the wave-function log.

The substitution T_k -> c_k t^a_d carries fractional powers of (-r), all of
which are monomials in the ring generator q (see ``coeffring``).  The
boundary variable s enters through the shift of the twist-(r-1) variables.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, prod

from .coeffring import NonRationalError, RingElem, q_power, rational_part
from .hierarchy import GDSolution, genus_component, solve
from .keys import OPEN, CorrelatorKey, open_key, open_keys
from .series import MSeries, TruncationError, VarSystem, substitute, t_label


def k_factorial_r(k: int, r: int) -> int:
    """prod_{i=0}^{d} (a + 1 + r*i) for k = a + 1 + r*d."""
    a, d = t_label(k, r)
    return prod(a + 1 + r * i for i in range(d + 1))


def cov_coefficient(k: int, r: int) -> RingElem:
    """c_k in T_k = c_k * t^a_d (before the twist-(r-1) rescaling by 1/sqrt(-r))."""
    a, d = t_label(k, r)
    if a <= r - 2:
        # (-r)^{3k/(2(r+1)) - 1/2 - d} = q^{3k - (r+1) - 2(r+1)d}
        e = 3 * k - (r + 1) - 2 * (r + 1) * d
        return q_power(-e, r) / k_factorial_r(k, r)
    m = d + 1
    return q_power(-m * (r - 2), r) / (factorial(m) * r ** m)


def change_of_variables(f: MSeries, r: int, shift: bool) -> MSeries:
    """Rewrite a T-series in t^a_d (and s).

    Twist-(r-1) variables are further divided by sqrt(-r) = q^{r+1}; with
    ``shift`` the variable t^{r-1}_0 is first replaced by t^{r-1}_0 - r*s.
    """
    if f.vars.kind != "T":
        raise ValueError("change_of_variables expects a T-series")
    N = len(f.vars)
    target = VarSystem.ts(r, N)
    s = target.s_index
    inv_sqrt = q_power(-(r + 1), r)
    rules = {}
    for k in range(1, N + 1):
        a, d = t_label(k, r)
        c = cov_coefficient(k, r)
        if a < r - 1:
            rules[k - 1] = [(k - 1, c)]
            continue
        c = c * inv_sqrt
        rule = [(k - 1, c)]
        if shift and d == 0:
            rule.append((s, c * (-r)))
        rules[k - 1] = rule
    return substitute(f.map_coeffs(lambda x: RingElem.scalar(r, x)), rules, target)


def open_potential(phi: MSeries, r: int, g: int) -> MSeries:
    """F_g as a ring-valued series in t^a_d and s (g = 0 or 1)."""
    phi_g = genus_component(phi, g)
    if g == 0:
        inv_sqrt = q_power(-(r + 1), r)
        shifted = change_of_variables(phi_g, r, shift=True)
        plain = change_of_variables(phi_g, r, shift=False)
        return (shifted - plain).scale(inv_sqrt)
    if g == 1:
        return change_of_variables(phi_g, r, shift=True)
    raise ValueError(f"open potentials are built for g in (0, 1), got {g}")


def monomial_of(key: CorrelatorKey, V: VarSystem) -> tuple[int, ...]:
    e = [0] * len(V)
    for (a, d), m in key.multiplicities().items():
        e[V.t_index(a, d)] = m
    e[V.s_index] = key.k
    return tuple(e)


def extract_correlator(F: MSeries, key: CorrelatorKey) -> Fraction:
    """Correlator from its monomial: undo the 1/(l! k!) of the labeled sum.

    The monomial prod t^{m_{a,d}} s^k carries <...>/(prod m_{a,d}! * k!).
    """
    V = F.vars
    try:
        expo = monomial_of(key, V)
    except KeyError:
        raise TruncationError(f"{key} needs variables beyond weight {len(V) - 1}") from None
    if V.weight(expo) > F.W:
        raise TruncationError(f"{key} has weight {V.weight(expo)} above {F.W}")
    c = F.coefficient(expo)
    if not c:
        return Fraction(0)
    mult = prod(factorial(m) for m in key.multiplicities().values()) * factorial(key.k)
    return rational_part(c * mult)


@dataclass
class OpenPotentials:
    """Pipeline A: F_0 and F_1 for one (r, W), with correlator lookup."""

    r: int
    W: int
    solution: GDSolution
    F: dict[int, MSeries] = field(default_factory=dict)

    @classmethod
    def compute(cls, r: int, W: int) -> "OpenPotentials":
        sol = solve(r, W)
        out = cls(r, W, sol)
        for g in (0, 1):
            out.F[g] = open_potential(sol.phi, r, g)
        return out

    def correlator(self, key: CorrelatorKey) -> Fraction:
        if key.sector != OPEN:
            raise ValueError("pipeline A produces open correlators only")
        if key.g not in self.F:
            raise ValueError(f"genus {key.g} is not available")
        return extract_correlator(self.F[key.g], key)

    def non_rational(self) -> list[tuple[int, tuple, RingElem]]:
        """Every coefficient of F_0, F_1 with a nonzero q-component."""
        bad = []
        for g, F in self.F.items():
            for (e, _), c in F.items():
                if not c.is_rational():
                    bad.append((g, e, c))
        return bad

    def table(self, g: int) -> dict[CorrelatorKey, Fraction]:
        """All nonzero correlators of F_g, read straight off the monomials."""
        F = self.F[g]
        V = F.vars
        out = {}
        for (e, lam), c in sorted(F.items()):
            ins = []
            for i, p in enumerate(e[:-1]):
                ins += [t_label(i + 1, self.r)] * p
            key = open_key(g, ins, e[V.s_index])
            out[key] = extract_correlator(F, key)
        return out

    def candidates(self, g: int) -> dict[CorrelatorKey, Fraction]:
        """Every gate-passing key of weight <= W with its value (zeros included)."""
        return {key: self.correlator(key) for key in open_keys(self.r, self.W, g)}


def dump_table(table: dict[CorrelatorKey, Fraction], fmt: str = "json") -> str:
    rows = [dict(key.to_json(), value=str(v)) for key, v in sorted(table.items())]
    if fmt == "json":
        return json.dumps(rows, indent=1)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sector", "g", "ins", "k", "value"])
        for row in rows:
            ins = " ".join(f"{a}:{d}" for a, d in row["ins"])
            w.writerow([row["sector"], row["g"], ins, row["k"], row["value"]])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


__all__ = [
    "NonRationalError", "OpenPotentials", "change_of_variables", "cov_coefficient",
    "dump_table", "extract_correlator", "k_factorial_r", "open_potential",
]
