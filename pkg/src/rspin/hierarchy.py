"""Gelfand-Dikii flows and the wave function, solved as jets at T_{>=2} = 0.

Every coefficient of ``L`` and ``Phi`` is a polynomial in ``x = T_1`` times a
monomial ``T^alpha`` in ``T_2..T_W``.  The jet of ``T^alpha`` comes from any
flow ``n`` in the support of ``alpha``:

    jet_alpha = (1/alpha_n) * [T^(alpha - e_n)] (rhs of the n-th flow)

and the right-hand side at ``T^(alpha - e_n)`` only involves jets of strictly
smaller T_{>=2}-weight.  All admissible ``n`` are evaluated and must agree.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .psido import PsiDO, commutator, compose, rth_root
from .series import MSeries, VarSystem, log_series

log = logging.getLogger(__name__)


class FlowInconsistency(RuntimeError):
    """Two flows disagree on a jet, or an identity that must hold fails."""

    def __init__(self, message: str, key=None):
        super().__init__(message)
        self.key = key


def high_weight(expo: tuple[int, ...]) -> int:
    """Weight carried by T_2, T_3, ... (x = T_1 excluded)."""
    return sum(p * (i + 1) for i, p in enumerate(expo) if i and p)


def _cap(A: PsiDO, bound: int) -> PsiDO:
    terms = {e: c.restrict(lambda ex, l: high_weight(ex) <= bound) for e, c in A.terms.items()}
    return PsiDO._raw(A.vars, A.W, A.order, A.e_min, {e: c for e, c in terms.items() if c})


def initial_L(r: int, W: int) -> PsiDO:
    """Dx^r + r lambda^{-r} x."""
    V = VarSystem.T(W)
    return PsiDO(V, W, {r: MSeries.const(V, W, 1), 0: MSeries.var(V, W, 0, r, lam=-r)}, order=r)


@dataclass
class GDSolution:
    r: int
    W: int
    L: PsiDO
    root: PsiDO | None = None
    powers: dict[int, PsiDO] = field(default_factory=dict)
    Phi: MSeries | None = None
    phi: MSeries | None = None

    @property
    def vars(self) -> VarSystem:
        return self.L.vars

    def fractional_power(self, n: int) -> PsiDO:
        """L^{n/r} = (L^{1/r})^n, cached."""
        if self.root is None:
            self.root = rth_root(self.L, self.r)
            self.powers = {1: self.root}
        if n not in self.powers:
            k = max(m for m in self.powers if m < n)
            P = self.powers[k]
            for m in range(k + 1, n + 1):
                P = compose(P, self.root)
                self.powers[m] = P
        return self.powers[n]

    def flow_rhs(self, n: int) -> PsiDO:
        """lambda^{n-1} [(L^{n/r})_+, L]."""
        return commutator(self.fractional_power(n).positive_part(), self.L).scale(1, n - 1)

    def residue(self, n: int) -> MSeries:
        return self.fractional_power(n).residue()

    def genus_component(self, g: int) -> MSeries:
        if self.phi is None:
            raise ValueError("wave function not solved")
        return genus_component(self.phi, g)


def _absorb(candidates: dict, n: int, rhs: MSeries, level: int, what: str):
    """Turn the T^(alpha-e_n) slice of a flow rhs into jets of T^alpha."""
    idx = n - 1
    for (expo, lam), c in rhs.items():
        if high_weight(expo) != level - n:
            continue
        new = expo[:idx] + (expo[idx] + 1,) + expo[idx + 1:]
        key = (new, lam)
        val = c * Fraction(1, new[idx])
        prev = candidates.setdefault(key, {})
        prev[n] = val


def _settle(candidates: dict, what: str, i=None) -> dict:
    """Check every admissible flow produced the same jet; return key -> value."""
    out = {}
    for (expo, lam), by_n in candidates.items():
        support = [j + 1 for j, p in enumerate(expo) if j and p]
        vals = {by_n.get(n, 0) for n in support}
        if len(vals) != 1:
            detail = {n: str(by_n.get(n, 0)) for n in support}
            raise FlowInconsistency(
                f"{what}{'' if i is None else f'[f_{i}]'}: flows disagree at "
                f"expo={expo} lam={lam}: {detail}", key=(expo, lam))
        v = vals.pop()
        if v:
            out[(expo, lam)] = v
    return out


def solve_L(r: int, W: int) -> GDSolution:
    if r < 2 or W < 1:
        raise ValueError(f"need r >= 2 and W >= 1, got r={r}, W={W}")
    L = initial_L(r, W)
    V = L.vars
    for level in range(2, W + 1):
        root = rth_root(_cap(L, level - 2), r)
        root = _cap(root, level - 2)
        P = root
        cand: dict[int, dict] = {i: {} for i in range(r - 1)}
        for n in range(2, level + 1):
            P = _cap(compose(P, root), level - n) if n > 1 else P
            rhs = commutator(P.positive_part(), _cap(L, level - n)).scale(1, n - 1)
            for e, h in rhs.terms.items():
                sl = h.restrict(lambda ex, l: high_weight(ex) == level - n)
                if not sl:
                    continue
                if not 0 <= e <= r - 2:
                    raise FlowInconsistency(
                        f"[(L^{n}/{r})_+, L] has a Dx^{e} term at T-level {level - n}")
                _absorb(cand[e], n, sl, level, "L")
        new_terms = dict(L.terms)
        for i, c in cand.items():
            jets = _settle(c, "L", i)
            if jets:
                new_terms[i] = L.coeff(i) + MSeries(V, L.coeff_weight(i), jets)
        L = PsiDO(V, W, new_terms, order=r, e_min=L.e_min)
        log.debug("solve_L r=%d level %d done", r, level)
    return GDSolution(r, W, L)


def solve_wave_function(sol: GDSolution) -> GDSolution:
    W, V = sol.W, sol.vars
    Phi = MSeries.const(V, W, 1)
    ops = {n: sol.fractional_power(n).positive_part() for n in range(1, W + 1)}
    for level in range(2, W + 1):
        cand: dict = {}
        for n in range(2, level + 1):
            src = Phi.restrict(lambda ex, l: high_weight(ex) <= level - n)
            rhs = ops[n].apply(src).scale(1, n - 1)
            _absorb(cand, n, rhs, level, "Phi")
        jets = _settle(cand, "Phi")
        if jets:
            Phi = Phi + MSeries(V, W, jets)
    # the n = 1 equation is not used by the recursion; it must hold anyway
    lhs = Phi.derive(0)
    rhs = ops[1].apply(Phi)
    diff = (lhs - rhs).truncate(min(lhs.W, rhs.W))
    if diff:
        key = next(iter(diff.terms))
        raise FlowInconsistency(f"dPhi/dT1 != (L^1/r)_+ Phi at {key}", key=key)
    sol.Phi = Phi
    sol.phi = log_series(Phi)
    return sol


def solve(r: int, W: int) -> GDSolution:
    return solve_wave_function(solve_L(r, W))


def genus_component(phi: MSeries, g: int) -> MSeries:
    """phi = sum_g lambda^{g-1} phi_g; returns phi_g without lambda."""
    return phi.lambda_component(g - 1)
