"""The property suite and the cross-check of the two pipelines.

Each check yields a :class:`CheckRecord`; a failing record always names a
concrete counterexample.  Checks never stop the suite: an exception inside a
check becomes a failed record.
"""
from __future__ import annotations

import json
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .correlators import (OPEN, Evaluator, NeedsBase, evaluate_terms, legal_expansions,
                          pipeline_b_base)
from .hierarchy import FlowInconsistency, GDSolution, solve_L, solve_wave_function
from .keys import dimension_gate, mod_r_condition
from .potentials import OpenPotentials, open_potential
from .psido import PsiDO, compose, power, rth_root
from .series import MSeries, VarSystem


@dataclass
class CheckRecord:
    name: str
    params: dict
    status: str = "pass"
    counterexample: str | None = None
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self, timings: bool = True) -> dict:
        d = asdict(self)
        if not timings:
            d.pop("seconds")
        return d


class _Fail(Exception):
    def __init__(self, counterexample: str, **detail):
        super().__init__(counterexample)
        self.counterexample = counterexample
        self.detail = detail


def _run(records: list, name: str, params: dict, fn):
    rec = CheckRecord(name, dict(params))
    t0 = time.perf_counter()
    try:
        detail = fn()
        if detail:
            rec.detail = detail
    except _Fail as f:
        rec.status, rec.counterexample, rec.detail = "fail", f.counterexample, f.detail
    except FlowInconsistency as exc:
        rec.status, rec.counterexample = "fail", f"{exc}"
    except NeedsBase as exc:
        rec.status, rec.counterexample = "fail", f"missing base value {exc.key}"
    except Exception as exc:  # a crash is a failure of that check, not of the suite
        rec.status, rec.counterexample = "fail", f"{type(exc).__name__}: {exc}"
    rec.seconds = round(time.perf_counter() - t0, 3)
    records.append(rec)
    return rec


# -- random operators for the algebra checks ---------------------------------

def random_series(rng: random.Random, V: VarSystem, W: int, n_terms: int = 3, lam: int = 2) -> MSeries:
    terms = {}
    for _ in range(n_terms):
        expo = [0] * len(V)
        room = rng.randint(0, W)
        while room > 0:
            i = rng.randrange(min(len(V), room))
            if V.weights[i] > room:
                break
            expo[i] += 1
            room -= V.weights[i]
        terms[(tuple(expo), rng.randint(-lam, lam))] = Fraction(rng.randint(-5, 5), rng.randint(1, 3))
    return MSeries(V, W, terms)


def random_psido(rng: random.Random, V: VarSystem, W: int, order: int, monic: bool = False,
                 depth: int = 4) -> PsiDO:
    terms = {}
    low = order - depth
    for e in range(low, order + 1):
        if rng.random() < 0.6:
            terms[e] = random_series(rng, V, W)
    if monic:
        terms[order] = MSeries.const(V, W, 1)
        terms.pop(order - 1, None)
    return PsiDO(V, W, terms, order=order)


# -- individual check bodies ---------------------------------------------------

def _first_difference(A: PsiDO, B: PsiDO):
    for e in sorted(set(A.terms) | set(B.terms), reverse=True):
        a, b = A.coeff(e), B.coeff(e)
        w = min(a.W, b.W)
        d = (a.truncate(w) - b.truncate(w))
        if d:
            return e, next(iter(d.terms))
    return None


def check_root_roundtrip(sol: GDSolution, n_random: int, seed: int):
    r, W = sol.r, sol.W
    R = rth_root(sol.L, r)
    diff = _first_difference(power(R, r), sol.L)
    if diff:
        raise _Fail(f"(L^(1/r))^r differs from L at Dx^{diff[0]}, term {diff[1]}")
    rng = random.Random(seed)
    V = sol.vars
    for i in range(n_random):
        A = random_psido(rng, V, W, r, monic=True, depth=r + 1)
        diff = _first_difference(power(rth_root(A, r), r), A)
        if diff:
            raise _Fail(f"random operator #{i}: root^r differs at Dx^{diff[0]}, term {diff[1]}")
    return {"operators": n_random + 1}


def check_associativity(r: int, W: int, n: int, seed: int):
    rng = random.Random(seed)
    V = VarSystem.T(W)
    for i in range(n):
        A, B, C = (random_psido(rng, V, W, rng.randint(-1, 3)) for _ in range(3))
        left = compose(compose(A, B), C)
        right = compose(A, compose(B, C))
        floor = max(left.e_min, right.e_min)
        diff = _first_difference(left.with_window(floor), right.with_window(floor))
        if diff:
            raise _Fail(f"triple #{i}: (AB)C != A(BC) at Dx^{diff[0]}, term {diff[1]}")
    return {"triples": n}


def check_window_stability(sol: GDSolution, shift: int = 5):
    L = sol.L
    R = rth_root(L, sol.r)
    R_low = rth_root(L.with_window(L.e_min - shift), sol.r)
    diff = _first_difference(R, R_low.with_window(R.e_min))
    if diff:
        raise _Fail(f"root changes when the window is lowered by {shift}: Dx^{diff[0]}, {diff[1]}")
    P = compose(R, L)
    P_low = compose(R_low, L.with_window(L.e_min - shift), P.e_min - shift)
    diff = _first_difference(P, P_low.with_window(P.e_min))
    if diff:
        raise _Fail(f"composition changes when the window is lowered: Dx^{diff[0]}, {diff[1]}")


def check_flows(sol: GDSolution):
    """dL/dT_n equals lambda^{n-1}[(L^{n/r})_+, L] for every n, at every reliable weight."""
    r, W = sol.r, sol.W
    for n in range(1, W + 1):
        rhs = sol.flow_rhs(n)
        for e in range(0, r - 1):
            lhs = sol.L.coeff(e).derive(n - 1)
            other = rhs.coeff(e)
            w = min(lhs.W, other.W)
            d = lhs.truncate(w) - other.truncate(w)
            if d:
                (expo, lam), c = next(iter(sorted(d.terms.items())))
                raise _Fail(f"flow T{n}: d f_{e}/dT{n} - rhs = {c} at expo={list(expo)} lambda^{lam}",
                            n=n, e=e, expo=list(expo), lam=lam)
    return {"flows": W}


def check_commutator_support(sol: GDSolution):
    r = sol.r
    for n in range(1, sol.W + 1):
        rhs = sol.flow_rhs(n)
        bad = [e for e in rhs.terms if not 0 <= e <= r - 2]
        if bad:
            raise _Fail(f"[(L^({n}/{r}))_+, L] has a Dx^{bad[0]} term")


def check_ramond_vanishing(sol: GDSolution):
    r = sol.r
    for m in range(r, sol.W + 1, r):
        res = sol.residue(m)
        if res:
            raise _Fail(f"res L^({m}/{r}) = {res.format()[:120]}")


def check_two_point_symmetry(sol: GDSolution):
    """lambda^n d_{T_m} res L^{n/r} = lambda^m d_{T_n} res L^{m/r} for n, m not divisible by r."""
    r, W = sol.r, sol.W
    pairs = 0
    for n in range(1, W + 1):
        for m in range(n + 1, W + 1):
            if n % r == 0 or m % r == 0:
                continue
            A = sol.residue(n).derive(m - 1)
            B = sol.residue(m).derive(n - 1)
            w = min(A.W, B.W)
            if w < 0:
                continue
            pairs += 1
            d = A.truncate(w).scale(1, n - m) - B.truncate(w)
            if d:
                raise _Fail(f"(n, m) = ({n}, {m}) differ at {next(iter(d.terms))}")
    return {"pairs": pairs}


def check_rationality(pots: OpenPotentials):
    bad = pots.non_rational()
    if bad:
        g, e, c = bad[0]
        raise _Fail(f"F_{g} coefficient at {list(e)} is {c}")


def check_selection_rules(pots: OpenPotentials):
    r = pots.r
    n = 0
    for g in (0, 1):
        for key, v in pots.table(g).items():
            n += 1
            if v and not (dimension_gate(key, r) and mod_r_condition(key, r)):
                raise _Fail(f"{key} = {v} violates the selection rules")
    return {"nonzero_monomials": n}


def check_genus_one_primaries(pots: OpenPotentials):
    for key, v in pots.table(1).items():
        if key.sum_d == 0 and v:
            raise _Fail(f"{key} = {v} although it has no descendents")


def _identity_check(keys_values: dict, r: int, value, rules: set[str]):
    n = 0
    for key, lhs in sorted(keys_values.items()):
        for rule, choice, terms in legal_expansions(key, r):
            if rule not in rules:
                continue
            n += 1
            rhs = evaluate_terms(terms, value)
            if rhs != lhs:
                raise _Fail(f"{rule}{choice} at {key}: lhs {lhs}, rhs {rhs}",
                            key=str(key), lhs=str(lhs), rhs=str(rhs))
    return {"instances": n}


def check_degenerate_genus_one(A1: dict, A0: dict, r: int):
    """<tau^a_1 prod tau_0 sigma^k>_1 = 1/2 <tau^a_0 prod tau_0 sigma^(k+1)>_0."""
    n = 0
    for key, v in sorted(A1.items()):
        desc = [p for p in key.ins if p[1]]
        if len(desc) != 1 or desc[0][1] != 1:
            continue
        i = key.ins.index(desc[0])
        g0 = key.replace(ins=key.ins[:i] + ((desc[0][0], 0),) + key.ins[i + 1:], k=key.k + 1, g=0)
        want = Fraction(1, 2) * A0.get(g0, Fraction(0))
        n += 1
        if v != want:
            raise _Fail(f"{key} = {v}, half of {g0} is {want}")
    return {"instances": n}


def check_choice_independence(base, r: int, keys: list):
    first, last = Evaluator(r, base, "first"), Evaluator(r, base, "last")
    for key in keys:
        a, b = first(key), last(key)
        if a != b:
            raise _Fail(f"{key}: {a} with the first choice, {b} with the last")
    return {"keys": len(keys)}


def cross_check(r: int, W: int, pots: OpenPotentials | None = None, fit_weight: int | None = None,
                override=None) -> list[CheckRecord]:
    """Pipeline B against pipeline A on every candidate key of weight <= W."""
    records: list[CheckRecord] = []
    state = _pipelines(r, W, pots, fit_weight, override)
    _cross(records, r, W, state)
    return records


def _pipelines(r, W, pots, fit_weight, override):
    fit_weight = default_fit_weight(r, W) if fit_weight is None else fit_weight
    if pots is None or pots.W < fit_weight:
        pots = OpenPotentials.compute(r, fit_weight)
    A0_all = pots.candidates(0)
    A0 = {k: v for k, v in A0_all.items() if k.weight(r) <= W}
    A1 = {k: v for k, v in pots.candidates(1).items() if k.weight(r) <= W}
    base, fit = pipeline_b_base(A0_all, r, fit_weight, override)
    return {"pots": pots, "A0": A0, "A1": A1, "base": base, "fit": fit, "fit_weight": fit_weight}


def _cross(records, r, W, state):
    params = {"r": r, "W": W, "fit_weight": state["fit_weight"]}
    ev = Evaluator(r, state["base"])

    def run():
        n = 0
        for key, va in sorted({**state["A0"], **state["A1"]}.items()):
            vb = ev(key)
            n += 1
            if va != vb:
                trace = "\n".join(ev.trace(key))
                raise _Fail(f"{key}: pipeline A {va}, pipeline B {vb}", key=str(key), a=str(va),
                            b=str(vb), trace=trace)
        return {"keys": n}
    _run(records, "cross_check", params, run)
    return ev


def default_fit_weight(r: int, W: int) -> int:
    """Extended primaries are fitted one step higher in the weight lattice of F_0."""
    return W + 2 * (r + 1)


def corrupt_L(sol: GDSolution) -> GDSolution:
    """Fault injection: perturb one jet of f_0 (the T_2 * x coefficient)."""
    V = sol.vars
    f0 = sol.L.coeff(0)
    bump = MSeries.monomial(V, f0.W, {0: 1, 1: 1}, 1, lam=-sol.r)
    terms = dict(sol.L.terms)
    terms[0] = f0 + bump
    L = PsiDO(V, sol.W, terms, order=sol.r, e_min=sol.L.e_min)
    return GDSolution(sol.r, sol.W, L)


# -- orchestration ---------------------------------------------------------------

@dataclass
class Bounds:
    random_operators: int = 20
    associativity_triples: int = 50
    associativity_weight: int = 6
    fit_weight: int | None = None


def suite_for(r: int, W: int, bounds: Bounds | None = None, fault: str | None = None) -> list[CheckRecord]:
    bounds = bounds or Bounds()
    records: list[CheckRecord] = []
    P = {"r": r, "W": W}
    seed = 1000 * r + W

    sol_box: dict = {}

    def solve_step():
        sol = solve_L(r, W)
        if fault == "flow":
            sol = corrupt_L(sol)
        sol_box["sol"] = sol
    _run(records, "hierarchy.solve", P, solve_step)
    sol = sol_box.get("sol")
    if sol is None:
        return records

    _run(records, "hierarchy.flow_consistency", P, lambda: check_flows(sol))
    _run(records, "hierarchy.commutator_support", P, lambda: check_commutator_support(sol))
    _run(records, "hierarchy.ramond_vanishing", P, lambda: check_ramond_vanishing(sol))
    _run(records, "hierarchy.two_point_symmetry", P, lambda: check_two_point_symmetry(sol))
    _run(records, "psido.root_roundtrip", P,
         lambda: check_root_roundtrip(sol, bounds.random_operators, seed))
    _run(records, "psido.associativity", {**P, "W": bounds.associativity_weight},
         lambda: check_associativity(r, bounds.associativity_weight, bounds.associativity_triples, seed))
    _run(records, "psido.window_stability", P, lambda: check_window_stability(sol))

    def wave():
        solve_wave_function(sol)
    _run(records, "hierarchy.wave_function", P, wave)
    if sol.phi is None:
        return records

    pots = OpenPotentials(r, W, sol)
    for g in (0, 1):
        pots.F[g] = open_potential(sol.phi, r, g)
    _run(records, "potentials.rationality", P, lambda: check_rationality(pots))
    _run(records, "potentials.selection_rules", P, lambda: check_selection_rules(pots))
    _run(records, "potentials.genus_one_primaries_vanish", P, lambda: check_genus_one_primaries(pots))
    if fault:
        return records

    st: dict = {}

    def fit():
        st.update(_pipelines(r, W, None, bounds.fit_weight, None))
        f = st["fit"]
        return {"equations": f.equations, "unknowns": f.unknowns,
                "undetermined": [str(k) for k in f.undetermined],
                "fitted": {str(k): str(v) for k, v in f.table.items()}}
    _run(records, "correlators.fit_extended_primaries",
         {**P, "fit_weight": bounds.fit_weight or default_fit_weight(r, W)}, fit)
    if not st:
        return records
    A0, A1, base = st["A0"], st["A1"], st["base"]
    ext = Evaluator(r, base)
    big = st["pots"]

    def value(key):
        return big.correlator(key) if key.sector == OPEN else ext(key)

    _run(records, "correlators.trr_genus0", P, lambda: _identity_check(A0, r, value, {"trr_a", "trr_b"}))
    _run(records, "correlators.trr_genus1", P, lambda: _identity_check(A1, r, value, {"trr_g1"}))
    _run(records, "correlators.degenerate_genus1", P, lambda: check_degenerate_genus_one(A1, A0, r))
    _run(records, "correlators.string", P, lambda: _identity_check({**A0, **A1}, r, value, {"string"}))
    _run(records, "correlators.dilaton", P, lambda: _identity_check({**A0, **A1}, r, value, {"dilaton"}))
    _run(records, "correlators.choice_independence", P,
         lambda: check_choice_independence(base, r, sorted({**A0, **A1})))
    _cross(records, r, W, st)
    return records


def run_suite(r_list, W: int | dict | None = None, bounds: Bounds | None = None,
              fault: str | None = None, workers: int = 1) -> list[CheckRecord]:
    """Run every check for each r; ``W`` may be a single weight or a per-r mapping."""
    jobs = []
    for r in r_list:
        w = W.get(r) if isinstance(W, dict) else W
        jobs.append((r, default_weight(r) if w is None else w))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(suite_for, *zip(*jobs), [bounds] * len(jobs), [fault] * len(jobs)))
    else:
        parts = [suite_for(r, w, bounds, fault) for r, w in jobs]
    return [rec for part in parts for rec in part]


def default_weight(r: int) -> int:
    return {2: 10, 3: 9, 4: 8}.get(r, 8)


def report_json(records: list[CheckRecord], timings: bool = True) -> str:
    return json.dumps([rec.to_json(timings) for rec in records], indent=1, sort_keys=True)


def all_passed(records: list[CheckRecord]) -> bool:
    return all(rec.passed for rec in records)
