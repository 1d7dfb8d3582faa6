"""Correlator keys and the selection rules that decide which can be nonzero."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

OPEN = "open"
EXT = "ext"


class InvalidKey(ValueError):
    pass


@dataclass(frozen=True, order=True)
class CorrelatorKey:
    """<tau^{a_1}_{d_1} ... tau^{a_l}_{d_l} sigma^k>_g in the open or closed extended sector.

    Insertions are kept sorted; boundary markings are a count since every
    boundary twist is r-2.
    """

    sector: str
    g: int
    ins: tuple[tuple[int, int], ...]
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ins", tuple(sorted(tuple(p) for p in self.ins)))

    @property
    def l(self) -> int:
        return len(self.ins)

    @property
    def sum_d(self) -> int:
        return sum(d for _, d in self.ins)

    @property
    def sum_a(self) -> int:
        return sum(a for a, _ in self.ins)

    def weight(self, r: int) -> int:
        return sum(a + 1 + r * d for a, d in self.ins) + r * self.k

    def is_primary(self) -> bool:
        return all(d == 0 for _, d in self.ins)

    def replace(self, ins=None, k=None, g=None) -> "CorrelatorKey":
        return CorrelatorKey(self.sector, self.g if g is None else g,
                             self.ins if ins is None else tuple(ins), self.k if k is None else k)

    def multiplicities(self) -> Counter:
        return Counter(self.ins)

    def label(self) -> str:
        body = " ".join(f"t{a}_{d}" for a, d in self.ins)
        if self.k:
            body += f" s^{self.k}" if body else f"s^{self.k}"
        return f"<{body or '1'}>_{self.g}^{self.sector}"

    def __str__(self):
        return self.label()

    def to_json(self) -> dict:
        return {"sector": self.sector, "g": self.g, "ins": [list(p) for p in self.ins], "k": self.k}

    @classmethod
    def from_json(cls, d) -> "CorrelatorKey":
        return cls(d["sector"], d["g"], tuple(tuple(p) for p in d["ins"]), d.get("k", 0))


def open_key(g: int, ins: Iterable[tuple[int, int]], k: int = 0) -> CorrelatorKey:
    return CorrelatorKey(OPEN, g, tuple(ins), k)


def ext_key(ins: Iterable[tuple[int, int]]) -> CorrelatorKey:
    return CorrelatorKey(EXT, 0, tuple(ins), 0)


def validate(key: CorrelatorKey, r: int) -> None:
    """Raise InvalidKey for keys outside the theory (not merely zero ones)."""
    if key.k < 0 or any(d < 0 for _, d in key.ins):
        raise InvalidKey(f"{key}: negative descendent or boundary count")
    if key.sector == OPEN:
        if key.g not in (0, 1):
            raise InvalidKey(f"{key}: only genus 0 and 1 are supported")
        if any(not 0 <= a <= r - 1 for a, _ in key.ins):
            raise InvalidKey(f"{key}: open twists lie in 0..{r - 1}")
    elif key.sector == EXT:
        if key.g != 0 or key.k:
            raise InvalidKey(f"{key}: extended correlators are genus 0 without boundary")
        if any(not -1 <= a <= r - 1 for a, _ in key.ins):
            raise InvalidKey(f"{key}: extended twists lie in -1..{r - 1}")
        if sum(1 for a, _ in key.ins if a == -1) > 1:
            raise InvalidKey(f"{key}: at most one twist -1 is allowed")
    else:
        raise InvalidKey(f"unknown sector {key.sector!r}")


def is_stable(key: CorrelatorKey) -> bool:
    if key.sector == EXT:
        return key.l >= 3
    return 2 * key.g - 2 + key.k + 2 * key.l > 0


def open_rank_numerator(key: CorrelatorKey, r: int) -> int:
    return 2 * key.sum_a + key.k * (r - 2) + (key.g - 1) * (r - 2)


def dimension_gate(key: CorrelatorKey, r: int) -> bool:
    """True if the key is a candidate (rank equals dimension), False if forced zero."""
    validate(key, r)
    if not is_stable(key):
        return False
    if key.sector == OPEN:
        num = open_rank_numerator(key, r)
        if num % r:
            return False
        return 2 * key.sum_d + num // r == 2 * key.l + key.k + 3 * key.g - 3
    num = key.sum_a - (r - 2)
    if num % r:
        return False
    return key.sum_d == key.l - 3 - num // r


def gate_or_zero(key: CorrelatorKey, r: int) -> bool:
    """Like dimension_gate, but keys outside the theory count as zero rather than errors."""
    try:
        return dimension_gate(key, r)
    except InvalidKey:
        return False


def mod_r_condition(key: CorrelatorKey, r: int) -> bool:
    """Existence of a twisted r-spin structure with the key's twists."""
    if key.sector == OPEN:
        return open_rank_numerator(key, r) % r == 0
    return (key.sum_a - (r - 2)) % r == 0


def _insertion_types(r: int, max_weight: int, twists: range) -> list[tuple[int, int, int]]:
    out = []
    for a in twists:
        d = 0
        while a + 1 + r * d <= max_weight:
            out.append((a + 1 + r * d, a, d))
            d += 1
    return sorted(out)


def open_keys(r: int, W: int, g: int, candidates_only: bool = True) -> Iterator[CorrelatorKey]:
    """All stable open keys of weight <= W (by default only those passing the gate)."""
    types = _insertion_types(r, W, range(r))
    for k in range(0, W // r + 1):
        room = W - r * k
        yield from _fill(types, room, lambda ins: open_key(g, ins, k), r, candidates_only)


def ext_keys(r: int, W: int, candidates_only: bool = True) -> Iterator[CorrelatorKey]:
    """Extended keys of weight <= W; a twist -1 insertion has weight r*d."""
    pool = _insertion_types(r, W, range(r))
    # at most one twist -1, whose weight r*d may be zero
    heads = [()] + [((-1, d),) for d in range(W // r + 1)]
    for head in heads:
        room = W - sum(r * d for _, d in head)
        for ins in _multisets(pool, room):
            key = ext_key(head + tuple(ins))
            if not is_stable(key):
                continue
            if candidates_only and not dimension_gate(key, r):
                continue
            yield key


def _multisets(types, room) -> Iterator[list[tuple[int, int]]]:
    def rec(start, room, acc):
        yield list(acc)
        for i in range(start, len(types)):
            w, a, d = types[i]
            if w > room:
                break
            acc.append((a, d))
            yield from rec(i, room - w, acc)
            acc.pop()
    yield from rec(0, room, [])


def _fill(types, room, make, r, candidates_only):
    for ins in _multisets(types, room):
        key = make(ins)
        if not is_stable(key):
            continue
        if candidates_only and not dimension_gate(key, r):
            continue
        yield key
