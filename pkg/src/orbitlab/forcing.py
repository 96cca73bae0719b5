"""Desk-scale forcing lab over a transfer scenario.

Conditions are finite partial injections from natural-number indices to
carrier atoms, constrained to look exactly like the scenario's enumeration j
on their domain (same atomic type, constants and predicates included).
Ordered by reverse inclusion with the empty condition on top, they form a
poset where every condition splits, the domain/range sets are dense, and
any two conditions become compatible after an index automorphism conjugated
from a B-fixing carrier map, which is the almost-homogeneity witness.

Only finitely many dense sets are ever met: a GenericFragment is the finite
shadow of a generic filter, enough to read off an initial segment of the
forced bijection between indices and atoms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import autos
from .atoms import (
    Atom, EqualitySpec, PatternError, QuadRat, SortMismatchError,
    carrier_contains, format_atom, pick_in_region, region_list, region_of,
    tuple_type, atom_key,
)
from .transfer import Scenario


class ScenarioMismatchError(ValueError):
    """Conditions from different scenarios were combined."""


class ForcingError(ValueError):
    pass


@dataclass(frozen=True)
class Condition:
    """Finite partial injection index -> atom matching j's pattern."""

    scenario: Scenario = field(compare=False, repr=False)
    entries: tuple = ()  # sorted ((index, atom), ...)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(self.entries)))

    def mapping(self) -> dict:
        return dict(self.entries)

    def domain(self) -> tuple:
        return tuple(i for i, _ in self.entries)

    def values(self) -> tuple:
        return tuple(a for _, a in self.entries)

    def __str__(self):
        if not self.entries:
            return "(empty)"
        return "{" + ", ".join(f"{i}->{format_atom(a)}"
                               for i, a in self.entries) + "}"

    def to_json(self):
        return [[i, format_atom(a)] for i, a in self.entries]


def empty_condition(scenario: Scenario) -> Condition:
    return Condition(scenario, ())


def condition(scenario: Scenario, mapping: dict) -> Condition:
    p = Condition(scenario, tuple(mapping.items()))
    ok, why = _condition_check(scenario, p.entries)
    if not ok:
        raise ForcingError(f"not a condition: {why}")
    return p


def _condition_check(scenario: Scenario, entries: tuple):
    indices = [i for i, _ in entries]
    if len(set(indices)) != len(indices):
        return False, "an index appears twice"
    vals = [a for _, a in entries]
    if len(set(vals)) != len(vals):
        return False, "not injective"
    for a in vals:
        if not carrier_contains(scenario.spec, a):
            return False, f"{format_atom(a)} outside the carrier"
    jvals = tuple(scenario.j(i) for i in indices)
    if tuple_type(scenario.spec, tuple(vals)) != tuple_type(scenario.spec, jvals):
        return False, "values do not match the enumeration's pattern"
    return True, ""


def is_condition(scenario: Scenario, mapping: dict) -> bool:
    entries = tuple(sorted(mapping.items()))
    return _condition_check(scenario, entries)[0]


def leq(p: Condition, q: Condition) -> bool:
    """p is stronger than q: p extends q as a function."""
    _same_scenario(p, q)
    return set(q.entries) <= set(p.entries)


def compatible(p: Condition, q: Condition) -> bool:
    """Some condition extends both, i.e. their union is a condition."""
    _same_scenario(p, q)
    merged = p.mapping()
    for i, a in q.entries:
        if merged.setdefault(i, a) != a:
            return False
    return is_condition(p.scenario, merged)


def union_condition(p: Condition, q: Condition) -> Condition:
    if not compatible(p, q):
        raise ForcingError("conditions are incompatible")
    return condition(p.scenario, {**p.mapping(), **q.mapping()})


def _same_scenario(p: Condition, q: Condition):
    if p.scenario.name != q.scenario.name:
        raise ScenarioMismatchError(
            f"{p.scenario.name} vs {q.scenario.name}")


# ---------------------------------------------------------------------------
# Slots: which atoms may extend a condition at a fresh index

def _slot_candidates(p: Condition, index: int, count: int) -> list:
    """Up to `count` atoms a with p + {index -> a} a condition.

    The region of j(index) among the j-values of p's domain is mirrored on
    p's own values; the regions correspond one to one because p has j's
    pattern.
    """
    s = p.scenario
    if index in p.mapping():
        return [p.mapping()[index]]
    jv = s.j(index)
    if isinstance(s.spec, EqualitySpec):
        used = set(p.values())
        out = []
        k = 0
        while len(out) < count:
            a = s.j(k)
            if a not in used:
                out.append(a)
            k += 1
        return out
    jvals = tuple(s.j(i) for i in p.domain())
    regions_j = region_list(s.spec, jvals)
    regions_p = region_list(s.spec, p.values())
    ri = region_of(s.spec, regions_j, jv)
    region = regions_p[ri]
    if region.kind == "point":
        a = pick_in_region(s.spec, region, 1)[0]
        return [] if a in p.values() else [a]
    out = []
    for a in pick_in_region(s.spec, region, count + len(p.entries)):
        if a not in p.values():
            out.append(a)
        if len(out) >= count:
            break
    return out


def splitting_extensions(p: Condition):
    """Two incompatible strengthenings of p, each adding one fresh index."""
    s = p.scenario
    start = max(p.domain(), default=-1) + 1
    for index in range(start, start + 64):
        cands = _slot_candidates(p, index, 2)
        if len(cands) >= 2:
            q = condition(s, {**p.mapping(), index: cands[0]})
            r = condition(s, {**p.mapping(), index: cands[1]})
            if not compatible(q, r):
                return q, r
    raise ForcingError("no splitting index found; enumeration exhausted")


# ---------------------------------------------------------------------------
# Dense sets

@dataclass(frozen=True)
class DomainAt:
    index: int

    def met_by(self, p: Condition) -> bool:
        return self.index in p.mapping()

    def __str__(self):
        return f"dom:{self.index}"


@dataclass(frozen=True)
class RangeAt:
    atom: Atom

    def met_by(self, p: Condition) -> bool:
        return self.atom in p.values()

    def __str__(self):
        return f"ran:{format_atom(self.atom)}"


DenseSpec = object  # DomainAt | RangeAt


def extend_into(p: Condition, d) -> Condition:
    """A strengthening of p inside the dense set d.

    Domain sets extend with the least unused enumeration value fitting the
    pattern slot; range sets for an atom outside B route through absorption:
    straighten p onto the enumeration, move the pulled-back atom into B
    while fixing the domain's image, and read the new index off j.
    """
    s = p.scenario
    if isinstance(d, DomainAt):
        if d.met_by(p):
            return p
        jvals = tuple(s.j(i) for i in p.domain())
        if isinstance(s.spec, EqualitySpec):
            a = _slot_candidates(p, d.index, 1)[0]
            return condition(s, {**p.mapping(), d.index: a})
        regions_j = region_list(s.spec, jvals)
        regions_p = region_list(s.spec, p.values())
        ri = region_of(s.spec, regions_j, s.j(d.index))
        for k in itertools.count():
            if k >= s.enum.scan_cap:
                raise ForcingError("no enumeration value fits the slot")
            v = s.j(k)
            if v in p.values():
                continue
            try:
                if region_of(s.spec, regions_p, v) == ri:
                    return condition(s, {**p.mapping(), d.index: v})
            except PatternError:
                continue
    if isinstance(d, RangeAt):
        if d.met_by(p):
            return p
        a = d.atom
        if not carrier_contains(s.spec, a):
            raise ForcingError(f"{format_atom(a)} outside the carrier")
        if s.in_b(a):
            # find a fresh index whose slot admits a directly
            for k in itertools.count():
                if k >= s.enum.scan_cap:
                    raise ForcingError("no index admits the atom")
                if k in p.mapping():
                    continue
                if is_condition(s, {**p.mapping(), k: a}):
                    return condition(s, {**p.mapping(), k: a})
        # a is outside B: conjugate through the straightening of p
        dom = p.domain()
        jvals = tuple(s.j(i) for i in dom)
        pi = autos.extend_partial(s.spec, jvals, p.values()) if dom \
            else autos.identity(s.spec)
        pulled = autos.invert(pi).apply_atom(a)
        sigma, ce = _absorb_via_scenario(s, jvals, (pulled,))
        if sigma is None:
            raise ForcingError(f"cannot move {format_atom(a)} into B: {ce}")
        b = sigma.apply_atom(pulled)
        beta = s.j_index(b)
        if beta in p.mapping():
            raise ForcingError("absorption landed on a used index")
        return condition(s, {**p.mapping(), beta: a})
    raise TypeError(f"unknown dense set {d!r}")


def _absorb_via_scenario(s: Scenario, fix: tuple, move: tuple):
    from .transfer import _absorb_into_b
    return _absorb_into_b(s, list(fix), list(move))


@dataclass(frozen=True)
class GenericFragment:
    """Finite decreasing chain of conditions meeting finitely many dense
    sets; its union is the readable part of the generic object."""

    chain: tuple
    met: tuple

    @property
    def union(self) -> Condition:
        return self.chain[-1]

    def to_json(self):
        return {"chain": [c.to_json() for c in self.chain],
                "met": [str(d) for d in self.met]}


def build_generic(p0: Condition, dense: Iterable) -> GenericFragment:
    """Finite dense-set iteration starting at p0."""
    chain = [p0]
    met = []
    for d in dense:
        chain.append(extend_into(chain[-1], d))
        met.append(d)
    for d in met:
        if not d.met_by(chain[-1]):
            raise ForcingError(f"dense set {d} not met; extension broke it")
    return GenericFragment(tuple(chain), tuple(met))


def eval_name_f(g: GenericFragment) -> dict:
    """The forced partial bijection: the union condition read as a map."""
    out = g.union.mapping()
    vals = list(out.values())
    if len(set(vals)) != len(vals):
        raise ForcingError("fragment union is not injective")
    return out


# ---------------------------------------------------------------------------
# Names and membership forcing

@dataclass(frozen=True)
class SimpleName:
    """Finitely many labels, each attached to the condition that puts it in."""

    entries: tuple  # ((label, Condition), ...)

    def __post_init__(self):
        labels = [l for l, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise ForcingError("labels must be distinct")

    def condition_of(self, label) -> Condition:
        for l, p in self.entries:
            if l == label:
                return p
        raise KeyError(f"unknown label {label!r}")


def forces_membership(p: Condition, name: SimpleName, label):
    """Decide the label's membership under p: 'In', 'Out', or 'Undecided'
    with one strengthening realizing each verdict."""
    px = name.condition_of(label)
    _same_scenario(p, px)
    if leq(p, px):
        return "In", None
    if not compatible(p, px):
        return "Out", None
    q_in = union_condition(p, px)
    q_out = _refuting_extension(p, px)
    return "Undecided", (q_in, q_out)


def _refuting_extension(p: Condition, px: Condition) -> Condition:
    """A strengthening of p incompatible with px."""
    s = p.scenario
    fresh = [i for i in px.domain() if i not in p.mapping()]
    for i in fresh:
        for a in _slot_candidates(p, i, 3):
            if a == px.mapping()[i]:
                continue
            q = condition(s, {**p.mapping(), i: a})
            if not compatible(q, px):
                return q
    # pinned slots: reuse one of px's values at a different index so the
    # union would break injectivity
    for i in fresh:
        v = px.mapping()[i]
        start = max(list(p.domain()) + list(px.domain())) + 1
        for k in range(start, start + 64):
            if is_condition(s, {**p.mapping(), k: v}):
                return condition(s, {**p.mapping(), k: v})
    raise ForcingError("no refuting extension found")


# ---------------------------------------------------------------------------
# Almost-homogeneity witnesses

@dataclass(frozen=True)
class IndexAuto:
    """Automorphism of the condition poset: a carrier map fixing B setwise,
    conjugated through the enumeration into an index permutation."""

    scenario: Scenario = field(compare=False, repr=False)
    carrier_map: object = None

    def apply_index(self, k: int) -> int:
        s = self.scenario
        return s.j_index(self.carrier_map.apply_atom(s.j(k)))

    def apply_condition(self, p: Condition) -> Condition:
        return condition(p.scenario,
                         {self.apply_index(i): a for i, a in p.entries})

    def to_json(self):
        return {"kind": "conjugated", "carrier": self.carrier_map.to_json()}


def almost_homog_witness(p: Condition, q: Condition) -> IndexAuto:
    """An index automorphism sigma with sigma(p) compatible with q.

    Build a partial index relocation: wherever p's value already sits in q's
    range, align the indices; every other value goes to a fresh index whose
    slot accepts it alongside q.  The relocation lifts to a B-fixing carrier
    map on the enumeration values, whose conjugation is the witness.
    """
    _same_scenario(p, q)
    s = p.scenario
    q_rev = {a: i for i, a in q.entries}
    target: dict = {}
    acc = q.mapping()
    for i, v in p.entries:
        if v in q_rev:
            target[i] = q_rev[v]
            continue
        start = 0
        placed = False
        for k in itertools.count(start):
            if k >= s.enum.scan_cap:
                break
            if k in acc or k in target.values():
                continue
            if is_condition(s, {**acc, k: v}):
                target[i] = k
                acc = {**acc, k: v}
                placed = True
                break
        if not placed:
            raise ForcingError(f"no slot relocates {format_atom(v)}")
    src = tuple(s.j(i) for i in sorted(target))
    dst = tuple(s.j(target[i]) for i in sorted(target))
    if src:
        carrier = autos.extend_partial(s.spec, src, dst)
    else:
        carrier = autos.identity(s.spec)
    sigma = IndexAuto(s, carrier)
    moved = sigma.apply_condition(p)
    if not compatible(moved, q):
        raise ForcingError("relocated condition is not compatible; "
                           "witness construction is broken")
    return sigma
