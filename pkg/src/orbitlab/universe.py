"""Hereditarily finite sets over atoms: the extensional brute-force side.

HF sets are the desk-scale fragment of the full universe: atoms, plus finite
sets of things already built.  They give exact, enumeration-based answers
(supports, stabilizer comparisons, membership in a symmetric universe) that
the intensional machinery in `defsets` is checked against.

Support tests quantify over a group that is infinite even here, so they run
over a finite sufficient family: for equality atoms, transpositions moving
an occurring atom (optionally through one fresh atom standing for the rest
of the supply); for dense orders, interpolated maps sliding one occurring
atom into each order slot around the others.  Exactness of the family is
validated in the test suite against exhaustive permutation search on small
pools.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from . import autos
from .atoms import (
    Atom, DLOSpec, EqAtom, EqualitySpec, OrdAtom, PatternError, QuadRat,
    SortMismatchError, StructureSpec, SumAtom, SumSpec, atom_cmp, atom_key,
    carrier_contains, fixed_atoms, parse_atom, pick_in_region, region_list,
    region_of, format_atom, is_ordered,
)
from .autos import Automorphism


@dataclass(frozen=True)
class HFSet:
    """Hereditarily finite set or atom leaf, in canonical form.

    Children are deduplicated and sorted by a fixed code order (atoms before
    sets, then lexicographically), so structural equality is extensional
    equality.
    """

    atom: Optional[Atom] = None
    children: Optional[tuple] = None

    def __post_init__(self):
        if (self.atom is None) == (self.children is None):
            raise ValueError("an HF value is an atom leaf or a set, not both")

    @property
    def is_atom(self) -> bool:
        return self.atom is not None

    def __str__(self):
        if self.is_atom:
            return format_atom(self.atom)
        return "{" + ", ".join(str(c) for c in self.children) + "}"

    def __len__(self):
        if self.is_atom:
            raise TypeError("an atom has no elements")
        return len(self.children)


def hf_atom(a: Atom) -> HFSet:
    return HFSet(atom=a)


def hf_set(children: Iterable[HFSet] = ()) -> HFSet:
    uniq = {c: None for c in children}
    return HFSet(children=tuple(sorted(uniq, key=_code)))


def _code(x: HFSet):
    if x.is_atom:
        return (0, atom_key(x.atom))
    return (1, tuple(_code(c) for c in x.children))


EMPTY = hf_set()


def hf_pair(a: HFSet, b: HFSet) -> HFSet:
    """Kuratowski ordered pair {{a},{a,b}}."""
    return hf_set([hf_set([a]), hf_set([a, b])])


def hf_tuple(items: Iterable[HFSet]) -> HFSet:
    items = list(items)
    if not items:
        return EMPTY
    out = items[0]
    for nxt in items[1:]:
        out = hf_pair(out, nxt)
    return out


def parse_hf(text: str, spec: Optional[StructureSpec] = None) -> HFSet:
    """Parse HF literals like `{a0, {a1}, {}}`."""
    s = text.strip()
    pos = 0

    def parse() -> HFSet:
        nonlocal pos
        while pos < len(s) and s[pos].isspace():
            pos += 1
        if pos >= len(s):
            raise ValueError("unexpected end of HF literal")
        if s[pos] == "{":
            pos += 1
            items = []
            while True:
                while pos < len(s) and s[pos] in ", \t":
                    pos += 1
                if pos < len(s) and s[pos] == "}":
                    pos += 1
                    return hf_set(items)
                items.append(parse())
        j = pos
        while j < len(s) and s[j] not in ",}{":
            j += 1
        token = s[pos:j].strip()
        pos = j
        if not token:
            raise ValueError(f"bad HF literal near index {pos}")
        return hf_atom(parse_atom(token, spec))

    out = parse()
    while pos < len(s) and s[pos].isspace():
        pos += 1
    if pos != len(s):
        raise ValueError(f"trailing input in HF literal at index {pos}")
    return out


def to_json(x: HFSet):
    if x.is_atom:
        return format_atom(x.atom)
    return [to_json(c) for c in x.children]


# ---------------------------------------------------------------------------
# Action, transitive closure, purity

def act(pi: Automorphism, x: HFSet) -> HFSet:
    """Pointwise image of an HF set, re-canonicalized."""
    if x.is_atom:
        return hf_atom(pi.apply_atom(x.atom))
    return hf_set(act(pi, c) for c in x.children)


def tc(x: HFSet) -> set:
    """Transitive closure: every element reached by iterated membership."""
    out: set = set()
    stack = list(x.children) if not x.is_atom else []
    if x.is_atom:
        return out
    while stack:
        y = stack.pop()
        if y in out:
            continue
        out.add(y)
        if not y.is_atom:
            stack.extend(y.children)
    return out


def is_pure(x: HFSet) -> bool:
    return not x.is_atom and not any(y.is_atom for y in tc(x))


def atoms_of(x: HFSet) -> set:
    if x.is_atom:
        return {x.atom}
    return {y.atom for y in tc(x) if y.is_atom}


def rank(x: HFSet) -> int:
    if x.is_atom:
        return 0
    if not x.children:
        return 0
    return 1 + max(rank(c) for c in x.children)


# ---------------------------------------------------------------------------
# Supports

def _fresh_eq_atoms(used: set, k: int) -> list:
    out, i = [], 0
    have = {a.index for a in used if isinstance(a, EqAtom)}
    while len(out) < k:
        if i not in have:
            out.append(EqAtom(i))
        i += 1
    return out


def _support_family(spec: StructureSpec, x: HFSet, kept: tuple,
                    pool: Optional[tuple]) -> Iterable[Automorphism]:
    """Finite family of kept-fixing maps sufficient to detect a moved x.

    With a pool, maps stay inside the pool (exact for exhaustive search over
    pool permutations); without, one fresh atom per site stands for the rest
    of the atom supply.
    """
    occurring = sorted(atoms_of(x) - set(kept), key=atom_key)
    keptset = set(kept)
    if isinstance(spec, EqualitySpec):
        if pool is not None:
            candidates = [a for a in pool if a not in keptset]
        else:
            fresh = _fresh_eq_atoms(atoms_of(x) | keptset, 1)
            candidates = sorted(set(occurring) | set(fresh), key=atom_key)
        for v in occurring:
            for w in candidates:
                if w == v:
                    continue
                yield autos.extend_partial(spec, (v, w), (w, v))
        return
    if not is_ordered(spec):
        raise SortMismatchError(f"no support family over {spec}")
    # dense orders: slide each occurring atom to a fresh point of its own
    # order slot relative to the other landmarks; anything sitting at a named
    # point cannot move and anything movable is detected by one fresh image,
    # since the image atom cannot occur in x
    for v in occurring:
        others = tuple(a for a in sorted(atoms_of(x) | keptset, key=atom_key)
                       if a != v)
        if pool is not None and v not in pool:
            continue
        regions = region_list(spec, others)
        try:
            ri = region_of(spec, regions, v)
        except PatternError:
            continue
        if regions[ri].kind != "interval":
            continue  # v sits at a named point; no map can move it
        targets = [t for t in pick_in_region(spec, regions[ri], 3)
                   if t != v and t not in others]
        for t in targets[:2]:
            yield autos.extend_partial(spec, others + (v,), others + (t,))


def hf_supported_by(spec: StructureSpec, x: HFSet, support: tuple,
                    pool: Optional[tuple] = None) -> bool:
    """True iff every structure map fixing `support` pointwise fixes x.

    Decided over the finite sufficient family; with `pool`, relative to the
    atoms of the pool only.
    """
    support = tuple(dict.fromkeys(support))
    for pi in _support_family(spec, x, support, pool):
        if act(pi, x) != x:
            return False
    return True


def hf_minimal_support(spec: StructureSpec, x: HFSet,
                       pool: Optional[tuple] = None) -> set:
    """A support of x no proper subset of which supports x."""
    current = sorted(atoms_of(x), key=atom_key)
    changed = True
    while changed:
        changed = False
        for a in list(current):
            trial = tuple(b for b in current if b != a)
            if hf_supported_by(spec, x, trial, pool):
                current = list(trial)
                changed = True
                break
    if not hf_supported_by(spec, x, tuple(current), pool):
        raise AssertionError("atoms of x do not support x; family is broken")
    return set(current)


# ---------------------------------------------------------------------------
# Stabilizer descriptors and filter bases

StabDescriptor = tuple  # tuple of atoms, denoting their pointwise stabilizer


def stab_descriptor(atoms: Iterable[Atom]) -> StabDescriptor:
    return tuple(dict.fromkeys(atoms))


def stab_leq(spec: StructureSpec, small: tuple, big: tuple):
    """Whether the pointwise stabilizer of `small` is contained in that of
    `big`; on failure also returns a small-fixing map moving some atom of big.

    For the implemented structures the definable closure of a tuple is the
    tuple plus the named points, so containment is exactly big being inside
    small plus the named points.
    """
    smallset = set(small) | set(fixed_atoms(spec))
    offenders = [b for b in big if b not in smallset]
    if not offenders:
        return True, None
    b = offenders[0]
    if isinstance(spec, EqualitySpec):
        fresh = _fresh_eq_atoms(set(small) | set(big), 1)[0]
        witness = autos.extend_partial(spec, (b, fresh), (fresh, b))
    else:
        others = tuple(a for a in sorted(set(small) | set(big) - {b}, key=atom_key)
                       if a != b)
        regions = region_list(spec, others)
        ri = region_of(spec, regions, b)
        target = next(t for t in pick_in_region(spec, regions[ri], 2) if t != b)
        witness = autos.extend_partial(spec, others + (b,), others + (target,))
    return False, witness


def filter_intersect(d1: StabDescriptor, d2: StabDescriptor) -> StabDescriptor:
    return stab_descriptor(tuple(d1) + tuple(d2))


def filter_conjugate(pi: Automorphism, d: StabDescriptor) -> StabDescriptor:
    return stab_descriptor(tuple(pi.apply_atom(a) for a in d))


@dataclass(frozen=True)
class FilterBase:
    """Finite filter base of pointwise stabilizers, or the full finite-support
    base (every finite tuple of atoms)."""

    descriptors: tuple = ()
    all_finite_tuples: bool = False

    @staticmethod
    def finite_support() -> "FilterBase":
        return FilterBase(all_finite_tuples=True)

    @staticmethod
    def equivariant_only() -> "FilterBase":
        return FilterBase(descriptors=((),))

    def closure(self) -> list:
        """All finite intersections of the base's descriptors."""
        out: list = []
        for r in range(1, len(self.descriptors) + 1):
            for combo in itertools.combinations(self.descriptors, r):
                d = stab_descriptor(itertools.chain(*combo))
                if d not in out:
                    out.append(d)
        return out or [()]


def in_pm(spec: StructureSpec, x: HFSet, base: FilterBase,
          pool: Optional[tuple] = None) -> bool:
    """Membership in the symmetric universe generated by the filter base:
    every set in {x} plus its transitive closure is supported by some
    descriptor from the base's closure."""
    members = [x] + [y for y in tc(x)]
    if base.all_finite_tuples:
        # every HF value is supported by the atoms occurring in it
        return True
    closure = base.closure()
    for y in members:
        if y.is_atom:
            ok = any(y.atom in d for d in closure)
        else:
            ok = any(hf_supported_by(spec, y, d, pool) for d in closure)
        if not ok:
            return False
    return True


# ---------------------------------------------------------------------------
# Pure-set encoding with atom cells

@dataclass(frozen=True)
class VStarNode:
    """Tagged encoding of a universe-with-atoms inside pure sets: payload
    cells tagged 1 become atoms, set cells tagged 0 collect children."""

    tag: int
    payload: Optional[object] = None  # tag 1: any hashable pool label
    children: Optional[tuple] = None  # tag 0: child nodes

    def __post_init__(self):
        if self.tag not in (0, 1):
            raise ValueError("tags are 0 (set) or 1 (atom cell)")
        if self.tag == 1 and self.children is not None:
            raise ValueError("atom cells have no children")
        if self.tag == 0 and self.children is None:
            raise ValueError("set cells need children")


def vstar_atom(payload) -> VStarNode:
    return VStarNode(1, payload=payload)


def vstar_set(children: Iterable[VStarNode]) -> VStarNode:
    uniq = {c: None for c in children}
    return VStarNode(0, children=tuple(sorted(uniq, key=_vcode)))


def _vcode(v: VStarNode):
    if v.tag == 1:
        return (1, str(v.payload))
    return (0, tuple(_vcode(c) for c in v.children))


def f_map(x: HFSet) -> VStarNode:
    """The canonical embedding of a pure set as a tagged set cell."""
    if x.is_atom:
        raise ValueError("only pure sets embed; atoms are built by collapse")
    return vstar_set(f_map(c) for c in x.children)


def vstar_encode(x: HFSet) -> VStarNode:
    """f_map with a purity check up front."""
    if x.is_atom or not is_pure(x):
        raise ValueError(f"{x} is not a pure set")
    return f_map(x)


def collapse(v: VStarNode, pool_to_atom: dict) -> HFSet:
    """Decode a tagged node back into an HF set, sending atom cells through
    the given pool-to-atom bijection."""
    if v.tag == 1:
        if v.payload not in pool_to_atom:
            raise ValueError(f"pool too small: no atom for {v.payload!r}")
        return hf_atom(pool_to_atom[v.payload])
    return hf_set(collapse(c, pool_to_atom) for c in v.children)


def pure_sets_of_rank(max_rank: int) -> list:
    """All pure HF sets x with x contained in the max_rank-th stage."""
    stage: list = []
    for _ in range(max_rank):
        subsets = []
        for r in range(len(stage) + 1):
            for combo in itertools.combinations(stage, r):
                subsets.append(hf_set(combo))
        stage = subsets
    return stage
