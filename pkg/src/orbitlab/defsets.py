"""Intensional finitely-supported sets and their decision procedures.

A DefSet denotes { t in A^k : matrix(t; params) } for a first-order matrix
over the structure's language.  Everything observable about it is decided
through the type-pattern machinery: a finite tuple supports the set exactly
when no complete pattern over that tuple is split by the matrix, so support
checks, minimal supports, equivariance, orbit decompositions and emptiness
all reduce to finitely many satisfiability calls, each settled by realizing
one tuple per pattern.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .atoms import (
    Atom, CutSpec, DLOSpec, EqualitySpec, LexSpec, OrdAtom, QuadRat,
    SortMismatchError, StructureSpec, SumSpec, TypePattern, atom_cmp,
    atom_key, carrier_contains, enumerate_types, fixed_atoms, iter_types,
    rational_between, realize_type, tuple_type, format_atom, is_ordered,
    _seg_val, _segments, _make_atom, region_list, region_of, pick_in_region,
)
from .atoms import PointSpec
from .formulas import (
    And, Cmp, Exists, Formula, Lit, Not, Or, Param, Pred, TrueF, Var,
    eval_formula, free_slots, literal_atoms, max_slot, parse_set_builder,
    pretty, qe, satisfiable, shift_params, shift_vars, substitute_var,
    _eval_qf,
)


@dataclass(frozen=True)
class DefSet:
    """Definable set of atom tuples: arity, concrete parameters, matrix."""

    spec: StructureSpec
    arity: int
    params: tuple
    matrix: Formula

    def __post_init__(self):
        for p in self.params:
            if not carrier_contains(self.spec, p):
                raise SortMismatchError(f"parameter {format_atom(p)} "
                                        f"outside the carrier of {self.spec}")
        extra = [s for s in free_slots(self.matrix) if s >= self.arity]
        if extra:
            raise ValueError(f"matrix uses variable slot {min(extra)} "
                             f"beyond arity {self.arity}")

    def __str__(self):
        vars_ = ", ".join(f"x{i}" for i in range(self.arity))
        s = f"{{({vars_}): {pretty(self.matrix)}}}"
        if self.params:
            s += " with " + ", ".join(
                f"y{i}={format_atom(p)}" for i, p in enumerate(self.params))
        return s

    def to_json(self):
        return {"spec": str(self.spec), "arity": self.arity,
                "params": [format_atom(p) for p in self.params],
                "matrix": pretty(self.matrix)}


def defset(spec: StructureSpec, text: str, params: tuple = ()) -> DefSet:
    """Build a DefSet from set-builder text like `{(x): 0<x & x<=5/2}`."""
    arity, matrix = parse_set_builder(text, spec)
    return DefSet(spec, arity, tuple(params), matrix)


@dataclass(frozen=True)
class SupportCertificate:
    """A supporting tuple plus the patterns over it whose union is the set."""

    support: tuple
    patterns: tuple


def member(S: DefSet, t: tuple) -> bool:
    if len(t) != S.arity:
        raise ValueError(f"expected a {S.arity}-tuple, got {len(t)} entries")
    return eval_formula(S.spec, S.matrix, tuple(t), S.params)


# ---------------------------------------------------------------------------
# Boolean algebra

def _merge(S: DefSet, T: DefSet, op) -> DefSet:
    if S.spec != T.spec:
        raise SortMismatchError("sets live over different structures")
    if S.arity != T.arity:
        raise ValueError("boolean operations need equal arities")
    shifted = shift_params(T.matrix, len(S.params))
    return DefSet(S.spec, S.arity, S.params + T.params, op(S.matrix, shifted))


def union(S: DefSet, T: DefSet) -> DefSet:
    return _merge(S, T, Or)


def intersect(S: DefSet, T: DefSet) -> DefSet:
    return _merge(S, T, And)


def complement(S: DefSet) -> DefSet:
    return DefSet(S.spec, S.arity, S.params, Not(S.matrix))


def product(S: DefSet, T: DefSet) -> DefSet:
    if S.spec != T.spec:
        raise SortMismatchError("sets live over different structures")
    m = shift_vars(shift_params(T.matrix, len(S.params)), S.arity)
    return DefSet(S.spec, S.arity + T.arity, S.params + T.params,
                  And(S.matrix, m))


def project(S: DefSet, drop: int) -> DefSet:
    """Existential projection dropping coordinate `drop`."""
    if not 0 <= drop < S.arity:
        raise ValueError(f"no coordinate {drop} in a {S.arity}-ary set")
    fresh = max(max_slot(S.matrix), S.arity) + 1
    m = substitute_var(S.matrix, drop, Var(fresh))
    for slot in range(drop + 1, S.arity):
        m = substitute_var(m, slot, Var(slot - 1))
    return DefSet(S.spec, S.arity - 1, S.params, Exists(fresh, "", m))


def is_empty(S: DefSet) -> bool:
    return not satisfiable(S.spec, S.matrix, S.params, arity=S.arity)


def is_equal(S: DefSet, T: DefSet) -> bool:
    """Extensional equality, via emptiness of the symmetric difference."""
    diff = union(intersect(S, complement(T)), intersect(complement(S), T))
    return is_empty(diff)


# ---------------------------------------------------------------------------
# Supports through patterns

def _landmark_atoms(S: DefSet) -> tuple:
    out = list(dict.fromkeys(S.params))
    for a in literal_atoms(S.matrix):
        if a not in out:
            out.append(a)
    return tuple(out)


def _pattern_split_report(S: DefSet, base: tuple):
    """Group the full patterns over base + landmarks by their restriction to
    base, recording the matrix truth of each group member.

    The matrix truth is constant on each full pattern, so a base pattern is
    split exactly when its group contains both truths.
    """
    g = qe(S.spec, S.matrix)
    extended = tuple(base) + tuple(
        a for a in _landmark_atoms(S) if a not in base)
    nb = len(base)
    groups: dict = {}
    for t in iter_types(S.spec, S.arity, extended):
        xs = realize_type(S.spec, t, extended)
        truth = _eval_qf(S.spec, g, dict(enumerate(xs)), S.params)
        key = tuple_type(S.spec, xs, tuple(base))
        entry = groups.setdefault(key, {True: None, False: None})
        if entry[truth] is None:
            entry[truth] = xs
    return groups


def support_check(S: DefSet, base) -> bool:
    """True iff the tuple supports the set: no complete pattern over the
    tuple contains both members and non-members."""
    base = tuple(base)
    for a in base:
        if not carrier_contains(S.spec, a):
            raise SortMismatchError(f"{format_atom(a)} outside the carrier")
    groups = _pattern_split_report(S, base)
    return all(e[True] is None or e[False] is None for e in groups.values())


def split_witness(S: DefSet, base) -> Optional[tuple]:
    """A pair (member, non-member) with equal type over base, if any."""
    groups = _pattern_split_report(S, tuple(base))
    for e in groups.values():
        if e[True] is not None and e[False] is not None:
            return (e[True], e[False])
    return None


def equivariant(S: DefSet) -> bool:
    return support_check(S, ())


def minimal_support(S: DefSet):
    """A minimal supporting set of atoms, with a pattern certificate.

    Starts from the parameters and literals syntactically present (they
    always support the set) and greedily drops atoms while the support check
    stays true; the check being exact, the result is minimal.  Raises if the
    starting tuple unexpectedly fails, which would mean the matrix machinery
    is broken.
    """
    candidates = list(_landmark_atoms(S))
    if not support_check(S, tuple(candidates)):
        raise AssertionError("parameters plus literals must support the set")
    changed = True
    while changed:
        changed = False
        for a in list(candidates):
            trial = [b for b in candidates if b != a]
            if support_check(S, tuple(trial)):
                candidates = trial
                changed = True
                break
    support = set(candidates)
    patterns = orbit_decompose(S, tuple(sorted(candidates, key=_canon_key)))
    return support, SupportCertificate(tuple(sorted(candidates, key=_canon_key)),
                                       tuple(patterns))


def _canon_key(a: Atom):
    return atom_key(a)


def orbit_decompose(S: DefSet, base: Optional[tuple] = None) -> list:
    """The patterns over a supporting tuple whose realizations union to S.

    With no base given, the minimal support is used.  The patterns are
    pairwise inconsistent by construction and each is entirely inside S.
    """
    if base is None:
        support, cert = minimal_support(S)
        return list(cert.patterns)
    base = tuple(base)
    groups = _pattern_split_report(S, base)
    out = []
    for key, e in groups.items():
        if e[False] is not None and e[True] is not None:
            raise ValueError("the given tuple does not support the set")
        if e[True] is not None:
            out.append(key)
    return out


def orbit_count(spec: StructureSpec, n: int, bound: int = 6) -> int:
    """Number of orbits of n-tuples, i.e. patterns over no parameters."""
    if n > bound:
        raise ValueError(f"arity {n} exceeds the configured bound {bound}")
    return sum(1 for _ in iter_types(spec, n, ()))


# ---------------------------------------------------------------------------
# Cut supports and mutual symmetry

def cut_supported(spec: StructureSpec, cut: CutSpec, base: tuple):
    """Whether a finite tuple supports the cut predicate over the structure.

    True iff the cutpoint lies in the definable closure of the tuple (the
    tuple plus named points); otherwise a same-type pair straddling the cut
    is returned as counterexample.
    """
    if not is_ordered(spec):
        raise SortMismatchError("cut predicates live over ordered structures")
    base_vals = {_seg_val(spec, a) for a in base}
    named = {_seg_val(spec, a) for a in fixed_atoms(spec)}
    cut_positions = set()
    for si, seg in enumerate(_segments(spec)):
        if isinstance(seg, DLOSpec):
            for c in seg.cuts:
                cut_positions.add((si, c.cutpoint))
    target = _locate_cutpoint(spec, cut)
    if target in base_vals | named or target in cut_positions:
        return True, None
    # find the landmark gap holding the cutpoint and straddle it
    seg_idx, g = target
    lows = [v for s, v in base_vals | named if s == seg_idx and v is not None and v < g]
    highs = [v for s, v in base_vals | named if s == seg_idx and v is not None and v > g]
    lo = max(lows) if lows else None
    hi = min(highs) if highs else None
    below = rational_between(lo, g)
    above = rational_between(g, hi)
    pair = (_make_atom(spec, seg_idx, QuadRat.of(below)),
            _make_atom(spec, seg_idx, QuadRat.of(above)))
    return False, pair


def _locate_cutpoint(spec, cut: CutSpec):
    """Segment holding the cutpoint (single-segment structures: segment 0)."""
    segs = _segments(spec)
    if len(segs) == 1:
        return (0, cut.cutpoint)
    # over sums a cut belongs to the part whose spec declares it
    for si, seg in enumerate(segs):
        if isinstance(seg, DLOSpec) and cut in seg.cuts:
            return (si, cut.cutpoint)
    return (0, cut.cutpoint)


@dataclass(frozen=True)
class SymmetryVerdict:
    verdict: str  # 'mutually-symmetric' | 'one-way' | 'incomparable'
    support_ab: Optional[tuple]  # supports A's extras over B, if any
    support_ba: Optional[tuple]
    detail: dict

    def __str__(self):
        return self.verdict


def _same_carrier(a: StructureSpec, b: StructureSpec) -> bool:
    if isinstance(a, EqualitySpec) and isinstance(b, EqualitySpec):
        return True
    if isinstance(a, DLOSpec) and isinstance(b, DLOSpec):
        return a.field == b.field
    if isinstance(a, SumSpec) and isinstance(b, SumSpec):
        return len(a.parts) == len(b.parts) and all(
            type(p) is type(q) and (isinstance(p, PointSpec) or p.field == q.field)
            for p, q in zip(a.parts, b.parts))
    return False


def _direction(spec_from: StructureSpec, spec_over: StructureSpec):
    """Search a finite tuple making every extra of spec_from (constants and
    cuts) a union of spec_over's types; None if some predicate cannot be
    finitely supported."""
    support: list = []
    report: list = []
    if not is_ordered(spec_from):
        return support, report
    over_named = {_seg_val(spec_over, a) for a in fixed_atoms(spec_over)}
    for si, seg in enumerate(_segments(spec_from)):
        if not isinstance(seg, DLOSpec):
            continue
        for c in seg.constants:
            pos = (si, c) if isinstance(spec_from, SumSpec) else (0, c)
            atom = _make_atom(spec_over, pos[0], c)
            if pos in over_named:
                report.append((f"constant {format_atom(atom)}", "named", None))
                continue
            # a singleton {x = c} is supported by (c); confirm via the
            # pattern-split test
            sing = DefSet(spec_over, 1, (atom,),
                          Cmp("=", Var(0), Param(0)))
            ok = support_check(sing, (atom,))
            if not ok:
                return None, report + [(f"constant {format_atom(atom)}", "fail", None)]
            support.append(atom)
            report.append((f"constant {format_atom(atom)}", "supported", (atom,)))
        for cut in seg.cuts:
            ok, pair = cut_supported(spec_over, cut, ())
            if ok:
                report.append((f"cut {cut}", "definable", None))
                continue
            if spec_over_field_contains(spec_over, si, cut.cutpoint):
                atom = _make_atom(spec_over, si, cut.cutpoint)
                ok2, _ = cut_supported(spec_over, cut, (atom,))
                if ok2:
                    support.append(atom)
                    report.append((f"cut {cut}", "supported", (atom,)))
                    continue
            return None, report + [(f"cut {cut}", "not finitely supported", pair)]
    return support, report


def spec_over_field_contains(spec_over, seg_idx: int, v: QuadRat) -> bool:
    seg = _segments(spec_over)[seg_idx]
    return isinstance(seg, DLOSpec) and (seg.field == "Q2" or v.is_rational)


def mutual_symmetry(spec_a: StructureSpec, spec_b: StructureSpec) -> SymmetryVerdict:
    """Decide whether each structure is finitely supported over the other.

    Mutually symmetric structures generate the same symmetric universe; the
    verdict carries the supporting tuples or the failing predicate with a
    same-type straddling pair.
    """
    if not _same_carrier(spec_a, spec_b):
        raise SortMismatchError("structures must share a carrier")
    ab, rep_ab = _direction(spec_a, spec_b)
    ba, rep_ba = _direction(spec_b, spec_a)
    detail = {"a_over_b": rep_ab, "b_over_a": rep_ba}
    if ab is not None and ba is not None:
        return SymmetryVerdict("mutually-symmetric", tuple(ab), tuple(ba), detail)
    if ab is not None or ba is not None:
        return SymmetryVerdict(
            "one-way", tuple(ab) if ab is not None else None,
            tuple(ba) if ba is not None else None, detail)
    return SymmetryVerdict("incomparable", None, None, detail)
