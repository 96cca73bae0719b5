"""Concrete automorphisms and the constructive witness procedures.

Three finitely-described families, one per structure kind: finite
permutations for equality atoms, strictly increasing piecewise-linear
bijections with coefficients in the ambient field for dense orders, and
part-wise glued maps for ordered sums.  Density of these families in the
full automorphism groups is what makes them sufficient: every finite
structure-preserving partial map extends to a member.

Constructions: `extend_partial` maps one tuple onto another of the same
type by two-point interpolation between consecutive anchors with slope-one
unbounded ends; `restrict_witness` is its rational-data specialization,
which therefore fixes the rational subline setwise; `absorb` moves a finite
set of quadratic irrationals onto rationals while fixing a given finite
rational set, choosing each target inside its order slot by mediant search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .atoms import (
    Atom, CutSpec, DLOSpec, EqAtom, EqualitySpec, OrdAtom, PatternError,
    PointSpec, QuadRat, SortMismatchError, StructureSpec, SumAtom, SumSpec,
    atom_cmp, carrier_contains, cut_holds, format_atom, predicate_count,
    rational_between, tuple_type, _segments, _seg_val, _make_atom,
)


class TypeMismatchError(ValueError):
    """The two tuples do not satisfy the same atomic facts."""


class AutomorphismError(ValueError):
    """A constructed map violates the structure it should preserve."""


# ---------------------------------------------------------------------------
# Finite permutations (equality atoms)

@dataclass(frozen=True)
class FinPerm:
    """Permutation of equality atoms fixing all but finitely many of them."""

    spec: EqualitySpec
    mapping: tuple  # sorted tuple of (src index, dst index), no fixed points

    @staticmethod
    def from_dict(spec: EqualitySpec, d: dict) -> "FinPerm":
        moved = {k: v for k, v in d.items() if k != v}
        if sorted(moved.keys()) != sorted(moved.values()):
            raise AutomorphismError("assignment list is not a permutation")
        return FinPerm(spec, tuple(sorted(moved.items())))

    @staticmethod
    def identity(spec: EqualitySpec) -> "FinPerm":
        return FinPerm(spec, ())

    def as_dict(self) -> dict:
        return dict(self.mapping)

    def apply_atom(self, a: Atom) -> Atom:
        if not isinstance(a, EqAtom):
            raise SortMismatchError(f"{a} is not an equality atom")
        return EqAtom(dict(self.mapping).get(a.index, a.index))

    def compose(self, other: "FinPerm") -> "FinPerm":
        # (self . other)(x) = self(other(x))
        d_other = other.as_dict()
        d_self = self.as_dict()
        keys = set(d_other) | set(d_self)
        return FinPerm.from_dict(
            self.spec, {k: d_self.get(d_other.get(k, k), d_other.get(k, k))
                        for k in keys})

    def invert(self) -> "FinPerm":
        return FinPerm(self.spec, tuple(sorted((v, k) for k, v in self.mapping)))

    def to_json(self):
        return {"kind": "finperm", "assign": [[k, v] for k, v in self.mapping]}

    def __str__(self):
        if not self.mapping:
            return "id"
        return " ".join(f"a{k}->a{v}" for k, v in self.mapping)


# ---------------------------------------------------------------------------
# Piecewise-linear maps (dense orders)

@dataclass(frozen=True)
class PwLinear:
    """Strictly increasing piecewise-linear bijection of a dense order.

    pieces[i] = (slope, offset) applies between breakpoints[i-1] and
    breakpoints[i]; the first and last pieces are unbounded.  Continuity at
    every breakpoint and positive slopes are enforced, which makes the map a
    strictly increasing bijection of the field onto itself.
    """

    spec: DLOSpec
    breakpoints: tuple
    pieces: tuple

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise AutomorphismError("need one more piece than breakpoints")
        for b0, b1 in zip(self.breakpoints, self.breakpoints[1:]):
            if not b0 < b1:
                raise AutomorphismError("breakpoints must be strictly increasing")
        for s, o in self.pieces:
            if not s > 0:
                raise AutomorphismError("slopes must be positive")
            if self.spec.field == "Q" and not (s.is_rational and o.is_rational):
                raise AutomorphismError("coefficients must lie in the field Q")
        for i, b in enumerate(self.breakpoints):
            left = self.pieces[i]
            right = self.pieces[i + 1]
            if left[0] * b + left[1] != right[0] * b + right[1]:
                raise AutomorphismError(f"discontinuity at breakpoint {b}")
            if self.spec.field == "Q" and not b.is_rational:
                raise AutomorphismError("breakpoints must lie in the field Q")
        for c in self.spec.constants:
            if self.apply_value(c) != c:
                raise AutomorphismError(f"constant {c} is not fixed")
        for cut in self.spec.cuts:
            if self.apply_value(cut.cutpoint) != cut.cutpoint:
                raise AutomorphismError(f"cut at {cut.cutpoint} is not preserved")

    @staticmethod
    def identity(spec: DLOSpec) -> "PwLinear":
        return PwLinear(spec, (), ((QuadRat.of(1), QuadRat.of(0)),))

    def apply_value(self, v: QuadRat) -> QuadRat:
        i = 0
        while i < len(self.breakpoints) and self.breakpoints[i] < v:
            i += 1
        # at a breakpoint both adjacent pieces agree
        s, o = self.pieces[i]
        return s * v + o

    def apply_atom(self, a: Atom) -> Atom:
        if not isinstance(a, OrdAtom):
            raise SortMismatchError(f"{a} is not a dense-order atom")
        return OrdAtom(self.apply_value(a.value))

    def invert(self) -> "PwLinear":
        bps = tuple(self.apply_value(b) for b in self.breakpoints)
        pieces = tuple((QuadRat.of(1) / s, -o / s) for s, o in self.pieces)
        return PwLinear(self.spec, bps, pieces)

    def compose(self, other: "PwLinear") -> "PwLinear":
        # (self . other)(x) = self(other(x))
        inv = other.invert()
        cuts = sorted(set(other.breakpoints)
                      | {inv.apply_value(b) for b in self.breakpoints})
        pieces = []
        probes = []
        if not cuts:
            probes = [QuadRat.of(0)]
        else:
            probes.append(cuts[0] - QuadRat.of(1))
            for b0, b1 in zip(cuts, cuts[1:]):
                probes.append(b0 + (b1 - b0) / QuadRat.of(2))
            probes.append(cuts[-1] + QuadRat.of(1))
        for p in probes:
            s1, o1 = self._piece_at(other.apply_value(p))
            s2, o2 = other._piece_at(p)
            pieces.append((s1 * s2, s1 * o2 + o1))
        return _normalized_pwlinear(self.spec, tuple(cuts), tuple(pieces))

    def _piece_at(self, v: QuadRat):
        i = 0
        while i < len(self.breakpoints) and self.breakpoints[i] < v:
            i += 1
        return self.pieces[i]

    @property
    def is_rational_data(self) -> bool:
        return all(b.is_rational for b in self.breakpoints) and \
            all(s.is_rational and o.is_rational for s, o in self.pieces)

    def to_json(self):
        return {"kind": "pwlinear",
                "breakpoints": [str(b) for b in self.breakpoints],
                "pieces": [[str(s), str(o)] for s, o in self.pieces]}

    def __str__(self):
        if not self.breakpoints:
            s, o = self.pieces[0]
            return f"x -> {s}*x + {o}"
        return f"pwlinear with breakpoints {[str(b) for b in self.breakpoints]}"


def _normalized_pwlinear(spec, bps, pieces) -> PwLinear:
    out_b, out_p = [], [pieces[0]]
    for b, p in zip(bps, pieces[1:]):
        if p == out_p[-1]:
            continue
        out_b.append(b)
        out_p.append(p)
    return PwLinear(spec, tuple(out_b), tuple(out_p))


# ---------------------------------------------------------------------------
# Glued maps (ordered sums)

@dataclass(frozen=True)
class GluedAuto:
    """One automorphism per dense part of an ordered sum; stars are fixed."""

    spec: SumSpec
    part_maps: tuple  # PwLinear per dense part, None per point part

    def __post_init__(self):
        if len(self.part_maps) != len(self.spec.parts):
            raise AutomorphismError("one part map per part is required")
        for part, m in zip(self.spec.parts, self.part_maps):
            if isinstance(part, PointSpec):
                if m is not None:
                    raise AutomorphismError("point parts map identically")
            else:
                if not isinstance(m, PwLinear):
                    raise AutomorphismError("dense parts need a piecewise map")

    @staticmethod
    def identity(spec: SumSpec) -> "GluedAuto":
        return GluedAuto(spec, tuple(
            None if isinstance(p, PointSpec) else PwLinear.identity(p)
            for p in spec.parts))

    def apply_atom(self, a: Atom) -> Atom:
        if not isinstance(a, SumAtom) or not 0 <= a.part < len(self.spec.parts):
            raise SortMismatchError(f"{a} is not an atom of {self.spec}")
        if a.value is None:
            return a
        return SumAtom(a.part, self.part_maps[a.part].apply_value(a.value))

    def compose(self, other: "GluedAuto") -> "GluedAuto":
        return GluedAuto(self.spec, tuple(
            None if m is None else m.compose(o)
            for m, o in zip(self.part_maps, other.part_maps)))

    def invert(self) -> "GluedAuto":
        return GluedAuto(self.spec, tuple(
            None if m is None else m.invert() for m in self.part_maps))

    def to_json(self):
        return {"kind": "glued",
                "parts": [None if m is None else m.to_json()
                          for m in self.part_maps]}

    def __str__(self):
        return "glued(" + ", ".join(str(m) for m in self.part_maps) + ")"


Automorphism = Union[FinPerm, PwLinear, GluedAuto]


def identity(spec: StructureSpec) -> Automorphism:
    if isinstance(spec, EqualitySpec):
        return FinPerm.identity(spec)
    if isinstance(spec, DLOSpec):
        return PwLinear.identity(spec)
    if isinstance(spec, SumSpec):
        return GluedAuto.identity(spec)
    raise SortMismatchError(f"no automorphism family for {spec}")


def compose(pi: Automorphism, sigma: Automorphism) -> Automorphism:
    """apply(compose(pi, sigma), x) = apply(pi, apply(sigma, x))."""
    if pi.spec != sigma.spec:
        raise SortMismatchError("cannot compose maps of different structures")
    return pi.compose(sigma)


def invert(pi: Automorphism) -> Automorphism:
    return pi.invert()


def apply(pi: Automorphism, x):
    """Apply an automorphism to an atom, tuple, definable set, or HF set."""
    if isinstance(x, (EqAtom, OrdAtom, SumAtom)):
        return pi.apply_atom(x)
    if isinstance(x, tuple):
        return tuple(apply(pi, y) for y in x)
    # definable sets move by their parameters; hereditarily finite sets move
    # pointwise (resolved lazily to avoid import cycles)
    from .defsets import DefSet
    if isinstance(x, DefSet):
        return DefSet(x.spec, x.arity, tuple(pi.apply_atom(p) for p in x.params),
                      x.matrix)
    from .universe import HFSet, act
    if isinstance(x, HFSet):
        return act(pi, x)
    raise TypeError(f"cannot apply an automorphism to {x!r}")


# ---------------------------------------------------------------------------
# Interpolation

def _separating_fact(spec, src, dst) -> str:
    """Human-readable atomic fact separating the two tuples' types."""
    for i, j in itertools.combinations(range(len(src)), 2):
        a = atom_cmp(spec, src[i], src[j])
        b = atom_cmp(spec, dst[i], dst[j])
        if a != b:
            return f"positions {i},{j}: {a} vs {b}"
    for i in range(len(src)):
        for k in range(predicate_count(spec)):
            if cut_holds(spec, k, src[i]) != cut_holds(spec, k, dst[i]):
                return f"position {i}: predicate P{k} differs"
        from .atoms import fixed_atoms
        for f in fixed_atoms(spec):
            a = atom_cmp(spec, src[i], f)
            b = atom_cmp(spec, dst[i], f)
            if a != b:
                return f"position {i} vs {format_atom(f)}: {a} vs {b}"
    return "types differ"


def extend_partial(spec: StructureSpec, src: tuple, dst: tuple) -> Automorphism:
    """An automorphism mapping src onto dst pointwise.

    Requires tuple_type(src) == tuple_type(dst) and distinct entries within
    each tuple.  For dense orders the map is the canonical interpolation:
    linear between consecutive anchors, slope one outside.
    """
    src, dst = tuple(src), tuple(dst)
    if len(src) != len(dst):
        raise TypeMismatchError("tuples must have equal length")
    if len(set(src)) != len(src) or len(set(dst)) != len(dst):
        raise TypeMismatchError("entries must be distinct within each tuple")
    if tuple_type(spec, src) != tuple_type(spec, dst):
        raise TypeMismatchError(
            f"type mismatch: {_separating_fact(spec, src, dst)}")
    if isinstance(spec, EqualitySpec):
        return _extend_finperm(spec, src, dst)
    if isinstance(spec, DLOSpec):
        return _interpolate_dlo(spec, [(a.value, b.value) for a, b in zip(src, dst)])
    if isinstance(spec, SumSpec):
        maps = []
        for part_idx, part in enumerate(spec.parts):
            if isinstance(part, PointSpec):
                maps.append(None)
                continue
            pairs = [(a.value, b.value) for a, b in zip(src, dst)
                     if a.part == part_idx]
            maps.append(_interpolate_dlo(part, pairs))
        return GluedAuto(spec, tuple(maps))
    raise SortMismatchError(f"no automorphism family for {spec}")


def _extend_finperm(spec, src, dst) -> FinPerm:
    d = {a.index: b.index for a, b in zip(src, dst)}
    # complete the partial injection to a permutation of the touched indices
    domain, image = set(d), set(d.values())
    spare_src = sorted(image - domain)
    spare_dst = sorted(domain - image)
    d.update(dict(zip(spare_src, spare_dst)))
    return FinPerm.from_dict(spec, d)


def _interpolate_dlo(spec: DLOSpec, pairs: list) -> PwLinear:
    """Piecewise-linear interpolation through value pairs, fixing the spec's
    constants and cuts; slope-one unbounded end pieces."""
    anchors: dict = {}
    for a, b in pairs:
        if a in anchors and anchors[a] != b:
            raise TypeMismatchError(f"conflicting images for {a}")
        anchors[a] = b
    for c in spec.constants:
        if anchors.setdefault(c, c) != c:
            raise TypeMismatchError(f"constant {c} must stay fixed")
    for cut in spec.cuts:
        g = cut.cutpoint
        if spec.field == "Q2" or g.is_rational:
            if anchors.setdefault(g, g) != g:
                raise TypeMismatchError(f"cutpoint {g} must stay fixed")
        else:
            # carrier is Q and the cutpoint is irrational: rational pieces fix
            # it only if they are the identity around it, so bracket the cut
            # with identity anchors between it and the nearest other anchors
            below = [a for a in anchors if a < g]
            above = [a for a in anchors if a > g]
            left = QuadRat.of(rational_between(max(below) if below else None, g))
            right = QuadRat.of(rational_between(g, min(above) if above else None))
            for v in (left, right):
                if anchors.setdefault(v, v) != v:
                    raise TypeMismatchError(f"cut bracket at {v} collides")
    points = sorted(anchors.items())
    for (a0, b0), (a1, b1) in zip(points, points[1:]):
        if not b0 < b1:
            raise TypeMismatchError("images are not increasing")
    if not points:
        return PwLinear.identity(spec)
    one = QuadRat.of(1)
    breakpoints = tuple(a for a, _ in points)
    pieces = [(one, points[0][1] - points[0][0])]
    for (a0, b0), (a1, b1) in zip(points, points[1:]):
        slope = (b1 - b0) / (a1 - a0)
        pieces.append((slope, b0 - slope * a0))
    pieces.append((one, points[-1][1] - points[-1][0]))
    return _normalized_pwlinear(spec, breakpoints, tuple(pieces))


def restrict_witness(spec: DLOSpec, src: tuple, dst: tuple) -> PwLinear:
    """extend_partial for rational tuples over Q(sqrt2), with the witness
    checked to have all-rational data (hence fixing Q setwise)."""
    if not isinstance(spec, DLOSpec) or spec.field != "Q2":
        raise SortMismatchError("restrict_witness needs a dense order over Q(sqrt2)")
    for a in itertools.chain(src, dst):
        if not isinstance(a, OrdAtom) or not a.value.is_rational:
            raise TypeMismatchError(f"{a} is not rational")
    pi = extend_partial(spec, src, dst)
    if not pi.is_rational_data:
        raise AutomorphismError("interpolation produced non-rational data")
    return pi


# ---------------------------------------------------------------------------
# Absorption

def _rational_target(x: QuadRat, lo: Optional[QuadRat], hi: Optional[QuadRat]) -> Fraction:
    """A rational strictly inside (lo, hi), preferring x's unit interval."""
    fl = QuadRat.of(x.floor())
    cl = fl + QuadRat.of(1)
    clo = fl if lo is None or lo < fl else lo
    chi = cl if hi is None or hi > cl else hi
    if clo < chi:
        return rational_between(clo, chi)
    return rational_between(lo, hi)


def absorb(spec: StructureSpec, fix: tuple, move: tuple) -> Automorphism:
    """An automorphism fixing `fix` pointwise with image of `move` rational.

    fix must consist of rational-valued atoms.  Targets for the irrational
    members of move are chosen in order, each strictly between the previous
    output and the next fixed value (mediant search keeps denominators
    small); rational members of move are already fixed and are skipped.
    """
    if isinstance(spec, DLOSpec):
        if spec.field != "Q2":
            raise SortMismatchError("absorption needs a dense order over Q(sqrt2)")
        return _absorb_dlo(spec, [a.value for a in fix], [a.value for a in move])
    if isinstance(spec, SumSpec):
        maps = []
        for idx, part in enumerate(spec.parts):
            if isinstance(part, PointSpec):
                maps.append(None)
                continue
            pfix = [a.value for a in fix if a.part == idx]
            pmove = [a.value for a in move if a.part == idx]
            if part.field == "Q2":
                maps.append(_absorb_dlo(part, pfix, pmove))
            else:
                maps.append(PwLinear.identity(part))
        return GluedAuto(spec, tuple(maps))
    raise SortMismatchError(f"absorption is not defined over {spec}")


def _absorb_dlo(spec: DLOSpec, fix: list, move: list) -> PwLinear:
    for v in fix:
        if not v.is_rational:
            raise TypeMismatchError(f"fixed point {v} is not rational")
    fixed_vals = sorted(set(fix) | set(spec.constants)
                        | {v for v in move if v.is_rational}
                        | {c.cutpoint for c in spec.cuts if c.cutpoint.is_rational})
    pending = sorted({v for v in move if not v.is_rational})
    pairs = [(v, v) for v in fixed_vals]
    prev_out: dict = {}
    for x in pending:
        below = [v for v in fixed_vals if v < x] + \
                [prev_out[y] for y in prev_out if y < x]
        above = [v for v in fixed_vals if v > x]
        lo = max(below) if below else None
        hi = min(above) if above else None
        t = QuadRat.of(_rational_target(x, lo, hi))
        prev_out[x] = t
        pairs.append((x, t))
    return _interpolate_dlo(spec, pairs)


# ---------------------------------------------------------------------------
# Density witnesses and gluing

def density_witness(spec: StructureSpec, partial: dict) -> Automorphism:
    """A member of the designated dense family agreeing with the finite
    partial map, which must preserve the structure on its domain."""
    items = sorted(partial.items(), key=lambda kv: _sort_key(spec, kv[0]))
    src = tuple(k for k, _ in items)
    dst = tuple(v for _, v in items)
    if len(set(dst)) != len(dst):
        raise TypeMismatchError("partial map is not injective")
    try:
        return extend_partial(spec, src, dst)
    except TypeMismatchError as exc:
        raise TypeMismatchError(f"map does not preserve the structure: {exc}") from exc


def _sort_key(spec, a):
    if isinstance(a, EqAtom):
        return (a.index,)
    seg, v = _seg_val(spec, a)
    return (seg, 0 if v is None else 1, v if v is not None else QuadRat.of(0))


def glue(spec: SumSpec, part_maps: tuple) -> GluedAuto:
    """Assemble per-part automorphisms into one map of the ordered sum."""
    if len(part_maps) != len(spec.parts):
        raise AutomorphismError(
            f"expected {len(spec.parts)} part maps, got {len(part_maps)}")
    return GluedAuto(spec, tuple(part_maps))
