"""Structured atoms: exact values, the structure catalogue, tuple patterns.

Atoms are the primitive points everything else is built from.  A structure
spec fixes which atoms exist and how they compare: bare atoms with equality
only; dense linear orders over Q or Q(sqrt2) with optional named constants
and downward-closed cut predicates; ordered sums of such orders (with
single-point parts); and a lexicographic product admitted for pattern
computation only.

All arithmetic is exact; no float ever enters a comparison.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

__all__ = [
    "QuadRat", "EqAtom", "OrdAtom", "SumAtom", "LexAtom", "Atom",
    "CutSpec", "EqualitySpec", "DLOSpec", "PointSpec", "SumSpec", "LexSpec",
    "StructureSpec", "TypePattern", "Region",
    "atom_cmp", "tuple_type", "enumerate_types", "iter_types", "realize_type",
    "carrier_contains", "fixed_atoms", "region_list", "region_of",
    "pick_in_region", "rational_between", "rationals_between",
    "parse_atom", "format_atom", "parse_value", "format_value", "parse_spec",
    "SortMismatchError", "PatternError", "is_ordered", "ord_atom",
    "cut_holds", "predicate_count", "boundary_count",
]


class SortMismatchError(ValueError):
    """An atom was used with a structure it does not belong to."""


class PatternError(ValueError):
    """A type pattern is inconsistent or cannot be realized."""


# ---------------------------------------------------------------------------
# Exact values: Q and Q(sqrt2)

_SQRT2_LO = Fraction(4142135623, 2929075605)  # convergent below sqrt2
_SQRT2_HI = Fraction(1607521, 1136689)        # convergent above sqrt2


@dataclass(frozen=True)
class QuadRat:
    """Exact element a + b*sqrt2 of the quadratic field Q(sqrt2).

    Comparison is by the sign of a + b*sqrt2, decided by comparing a^2
    with 2*b^2 and tracking signs; sqrt2 being irrational, the pair (a, b)
    is canonical and equality is componentwise.
    """

    a: Fraction
    b: Fraction

    @staticmethod
    def of(a, b=0) -> "QuadRat":
        return QuadRat(Fraction(a), Fraction(b))

    @staticmethod
    def sqrt2() -> "QuadRat":
        return QuadRat(Fraction(0), Fraction(1))

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def sign(self) -> int:
        a, b = self.a, self.b
        if a == 0 and b == 0:
            return 0
        if a >= 0 and b >= 0:
            return 1
        if a <= 0 and b <= 0:
            return -1
        # mixed signs: compare |a| with |b|*sqrt2 via squares
        if a > 0:  # b < 0
            return 1 if a * a > 2 * b * b else -1
        return 1 if 2 * b * b > a * a else -1  # a < 0, b > 0

    def __add__(self, other):
        other = _as_quad(other)
        return QuadRat(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_quad(other)
        return QuadRat(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        return _as_quad(other) - self

    def __mul__(self, other):
        other = _as_quad(other)
        return QuadRat(
            self.a * other.a + 2 * self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_quad(other)
        # 1/(a + b*sqrt2) = (a - b*sqrt2)/(a^2 - 2 b^2); denominator is zero
        # only for a = b = 0 since sqrt2 is irrational
        d = other.a * other.a - 2 * other.b * other.b
        if d == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt2)")
        inv = QuadRat(other.a / d, -other.b / d)
        return self * inv

    def __neg__(self):
        return QuadRat(-self.a, -self.b)

    def __lt__(self, other):
        return (self - _as_quad(other)).sign() < 0

    def __le__(self, other):
        return (self - _as_quad(other)).sign() <= 0

    def __gt__(self, other):
        return (self - _as_quad(other)).sign() > 0

    def __ge__(self, other):
        return (self - _as_quad(other)).sign() >= 0

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(2.0)

    def floor(self) -> int:
        n = math.floor(float(self))
        # float is only a hint; fix up exactly
        while QuadRat.of(n) > self:
            n -= 1
        while QuadRat.of(n + 1) <= self:
            n += 1
        return n

    def __str__(self):
        return format_value(self)

    def __repr__(self):
        return f"QuadRat({self.a!r}, {self.b!r})"


def _as_quad(x) -> QuadRat:
    if isinstance(x, QuadRat):
        return x
    if isinstance(x, (int, Fraction)):
        return QuadRat(Fraction(x), Fraction(0))
    raise TypeError(f"cannot interpret {x!r} as a Q(sqrt2) value")


def format_value(v: QuadRat) -> str:
    if v.b == 0:
        return str(v.a)
    if v.b == 1:
        s2 = "sqrt2"
    elif v.b == -1:
        s2 = "-sqrt2"
    else:
        s2 = f"{v.b}*sqrt2"  # Fraction str carries the sign
    if v.a == 0:
        return s2
    return f"{v.a}+{s2}" if v.b > 0 else f"{v.a}{s2}"


def parse_value(text: str) -> QuadRat:
    """Parse an exact value literal: `3`, `-5/2`, `sqrt2`, `1/2+3/4*sqrt2`."""
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty value literal")
    # split into rational part and sqrt2 part at a top-level +/- (not leading)
    for i in range(1, len(s)):
        if s[i] in "+-" and s[i - 1] not in "+-*/":
            left, right = s[:i], s[i:]
            if "sqrt2" in right and "sqrt2" not in left:
                return QuadRat(_parse_frac(left), _parse_sqrt2_coeff(right))
    if "sqrt2" in s:
        return QuadRat(Fraction(0), _parse_sqrt2_coeff(s))
    return QuadRat(_parse_frac(s), Fraction(0))


def _parse_frac(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational literal {s!r}") from exc


def _parse_sqrt2_coeff(s: str) -> Fraction:
    neg = False
    if s.startswith("+"):
        s = s[1:]
    elif s.startswith("-"):
        neg, s = True, s[1:]
    if s == "sqrt2":
        c = Fraction(1)
    elif s.endswith("*sqrt2"):
        c = _parse_frac(s[: -len("*sqrt2")])
    else:
        raise ValueError(f"bad sqrt2 literal {s!r}")
    return -c if neg else c


def rational_between(lo: Optional[QuadRat], hi: Optional[QuadRat]) -> Fraction:
    """The Stern-Brocot simplest rational strictly inside (lo, hi).

    Either bound may be None (unbounded) or irrational; the interval must be
    nonempty.  Works entirely with exact comparisons, so irrational quadratic
    endpoints are fine.
    """
    if lo is None and hi is None:
        return Fraction(0)
    if lo is None:
        n = hi.floor()
        return Fraction(n if QuadRat.of(n) < hi else n - 1)
    if hi is None:
        n = lo.floor() + 1
        return Fraction(n if QuadRat.of(n) > lo else n + 1)
    if not lo < hi:
        raise ValueError(f"empty interval ({lo}, {hi})")
    shift = lo.floor()
    lo_s = lo - QuadRat.of(shift)
    hi_s = hi - QuadRat.of(shift)
    # descend the Stern-Brocot tree over (lo_s, hi_s) subseteq [0, inf)
    ln, ld, rn, rd = 0, 1, 1, 0
    while True:
        mn, md = ln + rn, ld + rd
        m = QuadRat.of(Fraction(mn, md))
        if m <= lo_s:
            ln, ld = mn, md
        elif m >= hi_s:
            rn, rd = mn, md
        else:
            return Fraction(mn, md) + shift


def rationals_between(lo, hi, k: int) -> list:
    """k strictly increasing rationals inside (lo, hi)."""
    out = []
    cur = lo
    for _ in range(k):
        r = rational_between(cur, hi)
        out.append(r)
        cur = QuadRat.of(r)
    return out


# ---------------------------------------------------------------------------
# Atoms

@dataclass(frozen=True)
class EqAtom:
    """Atom of the pure-equality structure, named by an index."""

    index: int

    def __str__(self):
        return f"a{self.index}"


@dataclass(frozen=True)
class OrdAtom:
    """Atom of a dense linear order, carrying its exact value."""

    value: QuadRat

    def __str__(self):
        return format_value(self.value)


@dataclass(frozen=True)
class SumAtom:
    """Atom of an ordered sum: part index plus inner value (None = point)."""

    part: int
    value: Optional[QuadRat]

    def __str__(self):
        inner = "star" if self.value is None else format_value(self.value)
        return f"{self.part}:{inner}"


@dataclass(frozen=True)
class LexAtom:
    """Atom of a lexicographic product: a pair of component atoms."""

    left: "Atom"
    right: "Atom"

    def __str__(self):
        return f"pair({self.left},{self.right})"


Atom = Union[EqAtom, OrdAtom, SumAtom, LexAtom]


def ord_atom(x) -> OrdAtom:
    return OrdAtom(_as_quad(x))


def atom_key(a: Atom):
    """Total code order on atoms of every sort, for canonical forms."""
    if isinstance(a, EqAtom):
        return (0, a.index)
    if isinstance(a, OrdAtom):
        return (1, 0, 0, a.value.a, a.value.b)
    if isinstance(a, SumAtom):
        return (2, a.part, 0 if a.value is None else 1,
                a.value.a if a.value else 0, a.value.b if a.value else 0)
    return (3, 0, 0, atom_key(a.left), atom_key(a.right))


def parse_atom(text: str, spec: Optional["StructureSpec"] = None) -> Atom:
    """Parse an atom literal; validate against spec's carrier when given."""
    s = text.strip()
    atom: Atom
    if s.startswith("a") and s[1:].isdigit():
        atom = EqAtom(int(s[1:]))
    elif s.startswith("pair(") and s.endswith(")"):
        inner = s[len("pair("):-1]
        depth, cut = 0, -1
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                cut = i
                break
        if cut < 0:
            raise ValueError(f"bad pair literal {text!r}")
        atom = LexAtom(parse_atom(inner[:cut]), parse_atom(inner[cut + 1:]))
    elif ":" in s:
        part_s, _, inner = s.partition(":")
        part = int(part_s)
        atom = SumAtom(part, None if inner.strip() == "star" else parse_value(inner))
    else:
        atom = OrdAtom(parse_value(s))
    if spec is not None:
        # an untagged value over a sum defaults to no part; re-tag single-part
        if isinstance(spec, SumSpec) and isinstance(atom, OrdAtom):
            raise SortMismatchError(
                f"{text!r}: atoms of an ordered sum need a part tag like 0:{s}")
        if not carrier_contains(spec, atom):
            raise SortMismatchError(f"{text!r} is not in the carrier of {spec}")
    return atom


def format_atom(a: Atom) -> str:
    return str(a)


# ---------------------------------------------------------------------------
# Structure catalogue

@dataclass(frozen=True)
class CutSpec:
    """Downward-closed unary predicate `x <= cutpoint` (or `x < cutpoint`)."""

    cutpoint: QuadRat
    closed_below: bool = True

    def holds_at(self, v: QuadRat) -> bool:
        return v <= self.cutpoint if self.closed_below else v < self.cutpoint

    def __str__(self):
        op = "<=" if self.closed_below else "<"
        return f"x{op}{format_value(self.cutpoint)}"


@dataclass(frozen=True)
class EqualitySpec:
    """Countably many indistinguishable atoms; only equality is available."""

    def __str__(self):
        return "eq"


@dataclass(frozen=True)
class DLOSpec:
    """Dense linear order without endpoints over Q or Q(sqrt2).

    Optional named constants (carrier values) and cut predicates.  field is
    'Q' or 'Q2'.
    """

    field: str = "Q"
    constants: tuple = ()
    cuts: tuple = ()

    def __post_init__(self):
        if self.field not in ("Q", "Q2"):
            raise ValueError(f"unknown field {self.field!r}")
        if len(set(self.constants)) != len(self.constants):
            raise ValueError("constants must be pairwise distinct")
        if len(set(self.cuts)) != len(self.cuts):
            raise ValueError("cuts must be pairwise distinct")
        for c in self.constants:
            if self.field == "Q" and not c.is_rational:
                raise ValueError(f"constant {c} outside the field Q")

    def __str__(self):
        parts = ["dloq2" if self.field == "Q2" else "dlo"]
        if self.constants:
            parts.append("c=" + ",".join(format_value(c) for c in self.constants))
        if self.cuts:
            parts.append("cut=" + ",".join(str(c) for c in self.cuts))
        return parts[0] if len(parts) == 1 else f"{parts[0]}[{';'.join(parts[1:])}]"


@dataclass(frozen=True)
class PointSpec:
    """A single unnamed point, usable as a part of an ordered sum."""

    def __str__(self):
        return "star"


@dataclass(frozen=True)
class SumSpec:
    """Ordered sum of dense parts and point parts, left parts below right."""

    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise ValueError("ordered sum needs at least one part")
        for p in self.parts:
            if not isinstance(p, (DLOSpec, PointSpec)):
                raise ValueError("sum parts must be dense orders or points")
        # the whole order must stay dense and endpoint-free: point parts sit
        # strictly between dense parts
        if isinstance(self.parts[0], PointSpec) or isinstance(self.parts[-1], PointSpec):
            raise ValueError("an ordered sum cannot start or end with a point part")
        for a, b in zip(self.parts, self.parts[1:]):
            if isinstance(a, PointSpec) and isinstance(b, PointSpec):
                raise ValueError("adjacent point parts are not supported")

    def __str__(self):
        return "sum(" + ",".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class LexSpec:
    """Lexicographic product; patterns are computed componentwise, depth 1."""

    left: Union[DLOSpec, SumSpec]
    right: Union[DLOSpec, SumSpec]

    def __str__(self):
        return f"lex({self.left},{self.right})"


StructureSpec = Union[EqualitySpec, DLOSpec, SumSpec, LexSpec]


def is_ordered(spec: StructureSpec) -> bool:
    return isinstance(spec, (DLOSpec, SumSpec))


def carrier_contains(spec: StructureSpec, a: Atom) -> bool:
    if isinstance(spec, EqualitySpec):
        return isinstance(a, EqAtom)
    if isinstance(spec, DLOSpec):
        return isinstance(a, OrdAtom) and (spec.field == "Q2" or a.value.is_rational)
    if isinstance(spec, SumSpec):
        if not isinstance(a, SumAtom) or not 0 <= a.part < len(spec.parts):
            return False
        part = spec.parts[a.part]
        if isinstance(part, PointSpec):
            return a.value is None
        return a.value is not None and (part.field == "Q2" or a.value.is_rational)
    if isinstance(spec, LexSpec):
        return (isinstance(a, LexAtom)
                and carrier_contains(spec.left, a.left)
                and carrier_contains(spec.right, a.right))
    raise TypeError(f"unknown spec {spec!r}")


def _seg_val(spec: StructureSpec, a: Atom):
    """(segment index, value) position of an ordered atom; value None = point."""
    if isinstance(spec, DLOSpec):
        if not isinstance(a, OrdAtom):
            raise SortMismatchError(f"{a} is not an atom of {spec}")
        return (0, a.value)
    if isinstance(spec, SumSpec):
        if not isinstance(a, SumAtom):
            raise SortMismatchError(f"{a} is not an atom of {spec}")
        return (a.part, a.value)
    raise SortMismatchError(f"{spec} is not an ordered structure")


def _make_atom(spec: StructureSpec, seg: int, value: Optional[QuadRat]) -> Atom:
    if isinstance(spec, DLOSpec):
        assert seg == 0 and value is not None
        return OrdAtom(value)
    return SumAtom(seg, value)


def _segments(spec: StructureSpec) -> tuple:
    if isinstance(spec, DLOSpec):
        return (spec,)
    if isinstance(spec, SumSpec):
        return spec.parts
    raise SortMismatchError(f"{spec} is not an ordered structure")


def _seg_constants(spec) -> list:
    """Per-segment sorted constant values, as (seg, value) pairs."""
    out = []
    for i, seg in enumerate(_segments(spec)):
        if isinstance(seg, DLOSpec):
            for c in sorted(seg.constants):
                out.append((i, c))
    return out


def _seg_cuts(spec) -> list:
    """All cut predicates as (seg, CutSpec), in segment-then-value order."""
    out = []
    for i, seg in enumerate(_segments(spec)):
        if isinstance(seg, DLOSpec):
            for c in sorted(seg.cuts, key=lambda c: (c.cutpoint.a, c.cutpoint.b)):
                out.append((i, c))
    return out


def boundary_count(spec) -> int:
    """Number of internal part boundaries of an ordered structure."""
    return max(0, len(_segments(spec)) - 1)


def fixed_atoms(spec: StructureSpec) -> tuple:
    """The named carrier points of the structure: constants and star points."""
    if not is_ordered(spec):
        return ()
    out = []
    for i, seg in enumerate(_segments(spec)):
        if isinstance(seg, PointSpec):
            out.append(_make_atom(spec, i, None))
        else:
            for c in sorted(seg.constants):
                out.append(_make_atom(spec, i, c))
    return tuple(out)


def cut_holds(spec: StructureSpec, cut_index: int, a: Atom) -> bool:
    """Truth of the cut_index-th unary predicate at atom a.

    For sums the predicates are, in order: each part boundary ("in part <= i")
    followed by the parts' own cuts; for a DLO just its cuts.
    """
    seg, val = _seg_val(spec, a)
    nb = boundary_count(spec)
    if isinstance(spec, SumSpec) and cut_index < nb:
        return seg <= cut_index
    cuts = _seg_cuts(spec)
    k = cut_index - (nb if isinstance(spec, SumSpec) else 0)
    if not 0 <= k < len(cuts):
        raise ValueError(f"no predicate #{cut_index} in {spec}")
    cseg, cut = cuts[k]
    if seg != cseg:
        return seg < cseg
    if val is None:  # a point part never hosts cuts; unreachable by seg match
        raise SortMismatchError("cut predicate evaluated on a point part")
    return cut.holds_at(val)


def predicate_count(spec: StructureSpec) -> int:
    if not is_ordered(spec):
        return 0
    nb = boundary_count(spec) if isinstance(spec, SumSpec) else 0
    return nb + len(_seg_cuts(spec))


def atom_cmp(spec: StructureSpec, a: Atom, b: Atom) -> str:
    """Compare two atoms: '<', '=', '>' for ordered sorts, '=', '!=' for equality."""
    if isinstance(spec, EqualitySpec):
        if not isinstance(a, EqAtom) or not isinstance(b, EqAtom):
            raise SortMismatchError(f"{a}, {b} not equality atoms")
        return "=" if a == b else "!="
    if isinstance(spec, LexSpec):
        if not isinstance(a, LexAtom) or not isinstance(b, LexAtom):
            raise SortMismatchError(f"{a}, {b} not product atoms")
        first = atom_cmp(spec.left, a.left, b.left)
        if first != "=":
            return first
        return atom_cmp(spec.right, a.right, b.right)
    sa, va = _seg_val(spec, a)
    sb, vb = _seg_val(spec, b)
    if not carrier_contains(spec, a) or not carrier_contains(spec, b):
        raise SortMismatchError(f"{a} or {b} outside the carrier of {spec}")
    if sa != sb:
        return "<" if sa < sb else ">"
    if va is None and vb is None:
        return "="
    if va < vb:
        return "<"
    if va > vb:
        return ">"
    return "="


# ---------------------------------------------------------------------------
# Regions: the carrier split by a finite landmark set

@dataclass(frozen=True)
class Region:
    """One cell of the carrier relative to landmarks: a point or an interval.

    Intervals live inside a single segment; bounds are exact values with None
    meaning the unbounded side of the segment.  A point region is a single
    carrier atom (a landmark or a star).
    """

    seg: int
    kind: str  # 'point' | 'interval'
    value: Optional[QuadRat] = None  # point regions; None = the star itself
    lo: Optional[QuadRat] = None
    hi: Optional[QuadRat] = None


def region_list(spec: StructureSpec, landmarks: Iterable[Atom] = ()) -> list:
    """All carrier regions relative to the landmark atoms plus the spec's own
    constants, stars, and cutpoints, in increasing order."""
    segs = _segments(spec)
    by_seg: dict = {i: set() for i in range(len(segs))}
    for a in landmarks:
        s, v = _seg_val(spec, a)
        if v is not None:
            by_seg[s].add(v)
    for s, c in _seg_constants(spec):
        by_seg[s].add(c)
    for s, cut in _seg_cuts(spec):
        by_seg[s].add(cut.cutpoint)
    regions = []
    for i, seg in enumerate(segs):
        if isinstance(seg, PointSpec):
            regions.append(Region(i, "point", value=None))
            continue
        vals = sorted(by_seg[i])
        prev = None
        for v in vals:
            regions.append(Region(i, "interval", lo=prev, hi=v))
            if seg.field == "Q2" or v.is_rational:
                regions.append(Region(i, "point", value=v))
            prev = v
        regions.append(Region(i, "interval", lo=prev, hi=None))
    return regions


def region_of(spec: StructureSpec, regions: list, a: Atom) -> int:
    s, v = _seg_val(spec, a)
    for i, r in enumerate(regions):
        if r.seg != s:
            continue
        if r.kind == "point":
            if r.value == v:
                return i
        else:
            if v is None:
                continue
            if (r.lo is None or r.lo < v) and (r.hi is None or v < r.hi):
                return i
    raise PatternError(f"no region contains {a}")


def pick_in_region(spec: StructureSpec, region: Region, k: int) -> list:
    """k strictly increasing carrier atoms inside the region."""
    seg = _segments(spec)[region.seg]
    if region.kind == "point":
        if k > 1:
            raise PatternError("a point region holds a single value")
        return [_make_atom(spec, region.seg, region.value)]
    assert isinstance(seg, DLOSpec)
    # rational picks are valid in both fields, and Q is dense around any
    # quadratic endpoint, so Stern-Brocot picks work for every interval
    vals = rationals_between(region.lo, region.hi, k)
    return [_make_atom(spec, region.seg, QuadRat.of(v)) for v in vals]


# ---------------------------------------------------------------------------
# Type patterns

@dataclass(frozen=True)
class TypePattern:
    """Canonical atomic diagram of a tuple over a structure and parameters.

    rels is the n x n matrix of pairwise comparisons; param_rels / fixed_rels
    relate positions to the parameters / the spec's named points; cut_flags
    records each unary predicate per position; parts records segment indices
    (ordered sorts).  Two tuples satisfy the same atomic formulas over the
    parameters iff their patterns are equal, which for these structures
    coincides with equality of full first-order types.
    """

    kind: str  # 'eq' | 'ord' | 'lex'
    arity: int
    rels: tuple = ()
    param_rels: tuple = ()
    fixed_rels: tuple = ()
    cut_flags: tuple = ()
    parts: tuple = ()
    sub: Optional[tuple] = None  # (left, right) for lex


def tuple_type(spec: StructureSpec, atoms: tuple, params: tuple = ()) -> TypePattern:
    """The atomic type of `atoms` over `params` in the structure."""
    atoms = tuple(atoms)
    params = tuple(params)
    for a in itertools.chain(atoms, params):
        if not carrier_contains(spec, a):
            raise SortMismatchError(f"{a} outside the carrier of {spec}")
    n = len(atoms)
    if isinstance(spec, EqualitySpec):
        rels = tuple(tuple(atom_cmp(spec, x, y) for y in atoms) for x in atoms)
        prels = tuple(tuple(atom_cmp(spec, x, p) for p in params) for x in atoms)
        return TypePattern("eq", n, rels=rels, param_rels=prels)
    if isinstance(spec, LexSpec):
        left = tuple_type(spec.left, tuple(a.left for a in atoms),
                          tuple(p.left for p in params))
        right = tuple_type(spec.right, tuple(a.right for a in atoms),
                           tuple(p.right for p in params))
        return TypePattern("lex", n, sub=(left, right))
    fixed = fixed_atoms(spec)
    rels = tuple(tuple(atom_cmp(spec, x, y) for y in atoms) for x in atoms)
    prels = tuple(tuple(atom_cmp(spec, x, p) for p in params) for x in atoms)
    frels = tuple(tuple(atom_cmp(spec, x, f) for f in fixed) for x in atoms)
    flags = tuple(
        tuple(cut_holds(spec, k, x) for k in range(predicate_count(spec)))
        for x in atoms)
    parts = tuple(_seg_val(spec, x)[0] for x in atoms)
    return TypePattern("ord", n, rels=rels, param_rels=prels,
                       fixed_rels=frels, cut_flags=flags, parts=parts)


def _weak_orders(items: tuple) -> Iterator[tuple]:
    """All ordered set partitions of items (each a tuple of groups)."""
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for wo in _weak_orders(rest):
        for i in range(len(wo)):  # join an existing group
            yield wo[:i] + ((first,) + wo[i],) + wo[i + 1:]
        for i in range(len(wo) + 1):  # new singleton group
            yield wo[:i] + ((first,),) + wo[i:]


def _set_partitions(items: tuple) -> Iterator[tuple]:
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + ((first,) + part[i],) + part[i + 1:]
        yield part + ((first,),)


def iter_types(spec: StructureSpec, n: int, params: tuple = ()) -> Iterator[TypePattern]:
    """Generate all consistent patterns of arity n over params, lazily."""
    params = tuple(params)
    if isinstance(spec, EqualitySpec):
        seen_param_dups = {}
        for j, p in enumerate(params):
            seen_param_dups.setdefault(p, j)
        pclasses = sorted(set(seen_param_dups.values()))
        for partition in _set_partitions(tuple(range(n))):
            # each class is fresh or tied to one param class; distinct classes
            # cannot share a param
            choices = [(-1,) + tuple(pclasses) for _ in partition]
            for assign in itertools.product(*choices):
                used = [c for c in assign if c >= 0]
                if len(used) != len(set(used)):
                    continue
                yield _eq_pattern(n, partition, assign, params, seen_param_dups)
        return
    if isinstance(spec, LexSpec):
        lefts = list(iter_types(spec.left, n, tuple(p.left for p in params)))
        rights = list(iter_types(spec.right, n, tuple(p.right for p in params)))
        for lt, rt in itertools.product(lefts, rights):
            yield TypePattern("lex", n, sub=(lt, rt))
        return
    regions = region_list(spec, params)
    fixed = fixed_atoms(spec)
    for assign in itertools.product(range(len(regions)), repeat=n):
        groups: dict = {}
        for pos, r in enumerate(assign):
            groups.setdefault(r, []).append(pos)
        interval_rs = [r for r in sorted(groups) if regions[r].kind == "interval"]
        per_region_orders = [list(_weak_orders(tuple(groups[r]))) for r in interval_rs]
        for combo in itertools.product(*per_region_orders):
            order_of = {r: wo for r, wo in zip(interval_rs, combo)}
            yield _ord_pattern(spec, regions, fixed, params, n, assign, order_of)


def enumerate_types(spec: StructureSpec, n: int, params: tuple = ()) -> list:
    return list(iter_types(spec, n, params))


def _eq_pattern(n, partition, assign, params, param_rep):
    cls_of = {}
    for ci, cls in enumerate(partition):
        for pos in cls:
            cls_of[pos] = ci
    rels = tuple(
        tuple("=" if cls_of[i] == cls_of[j] else "!=" for j in range(n))
        for i in range(n))
    prels = []
    for i in range(n):
        row = []
        for j, p in enumerate(params):
            rep = param_rep[p]
            row.append("=" if assign[cls_of[i]] == rep else "!=")
        prels.append(tuple(row))
    return TypePattern("eq", n, rels=rels, param_rels=tuple(prels))


def _region_cmp(regions, ra, rank_a, rb, rank_b) -> str:
    if ra != rb:
        return "<" if ra < rb else ">"
    if regions[ra].kind == "point":
        return "="
    if rank_a == rank_b:
        return "="
    return "<" if rank_a < rank_b else ">"


def _ord_pattern(spec, regions, fixed, params, n, assign, order_of):
    # rank of each position inside its interval region
    rank = {}
    for r, wo in order_of.items():
        for g, group in enumerate(wo):
            for pos in group:
                rank[pos] = g
    pos_region = list(assign)
    pos_rank = [rank.get(i, 0) for i in range(n)]

    def cmp_positions(i, j):
        return _region_cmp(regions, pos_region[i], pos_rank[i],
                           pos_region[j], pos_rank[j])

    def cmp_with_atom(i, a):
        ra = region_of(spec, regions, a)
        if pos_region[i] != ra:
            return "<" if pos_region[i] < ra else ">"
        if regions[ra].kind == "point":
            return "="
        # a landmark atom always sits in a point region; an interval tie is
        # impossible for params/fixed, which are landmarks by construction
        raise PatternError("landmark atom found inside an interval region")

    rels = tuple(tuple(cmp_positions(i, j) for j in range(n)) for i in range(n))
    prels = tuple(tuple(cmp_with_atom(i, p) for p in params) for i in range(n))
    frels = tuple(tuple(cmp_with_atom(i, f) for f in fixed) for i in range(n))
    flags = []
    for i in range(n):
        r = regions[pos_region[i]]
        probe = pick_in_region(spec, r, 1)[0] if r.kind == "interval" \
            else _make_atom(spec, r.seg, r.value)
        flags.append(tuple(cut_holds(spec, k, probe)
                           for k in range(predicate_count(spec))))
    parts = tuple(regions[pos_region[i]].seg for i in range(n))
    return TypePattern("ord", n, rels=rels, param_rels=prels,
                       fixed_rels=tuple(frels), cut_flags=tuple(flags), parts=parts)


def realize_type(spec: StructureSpec, t: TypePattern, params: tuple = ()) -> tuple:
    """A concrete tuple whose type over params is exactly t."""
    params = tuple(params)
    if t.kind == "eq":
        if not isinstance(spec, EqualitySpec):
            raise SortMismatchError("equality pattern over a non-equality spec")
        return _realize_eq(t, params)
    if t.kind == "lex":
        if not isinstance(spec, LexSpec):
            raise SortMismatchError("product pattern over a non-product spec")
        lefts = realize_type(spec.left, t.sub[0], tuple(p.left for p in params))
        rights = realize_type(spec.right, t.sub[1], tuple(p.right for p in params))
        return tuple(LexAtom(l, r) for l, r in zip(lefts, rights))
    if not is_ordered(spec):
        raise SortMismatchError("ordered pattern over a non-ordered spec")
    out = _realize_ord(spec, t, params)
    if tuple_type(spec, out, params) != t:
        raise PatternError("pattern is inconsistent")
    return out


def _realize_eq(t: TypePattern, params: tuple) -> tuple:
    n = t.arity
    used = {p.index for p in params}
    fresh = (i for i in itertools.count() if i not in used)
    result: list = [None] * n
    for i in range(n):
        if result[i] is not None:
            continue
        atom = None
        for j, p in enumerate(params):
            if t.param_rels[i][j] == "=":
                atom = p
                break
        if atom is None:
            atom = EqAtom(next(fresh))
        for j in range(i, n):
            if t.rels[i][j] == "=":
                if result[j] is not None and result[j] != atom:
                    raise PatternError("inconsistent equality pattern")
                result[j] = atom
    # verify disequalities
    for i in range(n):
        for j in range(n):
            want = t.rels[i][j]
            got = "=" if result[i] == result[j] else "!="
            if want != got:
                raise PatternError("inconsistent equality pattern")
        for j, p in enumerate(params):
            want = t.param_rels[i][j]
            got = "=" if result[i] == p else "!="
            if want != got:
                raise PatternError("inconsistent equality pattern")
    return tuple(result)


def _realize_ord(spec, t: TypePattern, params: tuple) -> tuple:
    n = t.arity
    regions = region_list(spec, params)
    fixed = fixed_atoms(spec)
    pos_region = []
    for i in range(n):
        cands = []
        for ri, r in enumerate(regions):
            if r.seg != t.parts[i]:
                continue
            if not _row_matches_region(spec, regions, ri, params, fixed, t, i):
                continue
            cands.append(ri)
        if len(cands) != 1:
            raise PatternError(
                f"pattern row {i} matches {len(cands)} regions; inconsistent")
        pos_region.append(cands[0])
    # group positions by region, order within region by the rels row
    result: list = [None] * n
    for ri in sorted(set(pos_region)):
        poss = [i for i in range(n) if pos_region[i] == ri]
        r = regions[ri]
        if r.kind == "point":
            for i in poss:
                result[i] = _make_atom(spec, r.seg, r.value)
            continue
        groups: list = []
        for i in poss:  # gather equality classes
            placed = False
            for g in groups:
                c = t.rels[i][g[0]]
                if c == "=":
                    g.append(i)
                    placed = True
                    break
            if not placed:
                groups.append([i])
        # order classes by how many other classes sit below them
        ranks = [sum(1 for h in groups if t.rels[h[0]][g[0]] == "<")
                 for g in groups]
        groups = [g for _, g in sorted(zip(ranks, groups))]
        vals = pick_in_region(spec, r, len(groups))
        for g, atom in zip(groups, vals):
            for i in g:
                result[i] = atom
    return tuple(result)


def _row_matches_region(spec, regions, ri, params, fixed, t, i) -> bool:
    r = regions[ri]
    probe = (pick_in_region(spec, r, 1)[0] if r.kind == "interval"
             else _make_atom(spec, r.seg, r.value))
    for j, p in enumerate(params):
        if atom_cmp(spec, probe, p) != t.param_rels[i][j]:
            return False
    for j, f in enumerate(fixed):
        if atom_cmp(spec, probe, f) != t.fixed_rels[i][j]:
            return False
    for k in range(predicate_count(spec)):
        if cut_holds(spec, k, probe) != t.cut_flags[i][k]:
            return False
    return True


# ---------------------------------------------------------------------------
# Spec literals (CLI / config front end)

def parse_spec(text: str) -> StructureSpec:
    """Parse a structure literal: eq | dlo | dloq2 | qprime | dlo[c=0,1] |
    dloq2[cut=sqrt2] | sum(dloq2,star,dlo) | lex(sum(dloq2,dlo),dloq2)."""
    s = text.strip()
    if s == "eq":
        return EqualitySpec()
    if s == "qprime":
        return DLOSpec("Q", cuts=(CutSpec(QuadRat.sqrt2(), True),))
    if s.startswith("sum(") and s.endswith(")"):
        return SumSpec(tuple(
            PointSpec() if p.strip() == "star" else parse_spec(p)
            for p in _split_args(s[4:-1])))
    if s.startswith("lex(") and s.endswith(")"):
        args = _split_args(s[4:-1])
        if len(args) != 2:
            raise ValueError("lex(...) takes exactly two components")
        return LexSpec(parse_spec(args[0]), parse_spec(args[1]))
    base, opts = s, ""
    if "[" in s:
        if not s.endswith("]"):
            raise ValueError(f"bad spec literal {text!r}")
        base, opts = s[:s.index("[")], s[s.index("[") + 1:-1]
    if base not in ("dlo", "dloq2"):
        raise ValueError(f"unknown structure {base!r}")
    field = "Q2" if base == "dloq2" else "Q"
    constants: list = []
    cuts: list = []
    for opt in filter(None, (o.strip() for o in opts.split(";"))):
        key, _, val = opt.partition("=")
        if key == "c":
            constants += [parse_value(v) for v in val.split(",")]
        elif key == "cut":
            for v in val.split(","):
                closed = True
                if v.startswith("<"):
                    closed, v = False, v[1:]
                cuts.append(CutSpec(parse_value(v), closed))
        else:
            raise ValueError(f"unknown spec option {key!r}")
    return DLOSpec(field, tuple(constants), tuple(cuts))


def _split_args(s: str) -> list:
    args, depth, cur = [], 0, []
    for ch in s:
        if ch == "(" or ch == "[":
            depth += 1
        elif ch == ")" or ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            args.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        args.append("".join(cur))
    return args
