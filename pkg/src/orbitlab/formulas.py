"""First-order formulas over atom structures: parsing, truth, and QE.

The language has atomic comparisons between terms (variables, parameter
holes, atom literals; `first(v)` over lexicographic products), the unary
predicates declared by the structure (cuts / part membership), boolean
connectives and quantifiers over the atom sort.

Quantifier elimination works innermost-first by a case split over the
finitely many positions the bound variable can take relative to the terms
and predicate boundaries in scope: at a term, just above or below one,
at/beside a cutpoint, or at an unbounded end.  Every substitution case is a
purely syntactic rewrite, so the result is quantifier-free and exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

from .atoms import (
    Atom, DLOSpec, EqAtom, EqualitySpec, LexAtom, LexSpec, PatternError,
    PointSpec, SortMismatchError, StructureSpec, SumSpec, atom_cmp,
    boundary_count, carrier_contains, cut_holds, iter_types, parse_value,
    predicate_count, realize_type, _make_atom, _seg_cuts, _seg_val,
    _segments, format_atom, OrdAtom, SumAtom, QuadRat,
)


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class LanguageError(ValueError):
    """A relation or predicate is not part of the structure's language."""


# ---------------------------------------------------------------------------
# Terms and formulas

@dataclass(frozen=True)
class Var:
    """Bound-variable slot; slots 0..k-1 are the free slots of a matrix."""

    slot: int
    name: str = ""

    def __str__(self):
        return self.name or f"x{self.slot}"


@dataclass(frozen=True)
class Param:
    """Parameter hole, filled by a concrete atom at evaluation time."""

    index: int

    def __str__(self):
        return f"y{self.index}"


@dataclass(frozen=True)
class Lit:
    atom: Atom

    def __str__(self):
        return format_atom(self.atom)


@dataclass(frozen=True)
class First:
    """First coordinate of a lexicographic-product term (depth 1 only)."""

    term: Union[Var, Param, Lit]

    def __str__(self):
        return f"first({self.term})"


Term = Union[Var, Param, Lit, First]


@dataclass(frozen=True)
class TrueF:
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class FalseF:
    def __str__(self):
        return "false"


@dataclass(frozen=True)
class Cmp:
    op: str  # < <= = != > >=
    left: Term
    right: Term

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Pred:
    """index-th unary predicate of the spec applied to a term."""

    index: int
    term: Term

    def __str__(self):
        name = "P" if self.index == 0 else f"P{self.index}"
        return f"{name}({self.term})"


@dataclass(frozen=True)
class Not:
    body: "Formula"

    def __str__(self):
        return f"!{_wrap(self.body, 90)}"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"{_wrap(self.left, 80)} & {_wrap(self.right, 80)}"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"{_wrap(self.left, 70)} | {_wrap(self.right, 70)}"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"{_wrap(self.left, 61)} -> {_wrap(self.right, 60)}"


@dataclass(frozen=True)
class Exists:
    slot: int
    name: str
    body: "Formula"

    def __str__(self):
        return f"exists {self.name or 'x%d' % self.slot} {_wrap(self.body, 95)}"


@dataclass(frozen=True)
class Forall:
    slot: int
    name: str
    body: "Formula"

    def __str__(self):
        return f"forall {self.name or 'x%d' % self.slot} {_wrap(self.body, 95)}"


Formula = Union[TrueF, FalseF, Cmp, Pred, Not, And, Or, Implies, Exists, Forall]

_PREC = {TrueF: 100, FalseF: 100, Cmp: 100, Pred: 100, Not: 90,
         And: 80, Or: 70, Implies: 60, Exists: 50, Forall: 50}


def _wrap(f: Formula, need: int) -> str:
    return f"({f})" if _PREC[type(f)] < need else str(f)


def pretty(f: Formula) -> str:
    """Render with canonical names: free slots as xN, bound slots as vK.

    parse_formula(pretty(f), spec) rebuilds f up to bound-slot numbering; on
    parser output the round trip is exact.
    """
    return _render(f, {}, 100)


def _render(f: Formula, names: dict, need: int) -> str:
    def rec(g, at):
        return _render(g, names, at)

    def term(t):
        if isinstance(t, Var):
            return names.get(t.slot, f"x{t.slot}")
        if isinstance(t, First):
            return f"first({term(t.term)})"
        return str(t)

    if isinstance(f, (TrueF, FalseF)):
        s = str(f)
    elif isinstance(f, Cmp):
        s = f"{term(f.left)} {f.op} {term(f.right)}"
    elif isinstance(f, Pred):
        name = "P" if f.index == 0 else f"P{f.index}"
        s = f"{name}({term(f.term)})"
    elif isinstance(f, Not):
        s = f"!{rec(f.body, 91)}"
    elif isinstance(f, And):
        s = f"{rec(f.left, 80)} & {rec(f.right, 81)}"
    elif isinstance(f, Or):
        s = f"{rec(f.left, 70)} | {rec(f.right, 71)}"
    elif isinstance(f, Implies):
        s = f"{rec(f.left, 61)} -> {rec(f.right, 60)}"
    elif isinstance(f, (Exists, Forall)):
        fresh = f.name if f.name and f.name not in names.values() \
            and not _is_reserved_name(f.name) and f.name not in _KEYWORDS \
            else f"v{f.slot}"
        inner = dict(names)
        inner[f.slot] = fresh
        word = "exists" if isinstance(f, Exists) else "forall"
        s = f"{word} {fresh} {_render(f.body, inner, 95)}"
    else:
        raise TypeError(f"unknown formula node {f!r}")
    return f"({s})" if _PREC[type(f)] < need else s


def free_slots(f: Formula) -> set:
    """Slots of variables occurring free in f."""
    bound: set = set()
    out: set = set()

    def walk(g, bound):
        if isinstance(g, (TrueF, FalseF)):
            return
        if isinstance(g, Cmp):
            for t in (g.left, g.right):
                walk_term(t, bound)
            return
        if isinstance(g, Pred):
            walk_term(g.term, bound)
            return
        if isinstance(g, Not):
            walk(g.body, bound)
            return
        if isinstance(g, (And, Or, Implies)):
            walk(g.left, bound)
            walk(g.right, bound)
            return
        if isinstance(g, (Exists, Forall)):
            walk(g.body, bound | {g.slot})
            return
        raise TypeError(f"unknown formula node {g!r}")

    def walk_term(t, bound):
        if isinstance(t, Var) and t.slot not in bound:
            out.add(t.slot)
        if isinstance(t, First):
            walk_term(t.term, bound)

    walk(f, bound)
    return out


def max_slot(f: Formula) -> int:
    """Largest variable slot mentioned anywhere, bound or free; -1 if none."""
    mx = -1
    for node in _walk_nodes(f):
        if isinstance(node, Var):
            mx = max(mx, node.slot)
        elif isinstance(node, (Exists, Forall)):
            mx = max(mx, node.slot)
    return mx


def param_count(f: Formula) -> int:
    mx = -1
    for node in _walk_nodes(f):
        if isinstance(node, Param):
            mx = max(mx, node.index)
    return mx + 1


def literal_atoms(f: Formula) -> list:
    """All atom literals occurring in f, in first-occurrence order."""
    seen = []
    for node in _walk_nodes(f):
        if isinstance(node, Lit) and node.atom not in seen:
            seen.append(node.atom)
    return seen


def _walk_nodes(f):
    yield f
    if isinstance(f, Cmp):
        yield from _walk_term_nodes(f.left)
        yield from _walk_term_nodes(f.right)
    elif isinstance(f, Pred):
        yield from _walk_term_nodes(f.term)
    elif isinstance(f, Not):
        yield from _walk_nodes(f.body)
    elif isinstance(f, (And, Or, Implies)):
        yield from _walk_nodes(f.left)
        yield from _walk_nodes(f.right)
    elif isinstance(f, (Exists, Forall)):
        yield from _walk_nodes(f.body)


def _walk_term_nodes(t):
    yield t
    if isinstance(t, First):
        yield from _walk_term_nodes(t.term)


# ---------------------------------------------------------------------------
# Parser

_KEYWORDS = {"true", "false", "exists", "forall", "star", "sqrt2", "first", "pair"}


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._lex()
        self.i = 0

    def _lex(self):
        t, n = self.text, len(self.text)
        i = 0
        two = {"<=", ">=", "!=", "->"}
        while i < n:
            c = t[i]
            if c.isspace():
                i += 1
                continue
            if t[i:i + 2] in two:
                self.tokens.append((t[i:i + 2], i))
                i += 2
                continue
            if c in "<>=!&|(){},:":
                self.tokens.append((c, i))
                i += 1
                continue
            if c.isdigit() or (c == "-" and i + 1 < n and t[i + 1].isdigit()):
                j = i + 1
                while j < n and (t[j].isdigit() or t[j] == "/"):
                    j += 1
                self.tokens.append(("NUM", i, t[i:j]))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (t[j].isalnum() or t[j] == "_"):
                    j += 1
                self.tokens.append(("ID", i, t[i:j]))
                i = j
                continue
            if c in "+-*":
                # only appears inside value literals; glue into the previous
                # NUM/ID if possible
                self.tokens.append((c, i))
                i += 1
                continue
            raise ParseError(f"unexpected character {c!r}", i)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("EOF", len(self.text))

    def next(self):
        tok = self.peek()
        if tok[0] != "EOF":
            self.i += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[0]!r}", tok[1])
        return tok


class _Parser:
    """Recursive-descent parser; precedence ! > & > | > ->, quantifiers
    take the longest scope to their right."""

    def __init__(self, text: str, spec: StructureSpec, var_names=()):
        self.lx = _Lexer(text)
        self.spec = spec
        self.scope = {name: i for i, name in enumerate(var_names)}
        # bound-variable slots must stay clear of every free xN in the text
        self.next_slot = len(var_names)
        for tok in self.lx.tokens:
            if tok[0] == "ID" and len(tok[2]) > 1 and tok[2][0] == "x" \
                    and tok[2][1:].isdigit():
                self.next_slot = max(self.next_slot, int(tok[2][1:]) + 1)

    def parse_formula(self) -> Formula:
        f = self._implies()
        tok = self.lx.peek()
        if tok[0] != "EOF":
            raise ParseError(f"unexpected {tok[0]!r}", tok[1])
        return f

    def _implies(self) -> Formula:
        left = self._or()
        if self.lx.peek()[0] == "->":
            self.lx.next()
            return Implies(left, self._implies())
        return left

    def _or(self) -> Formula:
        f = self._and()
        while self.lx.peek()[0] == "|":
            self.lx.next()
            f = Or(f, self._and())
        return f

    def _and(self) -> Formula:
        f = self._unary()
        while self.lx.peek()[0] == "&":
            self.lx.next()
            f = And(f, self._unary())
        return f

    def _unary(self) -> Formula:
        tok = self.lx.peek()
        if tok[0] == "!":
            self.lx.next()
            return Not(self._unary())
        if tok[0] == "ID" and tok[2] in ("exists", "forall"):
            self.lx.next()
            name_tok = self.lx.next()
            if name_tok[0] != "ID":
                raise ParseError("quantifier needs a variable name", name_tok[1])
            name = name_tok[2]
            if name in _KEYWORDS or _is_reserved_name(name):
                raise ParseError(f"{name!r} cannot be a bound variable", name_tok[1])
            slot = self.next_slot
            self.next_slot += 1
            old = self.scope.get(name)
            self.scope[name] = slot
            body = self._implies()  # longest scope
            if old is None:
                del self.scope[name]
            else:
                self.scope[name] = old
            cls = Exists if tok[2] == "exists" else Forall
            return cls(slot, name, body)
        return self._atomic()

    def _atomic(self) -> Formula:
        tok = self.lx.peek()
        if tok[0] == "(":
            self.lx.next()
            f = self._implies()
            self.lx.expect(")")
            return f
        if tok[0] == "ID" and tok[2] == "true":
            self.lx.next()
            return TrueF()
        if tok[0] == "ID" and tok[2] == "false":
            self.lx.next()
            return FalseF()
        if tok[0] == "ID" and _is_pred_name(tok[2]):
            self.lx.next()
            idx = 0 if tok[2] == "P" else int(tok[2][1:])
            if idx >= predicate_count(self.spec):
                raise ParseError(
                    f"relation {tok[2]!r} not in the language of {self.spec}", tok[1])
            self.lx.expect("(")
            term = self._term()
            self.lx.expect(")")
            return Pred(idx, term)
        left = self._term()
        op_tok = self.lx.next()
        if op_tok[0] not in ("<", "<=", "=", "!=", ">", ">="):
            raise ParseError("expected a comparison operator", op_tok[1])
        if isinstance(self.spec, EqualitySpec) and op_tok[0] not in ("=", "!="):
            raise ParseError(
                f"relation {op_tok[0]!r} not in the language of {self.spec}", op_tok[1])
        right = self._term()
        return Cmp(op_tok[0], left, right)

    def _term(self) -> Term:
        tok = self.lx.next()
        if tok[0] == "NUM":
            return Lit(self._finish_value_literal(tok))
        if tok[0] == "-":
            nxt = self.lx.next()
            if nxt[0] == "NUM":
                merged = ("NUM", tok[1], "-" + nxt[2])
                return Lit(self._finish_value_literal(merged))
            if nxt[0] == "ID" and nxt[2] == "sqrt2":
                return Lit(self._ord_literal(QuadRat.of(0, -1), tok[1]))
            raise ParseError("bad negative literal", tok[1])
        if tok[0] != "ID":
            raise ParseError("expected a term", tok[1])
        name = tok[2]
        if name == "first":
            self.lx.expect("(")
            inner = self._term()
            self.lx.expect(")")
            if not isinstance(self.spec, LexSpec):
                raise ParseError("first(...) needs a product structure", tok[1])
            return First(inner)
        if name == "star":
            return Lit(self._star_literal(tok[1]))
        if name == "sqrt2":
            return Lit(self._ord_literal(QuadRat.sqrt2(), tok[1]))
        if name in self.scope:
            return Var(self.scope[name], name)
        if len(name) > 1 and name[0] == "x" and name[1:].isdigit():
            slot = int(name[1:])
            self.scope[name] = slot
            self.next_slot = max(self.next_slot, slot + 1)
            return Var(slot, name)
        if len(name) > 1 and name[0] == "y" and name[1:].isdigit():
            return Param(int(name[1:]))
        if len(name) > 1 and name[0] == "a" and name[1:].isdigit():
            atom = EqAtom(int(name[1:]))
            if not isinstance(self.spec, EqualitySpec):
                raise ParseError(f"{name!r} is not in the carrier of {self.spec}", tok[1])
            return Lit(atom)
        raise ParseError(f"unbound variable {name!r}", tok[1])

    def _finish_value_literal(self, tok) -> Atom:
        # NUM already consumed; may continue with ':' (sum part tag) or a
        # sqrt2 tail ('*sqrt2', '+c*sqrt2', '-c*sqrt2')
        text, pos = tok[2], tok[1]
        if self.lx.peek()[0] == ":" and "/" not in text and not text.startswith("-"):
            self.lx.next()
            return self._sum_literal(int(text), self._inner_value(), pos)
        return self._ord_literal(self._value_tail(text, pos), pos)

    def _inner_value(self) -> Optional[QuadRat]:
        nxt = self.lx.next()
        if nxt[0] == "ID" and nxt[2] == "star":
            return None
        if nxt[0] == "ID" and nxt[2] == "sqrt2":
            return QuadRat.sqrt2()
        if nxt[0] == "NUM":
            return self._value_tail(nxt[2], nxt[1])
        if nxt[0] == "-":
            after = self.lx.next()
            if after[0] == "ID" and after[2] == "sqrt2":
                return QuadRat.of(0, -1)
        raise ParseError("bad sum-atom literal", nxt[1])

    def _value_tail(self, text: str, pos: int) -> QuadRat:
        base = QuadRat.of(parse_value(text).a)  # lexer numbers are rational
        tok = self.lx.peek()
        if tok[0] == "*":
            self.lx.next()
            nxt = self.lx.next()
            if nxt[0] != "ID" or nxt[2] != "sqrt2":
                raise ParseError("expected sqrt2 after '*'", nxt[1])
            return QuadRat.of(0, base.a)
        if tok[0] in ("+", "-"):
            sign = 1 if tok[0] == "+" else -1
            save = self.lx.i
            self.lx.next()
            nxt = self.lx.next()
            if nxt[0] == "ID" and nxt[2] == "sqrt2":
                return base + QuadRat.of(0, sign)
            if nxt[0] == "NUM" and self.lx.peek()[0] == "*":
                self.lx.next()
                s2 = self.lx.next()
                if s2[0] == "ID" and s2[2] == "sqrt2":
                    return base + QuadRat.of(0, sign * parse_value(nxt[2]).a)
            self.lx.i = save  # not a literal tail after all
        elif tok[0] == "NUM" and tok[2].startswith("-") and "/" not in tok[2][:2]:
            # "1/2-3/4*sqrt2" lexes the tail as a negative number
            save = self.lx.i
            self.lx.next()
            if self.lx.peek()[0] == "*":
                self.lx.next()
                s2 = self.lx.next()
                if s2[0] == "ID" and s2[2] == "sqrt2":
                    return base + QuadRat.of(0, parse_value(tok[2]).a)
            self.lx.i = save
        return base

    def _ord_literal(self, val: QuadRat, pos: int) -> Atom:
        if isinstance(self.spec, DLOSpec):
            atom = OrdAtom(val)
        elif isinstance(self.spec, SumSpec):
            raise ParseError(
                "atoms of an ordered sum need a part tag like 0:...", pos)
        else:
            raise ParseError(f"value literal not in the carrier of {self.spec}", pos)
        if not carrier_contains(self.spec, atom):
            raise ParseError(f"literal outside the carrier of {self.spec}", pos)
        return atom

    def _sum_literal(self, part: int, val, pos: int) -> Atom:
        if not isinstance(self.spec, SumSpec):
            raise ParseError("part-tagged literal over a non-sum structure", pos)
        atom = SumAtom(part, val)
        if not carrier_contains(self.spec, atom):
            raise ParseError(f"literal outside the carrier of {self.spec}", pos)
        return atom

    def _star_literal(self, pos: int) -> Atom:
        if not isinstance(self.spec, SumSpec):
            raise ParseError("star literal over a structure without points", pos)
        stars = [i for i, p in enumerate(_segments(self.spec))
                 if isinstance(p, PointSpec)]
        if len(stars) != 1:
            raise ParseError("ambiguous star; use a part tag like 1:star", pos)
        return SumAtom(stars[0], None)


def _is_pred_name(name: str) -> bool:
    return name == "P" or (name.startswith("P") and name[1:].isdigit())


def _is_reserved_name(name: str) -> bool:
    return (len(name) > 1 and name[0] in "xya" and name[1:].isdigit()) \
        or _is_pred_name(name)


def parse_formula(text: str, spec: StructureSpec, var_names=()) -> Formula:
    """Parse a formula; var_names map set-builder variables to slots 0..k-1."""
    return _Parser(text, spec, var_names).parse_formula()


def parse_set_builder(text: str, spec: StructureSpec):
    """Parse `{(u,v): formula}` into (arity, matrix formula)."""
    s = text.strip()
    if not (s.startswith("{") and s.endswith("}")):
        raise ParseError("set builder must be wrapped in { }", 0)
    inner = s[1:-1].strip()
    if not inner.startswith("("):
        raise ParseError("set builder needs a variable tuple", 1)
    close = inner.index(")")
    names = [v.strip() for v in inner[1:close].split(",") if v.strip()]
    for name in names:
        if name in _KEYWORDS or _is_reserved_name(name) and not (
                name[0] == "x" and name[1:].isdigit()):
            raise ParseError(f"{name!r} cannot be a set variable", 1)
    rest = inner[close + 1:].lstrip()
    if not rest.startswith(":"):
        raise ParseError("expected ':' after the variable tuple", close)
    body = parse_formula(rest[1:], spec, var_names=tuple(names))
    extra = [s for s in free_slots(body) if s >= len(names)]
    if extra:
        raise ParseError(f"unbound variable slot {min(extra)}", 0)
    return len(names), body


# ---------------------------------------------------------------------------
# Evaluation

def eval_formula(spec: StructureSpec, f: Formula, assignment: tuple,
                 params: tuple = ()) -> bool:
    """Tarskian truth of f with Var slots filled from assignment and Param
    holes from params.  Quantified formulas are evaluated through qe."""
    if _has_quantifier(f):
        f = qe(spec, f)
    return _eval_qf(spec, f, dict(enumerate(assignment)), tuple(params))


def _has_quantifier(f) -> bool:
    return any(isinstance(n, (Exists, Forall)) for n in _walk_nodes(f))


def _eval_term(spec, t: Term, env: dict, params: tuple) -> Atom:
    if isinstance(t, Var):
        if t.slot not in env:
            raise ValueError(f"no value for variable slot {t.slot}")
        return env[t.slot]
    if isinstance(t, Param):
        if t.index >= len(params):
            raise ValueError(f"no value for parameter y{t.index}")
        return params[t.index]
    if isinstance(t, Lit):
        return t.atom
    if isinstance(t, First):
        inner = _eval_term(spec, t.term, env, params)
        if not isinstance(inner, LexAtom):
            raise SortMismatchError("first(...) of a non-product atom")
        return inner.left
    raise TypeError(f"unknown term {t!r}")


def _cmp_truth(op: str, rel: str) -> bool:
    if rel == "!=":  # equality sort
        return op == "!="
    table = {"<": rel == "<", "<=": rel in "<=", "=": rel == "=",
             "!=": rel != "=", ">": rel == ">", ">=": rel in ">="}
    return table[op]


def _eval_qf(spec, f: Formula, env: dict, params: tuple) -> bool:
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Cmp):
        a = _eval_term(spec, f.left, env, params)
        b = _eval_term(spec, f.right, env, params)
        cspec = spec.left if isinstance(spec, LexSpec) and (
            isinstance(f.left, First) or isinstance(f.right, First)) else spec
        if isinstance(f.left, First) != isinstance(f.right, First):
            raise SortMismatchError("cannot compare a component with a pair")
        rel = atom_cmp(cspec, a, b)
        if rel == "!=" and f.op not in ("=", "!="):
            raise LanguageError(f"{f.op!r} not in the language")
        return _cmp_truth(f.op, rel)
    if isinstance(f, Pred):
        a = _eval_term(spec, f.term, env, params)
        return cut_holds(spec, f.index, a)
    if isinstance(f, Not):
        return not _eval_qf(spec, f.body, env, params)
    if isinstance(f, And):
        return _eval_qf(spec, f.left, env, params) and _eval_qf(spec, f.right, env, params)
    if isinstance(f, Or):
        return _eval_qf(spec, f.left, env, params) or _eval_qf(spec, f.right, env, params)
    if isinstance(f, Implies):
        return (not _eval_qf(spec, f.left, env, params)) or _eval_qf(spec, f.right, env, params)
    raise ValueError(f"formula is not quantifier-free: {f}")


# ---------------------------------------------------------------------------
# Simplification (light structural rules only)

def _simplify(f: Formula) -> Formula:
    if isinstance(f, Not):
        b = _simplify(f.body)
        if isinstance(b, TrueF):
            return FalseF()
        if isinstance(b, FalseF):
            return TrueF()
        if isinstance(b, Not):
            return b.body
        return Not(b)
    if isinstance(f, And):
        l, r = _simplify(f.left), _simplify(f.right)
        if isinstance(l, FalseF) or isinstance(r, FalseF):
            return FalseF()
        if isinstance(l, TrueF):
            return r
        if isinstance(r, TrueF):
            return l
        if l == r:
            return l
        return And(l, r)
    if isinstance(f, Or):
        l, r = _simplify(f.left), _simplify(f.right)
        if isinstance(l, TrueF) or isinstance(r, TrueF):
            return TrueF()
        if isinstance(l, FalseF):
            return r
        if isinstance(r, FalseF):
            return l
        if l == r:
            return l
        return Or(l, r)
    if isinstance(f, Implies):
        l, r = _simplify(f.left), _simplify(f.right)
        if isinstance(l, FalseF) or isinstance(r, TrueF):
            return TrueF()
        if isinstance(l, TrueF):
            return r
        if isinstance(r, FalseF):
            return _simplify(Not(l))
        return Implies(l, r)
    if isinstance(f, Cmp):
        if f.left == f.right:
            return TrueF() if f.op in ("=", "<=", ">=") else FalseF()
        return f
    return f


def _or_all(fs) -> Formula:
    out: Formula = FalseF()
    seen = set()
    for f in fs:
        if isinstance(f, FalseF):
            continue
        if isinstance(f, TrueF):
            return TrueF()
        key = str(f)
        if key in seen:
            continue
        seen.add(key)
        out = f if isinstance(out, FalseF) else Or(out, f)
    return out


# ---------------------------------------------------------------------------
# Quantifier elimination

# virtual values the bound variable can take
@dataclass(frozen=True)
class _At:
    term: Term


@dataclass(frozen=True)
class _Above:
    term: Term


@dataclass(frozen=True)
class _Below:
    term: Term


@dataclass(frozen=True)
class _NegInf:
    pass


@dataclass(frozen=True)
class _PosInf:
    pass


@dataclass(frozen=True)
class _CutSide:
    """Just below (side=-1) or just above (side=+1) predicate boundary k."""

    index: int
    side: int


@dataclass(frozen=True)
class _Fresh:
    """A fresh atom distinct from every term in scope (equality sort)."""


def qe(spec: StructureSpec, f: Formula) -> Formula:
    """An equivalent quantifier-free formula; idempotent on QF input."""
    if isinstance(f, (TrueF, FalseF, Cmp, Pred)):
        return _simplify(f)
    if isinstance(f, Not):
        return _simplify(Not(qe(spec, f.body)))
    if isinstance(f, (And, Or, Implies)):
        return _simplify(type(f)(qe(spec, f.left), qe(spec, f.right)))
    if isinstance(f, Exists):
        return _eliminate(spec, f.slot, qe(spec, f.body))
    if isinstance(f, Forall):
        return _simplify(Not(_eliminate(spec, f.slot, qe(spec, Not(f.body)))))
    raise TypeError(f"unknown formula node {f!r}")


def _eliminate(spec, slot: int, body: Formula) -> Formula:
    """Eliminate exists-slot from quantifier-free body by case split."""
    if isinstance(spec, LexSpec):
        raise LanguageError(
            "quantifier elimination over a lexicographic product is not supported")
    if slot not in free_slots(body):
        return _simplify(body)
    body = _normalize_z(spec, slot, body)
    terms = _other_terms(body, slot)
    cands: list = []
    if isinstance(spec, EqualitySpec):
        cands = [_At(t) for t in terms] + [_Fresh()]
    else:
        cands = [_NegInf(), _PosInf()]
        for t in terms:
            cands += [_At(t), _Above(t), _Below(t)]
        for k in _preds_on_z(body, slot):
            # a boundary hugged by a star is the star itself, a carrier point
            below = _star_just_below(spec, k)
            above = _star_just_above(spec, k)
            cands.append(_At(Lit(below)) if below is not None else _CutSide(k, -1))
            cands.append(_At(Lit(above)) if above is not None else _CutSide(k, +1))
            at = _cut_carrier_atom(spec, k)
            if at is not None:
                cands.append(_At(Lit(at)))
    return _simplify(_or_all(
        _simplify(_subst_virtual(spec, body, slot, c)) for c in cands))


def _other_terms(body, slot: int) -> list:
    seen: list = []
    for node in _walk_nodes(body):
        if isinstance(node, Cmp):
            for t in (node.left, node.right):
                if not (isinstance(t, Var) and t.slot == slot) and t not in seen:
                    seen.append(t)
        elif isinstance(node, Pred):
            t = node.term
            if not (isinstance(t, Var) and t.slot == slot) and t not in seen:
                seen.append(t)
    return seen


def _preds_on_z(body, slot: int) -> list:
    out = []
    for node in _walk_nodes(body):
        if isinstance(node, Pred) and isinstance(node.term, Var) \
                and node.term.slot == slot and node.index not in out:
            out.append(node.index)
    return out


def _cut_carrier_atom(spec, index: int):
    """The carrier atom sitting exactly at predicate boundary #index, if any."""
    if isinstance(spec, SumSpec) and index < boundary_count(spec):
        return None  # part boundaries are between carrier points
    cuts = _seg_cuts(spec)
    k = index - (boundary_count(spec) if isinstance(spec, SumSpec) else 0)
    seg_idx, cut = cuts[k]
    seg = _segments(spec)[seg_idx]
    if seg.field == "Q2" or cut.cutpoint.is_rational:
        return _make_atom(spec, seg_idx, cut.cutpoint)
    return None


def _is_z(t, slot) -> bool:
    return isinstance(t, Var) and t.slot == slot


def _normalize_z(spec, slot, f: Formula) -> Formula:
    """Rewrite atomics so the bound variable only appears on the left of
    comparisons, and z-vs-z atomics are folded to constants."""
    if isinstance(f, Cmp):
        zl, zr = _is_z(f.left, slot), _is_z(f.right, slot)
        if zl and zr:
            return TrueF() if f.op in ("=", "<=", ">=") else FalseF()
        if zr and not zl:
            flip = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}
            return Cmp(flip[f.op], f.right, f.left)
        return f
    if isinstance(f, Not):
        return Not(_normalize_z(spec, slot, f.body))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(_normalize_z(spec, slot, f.left),
                       _normalize_z(spec, slot, f.right))
    return f


def _subst_virtual(spec, f: Formula, slot: int, cand) -> Formula:
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Not):
        return Not(_subst_virtual(spec, f.body, slot, cand))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(_subst_virtual(spec, f.left, slot, cand),
                       _subst_virtual(spec, f.right, slot, cand))
    if isinstance(f, Cmp):
        if not _is_z(f.left, slot):
            return f
        return _subst_cmp(spec, f.op, f.right, cand)
    if isinstance(f, Pred):
        if not _is_z(f.term, slot):
            return f
        return _subst_pred(spec, f.index, cand)
    raise TypeError(f"unexpected node under elimination: {f!r}")


def _subst_cmp(spec, op: str, s: Term, cand) -> Formula:
    """Truth of (z op s) when z takes the virtual value cand."""
    if isinstance(cand, _At):
        return Cmp(op, cand.term, s)
    if isinstance(cand, _Fresh):
        # fresh atom differs from every term in scope
        return TrueF() if op == "!=" else FalseF()
    if isinstance(cand, _NegInf):
        return TrueF() if op in ("<", "<=", "!=") else FalseF()
    if isinstance(cand, _PosInf):
        return TrueF() if op in (">", ">=", "!=") else FalseF()
    if isinstance(cand, _Above):
        t = cand.term
        # t+eps op s
        return {"<": Cmp("<", t, s), "<=": Cmp("<", t, s),
                ">": Cmp(">=", t, s), ">=": Cmp(">=", t, s),
                "=": FalseF(), "!=": TrueF()}[op]
    if isinstance(cand, _Below):
        t = cand.term
        return {"<": Cmp("<=", t, s), "<=": Cmp("<=", t, s),
                ">": Cmp(">", t, s), ">=": Cmp(">", t, s),
                "=": FalseF(), "!=": TrueF()}[op]
    if isinstance(cand, _CutSide):
        # compare a point hugging predicate boundary k against carrier term s:
        # just below the boundary:  z < s  iff  s is not strictly below it
        # just above the boundary:  z < s  iff  s is not below-or-at it
        strictly_below = _strictly_below_boundary(spec, cand.index)
        below_or_at = _below_or_at_boundary(spec, cand.index)
        if cand.side < 0:
            return {"<": _not_f(strictly_below(s)), "<=": _not_f(strictly_below(s)),
                    ">": strictly_below(s), ">=": strictly_below(s),
                    "=": FalseF(), "!=": TrueF()}[op]
        return {"<": _not_f(below_or_at(s)), "<=": _not_f(below_or_at(s)),
                ">": below_or_at(s), ">=": below_or_at(s),
                "=": FalseF(), "!=": TrueF()}[op]
    raise TypeError(f"unknown candidate {cand!r}")


def _not_f(f: Formula) -> Formula:
    return _simplify(Not(f))


def _strictly_below_boundary(spec, index: int):
    """Formula maker: term is strictly below predicate boundary #index."""
    at = _cut_carrier_atom(spec, index)

    def make(s: Term) -> Formula:
        if at is not None:
            return Cmp("<", s, Lit(at))
        # the boundary point is not a carrier point, so strictly-below and
        # below-or-at coincide with the predicate itself
        return Pred(index, s)

    return make


def _below_or_at_boundary(spec, index: int):
    at = _cut_carrier_atom(spec, index)

    def make(s: Term) -> Formula:
        if at is not None:
            return Cmp("<=", s, Lit(at))
        return Pred(index, s)

    return make




def _subst_pred(spec, index: int, cand) -> Formula:
    """Truth of P_index(z) when z takes the virtual value cand."""
    if isinstance(cand, _At):
        return Pred(index, cand.term)
    if isinstance(cand, _NegInf):
        return TrueF()
    if isinstance(cand, _PosInf):
        return FalseF()
    if isinstance(cand, _Above):
        # t+eps is below the boundary iff t is strictly below it and t is not
        # the last carrier point under it (a star hugging the boundary)
        t = cand.term
        base = _strictly_below_boundary(spec, index)(t)
        star = _star_just_below(spec, index)
        if star is not None:
            return And(base, Cmp("!=", t, Lit(star)))
        return base
    if isinstance(cand, _Below):
        # t-eps is below the boundary iff t is below-or-at it, or t is the
        # first carrier point above it (a star hugging the boundary)
        t = cand.term
        base = _below_or_at_boundary(spec, index)(t)
        star = _star_just_above(spec, index)
        if star is not None:
            return Or(base, Cmp("=", t, Lit(star)))
        return base
    if isinstance(cand, _CutSide):
        rel = _boundary_order(spec, cand.index, index)
        if rel == "<":
            return TrueF()
        if rel == ">":
            return FalseF()
        # same boundary: just-below satisfies it; just-above does not
        return TrueF() if cand.side < 0 else FalseF()
    raise TypeError(f"unknown candidate {cand!r} for a predicate")


def _pred_boundary_pos(spec, index: int):
    """(segment, value, kind) position of predicate boundary #index; value
    None with kind 'part' means the boundary between segments."""
    if isinstance(spec, SumSpec) and index < boundary_count(spec):
        return (index, None, "part")
    cuts = _seg_cuts(spec)
    k = index - (boundary_count(spec) if isinstance(spec, SumSpec) else 0)
    seg, cut = cuts[k]
    return (seg, cut.cutpoint, "cut")


def _boundary_order(spec, i: int, j: int) -> str:
    """Order of predicate boundaries i and j along the carrier.

    Part boundary i sits above all of segment i and below segment i+1; cut
    boundaries sit at their cutpoint inside a segment.
    """
    si, vi, ki = _pred_boundary_pos(spec, i)
    sj, vj, kj = _pred_boundary_pos(spec, j)
    if ki == "part" and kj == "part":
        return "=" if si == sj else ("<" if si < sj else ">")
    if ki == "part":
        return "<" if si + 1 <= sj else ">"
    if kj == "part":
        return "<" if si <= sj else ">"
    if si != sj:
        return "<" if si < sj else ">"
    if vi == vj:
        return "="
    return "<" if vi < vj else ">"


def _star_just_below(spec, index: int):
    """The star atom that is the greatest carrier point below boundary
    #index, when the adjacent segment is a point part."""
    if not isinstance(spec, SumSpec):
        return None
    seg, val, kind = _pred_boundary_pos(spec, index)
    if kind != "part":
        return None
    if isinstance(spec.parts[seg], PointSpec):
        return SumAtom(seg, None)
    return None


def _star_just_above(spec, index: int):
    if not isinstance(spec, SumSpec):
        return None
    seg, val, kind = _pred_boundary_pos(spec, index)
    if kind != "part":
        return None
    if seg + 1 < len(spec.parts) and isinstance(spec.parts[seg + 1], PointSpec):
        return SumAtom(seg + 1, None)
    return None


# ---------------------------------------------------------------------------
# Satisfiability and equivalence

@dataclass(frozen=True)
class SatResult:
    satisfiable: bool
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.satisfiable


def satisfiable(spec: StructureSpec, f: Formula, params: tuple = (),
                arity: Optional[int] = None) -> SatResult:
    """Search for a tuple of atoms making f true under the given parameters.

    Complete for the supported structures: the quantifier-free form of f has
    constant truth on each atomic pattern over the parameters, the formula's
    own literals, and the structure's named points, so scanning one
    realization per pattern decides satisfiability.
    """
    if arity is None:
        slots = free_slots(f)
        arity = max(slots) + 1 if slots else 0
    g = qe(spec, f)
    landmarks = list(params)
    for a in literal_atoms(f) + literal_atoms(g):
        if a not in landmarks:
            landmarks.append(a)
    landmarks = tuple(landmarks)
    if arity == 0:
        ok = _eval_qf(spec, g, {}, tuple(params))
        return SatResult(ok, () if ok else None)
    for t in iter_types(spec, arity, landmarks):
        xs = realize_type(spec, t, landmarks)
        if _eval_qf(spec, g, dict(enumerate(xs)), tuple(params)):
            return SatResult(True, xs)
    return SatResult(False, None)


def equivalent(spec: StructureSpec, f: Formula, g: Formula,
               params: Optional[tuple] = None) -> bool:
    """Validity of f <-> g over the structure.

    With params given, the parameter holes are fixed to those atoms; without,
    parameter holes are treated as universally quantified extra variables.
    """
    if params is None:
        shift = max(free_slots(f) | free_slots(g), default=-1) + 1
        f = _params_to_vars(f, shift)
        g = _params_to_vars(g, shift)
        params = ()
    bad = Or(And(f, Not(g)), And(g, Not(f)))
    return not satisfiable(spec, bad, params)


def _params_to_vars(f: Formula, shift: int) -> Formula:
    def on_term(t):
        if isinstance(t, Param):
            return Var(shift + t.index, f"y{t.index}")
        if isinstance(t, First):
            return First(on_term(t.term))
        return t

    return map_terms(f, on_term)


def map_terms(f: Formula, fn) -> Formula:
    if isinstance(f, Cmp):
        return Cmp(f.op, fn(f.left), fn(f.right))
    if isinstance(f, Pred):
        return Pred(f.index, fn(f.term))
    if isinstance(f, Not):
        return Not(map_terms(f.body, fn))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(map_terms(f.left, fn), map_terms(f.right, fn))
    if isinstance(f, (Exists, Forall)):
        return type(f)(f.slot, f.name, map_terms(f.body, fn))
    return f


def substitute_var(f: Formula, slot: int, replacement: Term) -> Formula:
    def on_term(t):
        if isinstance(t, Var) and t.slot == slot:
            return replacement
        if isinstance(t, First):
            return First(on_term(t.term))
        return t

    return map_terms(f, on_term)


def shift_params(f: Formula, offset: int) -> Formula:
    def on_term(t):
        if isinstance(t, Param):
            return Param(t.index + offset)
        if isinstance(t, First):
            return First(on_term(t.term))
        return t

    return map_terms(f, on_term)


def shift_vars(f: Formula, offset: int) -> Formula:
    """Shift every variable slot (free and bound) by offset."""
    def walk(g):
        if isinstance(g, Cmp):
            return Cmp(g.op, on_term(g.left), on_term(g.right))
        if isinstance(g, Pred):
            return Pred(g.index, on_term(g.term))
        if isinstance(g, Not):
            return Not(walk(g.body))
        if isinstance(g, (And, Or, Implies)):
            return type(g)(walk(g.left), walk(g.right))
        if isinstance(g, (Exists, Forall)):
            return type(g)(g.slot + offset, g.name, walk(g.body))
        return g

    def on_term(t):
        if isinstance(t, Var):
            return Var(t.slot + offset, t.name)
        if isinstance(t, First):
            return First(on_term(t.term))
        return t

    return walk(f)
