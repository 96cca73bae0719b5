"""Workbench for finitely-supported sets over structured atoms.

Decision procedures for membership, support and orbit structure of definable
sets; constructive automorphism witnesses; a hereditarily finite oracle; and
a desk-scale forcing lab for transferring symmetric universes between atom
structures of different cardinalities.
"""

from .atoms import (  # noqa: F401
    Atom, CutSpec, DLOSpec, EqAtom, EqualitySpec, LexAtom, LexSpec, OrdAtom,
    PatternError, PointSpec, QuadRat, SortMismatchError, StructureSpec,
    SumAtom, SumSpec, TypePattern, atom_cmp, enumerate_types, format_atom,
    ord_atom, parse_atom, parse_spec, parse_value, realize_type, tuple_type,
)

__version__ = "0.1.0"
