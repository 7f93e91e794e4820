"""Schematic-variable elimination and formula simplification.

Law-level schematic variables over real sorts are bound by equality atoms in
the positions the input dialect uses (after-parts, if-parts, and implication
antecedents such as x=X ->> F(X)).  Substituting the bound term is exact
there: forall X ((c=X & G) -> F(X)) is equivalent to (G -> F(c)), and
exists X (c=X & G(X)) to G(c).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from . import core
from .core import (
    And, Cmp, ConstRef, FalseF, Formula, Implies, Lit, Not, Or, Term, TrueF, Var,
    conjoin, disjoin, formula_vars, implies, negate, substitute, term_vars,
)
from .errors import GroundingError


def simplify(f: Formula) -> Formula:
    """Constant-fold and flatten a formula; keeps atoms intact otherwise."""
    if isinstance(f, Cmp):
        if f.lhs == f.rhs and f.op in ("=", "<=", ">="):
            return core.TRUE
        if isinstance(f.lhs, Lit) and isinstance(f.rhs, Lit):
            a, b = f.lhs.value, f.rhs.value
            if f.op == "=":
                return core.TRUE if a == b else core.FALSE
            if isinstance(a, Fraction) and isinstance(b, Fraction):
                result = {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[f.op]
                return core.TRUE if result else core.FALSE
        return f
    if isinstance(f, Not):
        return negate(simplify(f.arg))
    if isinstance(f, And):
        return conjoin(simplify(i) for i in f.items)
    if isinstance(f, Or):
        return disjoin(simplify(i) for i in f.items)
    if isinstance(f, Implies):
        return implies(simplify(f.lhs), simplify(f.rhs))
    if isinstance(f, core.ForallInterval):
        return core.ForallInterval(f.var, f.lo, f.hi, simplify(f.body))
    if isinstance(f, core.DenseInvariant):
        return core.DenseInvariant(f.mode, simplify(f.body))
    return f


def _conjuncts(f: Formula) -> list[Formula]:
    return list(f.items) if isinstance(f, And) else [f]


def _find_binding(conjuncts: list[Formula], var: str) -> Optional[tuple[int, Term]]:
    for idx, c in enumerate(conjuncts):
        if isinstance(c, Cmp) and c.op == "=":
            if c.lhs == Var(var) and var not in term_vars(c.rhs):
                return idx, c.rhs
            if c.rhs == Var(var) and var not in term_vars(c.lhs):
                return idx, c.lhs
    return None


class CannotEliminate(GroundingError):
    pass


def _forall_one(f: Formula, var: str) -> Formula:
    if var not in formula_vars(f):
        return f
    if isinstance(f, And):
        return conjoin(_forall_one(i, var) for i in f.items)
    if isinstance(f, Or):
        holders = [i for i in f.items if var in formula_vars(i)]
        if len(holders) == 1:
            return disjoin(_forall_one(i, var) if i is holders[0] else i
                           for i in f.items)
        raise CannotEliminate(f"variable {var} spans a disjunction")
    if isinstance(f, Implies):
        ants = _conjuncts(f.lhs)
        found = _find_binding(ants, var)
        if found is not None:
            idx, term = found
            rest = conjoin(a for i, a in enumerate(ants) if i != idx)
            return simplify(substitute(implies(rest, f.rhs), {var: term}))
        in_lhs = var in formula_vars(f.lhs)
        in_rhs = var in formula_vars(f.rhs)
        if in_lhs and not in_rhs:
            return implies(_exists_one(f.lhs, var), f.rhs)
        if in_rhs and not in_lhs:
            return implies(f.lhs, _forall_one(f.rhs, var))
        raise CannotEliminate(f"variable {var} spans an implication")
    if isinstance(f, Not):
        return negate(_exists_one(f.arg, var))
    raise CannotEliminate(f"cannot eliminate {var} universally from an atom")


def _exists_one(f: Formula, var: str) -> Formula:
    if var not in formula_vars(f):
        return f
    if isinstance(f, Or):
        return disjoin(_exists_one(i, var) for i in f.items)
    if isinstance(f, And):
        items = list(f.items)
        found = _find_binding(items, var)
        if found is not None:
            idx, term = found
            rest = conjoin(a for i, a in enumerate(items) if i != idx)
            return simplify(substitute(rest, {var: term}))
        holders = [i for i in items if var in formula_vars(i)]
        if len(holders) == 1:
            return conjoin(_exists_one(i, var) if i is holders[0] else i
                           for i in items)
        raise CannotEliminate(f"variable {var} spans a conjunction")
    if isinstance(f, Not):
        return negate(_forall_one(f.arg, var))
    if isinstance(f, Implies):
        lhs = negate(_forall_one(f.lhs, var)) if var in formula_vars(f.lhs) \
            else negate(f.lhs)
        rhs = _exists_one(f.rhs, var) if var in formula_vars(f.rhs) else f.rhs
        return disjoin([lhs, rhs])
    if isinstance(f, Cmp):
        # a real variable alone on one side makes the atom satisfiable outright
        if f.lhs == Var(var) and var not in term_vars(f.rhs):
            return core.TRUE
        if f.rhs == Var(var) and var not in term_vars(f.lhs):
            return core.TRUE
        raise CannotEliminate(f"cannot eliminate {var} from {f}")
    raise CannotEliminate(f"cannot eliminate {var} existentially")


def _eliminate(f: Formula, mode: str) -> Formula:
    f = simplify(f)
    one = _forall_one if mode == "forall" else _exists_one
    while True:
        vars_left = formula_vars(f)
        if not vars_left:
            return f
        progressed = False
        for var in sorted(vars_left):
            try:
                f = simplify(one(f, var))
            except CannotEliminate:
                continue
            progressed = True
            break
        if not progressed:
            return f


def eliminate_forall(f: Formula) -> Formula:
    """Eliminate every schematic variable reading f as universally closed."""
    return _eliminate(f, "forall")


def eliminate_exists(f: Formula) -> Formula:
    """Eliminate every schematic variable reading f as existentially closed."""
    return _eliminate(f, "exists")
