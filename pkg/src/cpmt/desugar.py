"""Expansion of surface abbreviations into basic causal laws.

constraint/nonexecutable/causes/default/exogenous/inertial all reduce to
static, action-dynamic, or fluent-dynamic laws (choice heads are carried as
a flag so completion can treat them as self-supporting).  Rate declarations
and dense-invariant laws are collected into the flow and invariant tables
and compiled to marker-headed laws resolved later by the SMT emitter or the
numeric validator.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping, Optional, Union

from . import core, varelim
from .core import (
    ActionDescription, ActionDynamic, AlwaysT, BoolSort, Category, Causes, Cmp,
    ConstRef, Constraint, ConstraintAfter, Default, DenseInvariant, EnumSort,
    Exogenous, FalseF, FlowIntegral, FluentDynamic, Formula, Inertial, Lit,
    Nonexecutable, Not, RateDecl, RealSort, Static, Term, TrueF, Value, Var,
    bool_atom, conjoin, formula_vars, ground_name, negate, substitute,
)
from .errors import GroundingError

BasicLaw = Union[Static, ActionDynamic, FluentDynamic]


@dataclass(frozen=True)
class BasicDescription:
    sorts: Mapping[str, EnumSort]
    constants: Mapping[str, core.ConstantDecl]
    variables: Mapping[str, core.Sort]
    laws: tuple[BasicLaw, ...]
    flow_table: Mapping[tuple[Value, str], Term]
    invariant_table: Mapping[Value, tuple[Formula, ...]]
    diff_order: tuple[str, ...]  # ground differentiable fluent names, decl order
    params: frozenset[str] = frozenset()
    implicit: frozenset[str] = frozenset()

    def mode_values(self) -> tuple[Value, ...]:
        return _mode_domain(self)

    def decl_of(self, name: str) -> core.ConstantDecl:
        return self.constants[name]


def _mode_domain(desc) -> tuple[Value, ...]:
    decl = desc.constants.get("mode")
    if decl is not None and isinstance(decl.value_sort, EnumSort):
        return decl.value_sort.values
    values: list[Value] = []
    for law in desc.laws:
        for f in core.law_formulas(law):
            for atom in _atoms(f):
                if (atom.op == "=" and isinstance(atom.lhs, ConstRef)
                        and atom.lhs.name == "mode" and isinstance(atom.rhs, Lit)
                        and not isinstance(atom.rhs.value, bool)):
                    if atom.rhs.value not in values:
                        values.append(atom.rhs.value)
    return tuple(values)


def _atoms(f: Formula):
    if isinstance(f, Cmp):
        yield f
    elif isinstance(f, Not):
        yield from _atoms(f.arg)
    elif isinstance(f, (core.And, core.Or)):
        for i in f.items:
            yield from _atoms(i)
    elif isinstance(f, core.Implies):
        yield from _atoms(f.lhs)
        yield from _atoms(f.rhs)
    elif isinstance(f, (core.ForallInterval, DenseInvariant)):
        yield from _atoms(f.body)


def _is_action_formula(f: Formula, constants) -> bool:
    has_action = False
    for ref in core.formula_constants(f):
        decl = constants.get(ref.name)
        if decl is None:
            continue
        if decl.is_action:
            has_action = True
        else:
            return False
    return has_action


def _norm_head(f: Formula) -> Formula:
    """Negated boolean atoms become =false so heads stay atomic."""
    if isinstance(f, Not) and isinstance(f.arg, Cmp) and f.arg.op == "=" \
            and isinstance(f.arg.rhs, Lit) and isinstance(f.arg.rhs.value, bool):
        return Cmp("=", f.arg.lhs, Lit(not f.arg.rhs.value))
    return f


def _fresh_var(taken: set[str]) -> str:
    i = 0
    while f"V{i}" in taken:
        i += 1
    taken.add(f"V{i}")
    return f"V{i}"


def _value_atoms(const: ConstRef, sort, taken: set[str]):
    """Yield (head atom, value-or-None) pairs covering Dom(const)."""
    if isinstance(sort, BoolSort):
        for v in (True, False):
            yield Cmp("=", const, Lit(v))
    elif isinstance(sort, EnumSort):
        for v in sort.values:
            yield Cmp("=", const, Lit(v))
    else:
        yield Cmp("=", const, Var(_fresh_var(taken)))


def _expand_enum_vars(law, variables) -> list:
    """Instantiate law-level schematic variables of enumeration sorts."""
    enum_vars = sorted(
        v for f in core.law_formulas(law) for v in formula_vars(f)
        if isinstance(variables.get(v), EnumSort)
    )
    enum_vars = list(dict.fromkeys(enum_vars))
    if not enum_vars:
        return [law]
    domains = [variables[v].values for v in enum_vars]
    out = []
    for combo in product(*domains):
        binding = {v: Lit(val) for v, val in zip(enum_vars, combo)}
        out.append(core.map_law(law, lambda f: substitute(f, binding),
                                lambda t: core.subst_term(t, binding)))
    return out


def expand_abbreviations(desc) -> BasicDescription:
    """Expand every surface abbreviation; idempotent on expanded input."""
    if isinstance(desc, BasicDescription):
        return desc

    taken = set(desc.variables)
    laws: list[BasicLaw] = []
    flow_table: dict[tuple[Value, str], Term] = {}
    invariant_table: dict[Value, list[Formula]] = {}
    mode_domain = _mode_domain(desc)

    ground_laws = []
    for law in desc.laws:
        ground_laws.extend(_expand_enum_vars(law, desc.variables))

    for law in ground_laws:
        if isinstance(law, (RateDecl, AlwaysT)) and isinstance(law.mode, Var):
            if not mode_domain:
                raise GroundingError("mode variable used but no mode values known")
            for v in mode_domain:
                _expand_one(law.__class__(**{**law.__dict__, "mode": v}),
                            desc, taken, laws, flow_table, invariant_table)
        else:
            _expand_one(law, desc, taken, laws, flow_table, invariant_table)

    diff_order = _diff_order(desc)
    _compile_markers(desc, flow_table, invariant_table, diff_order, laws)

    laws = [l for l in _simplified(laws)]
    return BasicDescription(
        sorts=dict(desc.sorts),
        constants=dict(desc.constants),
        variables=dict(desc.variables),
        laws=tuple(laws),
        flow_table=flow_table,
        invariant_table={v: tuple(fs) for v, fs in invariant_table.items()},
        diff_order=diff_order,
        params=desc.params,
        implicit=desc.implicit,
    )


def _diff_order(desc) -> tuple[str, ...]:
    names = []
    for decl in desc.constants.values():
        if decl.category is not Category.DIFF_FLUENT:
            continue
        combos = [()]
        for s in decl.arg_sorts:
            combos = [c + (v,) for c in combos for v in s.values]
        names.extend(ground_name(decl.name, c) for c in combos)
    return tuple(names)


def _expand_one(law, desc, taken, laws, flow_table, invariant_table) -> None:
    constants = desc.constants
    if isinstance(law, (Static, ActionDynamic, FluentDynamic)):
        laws.append(law)
    elif isinstance(law, Constraint):
        laws.append(Static(core.FALSE, negate(law.body)))
    elif isinstance(law, ConstraintAfter):
        laws.append(FluentDynamic(core.FALSE, negate(law.body), law.after))
    elif isinstance(law, Nonexecutable):
        laws.append(FluentDynamic(core.FALSE, core.TRUE,
                                  conjoin([law.body, law.cond])))
    elif isinstance(law, Causes):
        head = _norm_head(law.effect)
        body = conjoin([law.trigger, law.cond])
        if _is_action_formula(law.effect, constants):
            laws.append(ActionDynamic(head, body))
        else:
            laws.append(FluentDynamic(head, core.TRUE, body))
    elif isinstance(law, Default):
        head = _norm_head(law.head)
        if law.after is not None:
            laws.append(FluentDynamic(head, law.cond, law.after, choice=True))
        elif _is_action_formula(law.head, constants):
            laws.append(ActionDynamic(head, law.cond, choice=True))
        else:
            laws.append(Static(head, law.cond, choice=True))
    elif isinstance(law, Exogenous):
        decl = constants.get(law.const.name)
        if decl is None:
            raise GroundingError(f"exogenous on undeclared constant {law.const.name}")
        for atom in _value_atoms(law.const, decl.value_sort, taken):
            if decl.is_action:
                laws.append(ActionDynamic(atom, law.cond, choice=True))
            else:
                laws.append(Static(atom, law.cond, choice=True))
    elif isinstance(law, Inertial):
        decl = constants.get(law.const.name)
        if decl is None:
            raise GroundingError(f"inertial on undeclared constant {law.const.name}")
        if decl.is_action:
            raise GroundingError(f"inertial applies to fluents, not {law.const.name}")
        for atom in _value_atoms(law.const, decl.value_sort, taken):
            laws.append(FluentDynamic(atom, core.TRUE,
                                      conjoin([atom, law.cond]), choice=True))
    elif isinstance(law, RateDecl):
        key = (law.mode, ground_name(law.fluent.name,
                                     tuple(a.value for a in law.fluent.args
                                           if isinstance(a, Lit))))
        decl = constants.get(law.fluent.name)
        if decl is None or decl.category is not Category.DIFF_FLUENT:
            raise GroundingError(
                f"rate declaration on non-differentiable fluent {law.fluent.name}")
        if key in flow_table:
            raise GroundingError(
                f"duplicate rate declaration for {key[1]} in mode {key[0]}")
        flow_table[key] = law.rhs
    elif isinstance(law, AlwaysT):
        body = varelim.eliminate_forall(law.body)
        leftover = formula_vars(body)
        if leftover:
            raise GroundingError(
                f"always_t body has uneliminable variable(s) {sorted(leftover)}")
        for ref in core.formula_constants(body):
            decl = constants.get(ref.name)
            if decl is None or decl.category is not Category.DIFF_FLUENT:
                raise GroundingError(
                    f"always_t body mentions non-differentiable constant {ref.name}")
        invariant_table.setdefault(law.mode, []).append(body)
    else:
        raise GroundingError(f"unknown law form {law!r}")


def compile_rate_declarations(flow_table: Mapping[tuple[Value, str], Term],
                              mode: Value, diff_order: tuple[str, ...]) -> FluentDynamic:
    """One combined law per mode: after a waited transition in this mode the
    differentiable fluents advance by the integral of the mode's field."""
    missing = [x for x in diff_order if (mode, x) not in flow_table]
    if missing:
        raise GroundingError(
            f"mode {mode}: rate declaration(s) missing for {', '.join(missing)}")
    after = conjoin([Cmp("=", ConstRef("mode"), Lit(mode)), bool_atom(ConstRef("wait"))])
    return FluentDynamic(FlowIntegral(mode), core.TRUE, after)


def compile_invariant_laws(invariant_table: Mapping[Value, tuple[Formula, ...]],
                           mode: Value) -> list[FluentDynamic]:
    """One time-quantified law per always_t statement of the mode."""
    after = conjoin([Cmp("=", ConstRef("mode"), Lit(mode)), bool_atom(ConstRef("wait"))])
    return [FluentDynamic(DenseInvariant(mode, body), core.TRUE, after)
            for body in invariant_table.get(mode, ())]


def _compile_markers(desc, flow_table, invariant_table, diff_order, laws) -> None:
    flow_modes = sorted({m for (m, _) in flow_table}, key=str)
    if flow_table and not diff_order:
        raise GroundingError("rate declarations without differentiable fluents")
    for v in flow_modes:
        laws.append(compile_rate_declarations(flow_table, v, diff_order))
    for v in sorted(invariant_table, key=str):
        laws.extend(compile_invariant_laws(invariant_table, v))


def _simplified(laws):
    for law in laws:
        law = core.map_law(law, varelim.simplify)
        if isinstance(law, Static) and isinstance(law.cond, FalseF):
            continue
        if isinstance(law, ActionDynamic) and isinstance(law.cond, FalseF):
            continue
        if isinstance(law, FluentDynamic) and (
                isinstance(law.cond, FalseF) or isinstance(law.after, FalseF)):
            continue
        if not law.choice and isinstance(law.head, TrueF):
            continue
        yield law
