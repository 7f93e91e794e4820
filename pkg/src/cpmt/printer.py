"""Rendering of the IR back into the .cp surface syntax.

The printer and the parser agree on a canonical shape, so that
parse(print(parse(text))) == parse(text) holds on the IR.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from . import core
from .core import (
    ActionDescription, AlwaysT, And, BinOp, Call, Category, Causes, Cmp, ConstRef,
    Constraint, ConstraintAfter, Default, DenseInvariant, Exogenous, FalseF,
    FlowIntegral, FluentDynamic, ForallInterval, Formula, Implies, Inertial, Lit,
    Neg, Nonexecutable, Not, Or, Param, QueryBlock, RateDecl, Static,
    ActionDynamic, Term, TrueF, Var,
)

_PREC_IMPL = 1
_PREC_AND = 2
_PREC_CMP = 3
_PREC_ADD = 4
_PREC_MUL = 5
_PREC_UNARY = 6
_PREC_ATOM = 7


def frac_str(q: Fraction) -> str:
    """Exact decimal form when one exists, p/q otherwise."""
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    k = max(twos, fives)
    scaled = q.numerator * 10 ** k // q.denominator
    digits = str(abs(scaled)).rjust(k + 1, "0")
    sign = "-" if scaled < 0 else ""
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


def fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return frac_str(v)
    return str(v)


def _paren(text: str, prec: int, minimum: int) -> str:
    return f"({text})" if prec < minimum else text


def fmt_term(t: Term, minimum: int = 0) -> str:
    if isinstance(t, Lit):
        text = fmt_value(t.value)
        prec = _PREC_UNARY if text.startswith("-") else _PREC_ATOM
        return _paren(text, prec, minimum)
    if isinstance(t, (Var, Param)):
        return t.name
    if isinstance(t, ConstRef):
        prefix = f"{t.stamp}:" if t.stamp is not None else ""
        if t.args:
            args = ", ".join(fmt_term(a) for a in t.args)
            return f"{prefix}{t.name}({args})"
        return prefix + t.name
    if isinstance(t, Neg):
        return _paren("-" + fmt_term(t.arg, _PREC_UNARY + 1), _PREC_UNARY, minimum)
    if isinstance(t, BinOp):
        prec = _PREC_MUL if t.op in "*/" else _PREC_ADD
        op = "//" if t.op == "/" else t.op
        lhs = fmt_term(t.lhs, prec)
        rhs = fmt_term(t.rhs, prec + 1)  # left-associative
        return _paren(f"{lhs} {op} {rhs}", prec, minimum)
    if isinstance(t, Call):
        return f"{t.fn}({fmt_term(t.arg)})"
    raise TypeError(f"cannot print term {t!r}")


def _is_bool_atom(f: Formula) -> bool:
    return (isinstance(f, Cmp) and f.op == "=" and isinstance(f.lhs, ConstRef)
            and f.rhs == Lit(True))


def fmt_formula(f: Formula, minimum: int = 0) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Cmp):
        if _is_bool_atom(f):
            return fmt_term(f.lhs)
        op = f.op
        return _paren(f"{fmt_term(f.lhs, _PREC_CMP + 1)} {op} {fmt_term(f.rhs, _PREC_CMP + 1)}",
                      _PREC_CMP, minimum)
    if isinstance(f, Not):
        if _is_bool_atom(f.arg):
            return "~" + fmt_term(f.arg.lhs)
        return _paren("-(" + fmt_formula(f.arg) + ")", _PREC_UNARY, minimum)
    if isinstance(f, And):
        body = " & ".join(fmt_formula(i, _PREC_AND + 1) for i in f.items)
        return _paren(body, _PREC_AND, minimum)
    if isinstance(f, Or):
        body = " | ".join(fmt_formula(i, _PREC_AND + 1) for i in f.items)
        return _paren(body, _PREC_AND, minimum)
    if isinstance(f, Implies):
        body = f"{fmt_formula(f.lhs, _PREC_IMPL + 1)} ->> {fmt_formula(f.rhs, _PREC_IMPL)}"
        return _paren(body, _PREC_IMPL, minimum)
    if isinstance(f, ForallInterval):
        return (f"forall {f.var} in [{fmt_term(f.lo)}, {fmt_term(f.hi)}]: "
                f"{fmt_formula(f.body)}")
    if isinstance(f, FlowIntegral):
        return f"<next diff fluents = integral(0, duration, flow[{fmt_value(f.mode)}])>"
    if isinstance(f, DenseInvariant):
        return f"<always_t[{fmt_value(f.mode)}] {fmt_formula(f.body)}>"
    raise TypeError(f"cannot print formula {f!r}")


def fmt_law(law) -> str:
    if isinstance(law, Constraint):
        return f"constraint {fmt_formula(law.body)}."
    if isinstance(law, ConstraintAfter):
        return f"constraint {fmt_formula(law.body)} after {fmt_formula(law.after)}."
    if isinstance(law, Nonexecutable):
        suffix = "" if law.cond == core.TRUE else f" if {fmt_formula(law.cond)}"
        return f"nonexecutable {fmt_formula(law.body)}{suffix}."
    if isinstance(law, Causes):
        suffix = "" if law.cond == core.TRUE else f" if {fmt_formula(law.cond)}"
        return f"{fmt_formula(law.trigger)} causes {fmt_formula(law.effect)}{suffix}."
    if isinstance(law, Default):
        text = f"default {fmt_formula(law.head)}"
        if law.cond != core.TRUE:
            text += f" if {fmt_formula(law.cond)}"
        if law.after is not None:
            text += f" after {fmt_formula(law.after)}"
        return text + "."
    if isinstance(law, Exogenous):
        suffix = "" if law.cond == core.TRUE else f" if {fmt_formula(law.cond)}"
        return f"exogenous {fmt_term(law.const)}{suffix}."
    if isinstance(law, Inertial):
        suffix = "" if law.cond == core.TRUE else f" if {fmt_formula(law.cond)}"
        return f"inertial {fmt_term(law.const)}{suffix}."
    if isinstance(law, RateDecl):
        mode = law.mode.name if isinstance(law.mode, Var) else fmt_value(law.mode)
        return f"derivative of {fmt_term(law.fluent)} is {fmt_term(law.rhs)} if mode={mode}."
    if isinstance(law, AlwaysT):
        mode = law.mode.name if isinstance(law.mode, Var) else fmt_value(law.mode)
        return f"always_t {fmt_formula(law.body, _PREC_CMP)} if mode={mode}."
    if isinstance(law, Static):
        head = "{" + fmt_formula(law.head) + "}" if law.choice else fmt_formula(law.head)
        cond = "" if law.cond == core.TRUE else f" if {fmt_formula(law.cond)}"
        return f"caused {head}{cond}."
    if isinstance(law, ActionDynamic):
        head = "{" + fmt_formula(law.head) + "}" if law.choice else fmt_formula(law.head)
        cond = "" if law.cond == core.TRUE else f" if {fmt_formula(law.cond)}"
        return f"caused {head}{cond}."
    if isinstance(law, FluentDynamic):
        head = "{" + fmt_formula(law.head) + "}" if law.choice else fmt_formula(law.head)
        cond = "" if law.cond == core.TRUE else f" if {fmt_formula(law.cond)}"
        return f"caused {head}{cond} after {fmt_formula(law.after)}."
    raise TypeError(f"cannot print law {law!r}")


def _fmt_sort_arg(sort) -> str | None:
    if isinstance(sort, core.BoolSort):
        return None
    if isinstance(sort, core.EnumSort):
        return sort.name
    lo = "" if sort.lo is None else frac_str(sort.lo)
    hi = "" if sort.hi is None else frac_str(sort.hi)
    return f"real[{lo}..{hi}]"


def _decl_keyword(decl) -> str:
    if decl.category is Category.DIFF_FLUENT:
        return "differentiableFluent"
    if decl.category is Category.ACTION:
        return "action"
    if decl.category is Category.SD_FLUENT:
        return "sdFluent"
    return "simpleFluent"


def fmt_description(desc: ActionDescription, queries: Iterable[QueryBlock] = ()) -> str:
    """Render a description (and query blocks) as a .cp file."""
    lines: list[str] = []
    implicit = desc.implicit

    user_sorts = {n: s for n, s in desc.sorts.items()
                  if not n.startswith("_") and any(isinstance(v, str) for v in s.values)}
    if user_sorts:
        lines.append(":- sorts")
        lines.append(";\n".join(name for name in user_sorts) + ".")
        lines.append("")
        lines.append(":- objects")
        obj_groups = [f"{', '.join(str(v) for v in s.values)} :: {name}"
                      for name, s in user_sorts.items()]
        lines.append(";\n".join(obj_groups) + ".")
        lines.append("")

    decls = [d for name, d in desc.constants.items() if name not in implicit]
    if decls:
        lines.append(":- constants")
        groups: list[str] = []
        for d in decls:
            name = d.name
            if d.arg_sorts:
                name += "(" + ", ".join(str(s) for s in d.arg_sorts) + ")"
            keyword = _decl_keyword(d)
            arg = _fmt_sort_arg(d.value_sort)
            groups.append(f"{name} :: {keyword}({arg})" if arg else f"{name} :: {keyword}")
        lines.append(";\n".join(groups) + ".")
        lines.append("")

    if desc.variables:
        lines.append(":- variables")
        by_sort: dict[str, list[str]] = {}
        for v, s in desc.variables.items():
            key = "" if s == core.REAL else str(s)
            by_sort.setdefault(key, []).append(v)
        groups = [", ".join(names) + (f" :: {key}" if key else "")
                  for key, names in by_sort.items()]
        lines.append(";\n".join(groups) + ".")
        lines.append("")

    for law in desc.laws:
        if isinstance(law, (Inertial, Exogenous)) and law.const.name in implicit:
            continue  # re-derived alongside the implicit declaration
        lines.append(fmt_law(law))
    for q in queries:
        lines.append("")
        lines.append(":- query")
        items = [f"label :: {q.label}"]
        if q.maxstep is not None:
            items.append(f"maxstep :: {q.maxstep}")
        items.extend(f"{i}:{fmt_formula(f)}" for i, f in q.constraints)
        lines.append(";\n".join(items) + ".")
    return "\n".join(lines) + "\n"
