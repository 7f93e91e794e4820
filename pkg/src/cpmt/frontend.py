"""Parsers for the .cp input dialect and the JSON hybrid-automaton format.

The .cp grammar is a deterministic recursive descent over the token stream.
Precedence, tightest first: unary - and ~; * and //; + and -; comparisons;
&; | ; ->> (right-associative). Comments run from % to end of line.
Statements end with a period; section items are separated by semicolons.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import core
from .core import (
    ActionDescription, AlwaysT, And, BinOp, BoolSort, Call, Category, Causes,
    Cmp, ConstRef, Constraint, ConstraintAfter, ConstantDecl, Default, EnumSort,
    Exogenous, Formula, HybridAutomaton, Inertial, Lit, Neg, Nonexecutable, Not,
    Or, Param, QueryBlock, RateDecl, RealSort, Static, Switch, Term, Var,
    BACKGROUND_FUNCTIONS, BUILTIN_CONSTANTS, BOOLEAN, NONNEG_REAL, REAL, TRUE,
    bool_atom,
)
from .errors import InputError, SourceSpan

AUTO_CONSTANTS = ("mode", "wait", "duration")

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<number>\d+(\.\d+)?(?!\.?\d))
  | (?P<name>[a-z][A-Za-z0-9_]*'?)
  | (?P<varname>[A-Z][A-Za-z0-9_]*)
  | (?P<op>:-|::|\.\.|->>|<=|>=|//|[-+*/<>=&|~().,;:\[\]])
""", re.VERBOSE)

KEYWORDS = frozenset({
    "sorts", "objects", "constants", "variables", "query", "label", "maxstep",
    "simpleFluent", "inertialFluent", "differentiableFluent",
    "exogenousAction", "action",
    "exogenous", "inertial", "default", "constraint", "nonexecutable",
    "caused", "causes", "after", "if", "derivative", "of", "is", "always_t",
    "true", "false", "real",
})


@dataclass(frozen=True)
class Token:
    kind: str  # number | name | varname | op | eof
    text: str
    span: SourceSpan


def tokenize(text: str, filename: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise InputError(f"unexpected character {text[pos]!r}",
                             SourceSpan(filename, line, col))
        kind = m.lastgroup
        lexeme = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, lexeme, SourceSpan(filename, line, col, len(lexeme))))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(filename, line, col)))
    return tokens


# ---------------------------------------------------------------------------
# Expression parsing (shared by .cp laws, query items, and HA formulas)
# ---------------------------------------------------------------------------

Expr = object  # Either a core.Term or a core.Formula

Resolver = Callable[[str, SourceSpan], Term]


class _TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def accept(self, text: str) -> Optional[Token]:
        if self.peek().text == text and self.peek().kind != "eof":
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            raise InputError(f"expected {text!r}, found {tok.text!r}", tok.span)
        return self.next()

    def error(self, message: str) -> InputError:
        return InputError(message, self.peek().span)


def _fold_neg(term: Term) -> Term:
    if isinstance(term, Lit) and isinstance(term.value, Fraction):
        return Lit(-term.value)
    return Neg(term)


class ExprParser:
    """Precedence-climbing parser over a token stream, producing terms or
    formulas; a resolver maps lowercase identifiers to term nodes."""

    def __init__(self, stream: _TokenStream, resolver: Resolver,
                 variables: Optional[dict[str, core.Sort]] = None):
        self.ts = stream
        self.resolve = resolver
        self.variables = variables

    # -- coercion ----------------------------------------------------------
    def to_formula(self, x: Expr, span: SourceSpan) -> Formula:
        if isinstance(x, (core.TrueF, core.FalseF, Cmp, Not, And, Or,
                          core.Implies, core.ForallInterval)):
            return x
        if isinstance(x, ConstRef):
            return bool_atom(x)
        if isinstance(x, Lit) and isinstance(x.value, bool):
            return core.TRUE if x.value else core.FALSE
        if isinstance(x, Param):
            raise InputError(f"undeclared identifier {x.name}", span)
        if isinstance(x, Var):
            raise InputError(f"variable {x.name} cannot stand alone as a formula", span)
        raise InputError("expected a formula, found an arithmetic term", span)

    def to_term(self, x: Expr, span: SourceSpan) -> Term:
        if isinstance(x, (Lit, Var, Param, ConstRef, Neg, BinOp, Call)):
            return x
        raise InputError("expected a term, found a formula", span)

    # -- grammar -----------------------------------------------------------
    def formula(self) -> Formula:
        span = self.ts.peek().span
        return self.to_formula(self.implication(), span)

    def term(self) -> Term:
        span = self.ts.peek().span
        return self.to_term(self.implication(), span)

    def implication(self) -> Expr:
        span = self.ts.peek().span
        lhs = self.disjunction()
        if self.ts.accept("->>"):
            rhs = self.implication()  # right-associative
            return core.Implies(self.to_formula(lhs, span),
                                self.to_formula(rhs, self.ts.peek().span))
        return lhs

    def disjunction(self) -> Expr:
        span = self.ts.peek().span
        lhs = self.conjunction()
        if self.ts.peek().text != "|":
            return lhs
        items = [self.to_formula(lhs, span)]
        while self.ts.accept("|"):
            span = self.ts.peek().span
            items.append(self.to_formula(self.conjunction(), span))
        return Or(tuple(items))

    def conjunction(self) -> Expr:
        span = self.ts.peek().span
        lhs = self.comparison()
        if self.ts.peek().text != "&":
            return lhs
        items = [self.to_formula(lhs, span)]
        while self.ts.accept("&"):
            span = self.ts.peek().span
            items.append(self.to_formula(self.comparison(), span))
        return And(tuple(items))

    def comparison(self) -> Expr:
        span = self.ts.peek().span
        lhs = self.additive()
        op = self.ts.peek().text
        if op in ("=", "<", "<=", ">", ">="):
            self.ts.next()
            rhs_span = self.ts.peek().span
            rhs = self.additive()
            return Cmp(op, self.to_term(lhs, span), self.to_term(rhs, rhs_span))
        return lhs

    def additive(self) -> Expr:
        span = self.ts.peek().span
        lhs = self.multiplicative()
        while self.ts.peek().text in ("+", "-"):
            op = self.ts.next().text
            rhs_span = self.ts.peek().span
            rhs = self.multiplicative()
            lhs = BinOp(op, self.to_term(lhs, span), self.to_term(rhs, rhs_span))
        return lhs

    def multiplicative(self) -> Expr:
        span = self.ts.peek().span
        lhs = self.unary()
        while self.ts.peek().text in ("*", "//", "/"):
            op = self.ts.next().text
            rhs_span = self.ts.peek().span
            rhs = self.unary()
            lhs = BinOp("/" if op == "//" else op,
                        self.to_term(lhs, span), self.to_term(rhs, rhs_span))
        return lhs

    def unary(self) -> Expr:
        tok = self.ts.peek()
        if tok.text == "-":
            self.ts.next()
            operand = self.unary()
            if isinstance(operand, (Lit, Var, Param, ConstRef, Neg, BinOp, Call)):
                return _fold_neg(operand)
            return core.negate(self.to_formula(operand, tok.span))
        if tok.text == "~":
            self.ts.next()
            operand = self.unary()
            return core.negate(self.to_formula(operand, tok.span))
        return self.primary()

    def primary(self) -> Expr:
        tok = self.ts.peek()
        if tok.text == "(":
            self.ts.next()
            inner = self.implication()
            self.ts.expect(")")
            return inner
        if tok.kind == "number":
            self.ts.next()
            return Lit(Fraction(tok.text))
        if tok.text == "true":
            self.ts.next()
            return Lit(True)
        if tok.text == "false":
            self.ts.next()
            return Lit(False)
        if tok.kind == "varname":
            self.ts.next()
            if self.variables is not None and tok.text not in self.variables:
                raise InputError(f"undeclared identifier {tok.text}", tok.span)
            return Var(tok.text)
        if tok.kind == "name":
            self.ts.next()
            if (tok.text in BACKGROUND_FUNCTIONS and self.ts.peek().text == "("):
                self.ts.next()
                arg = self.term()
                self.ts.expect(")")
                return Call(tok.text, arg)
            args: tuple[Term, ...] = ()
            if self.ts.peek().text == "(":
                self.ts.next()
                arglist = [self.term()]
                while self.ts.accept(","):
                    arglist.append(self.term())
                self.ts.expect(")")
                args = tuple(arglist)
            node = self.resolve(tok.text, tok.span)
            if args:
                if not isinstance(node, ConstRef):
                    raise InputError(f"{tok.text} does not take arguments", tok.span)
                node = ConstRef(node.name, args)
            return node
        raise self.ts.error(f"unexpected token {tok.text!r}")


# ---------------------------------------------------------------------------
# .cp file parser
# ---------------------------------------------------------------------------

class DescriptionParser:
    def __init__(self, text: str, filename: str):
        self.ts = _TokenStream(tokenize(text, filename))
        self.filename = filename
        self.sorts: dict[str, list] = {}
        self.objects: dict[str, str] = {}  # object name -> sort name
        self.constants: dict[str, ConstantDecl] = {}
        self.variables: dict[str, core.Sort] = {}
        self.laws: list[core.CausalLaw] = []
        self.queries: list[QueryBlock] = []
        self.params: set[str] = set()
        self.auto_used: set[str] = set()
        self.implicit_added: set[str] = set()
        self.mode_values: list = []

    # -- identifier resolution ---------------------------------------------
    def _resolve(self, name: str, span: SourceSpan) -> Term:
        if name in self.constants:
            return ConstRef(name)
        if name in self.objects:
            return Lit(name)
        if name in BUILTIN_CONSTANTS:
            return Lit(BUILTIN_CONSTANTS[name])
        if name in AUTO_CONSTANTS:
            self.auto_used.add(name)
            return ConstRef(name)
        self.params.add(name)
        return Param(name)

    def _expr_parser(self) -> ExprParser:
        return ExprParser(self.ts, self._resolve, self.variables)

    # -- top level -----------------------------------------------------------
    def parse(self) -> tuple[ActionDescription, tuple[QueryBlock, ...]]:
        while self.ts.peek().kind != "eof":
            if self.ts.peek().text == ":-":
                self._section()
            else:
                self._law_statement()
        self._finish_implicit()
        self._check_wellformed()
        desc = ActionDescription(
            sorts=dict(self._enum_sorts()),
            constants=dict(self.constants),
            variables=dict(self.variables),
            laws=tuple(self.laws),
            params=frozenset(self.params),
            implicit=frozenset(self.implicit_added),
        )
        return desc, tuple(self.queries)

    def _enum_sorts(self):
        for name, values in self.sorts.items():
            yield name, EnumSort(name, tuple(values))

    # -- sections -------------------------------------------------------------
    def _section(self) -> None:
        self.ts.expect(":-")
        kw = self.ts.next()
        handlers = {
            "sorts": self._sorts_section,
            "objects": self._objects_section,
            "constants": self._constants_section,
            "variables": self._variables_section,
            "query": self._query_section,
        }
        if kw.text not in handlers:
            raise InputError(f"unknown section {kw.text!r}", kw.span)
        handlers[kw.text]()

    def _section_items(self):
        """Yield between-semicolon positions until the closing period."""
        while True:
            yield
            if self.ts.accept(";"):
                continue
            self.ts.expect(".")
            return

    def _ident(self, what: str = "identifier") -> Token:
        tok = self.ts.next()
        if tok.kind != "name":
            raise InputError(f"expected {what}, found {tok.text!r}", tok.span)
        return tok

    def _sorts_section(self) -> None:
        for _ in self._section_items():
            names = [self._ident("sort name")]
            while self.ts.accept(","):
                names.append(self._ident("sort name"))
            for tok in names:
                self.sorts.setdefault(tok.text, [])

    def _objects_section(self) -> None:
        for _ in self._section_items():
            values = [self._object_value()]
            while self.ts.accept(","):
                values.append(self._object_value())
            self.ts.expect("::")
            sort = self._ident("sort name")
            if sort.text not in self.sorts:
                raise InputError(f"unknown sort {sort.text}", sort.span)
            for v, span in values:
                if v in self.objects:
                    raise InputError(f"object {v} declared twice", span)
                self.objects[v] = sort.text
                self.sorts[sort.text].append(v)

    def _object_value(self):
        tok = self.ts.next()
        if tok.kind == "name":
            return tok.text, tok.span
        if tok.kind == "number":
            return Fraction(tok.text), tok.span
        raise InputError(f"expected object name, found {tok.text!r}", tok.span)

    def _constants_section(self) -> None:
        for _ in self._section_items():
            specs = [self._const_namespec()]
            while self.ts.accept(","):
                specs.append(self._const_namespec())
            self.ts.expect("::")
            kind = self._ident("constant kind")
            value_sort: core.Sort = BOOLEAN
            if self.ts.accept("("):
                value_sort = self._sort_argument()
                self.ts.expect(")")
            for (name_tok, arg_sorts) in specs:
                self._declare(name_tok, arg_sorts, kind, value_sort)

    def _const_namespec(self):
        name = self._ident("constant name")
        arg_sorts: list[EnumSort] = []
        if self.ts.accept("("):
            while True:
                s = self._ident("sort name")
                if s.text not in self.sorts:
                    raise InputError(f"unknown sort {s.text}", s.span)
                arg_sorts.append(EnumSort(s.text, tuple(self.sorts[s.text])))
                if not self.ts.accept(","):
                    break
            self.ts.expect(")")
        return name, tuple(arg_sorts)

    def _signed_number(self) -> Fraction:
        sign = -1 if self.ts.accept("-") else 1
        tok = self.ts.next()
        if tok.kind != "number":
            raise InputError(f"expected number, found {tok.text!r}", tok.span)
        return sign * Fraction(tok.text)

    def _sort_argument(self) -> core.Sort:
        tok = self.ts.peek()
        if tok.text == "real":
            self.ts.next()
            self.ts.expect("[")
            lo = self._signed_number()
            self.ts.expect("..")
            hi = self._signed_number()
            self.ts.expect("]")
            return RealSort(lo, hi)
        if tok.kind == "number" or tok.text == "-":
            lo = self._signed_number()
            self.ts.expect("..")
            hi = self._signed_number()
            return RealSort(lo, hi)
        if tok.kind == "name":
            self.ts.next()
            if tok.text not in self.sorts:
                raise InputError(f"unknown sort {tok.text}", tok.span)
            return EnumSort(tok.text, tuple(self.sorts[tok.text]))
        raise InputError(f"expected a sort argument, found {tok.text!r}", tok.span)

    _KIND_MAP = {
        "simpleFluent": Category.SIMPLE_FLUENT,
        "inertialFluent": Category.SIMPLE_FLUENT,
        "differentiableFluent": Category.DIFF_FLUENT,
        "exogenousAction": Category.ACTION,
        "action": Category.ACTION,
    }

    def _declare(self, name_tok: Token, arg_sorts, kind: Token, value_sort) -> None:
        if kind.text not in self._KIND_MAP:
            raise InputError(f"unknown constant kind {kind.text}", kind.span)
        name = name_tok.text
        if name in self.constants:
            raise InputError(f"constant {name} declared twice", name_tok.span)
        category = self._KIND_MAP[kind.text]
        if kind.text == "differentiableFluent" and isinstance(value_sort, BoolSort):
            raise InputError("differentiableFluent needs a real sort", kind.span)
        try:
            decl = ConstantDecl(name, arg_sorts, value_sort, category)
        except Exception as exc:  # sort invariant violations
            raise InputError(str(exc), name_tok.span)
        self.constants[name] = decl
        for ref in self._ground_refs(decl):
            if kind.text == "inertialFluent":
                self.laws.append(Inertial(ref))
            elif kind.text == "exogenousAction":
                self.laws.append(Exogenous(ref))

    @staticmethod
    def _ground_refs(decl: ConstantDecl):
        combos = [()]
        for s in decl.arg_sorts:
            combos = [c + (Lit(v),) for c in combos for v in s.values]
        return [ConstRef(decl.name, args) for args in combos]

    def _variables_section(self) -> None:
        for _ in self._section_items():
            names = []
            tok = self.ts.next()
            if tok.kind != "varname":
                raise InputError(f"expected variable name, found {tok.text!r}", tok.span)
            names.append(tok)
            while self.ts.accept(","):
                tok = self.ts.next()
                if tok.kind != "varname":
                    raise InputError(f"expected variable name, found {tok.text!r}", tok.span)
                names.append(tok)
            sort: core.Sort = REAL
            if self.ts.accept("::"):
                s = self._ident("sort name")
                if s.text not in self.sorts:
                    raise InputError(f"unknown sort {s.text}", s.span)
                sort = EnumSort(s.text, tuple(self.sorts[s.text]))
            for tok in names:
                self.variables[tok.text] = sort

    def _query_section(self) -> None:
        label: Optional[str] = None
        maxstep: Optional[int] = None
        constraints: list[tuple[int, Formula]] = []
        for _ in self._section_items():
            tok = self.ts.peek()
            if tok.text == "label":
                self.ts.next()
                self.ts.expect("::")
                label = self._ident("query label").text
            elif tok.text == "maxstep":
                self.ts.next()
                self.ts.expect("::")
                num = self.ts.next()
                if num.kind != "number" or "." in num.text:
                    raise InputError("maxstep must be a nonnegative integer", num.span)
                maxstep = int(num.text)
            elif tok.kind == "number":
                self.ts.next()
                if "." in tok.text:
                    raise InputError("time stamp must be an integer", tok.span)
                self.ts.expect(":")
                constraints.append((int(tok.text), self._expr_parser().formula()))
            else:
                raise InputError(f"unexpected query item {tok.text!r}", tok.span)
        if label is None:
            raise InputError("query block has no label", self.ts.peek().span)
        if maxstep is not None:
            for i, _ in constraints:
                if i > maxstep:
                    raise InputError(
                        f"query {label}: time stamp {i} exceeds maxstep {maxstep}",
                        self.ts.peek().span)
        self.queries.append(QueryBlock(label, maxstep, tuple(constraints)))

    # -- laws -----------------------------------------------------------------
    def _law_statement(self) -> None:
        tok = self.ts.peek()
        keyword_laws = {
            "exogenous": self._exogenous_law,
            "inertial": self._inertial_law,
            "default": self._default_law,
            "constraint": self._constraint_law,
            "nonexecutable": self._nonexecutable_law,
            "caused": self._caused_law,
            "derivative": self._rate_law,
            "always_t": self._always_law,
        }
        if tok.kind == "name" and tok.text in keyword_laws:
            keyword_laws[tok.text]()
        else:
            self._causes_law()
        self.ts.expect(".")

    def _exogenous_law(self) -> None:
        self.ts.expect("exogenous")
        refs = [self._law_constref()]
        while self.ts.accept(","):
            refs.append(self._law_constref())
        cond = self._opt_if()
        self.laws.extend(Exogenous(r, cond) for r in refs)

    def _inertial_law(self) -> None:
        self.ts.expect("inertial")
        refs = [self._law_constref()]
        while self.ts.accept(","):
            refs.append(self._law_constref())
        cond = self._opt_if()
        self.laws.extend(Inertial(r, cond) for r in refs)

    def _law_constref(self) -> ConstRef:
        tok = self.ts.peek()
        p = self._expr_parser()
        node = p.primary()
        if not isinstance(node, ConstRef):
            raise InputError(f"expected a declared constant, found {tok.text!r}", tok.span)
        return node

    def _opt_if(self) -> Formula:
        if self.ts.accept("if"):
            return self._expr_parser().formula()
        return TRUE

    def _default_law(self) -> None:
        self.ts.expect("default")
        head = self._expr_parser().formula()
        cond = self._opt_if()
        after = None
        if self.ts.accept("after"):
            after = self._expr_parser().formula()
        self.laws.append(Default(head, cond, after))

    def _constraint_law(self) -> None:
        self.ts.expect("constraint")
        body = self._expr_parser().formula()
        if self.ts.accept("after"):
            self.laws.append(ConstraintAfter(body, self._expr_parser().formula()))
        else:
            self.laws.append(Constraint(body))

    def _nonexecutable_law(self) -> None:
        self.ts.expect("nonexecutable")
        body = self._expr_parser().formula()
        self.laws.append(Nonexecutable(body, self._opt_if()))

    def _caused_law(self) -> None:
        self.ts.expect("caused")
        head = self._expr_parser().formula()
        cond = self._opt_if()
        if self.ts.accept("after"):
            self.laws.append(core.FluentDynamic(head, cond, self._expr_parser().formula()))
        else:
            self.laws.append(Static(head, cond))

    def _rate_law(self) -> None:
        self.ts.expect("derivative")
        self.ts.expect("of")
        fluent = self._law_constref()
        self.ts.expect("is")
        rhs = self._expr_parser().term()
        self.ts.expect("if")
        mode_tok = self._ident()
        if mode_tok.text != "mode":
            raise InputError("rate declarations are guarded by mode=<value>", mode_tok.span)
        self.auto_used.add("mode")
        self.ts.expect("=")
        mode = self._mode_value()
        self.laws.append(RateDecl(fluent, rhs, mode))

    def _always_law(self) -> None:
        self.ts.expect("always_t")
        body = self._expr_parser().formula()
        self.ts.expect("if")
        mode_tok = self._ident()
        if mode_tok.text != "mode":
            raise InputError("always_t laws are guarded by mode=<value>", mode_tok.span)
        self.auto_used.add("mode")
        self.ts.expect("=")
        mode = self._mode_value()
        self.laws.append(AlwaysT(body, mode))

    def _mode_value(self):
        tok = self.ts.next()
        if tok.kind == "number":
            value = Fraction(tok.text)
        elif tok.kind == "varname":
            if tok.text not in self.variables:
                raise InputError(f"undeclared identifier {tok.text}", tok.span)
            return Var(tok.text)
        elif tok.kind == "name":
            value = tok.text
        else:
            raise InputError(f"expected a mode value, found {tok.text!r}", tok.span)
        if value not in self.mode_values:
            self.mode_values.append(value)
        return value

    def _causes_law(self) -> None:
        trigger = self._expr_parser().formula()
        self.ts.expect("causes")
        effect = self._expr_parser().formula()
        self.laws.append(Causes(trigger, effect, self._opt_if()))

    # -- implicit declarations --------------------------------------------------
    def _collect_mode_values(self) -> list:
        values = list(self.mode_values)

        def visit_formula(f: Formula) -> None:
            if isinstance(f, Cmp) and f.op == "=" and \
                    isinstance(f.lhs, ConstRef) and f.lhs.name == "mode" and \
                    isinstance(f.rhs, Lit) and not isinstance(f.rhs.value, bool):
                if f.rhs.value not in values:
                    values.append(f.rhs.value)
            for sub in _subformulas(f):
                visit_formula(sub)

        for law in self.laws:
            for f in _law_formulas(law):
                visit_formula(f)
        for q in self.queries:
            for _, f in q.constraints:
                visit_formula(f)
        return values

    def _finish_implicit(self) -> None:
        used = {n for n in self.auto_used if n not in self.constants}
        if "mode" in used:
            values = self._collect_mode_values()
            if not values:
                raise InputError("mode is used but no mode values appear",
                                 SourceSpan(self.filename, 1, 1))
            values = _sorted_values(values)
            sort = EnumSort("modes", tuple(values))
            self.constants["mode"] = ConstantDecl("mode", (), sort, Category.SIMPLE_FLUENT)
            self.laws.append(Inertial(ConstRef("mode")))
        if "wait" in used:
            self.constants["wait"] = ConstantDecl("wait", (), BOOLEAN, Category.ACTION)
        if "duration" in used:
            self.constants["duration"] = ConstantDecl(
                "duration", (), NONNEG_REAL, Category.ACTION)
            self.laws.append(Exogenous(ConstRef("duration")))
        self.implicit_added = used
        self.params -= set(AUTO_CONSTANTS)

    # -- well-formedness ---------------------------------------------------------
    def _check_wellformed(self) -> None:
        for law in self.laws:
            for f in _law_formulas(law):
                self._check_formula(f)

    def _check_formula(self, f: Formula) -> None:
        for ref in core.formula_constants(f):
            self._check_ref(ref)
        for sub in _subformulas(f):
            self._check_formula(sub)

    def _check_ref(self, ref: ConstRef) -> None:
        decl = self.constants.get(ref.name)
        if decl is None:
            raise InputError(f"undeclared identifier {ref.name}",
                             SourceSpan(self.filename, 1, 1))
        if len(ref.args) != len(decl.arg_sorts):
            raise InputError(
                f"{ref.name} takes {len(decl.arg_sorts)} argument(s), got {len(ref.args)}",
                SourceSpan(self.filename, 1, 1))
        for arg, sort in zip(ref.args, decl.arg_sorts):
            if isinstance(arg, Lit) and not core.sort_contains(sort, arg.value):
                raise InputError(
                    f"argument {printer_value(arg.value)} of {ref.name} is not of sort {sort}",
                    SourceSpan(self.filename, 1, 1))
            if isinstance(arg, Var):
                vsort = self.variables.get(arg.name)
                if isinstance(vsort, EnumSort) and isinstance(sort, EnumSort) \
                        and vsort.name != sort.name:
                    raise InputError(
                        f"variable {arg.name} has sort {vsort}, expected {sort}",
                        SourceSpan(self.filename, 1, 1))


def printer_value(v) -> str:
    from .printer import fmt_value
    return fmt_value(v)


def _sorted_values(values: list) -> list:
    fractions = sorted(v for v in values if isinstance(v, Fraction))
    names = sorted(v for v in values if isinstance(v, str))
    return list(fractions) + list(names)


def _subformulas(f: Formula):
    if isinstance(f, Not):
        yield f.arg
    elif isinstance(f, (And, Or)):
        yield from f.items
    elif isinstance(f, core.Implies):
        yield f.lhs
        yield f.rhs
    elif isinstance(f, core.ForallInterval):
        yield f.body
    elif isinstance(f, core.DenseInvariant):
        yield f.body


def _law_formulas(law):
    if isinstance(law, Constraint):
        yield law.body
    elif isinstance(law, ConstraintAfter):
        yield law.body
        yield law.after
    elif isinstance(law, Nonexecutable):
        yield law.body
        yield law.cond
    elif isinstance(law, Causes):
        yield law.trigger
        yield law.effect
        yield law.cond
    elif isinstance(law, Default):
        yield law.head
        yield law.cond
        if law.after is not None:
            yield law.after
    elif isinstance(law, (Exogenous, Inertial)):
        yield Cmp("=", law.const, law.const)  # arity check only
        yield law.cond
    elif isinstance(law, RateDecl):
        yield Cmp("=", law.fluent, law.rhs)
    elif isinstance(law, AlwaysT):
        yield law.body
    elif isinstance(law, Static):
        yield law.head
        yield law.cond
    elif isinstance(law, core.ActionDynamic):
        yield law.head
        yield law.cond
    elif isinstance(law, core.FluentDynamic):
        yield law.head
        yield law.cond
        yield law.after


def parse_description(text: str, filename: str = "<input>") \
        -> tuple[ActionDescription, tuple[QueryBlock, ...]]:
    """Parse a .cp file into an action description plus its query blocks."""
    return DescriptionParser(text, filename).parse()


# ---------------------------------------------------------------------------
# JSON hybrid-automaton parser
# ---------------------------------------------------------------------------

def _ha_expr(text: str, filename: str, variables: tuple[str, ...],
             modes: tuple = (), primed: bool = False) -> ExprParser:
    tokens = tokenize(text, filename)

    def resolve(name: str, span: SourceSpan) -> Term:
        base = name.rstrip("'")
        if name.endswith("'") and not primed:
            raise InputError(f"primed name {name} not allowed here", span)
        if base in variables:
            return ConstRef(name)
        if name in BUILTIN_CONSTANTS:
            return Lit(BUILTIN_CONSTANTS[name])
        if name in modes:
            return Lit(name)
        if name == "mode":
            return ConstRef("mode")
        return Param(name)

    return ExprParser(_TokenStream(tokens), resolve, None)


def _ha_formula(text, filename, variables, modes=(), primed=False) -> Formula:
    return _ha_expr(str(text), filename, variables, modes, primed).formula()


def _mode_key(raw: str, modes: tuple) -> object:
    try:
        v = Fraction(raw)
    except ValueError:
        v = raw
    if v not in modes:
        raise InputError(f"unknown mode {raw!r} in hybrid-automaton description")
    return v


def parse_ha(text: str, filename: str = "<input>") -> tuple[HybridAutomaton, Optional[QueryBlock]]:
    """Parse a JSON hybrid-automaton description.

    Top-level keys: variables (ordered), modes, switches (from/to/hevent/
    guard/reset), init, inv, and flow as either {"linear": {mode: formula}}
    with dotted names x' or {"ode": {mode: {var: rhs}}}.  Numbers are read
    exactly as rationals.  An optional query block may ride along.
    """
    try:
        doc = json.loads(text, parse_float=Fraction, parse_int=Fraction)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}", SourceSpan(filename, max(exc.lineno, 1),
                                                            max(exc.colno, 1)))
    if not isinstance(doc, dict):
        raise InputError("hybrid-automaton description must be a JSON object")

    def need(key: str):
        if key not in doc:
            raise InputError(f"hybrid-automaton description lacks {key!r}")
        return doc[key]

    variables = tuple(str(v) for v in need("variables"))
    if len(set(variables)) != len(variables):
        raise InputError("duplicate variable names")
    raw_modes = need("modes")
    modes = tuple(Fraction(m) if isinstance(m, (int, Fraction)) else str(m)
                  for m in raw_modes)

    var_sorts: dict[str, RealSort] = {}
    for name, bounds in (doc.get("ranges") or {}).items():
        if name not in variables:
            raise InputError(f"range given for unknown variable {name}")
        var_sorts[name] = RealSort(Fraction(bounds[0]), Fraction(bounds[1]))

    switches = []
    for sw in doc.get("switches", ()):
        for key in ("from", "to", "hevent"):
            if key not in sw:
                raise InputError(f"switch lacks {key!r}")
        source = _mode_key(str(sw["from"]), modes)
        target = _mode_key(str(sw["to"]), modes)
        guard = _ha_formula(sw.get("guard", "true"), filename, variables)
        reset = _ha_formula(sw.get("reset", "true"), filename, variables, primed=True)
        switches.append(Switch(source, target, str(sw["hevent"]), guard, reset))

    def mode_map(key: str, primed=False) -> dict:
        out = {}
        for raw, formula in (doc.get(key) or {}).items():
            out[_mode_key(raw, modes)] = _ha_formula(formula, filename, variables,
                                                     primed=primed)
        return out

    init = mode_map("init")
    inv = mode_map("inv")

    flow = need("flow")
    flow_linear = flow_ode = None
    if "linear" in flow:
        flow_linear = {}
        for raw, formula in flow["linear"].items():
            flow_linear[_mode_key(raw, modes)] = _ha_formula(
                formula, filename, variables, primed=True)
    elif "ode" in flow:
        flow_ode = {}
        for raw, table in flow["ode"].items():
            v = _mode_key(raw, modes)
            entry = {}
            for var, rhs in table.items():
                if var not in variables:
                    raise InputError(f"flow for unknown variable {var}")
                entry[var] = _ha_expr(str(rhs), filename, variables).term()
            flow_ode[v] = entry
    else:
        raise InputError('flow must carry a "linear" or "ode" entry')

    try:
        ha = HybridAutomaton(variables=variables, modes=modes,
                             switches=tuple(switches), init=init, inv=inv,
                             flow_linear=flow_linear, flow_ode=flow_ode,
                             var_sorts=var_sorts)
    except Exception as exc:
        raise InputError(str(exc))

    query = None
    if "query" in doc:
        q = doc["query"]
        constraints = []
        for item in q.get("constraints", ()):
            stamp, formula = int(item[0]), str(item[1])
            constraints.append(
                (stamp, _ha_formula(formula, filename, variables, modes=tuple(
                    m for m in modes if isinstance(m, str))))
            )
        maxstep = q.get("maxstep")
        query = QueryBlock(str(q.get("label", "query")),
                           None if maxstep is None else int(maxstep),
                           tuple(constraints))
    return ha, query
