"""Time-stamped grounding and functional completion.

build_Dm stamps every basic law over the horizon: static laws at steps
0..m, action-dynamic laws at 0..m-1, and fluent-dynamic laws as
(i+1):cond & i:after -> (i+1):head for i in 0..m-1.  The program this
pipeline produces is tight and definite, so its stable models coincide
with the models of its functional completion: every intensional stamped
constant must take a supported value (choice rules support themselves),
every regular rule holds as an implication, and falsity-headed rules
become negated-body constraints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from . import core, varelim
from .core import (
    Category, Cmp, ConstRef, DenseInvariant, FalseF, FlowIntegral, Formula,
    Lit, QueryBlock, Value, Var, conjoin, formula_vars, negate, stamp_formula,
)
from .desugar import BasicDescription
from .errors import CompletionError, GroundingError, NotTightError


@dataclass(frozen=True)
class StampedConst:
    stamp: int
    name: str
    args: tuple[Value, ...] = ()

    def __str__(self) -> str:
        return f"{self.stamp}:{core.ground_name(self.name, self.args)}"


@dataclass(frozen=True)
class Rule:
    head: Formula  # FalseF for integrity rules, an atomic equation otherwise
    body: Formula
    choice: bool = False

    def __str__(self) -> str:
        from .printer import fmt_formula
        head = "false" if isinstance(self.head, FalseF) else fmt_formula(self.head)
        if self.choice:
            head = "{" + head + "}"
        return f"{head} <- {fmt_formula(self.body)}"


@dataclass(frozen=True)
class Marker:
    kind: str  # "integral" or "dense"
    step: int
    mode: Value
    body: Optional[Formula] = None  # dense body, stamped at step+1


@dataclass(frozen=True)
class GroundProgram:
    horizon: int
    source: BasicDescription
    rules: tuple[Rule, ...]
    markers: tuple[Marker, ...]

    def signature(self) -> Iterator[tuple[StampedConst, core.ConstantDecl]]:
        for decl in self.source.constants.values():
            last = self.horizon if decl.is_fluent else self.horizon - 1
            for args in _arg_combos(decl):
                for i in range(0, last + 1):
                    yield StampedConst(i, decl.name, args), decl

    def intensional(self) -> list[StampedConst]:
        """(0:sd fluents) + (0..m-1 actions) + (1..m fluents)."""
        out = []
        for sc, decl in self.signature():
            if decl.is_action:
                out.append(sc)
            elif sc.stamp >= 1 or decl.category is Category.SD_FLUENT:
                out.append(sc)
        return out

    def with_query(self, query: QueryBlock) -> "GroundProgram":
        extra = []
        for i, f in query.constraints:
            if not 0 <= i <= self.horizon:
                raise GroundingError(
                    f"query {query.label}: time stamp {i} outside 0..{self.horizon}")
            extra.append(Rule(core.FALSE, negate(stamp_formula(f, i))))
        return GroundProgram(self.horizon, self.source,
                             self.rules + tuple(extra), self.markers)


def _arg_combos(decl: core.ConstantDecl):
    combos: list[tuple[Value, ...]] = [()]
    for s in decl.arg_sorts:
        combos = [c + (v,) for c in combos for v in s.values]
    return combos


def build_Dm(basic: BasicDescription, m: int) -> GroundProgram:
    """Ground a basic description over horizon m >= 0."""
    if m < 0:
        raise GroundingError("horizon must be nonnegative")
    rules: list[Rule] = []
    markers: list[Marker] = []
    for law in basic.laws:
        if isinstance(law.head, FlowIntegral):
            for i in range(m):
                markers.append(Marker("integral", i, law.head.mode))
            continue
        if isinstance(law.head, DenseInvariant):
            for i in range(m):
                markers.append(Marker("dense", i, law.head.mode,
                                      stamp_formula(law.head.body, i + 1)))
            continue
        if isinstance(law, core.Static):
            for i in range(m + 1):
                rules.append(Rule(stamp_formula(law.head, i),
                                  stamp_formula(law.cond, i), law.choice))
        elif isinstance(law, core.ActionDynamic):
            for i in range(m):
                rules.append(Rule(stamp_formula(law.head, i),
                                  stamp_formula(law.cond, i), law.choice))
        elif isinstance(law, core.FluentDynamic):
            for i in range(m):
                body = conjoin([stamp_formula(law.cond, i + 1),
                                stamp_formula(law.after, i)])
                rules.append(Rule(stamp_formula(law.head, i + 1), body, law.choice))
        else:
            raise GroundingError(f"unexpanded law reached grounding: {law!r}")
    return GroundProgram(m, basic, tuple(rules), tuple(markers))


# ---------------------------------------------------------------------------
# Tightness
# ---------------------------------------------------------------------------

def _positive_constants(f: Formula, positive: bool = True) -> Iterator[ConstRef]:
    if isinstance(f, Cmp):
        if positive:
            yield from core.formula_constants(f)
    elif isinstance(f, core.Not):
        yield from _positive_constants(f.arg, not positive)
    elif isinstance(f, (core.And, core.Or)):
        for i in f.items:
            yield from _positive_constants(i, positive)
    elif isinstance(f, core.Implies):
        yield from _positive_constants(f.lhs, not positive)
        yield from _positive_constants(f.rhs, positive)
    elif isinstance(f, (core.ForallInterval, DenseInvariant)):
        yield from _positive_constants(f.body, positive)


def _head_const(head: Formula) -> Optional[ConstRef]:
    if isinstance(head, Cmp) and head.op == "=":
        if isinstance(head.lhs, ConstRef):
            return head.lhs
        if isinstance(head.rhs, ConstRef):
            return head.rhs
    return None


def _node(ref: ConstRef) -> tuple[int, str]:
    return (ref.stamp if ref.stamp is not None else -1, ref.name)


def check_tight(program: GroundProgram) -> tuple[bool, Optional[list[str]]]:
    """Acyclicity of positive dependencies among stamped constants.

    Returns (True, None) or (False, witness cycle)."""
    graph: dict[tuple[int, str], set[tuple[int, str]]] = {}
    for rule in program.rules:
        head = _head_const(rule.head)
        if head is None:
            continue
        src = _node(head)
        deps = graph.setdefault(src, set())
        for ref in _positive_constants(rule.body):
            dep = _node(ref)
            if dep != src or not rule.choice:
                deps.add(dep)

    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in graph}
    stack: list[tuple[int, str]] = []

    def visit(node) -> Optional[list]:
        color[node] = GREY
        stack.append(node)
        for dep in sorted(graph.get(node, ())):
            if color.get(dep, BLACK if dep not in graph else WHITE) == GREY:
                start = stack.index(dep)
                return stack[start:] + [dep]
            if color.get(dep, BLACK) == WHITE:
                cycle = visit(dep)
                if cycle is not None:
                    return cycle
        stack.pop()
        color[node] = BLACK
        return None

    for node in sorted(graph):
        if color[node] == WHITE:
            cycle = visit(node)
            if cycle is not None:
                return False, [f"{s}:{n}" for s, n in cycle]
    return True, None


# ---------------------------------------------------------------------------
# Completion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompletedConstraint:
    kind: str  # "support" | "rule" | "constraint"
    formula: Formula
    subject: Optional[StampedConst] = None


@dataclass(frozen=True)
class CompletedSystem:
    program: GroundProgram
    constraints: tuple[CompletedConstraint, ...]
    intensional: tuple[StampedConst, ...]

    def formulas(self) -> Iterator[Formula]:
        for c in self.constraints:
            yield c.formula


def _check_definite(rule: Rule, intensional_names: set[str]) -> Optional[Cmp]:
    """Heads must be atomic equations c(args)=t with t free of declared
    constants (plainness); returns the normalized head atom."""
    if isinstance(rule.head, FalseF):
        return None
    head = rule.head
    if not isinstance(head, Cmp) or head.op != "=":
        raise CompletionError(f"non-definite head {head!r}")
    lhs, rhs = head.lhs, head.rhs
    if not isinstance(lhs, ConstRef) and isinstance(rhs, ConstRef):
        lhs, rhs = rhs, lhs
    if not isinstance(lhs, ConstRef):
        raise CompletionError(f"non-definite head {head!r}")
    if any(True for _ in core.term_constants(rhs)):
        raise CompletionError(f"head value of {lhs.name} mentions another constant")
    for a in lhs.args:
        if not isinstance(a, Lit):
            raise CompletionError(f"head arguments of {lhs.name} must be ground")
    return Cmp("=", lhs, rhs)


def complete(program: GroundProgram) -> CompletedSystem:
    """Turn a tight, definite ground program into its completion constraints."""
    tight, cycle = check_tight(program)
    if not tight:
        raise NotTightError(cycle or [])

    supports: dict[StampedConst, list[Formula]] = {}
    implications: list[CompletedConstraint] = []
    integrity: list[CompletedConstraint] = []

    for rule in program.rules:
        head = _check_definite(rule, set())
        if head is None:
            constraint = varelim.eliminate_forall(negate(rule.body))
            leftover = formula_vars(constraint)
            if leftover:
                raise CompletionError(
                    f"cannot ground constraint; free variable(s) {sorted(leftover)}")
            if not isinstance(constraint, core.TrueF):
                integrity.append(CompletedConstraint("constraint", constraint))
            continue

        ref = head.lhs
        key = StampedConst(ref.stamp, ref.name,
                           tuple(a.value for a in ref.args))  # type: ignore[union-attr]
        disjunct = varelim.eliminate_exists(conjoin([rule.body, head]))
        leftover = formula_vars(disjunct)
        if leftover:
            raise CompletionError(
                f"cannot ground support for {key}; free variable(s) {sorted(leftover)}")
        supports.setdefault(key, []).append(disjunct)

        if not rule.choice:
            impl = varelim.eliminate_forall(core.implies(rule.body, head))
            leftover = formula_vars(impl)
            if leftover:
                raise CompletionError(
                    f"cannot ground rule for {key}; free variable(s) {sorted(leftover)}")
            if not isinstance(impl, core.TrueF):
                implications.append(CompletedConstraint("rule", impl, key))

    constraints: list[CompletedConstraint] = []
    intensional = tuple(program.intensional())
    for sc in intensional:
        disjuncts = supports.get(sc, [])
        if any(isinstance(d, core.TrueF) for d in disjuncts):
            continue  # unconstrained (exogenous-style choice)
        support = core.disjoin(disjuncts)  # empty -> false: no stable value
        constraints.append(CompletedConstraint("support", support, sc))
    constraints.extend(implications)
    constraints.extend(integrity)
    return CompletedSystem(program, tuple(constraints), intensional)
