"""Shared intermediate representation for the whole toolchain.

Sorts, constant declarations, terms, formulas, causal laws, action
descriptions, hybrid automata, interpretations and plans all live here,
together with formula evaluation and substitution.

All values are immutable after construction and safe to share between
threads; evaluation and substitution are pure.  Symbolic stages work on
exact rationals (fractions.Fraction); only the background functions
sin/cos/tan/exp force binary64 floats into an evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Union

from .errors import EvalError, SortMismatchError

Value = Union[Fraction, str, bool]

BACKGROUND_FUNCTIONS: dict[str, object] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
}

# Built-in named constants usable in any term position.
BUILTIN_CONSTANTS: dict[str, Fraction] = {
    "pi": Fraction(math.pi),  # binary64 value of pi, kept exact from there on
}


def register_background_function(name: str, fn) -> None:
    """Extend the background-function vocabulary (default: sin/cos/tan/exp)."""
    BACKGROUND_FUNCTIONS[name] = fn


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoolSort:
    def __str__(self) -> str:
        return "boolean"


@dataclass(frozen=True)
class EnumSort:
    """Finite enumeration sort; values are identifiers or rationals."""

    name: str
    values: tuple[Value, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise SortMismatchError(f"enumeration sort {self.name} is empty")
        if len(set(self.values)) != len(self.values):
            raise SortMismatchError(f"enumeration sort {self.name} has duplicates")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class RealSort:
    """Closed real interval; an unbounded end is None."""

    lo: Optional[Fraction] = None
    hi: Optional[Fraction] = None

    def __post_init__(self) -> None:
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise SortMismatchError(f"real interval [{self.lo}, {self.hi}] is empty")

    def __str__(self) -> str:
        if self.lo is None and self.hi is None:
            return "real"
        if self.lo == 0 and self.hi is None:
            return "real[0..]"
        return f"real[{self.lo}..{self.hi}]"


Sort = Union[BoolSort, EnumSort, RealSort]

BOOLEAN = BoolSort()
REAL = RealSort()
NONNEG_REAL = RealSort(Fraction(0), None)


def sort_contains(sort: Sort, value: Value) -> bool:
    if isinstance(sort, BoolSort):
        return isinstance(value, bool)
    if isinstance(sort, EnumSort):
        return value in sort.values
    if isinstance(value, bool) or not isinstance(value, Fraction):
        return False
    if sort.lo is not None and value < sort.lo:
        return False
    if sort.hi is not None and value > sort.hi:
        return False
    return True


def sort_is_real(sort: Sort) -> bool:
    return isinstance(sort, RealSort)


# ---------------------------------------------------------------------------
# Constant declarations
# ---------------------------------------------------------------------------

class Category(Enum):
    SIMPLE_FLUENT = "simpleFluent"
    SD_FLUENT = "sdFluent"
    DIFF_FLUENT = "differentiableFluent"
    ACTION = "action"


@dataclass(frozen=True)
class ConstantDecl:
    name: str
    arg_sorts: tuple[Sort, ...]
    value_sort: Sort
    category: Category

    def __post_init__(self) -> None:
        if self.category is Category.DIFF_FLUENT and not sort_is_real(self.value_sort):
            raise SortMismatchError(
                f"differentiable fluent {self.name} must be real-valued"
            )

    @property
    def is_fluent(self) -> bool:
        return self.category is not Category.ACTION

    @property
    def is_action(self) -> bool:
        return self.category is Category.ACTION

    @property
    def is_boolean(self) -> bool:
        return isinstance(self.value_sort, BoolSort)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Lit:
    """Literal value: rational, enumeration identifier, or boolean.

    Equality distinguishes booleans from rationals (Fraction(1) != True)."""

    value: Value

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Lit)
                and isinstance(self.value, bool) == isinstance(other.value, bool)
                and self.value == other.value)

    def __hash__(self) -> int:
        return hash((isinstance(self.value, bool), self.value))


@dataclass(frozen=True)
class Var:
    """Schematic variable (upper-case in the surface syntax)."""

    name: str


@dataclass(frozen=True)
class Param:
    """Undeclared symbolic parameter, bound later via -c name=value."""

    name: str


@dataclass(frozen=True)
class ConstRef:
    """Occurrence of a declared constant, optionally time-stamped i:c."""

    name: str
    args: tuple["Term", ...] = ()
    stamp: Optional[int] = None

    def stamped(self, i: int) -> "ConstRef":
        return ConstRef(self.name, self.args, i)


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    lhs: "Term"
    rhs: "Term"


@dataclass(frozen=True)
class Call:
    fn: str  # background function name
    arg: "Term"


Term = Union[Lit, Var, Param, ConstRef, Neg, BinOp, Call]

TRUE_LIT = Lit(True)
FALSE_LIT = Lit(False)


def num(x) -> Lit:
    return Lit(Fraction(x))


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class Cmp:
    """Atomic comparison between terms. Disequality is Not(Cmp("=", ...))."""

    op: str  # one of = < <= > >=
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class ForallInterval:
    """Universal quantification of a real variable over a closed interval.

    Produced only by the expanded dense-invariant law; evaluated only by the
    numeric back end (dense sampling), never by eval_formula.
    """

    var: str
    lo: Term
    hi: Term
    body: "Formula"


@dataclass(frozen=True)
class FlowIntegral:
    """Marker head: the next values of all differentiable fluents equal the
    current ones advanced by integrating the mode's vector field over the
    transition duration.  Resolved by the SMT emitter (integral construct)
    or the numeric back end (RK4); never evaluated symbolically.
    """

    mode: Value


@dataclass(frozen=True)
class DenseInvariant:
    """Marker head: body holds at every time point of the continuous
    transition taken in the given mode.  Resolved by the SMT emitter
    (forall_t) or the numeric back end (dense sampling).
    """

    mode: Value
    body: "Formula"


Formula = Union[
    TrueF, FalseF, Cmp, Not, And, Or, Implies, ForallInterval, FlowIntegral, DenseInvariant
]

TRUE = TrueF()
FALSE = FalseF()


def conjoin(items) -> Formula:
    flat: list[Formula] = []
    for f in items:
        if isinstance(f, TrueF):
            continue
        if isinstance(f, FalseF):
            return FALSE
        if isinstance(f, And):
            flat.extend(f.items)
        else:
            flat.append(f)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disjoin(items) -> Formula:
    flat: list[Formula] = []
    for f in items:
        if isinstance(f, FalseF):
            continue
        if isinstance(f, TrueF):
            return TRUE
        if isinstance(f, Or):
            flat.extend(f.items)
        else:
            flat.append(f)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def negate(f: Formula) -> Formula:
    if isinstance(f, TrueF):
        return FALSE
    if isinstance(f, FalseF):
        return TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def implies(lhs: Formula, rhs: Formula) -> Formula:
    if isinstance(lhs, TrueF):
        return rhs
    if isinstance(lhs, FalseF) or isinstance(rhs, TrueF):
        return TRUE
    if isinstance(rhs, FalseF):
        return negate(lhs)
    return Implies(lhs, rhs)


def bool_atom(ref: ConstRef, value: bool = True) -> Cmp:
    return Cmp("=", ref, Lit(value))


# ---------------------------------------------------------------------------
# Causal laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Static:
    head: Formula
    cond: Formula
    choice: bool = False


@dataclass(frozen=True)
class ActionDynamic:
    head: Formula
    cond: Formula
    choice: bool = False


@dataclass(frozen=True)
class FluentDynamic:
    head: Formula
    cond: Formula
    after: Formula
    choice: bool = False


# Surface abbreviations, expanded by the desugarer.

@dataclass(frozen=True)
class Constraint:
    body: Formula


@dataclass(frozen=True)
class ConstraintAfter:
    body: Formula
    after: Formula


@dataclass(frozen=True)
class Nonexecutable:
    body: Formula
    cond: Formula = TRUE


@dataclass(frozen=True)
class Causes:
    trigger: Formula
    effect: Formula
    cond: Formula = TRUE


@dataclass(frozen=True)
class Default:
    head: Formula
    cond: Formula = TRUE
    after: Optional[Formula] = None


@dataclass(frozen=True)
class Exogenous:
    const: ConstRef
    cond: Formula = TRUE


@dataclass(frozen=True)
class Inertial:
    const: ConstRef
    cond: Formula = TRUE


@dataclass(frozen=True)
class RateDecl:
    """derivative of <fluent> is <rhs> if mode=<mode>."""

    fluent: ConstRef
    rhs: Term
    mode: Union[Value, Var]


@dataclass(frozen=True)
class AlwaysT:
    """always_t <body> if mode=<mode>."""

    body: Formula
    mode: Union[Value, Var]


CausalLaw = Union[
    Static, ActionDynamic, FluentDynamic,
    Constraint, ConstraintAfter, Nonexecutable, Causes, Default,
    Exogenous, Inertial, RateDecl, AlwaysT,
]

BASIC_LAW_TYPES = (Static, ActionDynamic, FluentDynamic)


# ---------------------------------------------------------------------------
# Action descriptions and queries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActionDescription:
    sorts: Mapping[str, EnumSort]
    constants: Mapping[str, ConstantDecl]
    variables: Mapping[str, Sort]
    laws: tuple[CausalLaw, ...]
    params: frozenset[str] = frozenset()
    # Names of constants the toolchain declared implicitly (mode, wait,
    # duration); the printer omits them so a reparse re-derives them.
    implicit: frozenset[str] = frozenset()

    def fluents(self) -> list[ConstantDecl]:
        return [d for d in self.constants.values() if d.is_fluent]

    def actions(self) -> list[ConstantDecl]:
        return [d for d in self.constants.values() if d.is_action]

    def diff_fluents(self) -> list[ConstantDecl]:
        return [d for d in self.constants.values() if d.category is Category.DIFF_FLUENT]


@dataclass(frozen=True)
class QueryBlock:
    label: str
    maxstep: Optional[int]
    constraints: tuple[tuple[int, Formula], ...]


# ---------------------------------------------------------------------------
# Hybrid automata
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Switch:
    source: Value
    target: Value
    hevent: str
    guard: Formula
    reset: Formula  # over plain and primed variable names


@dataclass(frozen=True)
class HybridAutomaton:
    variables: tuple[str, ...]
    modes: tuple[Value, ...]
    switches: tuple[Switch, ...]
    init: Mapping[Value, Formula]
    inv: Mapping[Value, Formula]
    # Exactly one of the two flow forms is populated.
    flow_linear: Optional[Mapping[Value, Formula]] = None  # over dotted names x'
    flow_ode: Optional[Mapping[Value, Mapping[str, Term]]] = None  # var -> rhs over X
    var_sorts: Mapping[str, RealSort] = field(default_factory=dict)

    def __post_init__(self) -> None:
        events = [s.hevent for s in self.switches]
        if len(set(events)) != len(events):
            dup = sorted({e for e in events if events.count(e) > 1})
            raise SortMismatchError(f"h-event assigned to more than one switch: {dup[0]}")
        for s in self.switches:
            if s.source not in self.modes or s.target not in self.modes:
                raise SortMismatchError(f"switch {s.hevent} references unknown mode")
        if self.flow_ode is not None:
            for v, table in self.flow_ode.items():
                missing = [x for x in self.variables if x not in table]
                if missing:
                    raise SortMismatchError(
                        f"mode {v}: no flow for variable(s) {', '.join(missing)}"
                    )

    @property
    def dimension(self) -> int:
        return len(self.variables)


# ---------------------------------------------------------------------------
# Interpretations and plans
# ---------------------------------------------------------------------------

GroundKey = tuple[Optional[int], str, tuple[Value, ...]]


def ground_name(name: str, args: tuple[Value, ...] = ()) -> str:
    if not args:
        return name
    return f"{name}({','.join(str(a) for a in args)})"


class Interpretation:
    """Total map from (optionally time-stamped) ground constants to values."""

    def __init__(self, mapping: Mapping[GroundKey, Value]):
        self._map = dict(mapping)

    @classmethod
    def of(cls, simple: Mapping[str, Value], stamp: Optional[int] = None) -> "Interpretation":
        return cls({(stamp, name, ()): v for name, v in simple.items()})

    def get(self, stamp: Optional[int], name: str, args: tuple[Value, ...] = ()) -> Value:
        key = (stamp, name, args)
        if key not in self._map:
            raise EvalError(f"unbound symbol {stamp}:{ground_name(name, args)}"
                            if stamp is not None else
                            f"unbound symbol {ground_name(name, args)}")
        return self._map[key]

    def merged(self, other: "Interpretation") -> "Interpretation":
        m = dict(self._map)
        m.update(other._map)
        return Interpretation(m)

    def items(self):
        return self._map.items()

    def __contains__(self, key: GroundKey) -> bool:
        return key in self._map

    def __eq__(self, other) -> bool:
        return isinstance(other, Interpretation) and self._map == other._map

    def __hash__(self):
        return hash(frozenset(self._map.items()))

    def __repr__(self) -> str:
        parts = ", ".join(
            f"{'' if s is None else f'{s}:'}{ground_name(n, a)}={v}"
            for (s, n, a), v in sorted(self._map.items(), key=lambda kv: (kv[0][0] or 0, kv[0][1]))
        )
        return f"{{{parts}}}"


@dataclass(frozen=True)
class PlanStep:
    label: str  # h-event name, or "wait" for a continuous transition
    duration: Fraction
    post: Mapping[str, Value]


@dataclass(frozen=True)
class Plan:
    initial: Mapping[str, Value]
    steps: tuple[PlanStep, ...]

    def __post_init__(self) -> None:
        for s in self.steps:
            if s.label != "wait" and s.duration != 0:
                raise SortMismatchError("h-event steps must have duration 0")
            if s.duration < 0:
                raise SortMismatchError("durations must be nonnegative")

    def state(self, i: int) -> Mapping[str, Value]:
        return self.initial if i == 0 else self.steps[i - 1].post


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

Number = Union[Fraction, float]


def _as_number(v, what: str) -> Number:
    if isinstance(v, bool) or not isinstance(v, (Fraction, float, int)):
        raise EvalError(f"sort mismatch: {what} is not numeric (got {v!r})")
    return Fraction(v) if isinstance(v, int) else v


def eval_term(t: Term, interp: Interpretation):
    """Evaluate a ground term. Rational-only terms evaluate exactly; the
    background functions sin/cos/tan/exp produce binary64 floats."""
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Var):
        raise EvalError(f"unbound variable {t.name}")
    if isinstance(t, Param):
        raise EvalError(f"unbound symbol {t.name}")
    if isinstance(t, ConstRef):
        args = tuple(eval_term(a, interp) for a in t.args)
        return interp.get(t.stamp, t.name, args)
    if isinstance(t, Neg):
        return -_as_number(eval_term(t.arg, interp), "negation operand")
    if isinstance(t, BinOp):
        lhs = _as_number(eval_term(t.lhs, interp), "operand")
        rhs = _as_number(eval_term(t.rhs, interp), "operand")
        if t.op == "+":
            return lhs + rhs
        if t.op == "-":
            return lhs - rhs
        if t.op == "*":
            return lhs * rhs
        if t.op == "/":
            if rhs == 0:
                raise EvalError("division by zero")
            return lhs / rhs
        raise EvalError(f"unknown operator {t.op}")
    if isinstance(t, Call):
        fn = BACKGROUND_FUNCTIONS.get(t.fn)
        if fn is None:
            raise EvalError(f"unknown background function {t.fn}")
        return fn(float(_as_number(eval_term(t.arg, interp), "argument")))
    raise EvalError(f"cannot evaluate {t!r}")


def _eval_cmp(f: Cmp, interp: Interpretation) -> bool:
    lhs = eval_term(f.lhs, interp)
    rhs = eval_term(f.rhs, interp)
    if f.op == "=":
        if isinstance(lhs, bool) != isinstance(rhs, bool):
            raise EvalError("sort mismatch: boolean compared with non-boolean")
        return lhs == rhs
    lhs = _as_number(lhs, "comparison operand")
    rhs = _as_number(rhs, "comparison operand")
    if f.op == "<":
        return lhs < rhs
    if f.op == "<=":
        return lhs <= rhs
    if f.op == ">":
        return lhs > rhs
    if f.op == ">=":
        return lhs >= rhs
    raise EvalError(f"unknown comparison {f.op}")


def eval_formula(f: Formula, interp: Interpretation) -> bool:
    """Standard many-sorted evaluation over the real background theory.

    Connectives tolerate an evaluation error in one operand when another
    operand already decides the value (the corpus guards divisions by
    duration with duration > 0 conjuncts); an undecided error propagates.
    """
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Cmp):
        return _eval_cmp(f, interp)
    if isinstance(f, Not):
        return not eval_formula(f.arg, interp)
    if isinstance(f, (And, Or)):
        decider = False if isinstance(f, And) else True
        pending: EvalError | None = None
        for item in f.items:
            try:
                if eval_formula(item, interp) is decider:
                    return decider
            except EvalError as e:
                pending = e
        if pending is not None:
            raise pending
        return not decider
    if isinstance(f, Implies):
        try:
            if not eval_formula(f.lhs, interp):
                return True
        except EvalError:
            return eval_formula(f.rhs, interp)
        return eval_formula(f.rhs, interp)
    if isinstance(f, (ForallInterval, FlowIntegral, DenseInvariant)):
        raise EvalError(f"{type(f).__name__} is not evaluated symbolically")
    raise EvalError(f"cannot evaluate {f!r}")


# ---------------------------------------------------------------------------
# Substitution and traversal
# ---------------------------------------------------------------------------

def _fresh(name: str, taken) -> str:
    candidate = name + "_"
    while candidate in taken:
        candidate += "_"
    return candidate


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, ConstRef):
        out: set[str] = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    if isinstance(t, Neg):
        return term_vars(t.arg)
    if isinstance(t, BinOp):
        return term_vars(t.lhs) | term_vars(t.rhs)
    if isinstance(t, Call):
        return term_vars(t.arg)
    return set()


def formula_vars(f: Formula) -> set[str]:
    if isinstance(f, Cmp):
        return term_vars(f.lhs) | term_vars(f.rhs)
    if isinstance(f, Not):
        return formula_vars(f.arg)
    if isinstance(f, (And, Or)):
        out: set[str] = set()
        for item in f.items:
            out |= formula_vars(item)
        return out
    if isinstance(f, Implies):
        return formula_vars(f.lhs) | formula_vars(f.rhs)
    if isinstance(f, ForallInterval):
        inner = term_vars(f.lo) | term_vars(f.hi) | formula_vars(f.body)
        return inner - {f.var}
    if isinstance(f, DenseInvariant):
        return formula_vars(f.body)
    return set()


def subst_term(t: Term, binding: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return binding.get(t.name, t)
    if isinstance(t, ConstRef):
        return ConstRef(t.name, tuple(subst_term(a, binding) for a in t.args), t.stamp)
    if isinstance(t, Neg):
        return Neg(subst_term(t.arg, binding))
    if isinstance(t, BinOp):
        return BinOp(t.op, subst_term(t.lhs, binding), subst_term(t.rhs, binding))
    if isinstance(t, Call):
        return Call(t.fn, subst_term(t.arg, binding))
    return t


def substitute(f: Formula, binding: Mapping[str, Term]) -> Formula:
    """Capture-avoiding simultaneous substitution of schematic variables."""
    if not binding:
        return f
    if isinstance(f, Cmp):
        return Cmp(f.op, subst_term(f.lhs, binding), subst_term(f.rhs, binding))
    if isinstance(f, Not):
        return Not(substitute(f.arg, binding))
    if isinstance(f, And):
        return And(tuple(substitute(i, binding) for i in f.items))
    if isinstance(f, Or):
        return Or(tuple(substitute(i, binding) for i in f.items))
    if isinstance(f, Implies):
        return Implies(substitute(f.lhs, binding), substitute(f.rhs, binding))
    if isinstance(f, ForallInterval):
        inner = {k: v for k, v in binding.items() if k != f.var}
        var = f.var
        body = f.body
        if any(var in term_vars(t) for t in inner.values()):
            renamed = _fresh(var, set(inner) | formula_vars(body))
            body = substitute(body, {var: Var(renamed)})
            var = renamed
        return ForallInterval(
            var, subst_term(f.lo, binding), subst_term(f.hi, binding),
            substitute(body, inner),
        )
    if isinstance(f, DenseInvariant):
        return DenseInvariant(f.mode, substitute(f.body, binding))
    return f


def subst_params_term(t: Term, binding: Mapping[str, Term]) -> Term:
    if isinstance(t, Param):
        return binding.get(t.name, t)
    if isinstance(t, ConstRef):
        return ConstRef(t.name, tuple(subst_params_term(a, binding) for a in t.args), t.stamp)
    if isinstance(t, Neg):
        return Neg(subst_params_term(t.arg, binding))
    if isinstance(t, BinOp):
        return BinOp(t.op, subst_params_term(t.lhs, binding), subst_params_term(t.rhs, binding))
    if isinstance(t, Call):
        return Call(t.fn, subst_params_term(t.arg, binding))
    return t


def subst_params(f: Formula, binding: Mapping[str, Term]) -> Formula:
    """Replace symbolic parameters (undeclared lowercase names) by terms."""
    if isinstance(f, Cmp):
        return Cmp(f.op, subst_params_term(f.lhs, binding), subst_params_term(f.rhs, binding))
    if isinstance(f, Not):
        return Not(subst_params(f.arg, binding))
    if isinstance(f, And):
        return And(tuple(subst_params(i, binding) for i in f.items))
    if isinstance(f, Or):
        return Or(tuple(subst_params(i, binding) for i in f.items))
    if isinstance(f, Implies):
        return Implies(subst_params(f.lhs, binding), subst_params(f.rhs, binding))
    if isinstance(f, ForallInterval):
        return ForallInterval(f.var, subst_params_term(f.lo, binding),
                              subst_params_term(f.hi, binding), subst_params(f.body, binding))
    if isinstance(f, DenseInvariant):
        return DenseInvariant(f.mode, subst_params(f.body, binding))
    return f


def term_constants(t: Term) -> Iterator[ConstRef]:
    if isinstance(t, ConstRef):
        yield t
        for a in t.args:
            yield from term_constants(a)
    elif isinstance(t, Neg):
        yield from term_constants(t.arg)
    elif isinstance(t, BinOp):
        yield from term_constants(t.lhs)
        yield from term_constants(t.rhs)
    elif isinstance(t, Call):
        yield from term_constants(t.arg)


def formula_constants(f: Formula) -> Iterator[ConstRef]:
    if isinstance(f, Cmp):
        yield from term_constants(f.lhs)
        yield from term_constants(f.rhs)
    elif isinstance(f, Not):
        yield from formula_constants(f.arg)
    elif isinstance(f, (And, Or)):
        for item in f.items:
            yield from formula_constants(item)
    elif isinstance(f, Implies):
        yield from formula_constants(f.lhs)
        yield from formula_constants(f.rhs)
    elif isinstance(f, ForallInterval):
        yield from term_constants(f.lo)
        yield from term_constants(f.hi)
        yield from formula_constants(f.body)
    elif isinstance(f, DenseInvariant):
        yield from formula_constants(f.body)


def term_params(t: Term) -> set[str]:
    if isinstance(t, Param):
        return {t.name}
    if isinstance(t, ConstRef):
        out: set[str] = set()
        for a in t.args:
            out |= term_params(a)
        return out
    if isinstance(t, Neg):
        return term_params(t.arg)
    if isinstance(t, BinOp):
        return term_params(t.lhs) | term_params(t.rhs)
    if isinstance(t, Call):
        return term_params(t.arg)
    return set()


def formula_params(f: Formula) -> set[str]:
    out: set[str] = set()
    if isinstance(f, Cmp):
        out = term_params(f.lhs) | term_params(f.rhs)
    elif isinstance(f, Not):
        out = formula_params(f.arg)
    elif isinstance(f, (And, Or)):
        for item in f.items:
            out |= formula_params(item)
    elif isinstance(f, Implies):
        out = formula_params(f.lhs) | formula_params(f.rhs)
    elif isinstance(f, ForallInterval):
        out = term_params(f.lo) | term_params(f.hi) | formula_params(f.body)
    elif isinstance(f, DenseInvariant):
        out = formula_params(f.body)
    return out


def map_law(law: CausalLaw, fn, term_fn=None) -> CausalLaw:
    """Rebuild a law with fn applied to every formula (term_fn to bare terms)."""
    tf = term_fn if term_fn is not None else (lambda t: t)
    if isinstance(law, Static):
        return Static(fn(law.head), fn(law.cond), law.choice)
    if isinstance(law, ActionDynamic):
        return ActionDynamic(fn(law.head), fn(law.cond), law.choice)
    if isinstance(law, FluentDynamic):
        return FluentDynamic(fn(law.head), fn(law.cond), fn(law.after), law.choice)
    if isinstance(law, Constraint):
        return Constraint(fn(law.body))
    if isinstance(law, ConstraintAfter):
        return ConstraintAfter(fn(law.body), fn(law.after))
    if isinstance(law, Nonexecutable):
        return Nonexecutable(fn(law.body), fn(law.cond))
    if isinstance(law, Causes):
        return Causes(fn(law.trigger), fn(law.effect), fn(law.cond))
    if isinstance(law, Default):
        return Default(fn(law.head), fn(law.cond),
                       None if law.after is None else fn(law.after))
    if isinstance(law, Exogenous):
        return Exogenous(law.const, fn(law.cond))
    if isinstance(law, Inertial):
        return Inertial(law.const, fn(law.cond))
    if isinstance(law, RateDecl):
        return RateDecl(law.fluent, tf(law.rhs), law.mode)
    if isinstance(law, AlwaysT):
        return AlwaysT(fn(law.body), law.mode)
    raise TypeError(f"unknown law {law!r}")


def law_formulas(law: CausalLaw) -> Iterator[Formula]:
    collected: list[Formula] = []
    map_law(law, lambda f: (collected.append(f), f)[1])
    yield from collected


def bind_params(desc: ActionDescription, binding: Mapping[str, Term]) -> ActionDescription:
    """Substitute -c style parameter values throughout a description."""
    fn = lambda f: subst_params(f, binding)
    tf = lambda t: subst_params_term(t, binding)
    return ActionDescription(
        sorts=desc.sorts, constants=desc.constants, variables=desc.variables,
        laws=tuple(map_law(law, fn, tf) for law in desc.laws),
        params=desc.params - frozenset(binding),
        implicit=desc.implicit,
    )


def stamp_formula(f: Formula, i: int) -> Formula:
    """Insert the time stamp i in front of every constant occurrence."""
    def stamp_term(t: Term) -> Term:
        if isinstance(t, ConstRef):
            return ConstRef(t.name, tuple(stamp_term(a) for a in t.args), i)
        if isinstance(t, Neg):
            return Neg(stamp_term(t.arg))
        if isinstance(t, BinOp):
            return BinOp(t.op, stamp_term(t.lhs), stamp_term(t.rhs))
        if isinstance(t, Call):
            return Call(t.fn, stamp_term(t.arg))
        return t

    if isinstance(f, Cmp):
        return Cmp(f.op, stamp_term(f.lhs), stamp_term(f.rhs))
    if isinstance(f, Not):
        return Not(stamp_formula(f.arg, i))
    if isinstance(f, And):
        return And(tuple(stamp_formula(x, i) for x in f.items))
    if isinstance(f, Or):
        return Or(tuple(stamp_formula(x, i) for x in f.items))
    if isinstance(f, Implies):
        return Implies(stamp_formula(f.lhs, i), stamp_formula(f.rhs, i))
    if isinstance(f, ForallInterval):
        return ForallInterval(f.var, stamp_term(f.lo), stamp_term(f.hi),
                              stamp_formula(f.body, i))
    if isinstance(f, DenseInvariant):
        return DenseInvariant(f.mode, stamp_formula(f.body, i))
    return f
