"""Execution-mode classification, precondition checking, and planning.

Two transformations are decided here: converting an eager function to run
as a graph (rule P1) and converting a graph function back to eager (rules
P2 and P3).  The rules are mutually exclusive, side effects veto every
action, and functions missing from the call graph are left untouched with
failure F4.  Failures and warnings mirror the report taxonomy: F1 no
primitive parameter (blocks P3), F2 primitive parameters (blocks P1),
F3 side effects, F4 missing call-graph node.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Optional

from . import frontend as fe

HYBRID_DECORATOR_NAMES = frozenset({
    "tensorflow.function",
    "tf.function",
    "tensorflow.compat.v2.function",
    "tf.compat.v2.function",
})

EAGER = "eager"
HYBRID = "hybrid"

HYBRIDIZE = "hybridize"
DEHYBRIDIZE = "dehybridize"
NONE = "none"

W_HYBRID_SIDE_EFFECTS = "W_hybrid_side_effects"
W_RECURSIVE_HYBRID_TENSOR = "W_recursive_hybrid_tensor"


@dataclass
class ExecutionMode:
    mode: str  # EAGER | HYBRID
    hybrid_decorator_span: Optional[fe.Span] = None
    notes: list[str] = field(default_factory=list)


@dataclass
class PreconditionVerdict:
    function: str
    exe: ExecutionMode
    tens: bool
    lit: bool
    se: bool
    rec: bool
    rule: Optional[str] = None  # P1 | P2 | P3
    action: str = NONE  # HYBRIDIZE | DEHYBRIDIZE | NONE
    failures: set[str] = field(default_factory=set)
    warnings: set[str] = field(default_factory=set)


@dataclass
class RefactoringPlan:
    verdicts: list[PreconditionVerdict]
    edits_by_file: dict[str, list]  # rel_path -> [(verdict, FunctionUnit)]

    def actionable(self) -> list[PreconditionVerdict]:
        return [v for v in self.verdicts if v.action != NONE]


def classify_execution_mode(fn: fe.FunctionUnit, resolver: fe.NameResolver) -> ExecutionMode:
    """A function is hybrid iff some decorator (bare or call form) resolves
    to the hybridization decorator's qualified name."""
    notes: list[str] = []
    for dec in fn.decorators:
        expr = dec.expr
        if isinstance(expr, ast.Call):
            expr = expr.func
        qn = resolver.resolve(fn.unit, expr)
        if qn.resolved and qn.dotted() in HYBRID_DECORATOR_NAMES:
            return ExecutionMode(HYBRID, dec.span, notes)
        if not qn.resolved:
            parts = fe.dotted_path(expr)
            label = ".".join(parts) if parts else "<expression>"
            notes.append(f"unresolved decorator {label}")
    return ExecutionMode(EAGER, None, notes)


def check_preconditions(
    fn,
    mode: ExecutionMode,
    tens_ev,
    lit_ev,
    se,
    rec: bool,
    reachable: bool,
) -> PreconditionVerdict:
    """Evaluate the conversion tables for one function.

    Eager: tensor parameters, no literal arguments, no side effects, and no
    recursion allow hybridization; literals and side effects are reported
    as F2/F3.  Hybrid: no tensor parameters (and purity) or tensor plus
    literal parameters (and purity) allow de-hybridization; side effects
    fail F3 with a warning, and a tensor-parameter hybrid without literals
    has nothing to optimize (F1).
    """
    key = fn if isinstance(fn, str) else fn.fq
    tens = bool(tens_ev)
    lit = bool(lit_ev)
    se_flag = se if isinstance(se, bool) else se.has_effects
    verdict = PreconditionVerdict(
        function=key, exe=mode, tens=tens, lit=lit, se=se_flag, rec=rec
    )
    if not reachable:
        verdict.failures.add("F4")
        return verdict
    if mode.mode == EAGER:
        if tens and not lit and not se_flag and not rec:
            verdict.rule = "P1"
            verdict.action = HYBRIDIZE
        if lit:
            verdict.failures.add("F2")
        if se_flag:
            verdict.failures.add("F3")
        return verdict
    # hybrid
    if se_flag:
        verdict.failures.add("F3")
        verdict.warnings.add(W_HYBRID_SIDE_EFFECTS)
    elif not tens:
        verdict.rule = "P2"
        verdict.action = DEHYBRIDIZE
    elif lit:
        verdict.rule = "P3"
        verdict.action = DEHYBRIDIZE
    if tens and not lit:
        verdict.failures.add("F1")
    if tens and rec:
        verdict.warnings.add(W_RECURSIVE_HYBRID_TENSOR)
    return verdict


def plan_project(project: fe.ProjectModel, verdicts: list[PreconditionVerdict]) -> RefactoringPlan:
    """One verdict per candidate; actionable ones group into per-file edits
    ordered by (path, line)."""
    by_fq = {v.function: v for v in verdicts}
    ordered = sorted(
        verdicts,
        key=lambda v: (
            project.functions[v.function].unit.rel_path,
            project.functions[v.function].location.line,
        ),
    )
    edits_by_file: dict[str, list] = {}
    for verdict in ordered:
        if verdict.action == NONE:
            continue
        fn = project.functions[verdict.function]
        edits_by_file.setdefault(fn.unit.rel_path, []).append((verdict, fn))
    return RefactoringPlan(verdicts=[by_fq[v.function] for v in ordered], edits_by_file=edits_by_file)


def candidate_functions(project: fe.ProjectModel) -> list[fe.FunctionUnit]:
    """Every function definition is a candidate: methods, nested functions,
    functors.  Lambdas cannot carry decorators and module-level script code
    cannot be decorated, so neither is a candidate."""
    out = [fn for fn in project.functions.values() if not fn.is_lambda]
    out.sort(key=lambda f: (f.unit.rel_path, f.location.line, f.location.col))
    return out
