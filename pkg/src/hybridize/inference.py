"""Per-parameter tensor and literal inference.

Three detectors feed the tensor verdict: dataflow from generator calls
(through aliases, containers, fields, and dataset iteration), optional type
hints, and a speculative name/context fallback that always ships with a
reported assumption.  Literal inference tracks constants through scalars,
containers, and object fields to the arguments of resolved call sites.
"""

from __future__ import annotations

import ast
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from . import frontend as fe
from . import summaries as su
from .graphs import (
    CallGraph, ContainerObj, DataflowGraph, DatasetObj, FieldVar, Hierarchy,
    InstanceObj, LiteralObj, NameVar, TensorObj, is_reachable,
)

# Class names whose subclasses the functor heuristic treats as models.
MODEL_BASE_NAMES = frozenset({
    "tf.keras.Model",
    "tensorflow.keras.Model",
    "tf.keras.models.Model",
    "tensorflow.keras.models.Model",
    "keras.Model",
    "keras.models.Model",
    "Model",
})

_CONTAINER_HINT_HEADS = frozenset({"Optional", "List", "Tuple", "Sequence", "list", "tuple"})


@dataclass(frozen=True)
class Witness:
    node: str
    line: int
    col: int
    api: str
    via: str  # dataflow | hint | speculative


@dataclass
class TensorEvidence:
    param: str
    kinds: set[str] = field(default_factory=set)
    tensor_types: set[str] = field(default_factory=set)
    witnesses: list[Witness] = field(default_factory=list)
    paths: list[tuple] = field(default_factory=list)  # dataflow variable chains


@dataclass
class LiteralEvidence:
    param: str
    literal_kinds: set[str] = field(default_factory=set)
    call_sites: list[tuple] = field(default_factory=list)  # (node, line, col)


@dataclass
class Assumption:
    function: str
    basis: str  # keyword_match | model_functor
    detail: str
    line: int
    col: int


def _terminal_generator(dfg: DataflowGraph, var):
    """The generator object a witness path may legitimately end at."""
    obj = dfg.gen_results.get(var)
    if obj is not None:
        return obj
    if isinstance(var, FieldVar) and var.field == "elem" and isinstance(
        var.obj, (TensorObj, DatasetObj)
    ):
        return var.obj
    return None


def _witness_paths(dfg: DataflowGraph, start) -> list[tuple[tuple, object]]:
    """Breadth-first search over dataflow edges and container descent;
    returns (path, generator object) per distinct terminal reached."""
    parents: dict = {start: None}
    queue = deque([start])
    found: list[tuple[tuple, object]] = []
    seen_gens: set = set()
    while queue:
        var = queue.popleft()
        gen = _terminal_generator(dfg, var)
        if gen is not None and gen not in seen_gens:
            seen_gens.add(gen)
            path = []
            cur = var
            while cur is not None:
                path.append(cur)
                cur = parents[cur]
            found.append((tuple(reversed(path)), gen))
        for nxt in dfg.witness_successors(var):
            if nxt not in parents:
                parents[nxt] = var
                queue.append(nxt)
    return found


def _tag_of(obj) -> str:
    if isinstance(obj, DatasetObj):
        return "dataset_element"
    return obj.tag


def infer_tensor_params(fn: fe.FunctionUnit, graphs, db: su.SummaryDb, config) -> list[TensorEvidence]:
    """Dataflow evidence: a parameter is tensor-carrying iff some resolved
    call site passes a value with a dataflow path from a generator call,
    directly or through containers; the receiver is never reported."""
    cg, dfg = graphs
    if not is_reachable(cg, fn.fq):
        return []
    out: list[TensorEvidence] = []
    for param in fn.explicit_params():
        pvar = NameVar(fn.fq, param.name)
        hits = _witness_paths(dfg, pvar)
        if not hits:
            continue
        ev = TensorEvidence(param=param.name, kinds={"dataflow"})
        for path, gen in sorted(hits, key=lambda h: (h[1].site.node, h[1].site.line, h[1].api)):
            ev.tensor_types.add(_tag_of(gen))
            ev.witnesses.append(
                Witness(gen.site.node, gen.site.line, gen.site.col, gen.api, "dataflow")
            )
            ev.paths.append(path)
        out.append(ev)
    return out


# ---------------------------------------------------------------------------
# Type hints
# ---------------------------------------------------------------------------


def _hint_tensor_name(resolver, unit, expr, db, depth=0) -> Optional[str]:
    """Resolve a hint expression to a generator api; container forms
    (Optional/List/Tuple/Sequence, one nesting level) unwrap to their
    element type."""
    if isinstance(expr, ast.Constant) and isinstance(expr.value, str):
        try:
            expr = ast.parse(expr.value, mode="eval").body
        except SyntaxError:
            return None
    if isinstance(expr, (ast.Name, ast.Attribute)):
        parts = fe.dotted_path(expr)
        if parts is None:
            return None
        qn = resolver.resolve(unit, expr)
        dotted = qn.dotted() if qn.resolved else ".".join(parts)
        spec = su.lookup_generator(db, dotted)
        return spec.api if spec is not None else None
    if isinstance(expr, ast.Subscript) and depth < 2:
        head = expr.value
        head_name = None
        if isinstance(head, ast.Name):
            head_name = head.id
        elif isinstance(head, ast.Attribute):
            head_name = head.attr
        if head_name not in _CONTAINER_HINT_HEADS:
            return None
        inner = expr.slice
        elements = inner.elts if isinstance(inner, ast.Tuple) else [inner]
        for elem in elements:
            if isinstance(elem, ast.Constant) and elem.value is Ellipsis:
                continue
            if isinstance(elem, ast.Constant) and elem.value is None:
                continue
            found = _hint_tensor_name(resolver, unit, elem, db, depth + 1)
            if found is not None:
                return found
    return None


def infer_hint_evidence(fn: fe.FunctionUnit, resolver, db: su.SummaryDb, config) -> list[TensorEvidence]:
    if not getattr(config, "follow_type_hints", True):
        return []
    out: list[TensorEvidence] = []
    for param in fn.explicit_params():
        if param.annotation is None:
            continue
        api = _hint_tensor_name(resolver, fn.unit, param.annotation, db)
        if api is None:
            continue
        spec = su.lookup_generator(db, api)
        tag = "tensor_like" if spec is not None and spec.tensor_like else "tensor"
        span = fe.span_of(param.annotation)
        out.append(
            TensorEvidence(
                param=param.name,
                kinds={"hint"},
                tensor_types={tag},
                witnesses=[Witness(fn.fq, span.line, span.col, api, "hint")],
            )
        )
    return out


# ---------------------------------------------------------------------------
# Speculative fallback
# ---------------------------------------------------------------------------


def speculative_guess(
    fn: fe.FunctionUnit,
    project: fe.ProjectModel,
    db: su.SummaryDb,
    hierarchy: Optional[Hierarchy] = None,
) -> Optional[tuple[list[TensorEvidence], Assumption]]:
    """Name/context fallback, used only when dataflow and hints came up
    empty and the function has at least one explicit parameter.  Always
    paired with an assumption for the report."""
    params = fn.explicit_params()
    if not params:
        return None
    assumption = None
    if fn.name in ("__call__", "call") and fn.enclosing_class is not None:
        if hierarchy is None:
            hierarchy = Hierarchy(project, fe.NameResolver(project, db))
        if hierarchy.reaches_external(fn.enclosing_class, MODEL_BASE_NAMES):
            assumption = Assumption(
                function=fn.fq,
                basis="model_functor",
                detail=fn.enclosing_class,
                line=fn.location.line,
                col=fn.location.col,
            )
    if assumption is None:
        lowered = fn.name.lower()
        for kw in db.keywords:
            if kw.token.lower() in lowered:
                assumption = Assumption(
                    function=fn.fq,
                    basis="keyword_match",
                    detail=kw.token,
                    line=fn.location.line,
                    col=fn.location.col,
                )
                break
    if assumption is None:
        return None
    evidence = [
        TensorEvidence(
            param=p.name,
            kinds={"speculative"},
            tensor_types={"tensor"},
            witnesses=[Witness(fn.fq, fn.location.line, fn.location.col, assumption.basis, "speculative")],
        )
        for p in params
    ]
    return evidence, assumption


# ---------------------------------------------------------------------------
# Literal arguments
# ---------------------------------------------------------------------------


def _interior_literals(dfg: DataflowGraph, root_obj, consider_booleans: bool) -> list[LiteralObj]:
    """Literals held (transitively) by an object's fields or elements."""
    out: list[LiteralObj] = []
    seen = {root_obj}
    stack = [root_obj]
    while stack:
        obj = stack.pop()
        for fvar in dfg.field_vars.get(obj, ()):
            for held in dfg.pts(fvar):
                if isinstance(held, LiteralObj):
                    if held.kind != "boolean" or consider_booleans:
                        out.append(held)
                elif isinstance(held, (ContainerObj, InstanceObj)) and held not in seen:
                    seen.add(held)
                    stack.append(held)
    return out


def infer_literal_args(fn: fe.FunctionUnit, graphs, config) -> list[LiteralEvidence]:
    """A parameter carries literal evidence iff some resolved call site
    passes a literal constant, a container holding one, or an object with a
    literal-valued field.  Boolean-only evidence is dropped unless the
    consider-booleans option is on."""
    cg, dfg = graphs
    if not is_reachable(cg, fn.fq):
        return []
    consider_booleans = getattr(config, "consider_booleans", False)
    out: list[LiteralEvidence] = []
    for param in fn.explicit_params():
        pvar = NameVar(fn.fq, param.name)
        kinds: set[str] = set()
        sites: list[tuple] = []
        for obj in dfg.pts(pvar):
            if isinstance(obj, LiteralObj):
                if obj.kind == "boolean" and not consider_booleans:
                    continue
                kinds.add(obj.kind)
                sites.append((obj.site.node, obj.site.line, obj.site.col))
            elif isinstance(obj, ContainerObj):
                inner = _interior_literals(dfg, obj, consider_booleans)
                if inner:
                    kinds.add("container_of_literals")
                    sites.extend((l.site.node, l.site.line, l.site.col) for l in inner)
            elif isinstance(obj, InstanceObj):
                inner = _interior_literals(dfg, obj, consider_booleans)
                if inner:
                    kinds.add("object_with_literal_field")
                    sites.extend((l.site.node, l.site.line, l.site.col) for l in inner)
        if not kinds:
            continue
        out.append(
            LiteralEvidence(
                param=param.name,
                literal_kinds=kinds,
                call_sites=sorted(set(sites)),
            )
        )
    return out
