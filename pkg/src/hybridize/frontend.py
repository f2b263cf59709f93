"""Project frontend: parsing, name resolution, and IR lowering.

Parses a multi-file project into source units with resolved import maps,
collects every function definition (methods, nested functions, lambdas),
and lowers function bodies to a small three-address instruction form that
the dataflow engine consumes.  Source text is kept verbatim per unit so
the transform stage can make byte-minimal edits.
"""

from __future__ import annotations

import ast
import builtins
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

LOCAL = "local"
IMPORTED = "imported"
BUILTIN = "builtin"
UNRESOLVED = "unresolved"

_BUILTIN_NAMES = frozenset(dir(builtins))

_PY2_HINTS = (
    re.compile(r"^\s*print\s+[^(\s=]", re.MULTILINE),
    re.compile(r"^\s*except\s+\w+\s*,\s*\w+\s*:", re.MULTILINE),
)


@dataclass(frozen=True)
class QualifiedName:
    segments: tuple[str, ...]
    origin: str  # LOCAL | IMPORTED | BUILTIN | UNRESOLVED

    def dotted(self) -> str:
        return ".".join(self.segments)

    @property
    def resolved(self) -> bool:
        return self.origin != UNRESOLVED


def unresolved_name(text: str = "") -> QualifiedName:
    segments = tuple(s for s in text.split(".") if s) or ("<unknown>",)
    return QualifiedName(segments, UNRESOLVED)


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int = 0
    end_col: int = 0


def span_of(node: ast.AST) -> Span:
    return Span(
        getattr(node, "lineno", 0),
        getattr(node, "col_offset", 0),
        getattr(node, "end_lineno", 0) or 0,
        getattr(node, "end_col_offset", 0) or 0,
    )


@dataclass
class Param:
    name: str
    annotation: Optional[ast.expr]
    is_implicit_receiver: bool
    kind: str = "positional"  # positional | vararg | kwonly | kwarg
    default: Optional[ast.expr] = None


@dataclass
class DecoratorInfo:
    expr: ast.expr
    span: Span  # covers the decorator expression; the `@` sits one column left


@dataclass
class FunctionUnit:
    fq_name: QualifiedName
    name: str
    params: list[Param]
    decorators: list[DecoratorInfo]
    node: ast.AST  # FunctionDef | AsyncFunctionDef | Lambda
    unit: "SourceUnit"
    location: Span  # the `def` keyword line/col
    enclosing_class: Optional[str] = None  # fq of the class, when a method
    enclosing_function: Optional[str] = None  # fq of the lexically enclosing function
    is_lambda: bool = False

    @property
    def fq(self) -> str:
        return self.fq_name.dotted()

    def explicit_params(self) -> list[Param]:
        return [p for p in self.params if not p.is_implicit_receiver]


@dataclass
class ClassInfo:
    fq: str
    name: str
    bases: list[ast.expr]
    methods: dict[str, str]  # simple name -> function fq
    unit: "SourceUnit"
    location: Span


@dataclass
class SourceUnit:
    path: Path
    rel_path: str
    module: str
    text: str
    tree: Optional[ast.Module]
    error: Optional[str] = None
    is_init: bool = False
    imports: dict[str, str] = field(default_factory=dict)  # bound name -> dotted target
    wildcard_sources: list[str] = field(default_factory=list)
    top_defs: dict[str, str] = field(default_factory=dict)  # name -> "function"|"class"
    top_assigned: set[str] = field(default_factory=set)
    dunder_all: Optional[list[str]] = None

    def serialize(self) -> str:
        """Unmodified units re-serialize as their original bytes."""
        return self.text

    def global_names(self) -> set[str]:
        return set(self.top_defs) | set(self.imports) | self.top_assigned

    def public_names(self) -> list[str]:
        if self.dunder_all is not None:
            return list(self.dunder_all)
        names = sorted(self.global_names())
        return [n for n in names if not n.startswith("_")]


@dataclass
class ProjectModel:
    root: Path
    units: list[SourceUnit]
    by_module: dict[str, SourceUnit]
    functions: dict[str, FunctionUnit]  # fq -> unit, definition order preserved
    classes: dict[str, ClassInfo]

    def unit_functions(self, unit: SourceUnit) -> list[FunctionUnit]:
        return [f for f in self.functions.values() if f.unit is unit]


class ProjectError(Exception):
    """Fatal configuration problem (unreadable root and the like)."""


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _module_name(rel: Path) -> tuple[str, bool]:
    parts = list(rel.parts)
    is_init = parts[-1] == "__init__.py"
    if is_init:
        parts = parts[:-1]
        name = ".".join(parts) if parts else "__init__"
    else:
        parts[-1] = parts[-1][: -len(".py")]
        name = ".".join(parts)
    return name, is_init


def _looks_like_python2(text: str) -> bool:
    return any(rx.search(text) for rx in _PY2_HINTS)


def _package_of(unit: SourceUnit) -> str:
    if unit.is_init:
        return unit.module
    return unit.module.rpartition(".")[0]


def _collect_imports(unit: SourceUnit) -> None:
    assert unit.tree is not None
    for node in unit.tree.body:
        if isinstance(node, ast.Import):
            for alias in node.names:
                if alias.asname:
                    unit.imports[alias.asname] = alias.name
                else:
                    root = alias.name.split(".")[0]
                    unit.imports[root] = root
        elif isinstance(node, ast.ImportFrom):
            if node.level == 0:
                base = node.module or ""
            else:
                pkg_parts = _package_of(unit).split(".") if _package_of(unit) else []
                keep = len(pkg_parts) - (node.level - 1)
                if keep < 0:
                    keep = 0
                base_parts = pkg_parts[:keep]
                if node.module:
                    base_parts = base_parts + node.module.split(".")
                base = ".".join(base_parts)
            for alias in node.names:
                if alias.name == "*":
                    if base:
                        unit.wildcard_sources.append(base)
                    continue
                bound = alias.asname or alias.name
                target = f"{base}.{alias.name}" if base else alias.name
                unit.imports[bound] = target


def _collect_top_level(unit: SourceUnit) -> None:
    assert unit.tree is not None
    # Names bound inside top-level compound statements (if __name__ drivers,
    # loops, try blocks) are module globals too.
    for node in _walk_own(unit.tree):
        if isinstance(node, ast.Assign):
            for tgt in node.targets:
                for name_node in ast.walk(tgt):
                    if isinstance(name_node, ast.Name):
                        unit.top_assigned.add(name_node.id)
        elif isinstance(node, (ast.For, ast.AsyncFor)):
            for name_node in ast.walk(node.target):
                if isinstance(name_node, ast.Name):
                    unit.top_assigned.add(name_node.id)
        elif isinstance(node, (ast.With, ast.AsyncWith)):
            for item in node.items:
                if item.optional_vars is not None:
                    for name_node in ast.walk(item.optional_vars):
                        if isinstance(name_node, ast.Name):
                            unit.top_assigned.add(name_node.id)
    for node in unit.tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            unit.top_defs[node.name] = "function"
        elif isinstance(node, ast.ClassDef):
            unit.top_defs[node.name] = "class"
        elif isinstance(node, ast.Assign):
            if (
                len(node.targets) == 1
                and isinstance(node.targets[0], ast.Name)
                and node.targets[0].id == "__all__"
                and isinstance(node.value, (ast.List, ast.Tuple))
                and all(
                    isinstance(e, ast.Constant) and isinstance(e.value, str)
                    for e in node.value.elts
                )
            ):
                unit.dunder_all = [e.value for e in node.value.elts]
        elif isinstance(node, ast.AnnAssign) and isinstance(node.target, ast.Name):
            unit.top_assigned.add(node.target.id)


def _is_staticmethod(node) -> bool:
    for dec in node.decorator_list:
        if isinstance(dec, ast.Name) and dec.id == "staticmethod":
            return True
    return False


class _DefCollector:
    """Registers every function and class definition of one unit."""

    def __init__(self, unit: SourceUnit, project: ProjectModel):
        self.unit = unit
        self.project = project

    def run(self) -> None:
        assert self.unit.tree is not None
        prefix = tuple(self.unit.module.split("."))
        for node in self.unit.tree.body:
            self._visit(node, prefix, None, None)
        self._collect_lambdas(self.unit.tree, prefix, None)

    def _visit(self, node, prefix, enclosing_class, enclosing_function):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            self._register_function(node, prefix, enclosing_class, enclosing_function)
        elif isinstance(node, ast.ClassDef):
            self._register_class(node, prefix, enclosing_function)
        else:
            for child in ast.iter_child_nodes(node):
                self._visit(child, prefix, enclosing_class, enclosing_function)

    def _register_function(self, node, prefix, enclosing_class, enclosing_function):
        fq_segments = prefix + (node.name,)
        fq = ".".join(fq_segments)
        params = self._params_of(node, in_class=enclosing_class is not None)
        decorators = [DecoratorInfo(d, span_of(d)) for d in node.decorator_list]
        fn = FunctionUnit(
            fq_name=QualifiedName(fq_segments, LOCAL),
            name=node.name,
            params=params,
            decorators=decorators,
            node=node,
            unit=self.unit,
            location=Span(node.lineno, node.col_offset, node.end_lineno or 0, 0),
            enclosing_class=enclosing_class,
            enclosing_function=enclosing_function,
        )
        self.project.functions[fq] = fn
        if enclosing_class is not None:
            self.project.classes[enclosing_class].methods[node.name] = fq
        for child in node.body:
            self._visit(child, fq_segments, None, fq)

    def _register_class(self, node, prefix, enclosing_function):
        fq_segments = prefix + (node.name,)
        fq = ".".join(fq_segments)
        self.project.classes[fq] = ClassInfo(
            fq=fq,
            name=node.name,
            bases=list(node.bases),
            methods={},
            unit=self.unit,
            location=span_of(node),
        )
        for child in node.body:
            if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef)):
                self._register_function(child, fq_segments, fq, enclosing_function)
            else:
                self._visit(child, fq_segments, fq, enclosing_function)

    def _collect_lambdas(self, node, prefix, enclosing_function):
        """Register lambdas under the same dotted name the lowerer will use."""
        for child in ast.iter_child_nodes(node):
            if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef)):
                self._collect_lambdas(child, prefix + (child.name,), ".".join(prefix + (child.name,)))
            elif isinstance(child, ast.ClassDef):
                self._collect_lambdas(child, prefix + (child.name,), enclosing_function)
            elif isinstance(child, ast.Lambda):
                lam_name = f"_lambda_{child.lineno}_{child.col_offset}"
                fq_segments = prefix + (lam_name,)
                fq = ".".join(fq_segments)
                self.project.functions[fq] = FunctionUnit(
                    fq_name=QualifiedName(fq_segments, LOCAL),
                    name=lam_name,
                    params=self._params_of(child, in_class=False),
                    decorators=[],
                    node=child,
                    unit=self.unit,
                    location=span_of(child),
                    enclosing_function=enclosing_function,
                    is_lambda=True,
                )
                self._collect_lambdas(child, fq_segments, fq)
            else:
                self._collect_lambdas(child, prefix, enclosing_function)

    def _params_of(self, node, in_class: bool) -> list[Param]:
        args = node.args
        params: list[Param] = []
        pos = list(args.posonlyargs) + list(args.args)
        defaults = list(args.defaults)
        pad = [None] * (len(pos) - len(defaults))
        for i, a in enumerate(pos):
            receiver = in_class and i == 0 and not _is_staticmethod(node)
            params.append(
                Param(a.arg, a.annotation, receiver, "positional", (pad + defaults)[i])
            )
        if args.vararg:
            params.append(Param(args.vararg.arg, args.vararg.annotation, False, "vararg"))
        for a, d in zip(args.kwonlyargs, args.kw_defaults):
            params.append(Param(a.arg, a.annotation, False, "kwonly", d))
        if args.kwarg:
            params.append(Param(args.kwarg.arg, args.kwarg.annotation, False, "kwarg"))
        return params


def _walk_own(fn_node):
    """Walk a function body without descending into nested def/class/lambda."""
    stack = list(ast.iter_child_nodes(fn_node))
    while stack:
        node = stack.pop()
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            continue
        yield node
        if isinstance(node, ast.Lambda):
            continue
        stack.extend(ast.iter_child_nodes(node))


def parse_project(root, config=None) -> ProjectModel:
    root = Path(root)
    if not root.is_dir():
        raise ProjectError(f"analysis root {root} is not a readable directory")
    project = ProjectModel(root=root, units=[], by_module={}, functions={}, classes={})
    for path in sorted(root.rglob("*.py")):
        rel = path.relative_to(root)
        module, is_init = _module_name(rel)
        try:
            # newline="" keeps CRLF endings intact for byte-exact rewriting
            with open(path, "r", encoding="utf-8", newline="") as fh:
                text = fh.read()
        except (OSError, UnicodeDecodeError) as exc:
            unit = SourceUnit(path, str(rel), module, "", None, error=str(exc), is_init=is_init)
            project.units.append(unit)
            project.by_module[module] = unit
            continue
        try:
            tree = ast.parse(text)
            error = None
        except SyntaxError as exc:
            tree = None
            if _looks_like_python2(text):
                error = (
                    f"{rel} appears to be Python 2 source; "
                    "upgrade it to Python 3 before analysis"
                )
            else:
                error = f"syntax error: {exc.msg} (line {exc.lineno})"
        unit = SourceUnit(path, str(rel), module, text, tree, error=error, is_init=is_init)
        project.units.append(unit)
        project.by_module[module] = unit
        if tree is not None:
            _collect_imports(unit)
            _collect_top_level(unit)
    for unit in project.units:
        if unit.tree is not None:
            _DefCollector(unit, project).run()
    return project


# ---------------------------------------------------------------------------
# Name resolution
# ---------------------------------------------------------------------------


def dotted_path(expr: ast.expr) -> Optional[list[str]]:
    """The segments of a pure dotted-name expression, else None."""
    parts: list[str] = []
    node = expr
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if isinstance(node, ast.Name):
        parts.append(node.id)
        parts.reverse()
        return parts
    return None


class NameResolver:
    """Static resolution of dotted names against a unit's import map.

    Resolution is a pure function of (unit imports, expression); the summary
    database provides the final fallback so that conventional library
    spellings used without an import still classify rather than guess.
    """

    def __init__(self, project: ProjectModel, db):
        self.project = project
        self.db = db

    def resolve(self, unit: SourceUnit, expr, scope_locals: frozenset = frozenset()) -> QualifiedName:
        if isinstance(expr, str):
            segments = expr.split(".")
        else:
            segments = dotted_path(expr)
        if not segments:
            return unresolved_name()
        return self._resolve_segments(unit, segments, scope_locals, seen=set())

    def _resolve_segments(self, unit, segments, scope_locals, seen) -> QualifiedName:
        base, rest = segments[0], segments[1:]
        if base in scope_locals:
            return unresolved_name(".".join(segments))
        if base in unit.top_defs or base in unit.top_assigned:
            return QualifiedName(tuple(unit.module.split(".")) + tuple(segments), LOCAL)
        if base in unit.imports:
            target = unit.imports[base].split(".") + rest
            return self._resolve_absolute(target, seen)
        for source in unit.wildcard_sources:
            src_unit = self.project.by_module.get(source)
            if src_unit is not None and base in src_unit.public_names():
                return self._resolve_absolute(source.split(".") + segments, seen)
        if base in _BUILTIN_NAMES:
            return QualifiedName(("builtins", *segments), BUILTIN)
        if self.db is not None and self.db.knows(".".join(segments)):
            return QualifiedName(tuple(segments), IMPORTED)
        return unresolved_name(".".join(segments))

    def _resolve_absolute(self, segments: list[str], seen) -> QualifiedName:
        dotted = ".".join(segments)
        if dotted in seen:
            return unresolved_name(dotted)
        seen.add(dotted)
        target_unit, local_rest = self._split_module(segments)
        if target_unit is None:
            return QualifiedName(tuple(segments), IMPORTED)
        if not local_rest:
            return QualifiedName(tuple(segments), LOCAL)
        head = local_rest[0]
        if head in target_unit.top_defs or head in target_unit.top_assigned:
            return QualifiedName(tuple(segments), LOCAL)
        if head in target_unit.imports:
            redirected = target_unit.imports[head].split(".") + local_rest[1:]
            return self._resolve_absolute(redirected, seen)
        return unresolved_name(dotted)

    def _split_module(self, segments: list[str]):
        """Longest prefix of the segments that names a project module."""
        for cut in range(len(segments), 0, -1):
            mod = ".".join(segments[:cut])
            if mod in self.project.by_module:
                return self.project.by_module[mod], segments[cut:]
        return None, segments


def resolve_qualified_name(resolver: NameResolver, unit: SourceUnit, expr) -> QualifiedName:
    """Expand aliases and wildcard imports; never guesses on failure."""
    return resolver.resolve(unit, expr)


# ---------------------------------------------------------------------------
# IR lowering
# ---------------------------------------------------------------------------


@dataclass
class Instr:
    span: Span


@dataclass
class Const(Instr):
    dest: int
    kind: Optional[str]  # number | string | boolean | none | None (untracked)


@dataclass
class Read(Instr):
    dest: int
    name: str


@dataclass
class Bind(Instr):
    name: str
    src: int


@dataclass
class AttrRead(Instr):
    dest: int
    obj: int
    attr: str


@dataclass
class AttrWrite(Instr):
    obj: int
    attr: str
    src: int


@dataclass
class SubRead(Instr):
    dest: int
    obj: int


@dataclass
class SubWrite(Instr):
    obj: int
    src: int


@dataclass
class Build(Instr):
    dest: int
    ctype: str  # list | tuple | set | dict
    elems: list[int]


@dataclass
class Call(Instr):
    dest: int
    callee: int
    args: list[int]
    kwargs: list[tuple[str, int]]
    opaque_reason: Optional[str] = None  # star/kwarg unpacking in the call


@dataclass
class Iterate(Instr):
    dest: int
    src: int


@dataclass
class Return(Instr):
    src: int


@dataclass
class Yield(Instr):
    src: int


@dataclass
class MakeFunction(Instr):
    dest: int
    fq: str


@dataclass
class MakeClass(Instr):
    dest: int
    fq: str


@dataclass
class Decorate(Instr):
    dest: int
    deco: int
    func: int


@dataclass
class ImportName(Instr):
    dest: int
    target: str


@dataclass
class Opaque(Instr):
    dest: int
    reason: str


@dataclass
class Merge(Instr):
    dest: int
    srcs: list[int]


@dataclass
class IRFunction:
    fq: str
    module: str
    instructions: list[Instr]
    params: list[str]
    assigned: set[str]
    globals_decl: set[str]
    enclosing: Optional[str]  # fq of lexically enclosing function
    has_yield: bool = False


_OPAQUE_STMTS = (ast.Import, ast.ImportFrom)


class _Lowerer:
    """Flattens one function body (or module script) to instructions.

    Control flow is erased: branches and loop bodies contribute their flows
    unconditionally, comprehensions merge all iterations, and any value a
    construct may produce flows to its targets.
    """

    def __init__(self, fn_fq: str, module: str, body, params, enclosing, unit_prefix):
        self.fq = fn_fq
        self.module = module
        self.body = body
        self.param_names = params
        self.enclosing = enclosing
        self.unit_prefix = unit_prefix  # fq segments used for nested def names
        self.instrs: list[Instr] = []
        self.assigned: set[str] = set(params)
        self.globals_decl: set[str] = set()
        self.has_yield = False
        self._next = 0

    def fresh(self) -> int:
        self._next += 1
        return self._next

    def emit(self, instr: Instr) -> None:
        self.instrs.append(instr)

    def run(self) -> IRFunction:
        for stmt in self.body:
            self.stmt(stmt)
        return IRFunction(
            fq=self.fq,
            module=self.module,
            instructions=self.instrs,
            params=list(self.param_names),
            assigned=self.assigned,
            globals_decl=self.globals_decl,
            enclosing=self.enclosing,
            has_yield=self.has_yield,
        )

    # -- statements --

    def stmt(self, node) -> None:
        method = getattr(self, "stmt_" + type(node).__name__, None)
        if method is not None:
            method(node)
            return
        # Unknown statement type: lower nested expressions for their flows
        # and descend into nested statement lists.
        for child in ast.iter_child_nodes(node):
            if isinstance(child, ast.stmt):
                self.stmt(child)
            elif isinstance(child, ast.expr):
                self.expr(child)

    def stmt_Expr(self, node):
        self.expr(node.value)

    def stmt_Assign(self, node):
        value = self.expr(node.value)
        for target in node.targets:
            self.assign_target(target, value)

    def stmt_AnnAssign(self, node):
        if node.value is not None:
            value = self.expr(node.value)
            self.assign_target(node.target, value)
        elif isinstance(node.target, ast.Name):
            self.assigned.add(node.target.id)

    def stmt_AugAssign(self, node):
        span = span_of(node)
        value = self.expr(node.value)
        if isinstance(node.target, ast.Name):
            old = self.fresh()
            self.emit(Read(span, old, node.target.id))
            merged = self.fresh()
            self.emit(Merge(span, merged, [old, value]))
            self.assigned.add(node.target.id)
            self.emit(Bind(span, node.target.id, merged))
        elif isinstance(node.target, ast.Attribute):
            obj = self.expr(node.target.value)
            old = self.fresh()
            self.emit(AttrRead(span, old, obj, node.target.attr))
            merged = self.fresh()
            self.emit(Merge(span, merged, [old, value]))
            self.emit(AttrWrite(span, obj, node.target.attr, merged))
        elif isinstance(node.target, ast.Subscript):
            obj = self.expr(node.target.value)
            old = self.fresh()
            self.emit(SubRead(span, old, obj))
            merged = self.fresh()
            self.emit(Merge(span, merged, [old, value]))
            self.emit(SubWrite(span, obj, merged))

    def assign_target(self, target, value: int) -> None:
        span = span_of(target)
        if isinstance(target, ast.Name):
            self.assigned.add(target.id)
            self.emit(Bind(span, target.id, value))
        elif isinstance(target, ast.Attribute):
            obj = self.expr(target.value)
            self.emit(AttrWrite(span, obj, target.attr, value))
        elif isinstance(target, ast.Subscript):
            obj = self.expr(target.value)
            self.emit(SubWrite(span, obj, value))
        elif isinstance(target, (ast.Tuple, ast.List)):
            for elt in target.elts:
                elem = self.fresh()
                self.emit(Iterate(span, elem, value))
                self.assign_target(elt, elem)
        elif isinstance(target, ast.Starred):
            self.assign_target(target.value, value)

    def stmt_Return(self, node):
        if node.value is not None:
            self.emit(Return(span_of(node), self.expr(node.value)))

    def stmt_Delete(self, node):
        for tgt in node.targets:
            if isinstance(tgt, (ast.Attribute, ast.Subscript)):
                self.expr(tgt.value)

    def stmt_For(self, node):
        it = self.expr(node.iter)
        elem = self.fresh()
        self.emit(Iterate(span_of(node.iter), elem, it))
        self.assign_target(node.target, elem)
        for s in node.body:
            self.stmt(s)
        for s in node.orelse:
            self.stmt(s)

    stmt_AsyncFor = stmt_For

    def stmt_While(self, node):
        self.expr(node.test)
        for s in node.body:
            self.stmt(s)
        for s in node.orelse:
            self.stmt(s)

    def stmt_If(self, node):
        self.expr(node.test)
        for s in node.body:
            self.stmt(s)
        for s in node.orelse:
            self.stmt(s)

    def stmt_With(self, node):
        for item in node.items:
            ctx = self.expr(item.context_expr)
            if item.optional_vars is not None:
                self.assign_target(item.optional_vars, ctx)
        for s in node.body:
            self.stmt(s)

    stmt_AsyncWith = stmt_With

    def stmt_Try(self, node):
        for s in node.body:
            self.stmt(s)
        for handler in node.handlers:
            if handler.name:
                opq = self.fresh()
                self.emit(Opaque(span_of(handler), opq, "exception"))
                self.assigned.add(handler.name)
                self.emit(Bind(span_of(handler), handler.name, opq))
            for s in handler.body:
                self.stmt(s)
        for s in node.orelse:
            self.stmt(s)
        for s in node.finalbody:
            self.stmt(s)

    stmt_TryStar = stmt_Try

    def stmt_Raise(self, node):
        if node.exc is not None:
            self.expr(node.exc)

    def stmt_Assert(self, node):
        self.expr(node.test)
        if node.msg is not None:
            self.expr(node.msg)

    def stmt_Global(self, node):
        self.globals_decl.update(node.names)

    def stmt_Nonlocal(self, node):
        # Treated as enclosing-scope names; reads already walk the chain.
        pass

    def stmt_Pass(self, node):
        pass

    def stmt_Break(self, node):
        pass

    def stmt_Continue(self, node):
        pass

    def stmt_Import(self, node):
        span = span_of(node)
        for alias in node.names:
            bound = alias.asname or alias.name.split(".")[0]
            target = alias.name if alias.asname else alias.name.split(".")[0]
            tmp = self.fresh()
            self.emit(ImportName(span, tmp, target))
            self.assigned.add(bound)
            self.emit(Bind(span, bound, tmp))

    def stmt_ImportFrom(self, node):
        # Function-level from-imports; module-level ones are seeded statically.
        span = span_of(node)
        base = node.module or ""
        for alias in node.names:
            if alias.name == "*":
                continue
            bound = alias.asname or alias.name
            target = f"{base}.{alias.name}" if base else alias.name
            tmp = self.fresh()
            self.emit(ImportName(span, tmp, target))
            self.assigned.add(bound)
            self.emit(Bind(span, bound, tmp))

    def stmt_FunctionDef(self, node):
        span = span_of(node)
        fq = ".".join(self.unit_prefix + (node.name,))
        tmp = self.fresh()
        self.emit(MakeFunction(span, tmp, fq))
        current = tmp
        for dec in reversed(node.decorator_list):
            dec_t = self.expr(dec)
            out = self.fresh()
            self.emit(Decorate(span_of(dec), out, dec_t, current))
            current = out
        self.assigned.add(node.name)
        self.emit(Bind(span, node.name, current))

    stmt_AsyncFunctionDef = stmt_FunctionDef

    def stmt_ClassDef(self, node):
        span = span_of(node)
        fq = ".".join(self.unit_prefix + (node.name,))
        for base in node.bases:
            self.expr(base)
        tmp = self.fresh()
        self.emit(MakeClass(span, tmp, fq))
        self.assigned.add(node.name)
        self.emit(Bind(span, node.name, tmp))

    def stmt_Match(self, node):
        self.expr(node.subject)
        for case in node.cases:
            for s in case.body:
                self.stmt(s)

    # -- expressions --

    def expr(self, node) -> int:
        method = getattr(self, "expr_" + type(node).__name__, None)
        if method is not None:
            return method(node)
        # Unknown expression: lower children, produce an untracked value.
        for child in ast.iter_child_nodes(node):
            if isinstance(child, ast.expr):
                self.expr(child)
        dest = self.fresh()
        self.emit(Merge(span_of(node), dest, []))
        return dest

    def expr_Constant(self, node) -> int:
        dest = self.fresh()
        self.emit(Const(span_of(node), dest, _const_kind(node.value)))
        return dest

    def expr_Name(self, node) -> int:
        dest = self.fresh()
        self.emit(Read(span_of(node), dest, node.id))
        return dest

    def expr_Attribute(self, node) -> int:
        obj = self.expr(node.value)
        dest = self.fresh()
        self.emit(AttrRead(span_of(node), dest, obj, node.attr))
        return dest

    def expr_Subscript(self, node) -> int:
        obj = self.expr(node.value)
        if not isinstance(node.slice, ast.Slice):
            self.expr(node.slice)
        dest = self.fresh()
        self.emit(SubRead(span_of(node), dest, obj))
        return dest

    def expr_Call(self, node) -> int:
        span = span_of(node)
        callee = self.expr(node.func)
        opaque_reason = None
        args: list[int] = []
        for a in node.args:
            if isinstance(a, ast.Starred):
                self.expr(a.value)
                opaque_reason = "argument unpacking"
            else:
                args.append(self.expr(a))
        kwargs: list[tuple[str, int]] = []
        for kw in node.keywords:
            if kw.arg is None:
                self.expr(kw.value)
                opaque_reason = "keyword unpacking"
            else:
                kwargs.append((kw.arg, self.expr(kw.value)))
        dest = self.fresh()
        self.emit(Call(span, dest, callee, args, kwargs, opaque_reason))
        return dest

    def expr_BinOp(self, node) -> int:
        folded = _fold_unary_chain(node)
        if folded is not None:
            dest = self.fresh()
            self.emit(Const(span_of(node), dest, folded))
            return dest
        left = self.expr(node.left)
        right = self.expr(node.right)
        dest = self.fresh()
        self.emit(Merge(span_of(node), dest, [left, right]))
        return dest

    def expr_UnaryOp(self, node) -> int:
        if (
            isinstance(node.op, (ast.USub, ast.UAdd))
            and isinstance(node.operand, ast.Constant)
            and isinstance(node.operand.value, (int, float, complex))
            and not isinstance(node.operand.value, bool)
        ):
            dest = self.fresh()
            self.emit(Const(span_of(node), dest, "number"))
            return dest
        inner = self.expr(node.operand)
        dest = self.fresh()
        if isinstance(node.op, ast.Not):
            self.emit(Merge(span_of(node), dest, []))
        else:
            self.emit(Merge(span_of(node), dest, [inner]))
        return dest

    def expr_BoolOp(self, node) -> int:
        values = [self.expr(v) for v in node.values]
        dest = self.fresh()
        self.emit(Merge(span_of(node), dest, values))
        return dest

    def expr_IfExp(self, node) -> int:
        self.expr(node.test)
        a = self.expr(node.body)
        b = self.expr(node.orelse)
        dest = self.fresh()
        self.emit(Merge(span_of(node), dest, [a, b]))
        return dest

    def expr_Compare(self, node) -> int:
        self.expr(node.left)
        for cmp in node.comparators:
            self.expr(cmp)
        dest = self.fresh()
        self.emit(Merge(span_of(node), dest, []))
        return dest

    def _build(self, node, ctype, elts) -> int:
        elems: list[int] = []
        for e in elts:
            if isinstance(e, ast.Starred):
                src = self.expr(e.value)
                elem = self.fresh()
                self.emit(Iterate(span_of(e), elem, src))
                elems.append(elem)
            else:
                elems.append(self.expr(e))
        dest = self.fresh()
        self.emit(Build(span_of(node), dest, ctype, elems))
        return dest

    def expr_List(self, node) -> int:
        return self._build(node, "list", node.elts)

    def expr_Tuple(self, node) -> int:
        return self._build(node, "tuple", node.elts)

    def expr_Set(self, node) -> int:
        return self._build(node, "set", node.elts)

    def expr_Dict(self, node) -> int:
        elems: list[int] = []
        for key, value in zip(node.keys, node.values):
            if key is not None:
                elems.append(self.expr(key))
            else:
                # `{**other}`: merged dict contributes its elements.
                src = self.expr(value)
                elem = self.fresh()
                self.emit(Iterate(span_of(node), elem, src))
                elems.append(elem)
                continue
            elems.append(self.expr(value))
        dest = self.fresh()
        self.emit(Build(span_of(node), dest, "dict", elems))
        return dest

    def _comprehension(self, node, elt_nodes, ctype) -> int:
        for gen in node.generators:
            it = self.expr(gen.iter)
            elem = self.fresh()
            self.emit(Iterate(span_of(gen.iter), elem, it))
            self.assign_target(gen.target, elem)
            for cond in gen.ifs:
                self.expr(cond)
        elems = [self.expr(e) for e in elt_nodes]
        dest = self.fresh()
        self.emit(Build(span_of(node), dest, ctype, elems))
        return dest

    def expr_ListComp(self, node) -> int:
        return self._comprehension(node, [node.elt], "list")

    def expr_SetComp(self, node) -> int:
        return self._comprehension(node, [node.elt], "set")

    def expr_GeneratorExp(self, node) -> int:
        return self._comprehension(node, [node.elt], "list")

    def expr_DictComp(self, node) -> int:
        return self._comprehension(node, [node.key, node.value], "dict")

    def expr_Lambda(self, node) -> int:
        lam_name = f"_lambda_{node.lineno}_{node.col_offset}"
        fq = ".".join(self.unit_prefix + (lam_name,))
        dest = self.fresh()
        self.emit(MakeFunction(span_of(node), dest, fq))
        return dest

    def expr_JoinedStr(self, node) -> int:
        for v in node.values:
            if isinstance(v, ast.FormattedValue):
                self.expr(v.value)
        dest = self.fresh()
        self.emit(Const(span_of(node), dest, "string"))
        return dest

    def expr_Await(self, node) -> int:
        return self.expr(node.value)

    def expr_Yield(self, node) -> int:
        self.has_yield = True
        if node.value is not None:
            self.emit(Yield(span_of(node), self.expr(node.value)))
        dest = self.fresh()
        self.emit(Merge(span_of(node), dest, []))
        return dest

    def expr_YieldFrom(self, node) -> int:
        self.has_yield = True
        src = self.expr(node.value)
        elem = self.fresh()
        self.emit(Iterate(span_of(node), elem, src))
        self.emit(Yield(span_of(node), elem))
        dest = self.fresh()
        self.emit(Merge(span_of(node), dest, []))
        return dest

    def expr_NamedExpr(self, node) -> int:
        value = self.expr(node.value)
        self.assign_target(node.target, value)
        return value

    def expr_Starred(self, node) -> int:
        return self.expr(node.value)

    def expr_FormattedValue(self, node) -> int:
        return self.expr(node.value)

    def expr_Slice(self, node) -> int:
        for part in (node.lower, node.upper, node.step):
            if part is not None:
                self.expr(part)
        dest = self.fresh()
        self.emit(Merge(span_of(node), dest, []))
        return dest


def _const_kind(value) -> Optional[str]:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float, complex)):
        return "number"
    if isinstance(value, (str, bytes)):
        return "string"
    if value is None:
        return "none"
    return None


def _fold_unary_chain(node) -> Optional[str]:
    # Numeric constant expressions like 2**10 or 1e-3 folded to one literal.
    try:
        value = ast.literal_eval(node)
    except (ValueError, TypeError, SyntaxError, MemoryError, RecursionError):
        return None
    return _const_kind(value)


def lower_function(fn: FunctionUnit) -> IRFunction:
    """Normalize a function body to flat instructions, conservatively."""
    node = fn.node
    if fn.is_lambda:
        body = [ast.Return(value=node.body, lineno=node.lineno, col_offset=node.col_offset)]
        prefix = fn.fq_name.segments
    else:
        body = node.body
        prefix = fn.fq_name.segments
    lowerer = _Lowerer(
        fn_fq=fn.fq,
        module=fn.unit.module,
        body=body,
        params=[p.name for p in fn.params],
        enclosing=fn.enclosing_function,
        unit_prefix=prefix,
    )
    return lowerer.run()


def lower_script(unit: SourceUnit) -> IRFunction:
    """Lower a module's top-level executable statements.

    Imports, defs and class statements still appear (they bind names);
    docstrings do not.
    """
    assert unit.tree is not None
    body = list(unit.tree.body)
    if body and isinstance(body[0], ast.Expr) and isinstance(body[0].value, ast.Constant):
        body = body[1:]
    lowerer = _Lowerer(
        fn_fq=script_key(unit.module),
        module=unit.module,
        body=body,
        params=[],
        enclosing=None,
        unit_prefix=tuple(unit.module.split(".")),
    )
    ir = lowerer.run()
    # Module-level bindings are global by definition.
    ir.globals_decl = set(ir.assigned)
    return ir


def script_key(module: str) -> str:
    return f"{module}:<script>"


def has_executable_top_level(unit: SourceUnit) -> bool:
    """True when the module body contains statements that run on import
    beyond definitions, imports, and the docstring."""
    if unit.tree is None:
        return False
    body = list(unit.tree.body)
    if body and isinstance(body[0], ast.Expr) and isinstance(body[0].value, ast.Constant):
        body = body[1:]
    for node in body:
        if isinstance(
            node,
            (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef, ast.Import, ast.ImportFrom),
        ):
            continue
        if isinstance(node, ast.Assign) and _is_plain_constant_assign(node):
            continue
        return True
    return False


def _is_plain_constant_assign(node: ast.Assign) -> bool:
    return isinstance(node.value, ast.Constant) and all(
        isinstance(t, ast.Name) for t in node.targets
    )
