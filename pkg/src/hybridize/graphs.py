"""Entry-point discovery, call graph, and dataflow graph construction.

The engine runs a flow-insensitive, context-insensitive fixpoint over the
lowered IR of every module script plus each function it reaches.  Program
variables point to abstract objects (allocation sites, tensor/dataset
generator results, literals, library handles); dataflow edges record how
values move through assignments, calls, fields, and containers.  Call
resolution covers direct calls, methods through the local class hierarchy,
functors, constructors, higher-order callbacks through tracked function
values, and summarized library APIs; everything else becomes an unresolved
call site, which downstream analyses treat conservatively.
"""

from __future__ import annotations

import fnmatch
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from . import frontend as fe
from . import summaries as su
from .frontend import (
    AttrRead, AttrWrite, Bind, Build, Call, Const, Decorate, ImportName,
    Instr, Iterate, MakeClass, MakeFunction, Merge, Opaque, Read, Return,
    Span, SubRead, SubWrite, Yield,
)

_MAX_API_DEPTH = 8

# Introspection and code-generation builtins make call sites opaque.
OPAQUE_CALL_NAMES = frozenset({
    "builtins.getattr", "builtins.setattr", "builtins.delattr",
    "builtins.eval", "builtins.exec", "builtins.compile",
    "builtins.globals", "builtins.locals", "builtins.vars",
    "builtins.__import__",
})


# ---------------------------------------------------------------------------
# Abstract values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Site:
    node: str  # call-graph node key containing the allocation/occurrence
    line: int
    col: int


@dataclass(frozen=True)
class InstanceObj:
    site: Site
    cls: str


@dataclass(frozen=True)
class ContainerObj:
    site: Site
    ctype: str  # list | tuple | set | dict | generator


@dataclass(frozen=True)
class TensorObj:
    site: Site
    api: str
    tag: str  # tensor | tensor_like | dataset_element


@dataclass(frozen=True)
class DatasetObj:
    site: Site
    api: str


@dataclass(frozen=True)
class LibraryObj:
    site: Site
    api: str


@dataclass(frozen=True)
class LiteralObj:
    site: Site
    kind: str  # number | string | boolean | none


@dataclass(frozen=True)
class OpaqueObj:
    site: Site
    reason: str


@dataclass(frozen=True)
class FuncObj:
    fq: str


@dataclass(frozen=True)
class ClassObj:
    fq: str


@dataclass(frozen=True)
class ModuleObj:
    module: str


@dataclass(frozen=True)
class ExternalName:
    path: str


@dataclass(frozen=True)
class BoundMethodObj:
    fq: str
    recv: object


@dataclass(frozen=True)
class LibraryMethodObj:
    api: str
    recv: object


@dataclass(frozen=True)
class SuperObj:
    cls: str
    recv: object


HEAPISH = (InstanceObj, ContainerObj, TensorObj, DatasetObj, LibraryObj)


# ---------------------------------------------------------------------------
# Dataflow variables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Temp:
    fn: str
    idx: int


@dataclass(frozen=True)
class NameVar:
    fn: str
    name: str


@dataclass(frozen=True)
class GlobalVar:
    module: str
    name: str


@dataclass(frozen=True)
class FieldVar:
    obj: object
    field: str  # attribute name, or "elem" for container elements


@dataclass(frozen=True)
class RetVar:
    fn: str


class DataflowGraph:
    """Variables, their points-to sets, and the dataflow relation.

    `flows[x]` holds every y with a potential dataflow from y to x; points-to
    sets only grow during construction.
    """

    def __init__(self):
        self.points_to: dict[object, set] = {}
        self.flows: dict[object, set] = {}
        self.rev: dict[object, set] = {}
        self.field_vars: dict[object, set] = {}  # obj -> {FieldVar}
        self.gen_results: dict[object, object] = {}  # var -> generator object
        self._work: deque = deque()

    def pts(self, var) -> set:
        return self.points_to.get(var, set())

    def flows_from(self, var) -> set:
        return self.flows.get(var, set())

    def variables(self):
        return set(self.points_to) | set(self.flows)

    def add_pts(self, var, objs) -> bool:
        if isinstance(var, FieldVar):
            self.field_vars.setdefault(var.obj, set()).add(var)
        cur = self.points_to.setdefault(var, set())
        before = len(cur)
        cur.update(objs)
        if len(cur) != before:
            self._work.append(var)
            return True
        return False

    def add_flow(self, dst, src) -> bool:
        srcs = self.flows.setdefault(dst, set())
        if src in srcs:
            return False
        srcs.add(src)
        self.rev.setdefault(src, set()).add(dst)
        if isinstance(src, FieldVar):
            self.field_vars.setdefault(src.obj, set()).add(src)
        if isinstance(dst, FieldVar):
            self.field_vars.setdefault(dst.obj, set()).add(dst)
        if self.pts(src):
            self._work.append(src)
        return True

    def flush(self) -> bool:
        changed = False
        while self._work:
            var = self._work.popleft()
            objs = self.points_to.get(var)
            if not objs:
                continue
            for dst in self.rev.get(var, ()):
                cur = self.points_to.setdefault(dst, set())
                before = len(cur)
                cur.update(objs)
                if len(cur) != before:
                    changed = True
                    self._work.append(dst)
        return changed

    def witness_successors(self, var):
        """Steps usable in a witness path: dataflow sources, plus descent
        into the element/field variables of objects the variable holds."""
        out = set(self.flows_from(var))
        for obj in self.pts(var):
            out.update(self.field_vars.get(obj, ()))
        return out


# ---------------------------------------------------------------------------
# Call graph
# ---------------------------------------------------------------------------


@dataclass
class NodeInfo:
    key: str
    kind: str  # function | script
    fn: Optional[fe.FunctionUnit] = None
    module: str = ""


@dataclass
class LibraryCallFact:
    node: str
    span: Span
    api: str
    effect: str
    recv_objs: tuple = ()
    arg_temps: tuple = ()


class CallGraph:
    def __init__(self):
        self.nodes: dict[str, NodeInfo] = {}
        self.edges: set[tuple[str, Span, str]] = set()
        self.succ: dict[str, set[str]] = {}
        self.unresolved_sites: list[tuple[str, Span, str]] = []
        self.entry_nodes: set[str] = set()
        self.reachable: set[str] = set()
        self.library_calls: list[LibraryCallFact] = []
        self.ir_by_node: dict[str, fe.IRFunction] = {}

    def add_node(self, key: str, kind: str = "function", fn=None, module: str = ""):
        if key not in self.nodes:
            self.nodes[key] = NodeInfo(key, kind, fn, module)
            self.succ.setdefault(key, set())
        return self.nodes[key]

    def add_edge(self, caller: str, callee: str, span: Span = Span(0, 0)) -> bool:
        self.add_node(caller)
        self.add_node(callee)
        edge = (caller, span, callee)
        if edge in self.edges:
            return False
        self.edges.add(edge)
        self.succ.setdefault(caller, set()).add(callee)
        return True

    def callees(self, key: str) -> set[str]:
        return self.succ.get(key, set())

    def closure(self, key: str) -> set[str]:
        """The node itself plus everything transitively callable from it."""
        seen = {key}
        stack = [key]
        while stack:
            for m in self.succ.get(stack.pop(), ()):
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return seen

    def compute_reachable(self) -> None:
        seen: set[str] = set()
        stack = sorted(self.entry_nodes)
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.succ.get(n, ()))
        self.reachable = seen

    def to_dot(self) -> str:
        lines = ["digraph callgraph {"]
        for key in sorted(self.nodes):
            shape = "box" if self.nodes[key].kind == "script" else "ellipse"
            lines.append(f'  "{key}" [shape={shape}];')
        for caller, _span, callee in sorted(self.edges, key=lambda e: (e[0], e[2], e[1].line)):
            lines.append(f'  "{caller}" -> "{callee}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def is_recursive(cg: CallGraph, fn: str) -> bool:
    """Depth-first search from the node; true iff a call path of length >= 1
    returns to it.  A seen set keeps cyclic graphs terminating."""
    seen: set[str] = set()
    stack = [fn]
    while stack:
        node = stack.pop()
        for callee in cg.succ.get(node, ()):
            if callee == fn:
                return True
            if callee not in seen:
                seen.add(callee)
                stack.append(callee)
    return False


def is_reachable(cg: CallGraph, fn: str) -> bool:
    return fn in cg.reachable


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntryPoint:
    kind: str  # module_script | test_function
    target: str  # module name, or function fq


def discover_entry_points(project: fe.ProjectModel, config) -> list[EntryPoint]:
    entries: list[EntryPoint] = []
    pytest_on = getattr(config, "pytest_entry_points", True)
    for unit in project.units:
        if unit.tree is None:
            continue
        if fe.has_executable_top_level(unit):
            entries.append(EntryPoint("module_script", unit.module))
        if pytest_on and _is_test_file(unit.rel_path):
            for fn in project.unit_functions(unit):
                if fn.name.startswith("test_") and not fn.is_lambda:
                    entries.append(EntryPoint("test_function", fn.fq))
    return entries


def _is_test_file(rel_path: str) -> bool:
    name = rel_path.replace("\\", "/").rsplit("/", 1)[-1]
    return fnmatch.fnmatch(name, "test_*.py") or fnmatch.fnmatch(name, "*_test.py")


# ---------------------------------------------------------------------------
# Class hierarchy
# ---------------------------------------------------------------------------


class Hierarchy:
    """Method resolution over locally declared base-class names."""

    def __init__(self, project: fe.ProjectModel, resolver: fe.NameResolver):
        self.project = project
        self.resolver = resolver
        self._bases: dict[str, list] = {}

    def bases_of(self, cls_fq: str) -> list:
        """Resolved bases: ("local", fq) | ("external", dotted)."""
        cached = self._bases.get(cls_fq)
        if cached is not None:
            return cached
        info = self.project.classes.get(cls_fq)
        out = []
        if info is not None:
            for base in info.bases:
                qn = self.resolver.resolve(info.unit, base)
                if qn.origin == fe.LOCAL and qn.dotted() in self.project.classes:
                    out.append(("local", qn.dotted()))
                else:
                    # Unresolved bases keep their dotted source text so library
                    # summaries can still classify methods reached through them.
                    out.append(("external", qn.dotted() if qn.segments != ("<unknown>",) else ""))
        self._bases[cls_fq] = out
        return out

    def lookup(self, cls_fq: str, name: str, skip_own: bool = False):
        """(method_fq | None, externals, open).  `externals` are the dotted
        names of non-local bases crossed before any local definition."""
        externals: list[str] = []
        seen: set[str] = set()
        open_set = False

        def walk(fq: str, skip: bool):
            nonlocal open_set
            if fq in seen:
                return None
            seen.add(fq)
            info = self.project.classes.get(fq)
            if info is None:
                return None
            if not skip:
                m = info.methods.get(name)
                if m is not None:
                    return m
            for kind, base in self.bases_of(fq):
                if kind == "local":
                    found = walk(base, False)
                    if found is not None:
                        return found
                else:
                    open_set = True
                    if base:
                        externals.append(base)
            return None

        found = walk(cls_fq, skip_own)
        return found, externals, open_set

    def reaches_external(self, cls_fq: str, names: frozenset) -> bool:
        seen: set[str] = set()
        stack = [cls_fq]
        while stack:
            fq = stack.pop()
            if fq in seen:
                continue
            seen.add(fq)
            for kind, base in self.bases_of(fq):
                if kind == "local":
                    stack.append(base)
                elif base in names:
                    return True
        return False


# ---------------------------------------------------------------------------
# The fixpoint engine
# ---------------------------------------------------------------------------


class GraphConstructionError(Exception):
    """The fixpoint failed to stabilize; indicates an engine bug."""


class Engine:
    def __init__(self, project: fe.ProjectModel, db: su.SummaryDb):
        self.project = project
        self.db = db
        self.resolver = fe.NameResolver(project, db)
        self.hierarchy = Hierarchy(project, self.resolver)
        self.dfg = DataflowGraph()
        self.cg = CallGraph()
        self._ir_cache: dict[str, fe.IRFunction] = {}
        self._active: list[str] = []
        self._active_set: set[str] = set()
        self._unit_of_node: dict[str, fe.SourceUnit] = {}

    # -- activation --

    def _ir_of_function(self, fq: str) -> fe.IRFunction:
        ir = self._ir_cache.get(fq)
        if ir is None:
            ir = fe.lower_function(self.project.functions[fq])
            self._ir_cache[fq] = ir
        return ir

    def activate_script(self, unit: fe.SourceUnit) -> str:
        key = fe.script_key(unit.module)
        if key not in self._active_set:
            ir = fe.lower_script(unit)
            self._register(key, ir, "script", None, unit)
        return key

    def activate_function(self, fq: str) -> Optional[str]:
        fn = self.project.functions.get(fq)
        if fn is None:
            return None
        if fq not in self._active_set:
            self._register(fq, self._ir_of_function(fq), "function", fn, fn.unit)
        return fq

    def _register(self, key, ir, kind, fn, unit):
        self._active_set.add(key)
        self._active.append(key)
        self.cg.add_node(key, kind, fn, unit.module)
        self.cg.ir_by_node[key] = ir
        self._unit_of_node[key] = unit
        for instr in ir.instructions:
            if isinstance(instr, Return):
                self.dfg.add_flow(RetVar(key), Temp(key, instr.src))
            elif isinstance(instr, Yield):
                gen = self._gen_container(key)
                self.dfg.add_flow(FieldVar(gen, "elem"), Temp(key, instr.src))

    def _gen_container(self, key: str) -> ContainerObj:
        return ContainerObj(Site(key, 0, 0), "generator")

    # -- name/scope resolution to dataflow variables --

    def _read_var(self, node: str, name: str):
        ir = self.cg.ir_by_node.get(node) or self._ir_cache.get(node)
        unit = self._unit_of_node[node]
        if name in ir.globals_decl:
            return GlobalVar(ir.module, name)
        if name in ir.assigned:
            return NameVar(node, name)
        enc = ir.enclosing
        while enc is not None:
            enc_ir = self._ir_of_function(enc)
            if name in enc_ir.assigned and name not in enc_ir.globals_decl:
                return NameVar(enc, name)
            enc = enc_ir.enclosing
        if name in unit.global_names():
            return GlobalVar(unit.module, name)
        for source in unit.wildcard_sources:
            src_unit = self.project.by_module.get(source)
            if src_unit is not None and name in src_unit.public_names():
                return GlobalVar(source, name)
        return None

    def _write_var(self, node: str, name: str):
        ir = self.cg.ir_by_node[node]
        if name in ir.globals_decl:
            return GlobalVar(ir.module, name)
        return NameVar(node, name)

    # -- main loop --

    def build(self, entries: list[EntryPoint]):
        for unit in self.project.units:
            if unit.tree is not None:
                self.activate_script(unit)
        for entry in entries:
            if entry.kind == "module_script":
                self.cg.entry_nodes.add(fe.script_key(entry.target))
            else:
                key = self.activate_function(entry.target)
                if key is not None:
                    self.cg.entry_nodes.add(key)
        changed = True
        guard = 0
        while changed:
            changed = False
            guard += 1
            if guard > 1000:
                raise GraphConstructionError("dataflow fixpoint failed to stabilize")
            for key in list(self._active):
                ir = self.cg.ir_by_node[key]
                for instr in ir.instructions:
                    if self._step(key, instr):
                        changed = True
                if self.dfg.flush():
                    changed = True
        self._audit()
        self.cg.compute_reachable()
        return self.cg, self.dfg

    # -- instruction interpretation --

    def _step(self, node: str, instr: Instr) -> bool:
        changed = False
        T = lambda idx: Temp(node, idx)
        if isinstance(instr, Const):
            if instr.kind is not None:
                obj = LiteralObj(Site(node, instr.span.line, instr.span.col), instr.kind)
                changed |= self.dfg.add_pts(T(instr.dest), {obj})
        elif isinstance(instr, Read):
            var = self._read_var(node, instr.name)
            if var is not None:
                changed |= self.dfg.add_flow(T(instr.dest), var)
            else:
                path = f"builtins.{instr.name}" if instr.name in fe._BUILTIN_NAMES else instr.name
                changed |= self.dfg.add_pts(T(instr.dest), {ExternalName(path)})
        elif isinstance(instr, Bind):
            changed |= self.dfg.add_flow(self._write_var(node, instr.name), T(instr.src))
        elif isinstance(instr, AttrRead):
            changed |= self._attr_read(node, instr)
        elif isinstance(instr, AttrWrite):
            for obj in list(self.dfg.pts(T(instr.obj))):
                if isinstance(obj, HEAPISH):
                    changed |= self.dfg.add_flow(FieldVar(obj, instr.attr), T(instr.src))
        elif isinstance(instr, SubRead):
            changed |= self._elem_read(node, instr.dest, instr.obj)
        elif isinstance(instr, SubWrite):
            for obj in list(self.dfg.pts(T(instr.obj))):
                if isinstance(obj, HEAPISH):
                    changed |= self.dfg.add_flow(FieldVar(obj, "elem"), T(instr.src))
        elif isinstance(instr, Build):
            obj = ContainerObj(Site(node, instr.span.line, instr.span.col), instr.ctype)
            changed |= self.dfg.add_pts(T(instr.dest), {obj})
            for elem in instr.elems:
                changed |= self.dfg.add_flow(FieldVar(obj, "elem"), T(elem))
        elif isinstance(instr, Iterate):
            changed |= self._elem_read(node, instr.dest, instr.src)
        elif isinstance(instr, Call):
            changed |= self._call(node, instr)
        elif isinstance(instr, MakeFunction):
            changed |= self.dfg.add_pts(T(instr.dest), {FuncObj(instr.fq)})
        elif isinstance(instr, MakeClass):
            changed |= self.dfg.add_pts(T(instr.dest), {ClassObj(instr.fq)})
        elif isinstance(instr, Decorate):
            changed |= self.dfg.add_flow(T(instr.dest), T(instr.func))
            for val in list(self.dfg.pts(T(instr.deco))):
                if isinstance(val, FuncObj):
                    changed |= self._bind_call(
                        node, instr.span, val.fq, instr.dest, [instr.func], [], None
                    )
        elif isinstance(instr, ImportName):
            changed |= self._import_value(node, instr)
        elif isinstance(instr, Merge):
            for src in instr.srcs:
                changed |= self.dfg.add_flow(T(instr.dest), T(src))
        elif isinstance(instr, Opaque):
            obj = OpaqueObj(Site(node, instr.span.line, instr.span.col), instr.reason)
            changed |= self.dfg.add_pts(T(instr.dest), {obj})
        # Return/Yield edges were added at activation.
        return changed

    def _elem_read(self, node: str, dest: int, src: int) -> bool:
        changed = False
        dvar = Temp(node, dest)
        for obj in list(self.dfg.pts(Temp(node, src))):
            if isinstance(obj, HEAPISH):
                changed |= self.dfg.add_flow(dvar, FieldVar(obj, "elem"))
            elif isinstance(obj, OpaqueObj):
                changed |= self.dfg.add_pts(dvar, {obj})
        return changed

    def _known_method(self, dvar, candidates, recv) -> bool:
        """Bind the first summarized method name; guessed names the summary
        database does not know would only manufacture unresolved sites."""
        for api in candidates:
            if api.count(".") < _MAX_API_DEPTH and self.db.knows(api):
                return self.dfg.add_pts(dvar, {LibraryMethodObj(api, recv)})
        return False

    def _attr_read(self, node: str, instr: AttrRead) -> bool:
        changed = False
        dvar = Temp(node, instr.dest)
        attr = instr.attr
        for obj in list(self.dfg.pts(Temp(node, instr.obj))):
            if isinstance(obj, InstanceObj):
                method, externals, _open = self.hierarchy.lookup(obj.cls, attr)
                if method is not None:
                    changed |= self.dfg.add_pts(dvar, {BoundMethodObj(method, obj)})
                else:
                    changed |= self._known_method(
                        dvar, [f"{ext}.{attr}" for ext in externals], obj
                    )
                changed |= self.dfg.add_flow(dvar, FieldVar(obj, attr))
            elif isinstance(obj, ClassObj):
                info = self.project.classes.get(obj.fq)
                if info is not None:
                    method, _ext, _open = self.hierarchy.lookup(obj.fq, attr)
                    if method is not None:
                        changed |= self.dfg.add_pts(dvar, {FuncObj(method)})
                nested = f"{obj.fq}.{attr}"
                if nested in self.project.classes:
                    changed |= self.dfg.add_pts(dvar, {ClassObj(nested)})
            elif isinstance(obj, SuperObj):
                for kind, base in self.hierarchy.bases_of(obj.cls):
                    if kind == "local":
                        method, externals, _open = self.hierarchy.lookup(base, attr)
                        if method is not None:
                            changed |= self.dfg.add_pts(
                                dvar, {BoundMethodObj(method, obj.recv)}
                            )
                        else:
                            changed |= self._known_method(
                                dvar, [f"{ext}.{attr}" for ext in externals], obj.recv
                            )
                    elif base:
                        changed |= self._known_method(dvar, [f"{base}.{attr}"], obj.recv)
            elif isinstance(obj, ContainerObj):
                if obj.ctype in ("list", "tuple", "set", "dict"):
                    changed |= self._known_method(dvar, [f"{obj.ctype}.{attr}"], obj)
                changed |= self.dfg.add_flow(dvar, FieldVar(obj, attr))
            elif isinstance(obj, LiteralObj):
                if obj.kind == "string":
                    changed |= self._known_method(dvar, [f"str.{attr}"], obj)
            elif isinstance(obj, TensorObj):
                fallback = "tf.Variable" if obj.tag == "tensor_like" else "tf.Tensor"
                changed |= self._known_method(
                    dvar, [f"{obj.api}.{attr}", f"{fallback}.{attr}", f"tf.Tensor.{attr}"], obj
                )
                changed |= self.dfg.add_flow(dvar, FieldVar(obj, attr))
            elif isinstance(obj, DatasetObj):
                changed |= self._known_method(
                    dvar, [f"{obj.api}.{attr}", f"tf.Dataset.{attr}"], obj
                )
                changed |= self.dfg.add_flow(dvar, FieldVar(obj, attr))
            elif isinstance(obj, LibraryObj):
                changed |= self._known_method(dvar, [f"{obj.api}.{attr}"], obj)
                changed |= self.dfg.add_flow(dvar, FieldVar(obj, attr))
            elif isinstance(obj, ExternalName):
                path = f"{obj.path}.{attr}"
                if path.count(".") < _MAX_API_DEPTH:
                    changed |= self.dfg.add_pts(dvar, {ExternalName(path)})
            elif isinstance(obj, ModuleObj):
                changed |= self._module_member(dvar, obj.module, attr)
            elif isinstance(obj, OpaqueObj):
                changed |= self.dfg.add_pts(dvar, {obj})
        return changed

    def _module_member(self, dvar, module: str, name: str) -> bool:
        unit = self.project.by_module.get(module)
        if unit is None:
            return False
        changed = False
        submodule = f"{module}.{name}"
        if submodule in self.project.by_module:
            changed |= self.dfg.add_pts(dvar, {ModuleObj(submodule)})
        if unit.top_defs.get(name) == "function":
            changed |= self.dfg.add_pts(dvar, {FuncObj(f"{module}.{name}")})
        elif unit.top_defs.get(name) == "class":
            changed |= self.dfg.add_pts(dvar, {ClassObj(f"{module}.{name}")})
        elif name in unit.top_assigned or name in unit.imports:
            changed |= self.dfg.add_flow(dvar, GlobalVar(module, name))
        return changed

    def _import_value(self, node: str, instr: ImportName) -> bool:
        target = instr.target
        dvar = Temp(node, instr.dest)
        unit, rest = self.resolver._split_module(target.split("."))
        if unit is None:
            return self.dfg.add_pts(dvar, {ExternalName(target)})
        if not rest:
            return self.dfg.add_pts(dvar, {ModuleObj(unit.module)})
        if len(rest) == 1:
            return self._module_member(dvar, unit.module, rest[0])
        return self.dfg.add_pts(dvar, {ExternalName(target)})

    # -- calls --

    def _call(self, node: str, instr: Call) -> bool:
        if instr.opaque_reason is not None:
            obj = OpaqueObj(Site(node, instr.span.line, instr.span.col), instr.opaque_reason)
            return self.dfg.add_pts(Temp(node, instr.dest), {obj})
        changed = False
        for val in list(self.dfg.pts(Temp(node, instr.callee))):
            changed |= self._dispatch(node, instr, val)
        return changed

    def _dispatch(self, node: str, instr: Call, val) -> bool:
        span = instr.span
        dest = instr.dest
        if isinstance(val, FuncObj):
            return self._bind_call(node, span, val.fq, dest, instr.args, instr.kwargs, None)
        if isinstance(val, BoundMethodObj):
            return self._bind_call(node, span, val.fq, dest, instr.args, instr.kwargs, val.recv)
        if isinstance(val, ClassObj):
            return self._construct(node, instr, val.fq)
        if isinstance(val, InstanceObj):
            method, externals, _open = self.hierarchy.lookup(val.cls, "__call__")
            if method is None:
                method, externals, _open = self.hierarchy.lookup(val.cls, "call")
            if method is not None:
                return self._bind_call(node, span, method, dest, instr.args, instr.kwargs, val)
            changed = False
            for ext in externals:
                changed |= self._external_call(node, instr, f"{ext}.__call__", recv=val)
            return changed
        if isinstance(val, ExternalName):
            return self._external_call(node, instr, val.path, recv=None)
        if isinstance(val, LibraryMethodObj):
            return self._external_call(node, instr, val.api, recv=val.recv)
        if isinstance(val, (TensorObj, DatasetObj, LibraryObj)):
            return self._external_call(node, instr, f"{val.api}.__call__", recv=val)
        return False  # literals, containers, opaque: audited as unresolved

    def _construct(self, node: str, instr: Call, cls_fq: str) -> bool:
        obj = InstanceObj(Site(node, instr.span.line, instr.span.col), cls_fq)
        changed = self.dfg.add_pts(Temp(node, instr.dest), {obj})
        init_fq, _externals, _open = self.hierarchy.lookup(cls_fq, "__init__")
        if init_fq is not None:
            changed |= self._bind_call(
                node, instr.span, init_fq, None, instr.args, instr.kwargs, obj
            )
        return changed

    def _bind_call(self, node, span, target_fq, dest, args, kwargs, recv) -> bool:
        if self.activate_function(target_fq) is None:
            return False
        changed = self.cg.add_edge(node, target_fq, span)
        fn = self.project.functions[target_fq]
        ir = self._ir_of_function(target_fq)
        params = fn.params
        if recv is not None and params:
            changed |= self.dfg.add_pts(NameVar(target_fq, params[0].name), {recv})
            params = params[1:]
        positional = [p for p in params if p.kind == "positional"]
        vararg = next((p for p in params if p.kind == "vararg"), None)
        kwarg = next((p for p in params if p.kind == "kwarg"), None)
        for i, arg in enumerate(args):
            if i < len(positional):
                pvar = NameVar(target_fq, positional[i].name)
            elif vararg is not None:
                pvar = NameVar(target_fq, vararg.name)
            else:
                break
            changed |= self.dfg.add_flow(pvar, Temp(node, arg))
        by_name = {p.name: p for p in params}
        for kw_name, kw_temp in kwargs:
            if kw_name in by_name:
                pvar = NameVar(target_fq, kw_name)
            elif kwarg is not None:
                pvar = NameVar(target_fq, kwarg.name)
            else:
                continue
            changed |= self.dfg.add_flow(pvar, Temp(node, kw_temp))
        if dest is not None:
            if ir.has_yield:
                changed |= self.dfg.add_pts(Temp(node, dest), {self._gen_container(target_fq)})
            else:
                changed |= self.dfg.add_flow(Temp(node, dest), RetVar(target_fq))
        return changed

    def _external_call(self, node: str, instr: Call, api: str, recv) -> bool:
        span = instr.span
        dvar = Temp(node, instr.dest)
        site = Site(node, span.line, span.col)
        if api in OPAQUE_CALL_NAMES:
            return self.dfg.add_pts(dvar, {OpaqueObj(site, api)})
        gen = su.lookup_generator(self.db, api)
        if gen is not None:
            if gen.kind == "dataset":
                obj = DatasetObj(site, gen.api)
                changed = self.dfg.add_pts(dvar, {obj})
                elem = TensorObj(site, gen.api, "dataset_element")
                changed |= self.dfg.add_pts(FieldVar(obj, "elem"), {elem})
            else:
                tag = "tensor_like" if gen.tensor_like else "tensor"
                obj = TensorObj(site, gen.api, tag)
                changed = self.dfg.add_pts(dvar, {obj})
                # Elements and slices of a tensor are tensors; seeding the
                # element variable keeps iteration flows path-witnessable.
                changed |= self.dfg.add_pts(FieldVar(obj, "elem"), {obj})
            self.dfg.gen_results[dvar] = obj
            return changed
        eff = su.lookup_effect(self.db, api)
        if eff is None:
            return False  # audited as unresolved
        changed = self._builtin_shortcut(node, instr, api, recv)
        if changed is None:
            changed = self.dfg.add_pts(dvar, {LibraryObj(site, api)})
            if isinstance(recv, (TensorObj, DatasetObj)):
                # Methods on tensors and datasets derive their result from
                # the receiver (batching, slicing, conversion and the like).
                changed |= self.dfg.add_pts(dvar, {recv})
        return changed

    def _builtin_shortcut(self, node: str, instr: Call, api: str, recv):
        """Container and constructor builtins with modeled dataflow.

        Returns None when the api has no special handling.
        """
        span = instr.span
        dvar = Temp(node, instr.dest)
        site = Site(node, span.line, span.col)
        if api in ("builtins.list", "builtins.tuple", "builtins.set", "builtins.sorted"):
            ctype = api.rsplit(".", 1)[-1]
            obj = ContainerObj(site, "list" if ctype == "sorted" else ctype)
            changed = self.dfg.add_pts(dvar, {obj})
            for arg in instr.args[:1]:
                changed |= self._elems_into(node, FieldVar(obj, "elem"), arg)
            return changed
        if api == "builtins.dict":
            return self.dfg.add_pts(dvar, {ContainerObj(site, "dict")})
        if api == "builtins.iter":
            changed = False
            for arg in instr.args[:1]:
                changed |= self.dfg.add_flow(dvar, Temp(node, arg))
            return changed
        if api == "builtins.next":
            changed = False
            for arg in instr.args[:1]:
                changed |= self._elems_into(node, dvar, arg)
            return changed
        if api in ("builtins.enumerate", "builtins.zip", "builtins.map", "builtins.filter"):
            obj = ContainerObj(site, "list")
            changed = self.dfg.add_pts(dvar, {obj})
            data_args = instr.args
            if api in ("builtins.map", "builtins.filter"):
                data_args = instr.args[1:]
                for fn_arg in instr.args[:1]:
                    for val in list(self.dfg.pts(Temp(node, fn_arg))):
                        if isinstance(val, FuncObj):
                            changed |= self._bind_callback(
                                node, span, val.fq, data_args, FieldVar(obj, "elem")
                            )
            for arg in data_args:
                changed |= self._elems_into(node, FieldVar(obj, "elem"), arg)
            return changed
        if api == "builtins.super":
            return self._super_call(node, instr)
        return None

    def _elems_into(self, node: str, dest_var, src_temp: int) -> bool:
        changed = False
        for obj in list(self.dfg.pts(Temp(node, src_temp))):
            if isinstance(obj, HEAPISH):
                changed |= self.dfg.add_flow(dest_var, FieldVar(obj, "elem"))
        return changed

    def _bind_callback(self, node, span, fq, data_args, result_var) -> bool:
        if self.activate_function(fq) is None:
            return False
        changed = self.cg.add_edge(node, fq, span)
        fn = self.project.functions[fq]
        positional = [p for p in fn.params if p.kind == "positional"]
        for p, arg in zip(positional, data_args):
            changed |= self._elems_into(node, NameVar(fq, p.name), arg)
        changed |= self.dfg.add_flow(result_var, RetVar(fq))
        return changed

    def _super_call(self, node: str, instr: Call) -> bool:
        changed = False
        dvar = Temp(node, instr.dest)
        cls_fqs: list[str] = []
        recvs: list = []
        if len(instr.args) >= 2:
            for val in self.dfg.pts(Temp(node, instr.args[0])):
                if isinstance(val, ClassObj):
                    cls_fqs.append(val.fq)
            recvs = [
                o for o in self.dfg.pts(Temp(node, instr.args[1]))
                if isinstance(o, InstanceObj)
            ]
        else:
            info = self.cg.nodes.get(node)
            fn = info.fn if info else None
            if fn is not None and fn.enclosing_class is not None:
                cls_fqs.append(fn.enclosing_class)
                if fn.params:
                    recvs = [
                        o for o in self.dfg.pts(NameVar(node, fn.params[0].name))
                        if isinstance(o, InstanceObj)
                    ]
        for cls_fq in cls_fqs:
            for recv in recvs:
                changed |= self.dfg.add_pts(dvar, {SuperObj(cls_fq, recv)})
        return changed

    # -- post-fixpoint audit --

    def _audit(self) -> None:
        """Classify unresolved call sites and library effects on final state."""
        for key in sorted(self._active):
            ir = self.cg.ir_by_node[key]
            for instr in ir.instructions:
                if not isinstance(instr, Call):
                    continue
                if instr.opaque_reason is not None:
                    self.cg.unresolved_sites.append((key, instr.span, instr.opaque_reason))
                    continue
                vals = self.dfg.pts(Temp(key, instr.callee))
                if not vals:
                    self.cg.unresolved_sites.append((key, instr.span, "unknown callee"))
                    continue
                # repr of the frozen value dataclasses is content-based, so
                # sorting keeps audit output independent of set order.
                for val in sorted(vals, key=repr):
                    self._audit_value(key, instr, val)

    def _audit_value(self, key: str, instr: Call, val) -> None:
        span = instr.span
        if isinstance(val, (FuncObj, BoundMethodObj, ModuleObj)):
            return
        if isinstance(val, ClassObj):
            init_fq, _ext, open_set = self.hierarchy.lookup(val.fq, "__init__")
            if init_fq is None and open_set:
                self.cg.unresolved_sites.append(
                    (key, span, f"constructor of {val.fq} with unresolved bases")
                )
            return
        if isinstance(val, InstanceObj):
            method, externals, _open = self.hierarchy.lookup(val.cls, "__call__")
            if method is None:
                method, externals, _open = self.hierarchy.lookup(val.cls, "call")
            if method is None:
                hit = False
                for ext in externals:
                    if self._audit_external(key, instr, f"{ext}.__call__", val, quiet=True):
                        hit = True
                if not hit:
                    self.cg.unresolved_sites.append(
                        (key, span, f"call on non-callable {val.cls}")
                    )
            return
        if isinstance(val, ExternalName):
            self._audit_external(key, instr, val.path, None)
            return
        if isinstance(val, LibraryMethodObj):
            self._audit_external(key, instr, val.api, val.recv)
            return
        if isinstance(val, (TensorObj, DatasetObj, LibraryObj)):
            self._audit_external(key, instr, f"{val.api}.__call__", val)
            return
        if isinstance(val, OpaqueObj):
            self.cg.unresolved_sites.append((key, instr.span, f"opaque callee ({val.reason})"))
            return
        if isinstance(val, SuperObj):
            self.cg.unresolved_sites.append((key, instr.span, "call on bare super()"))
            return
        self.cg.unresolved_sites.append(
            (key, instr.span, f"call on non-callable {type(val).__name__}")
        )

    def _audit_external(self, key: str, instr: Call, api: str, recv, quiet=False) -> bool:
        span = instr.span
        if api in OPAQUE_CALL_NAMES:
            self.cg.unresolved_sites.append((key, span, f"dynamic feature {api}"))
            return True
        gen = su.lookup_generator(self.db, api)
        if gen is not None:
            self.cg.library_calls.append(
                LibraryCallFact(key, span, gen.api, su.PURE, (), tuple(instr.args))
            )
            return True
        eff = su.lookup_effect(self.db, api)
        if eff is None:
            if not quiet:
                self.cg.unresolved_sites.append((key, span, f"unknown api {api}"))
            return False
        recv_objs: tuple = ()
        if eff.effect == su.MUTATES_RECEIVER:
            if recv is not None:
                recv_objs = (recv,)
            elif instr.args:
                recv_objs = tuple(self.dfg.pts(Temp(key, instr.args[0])))
        self.cg.library_calls.append(
            LibraryCallFact(key, span, eff.api, eff.effect, recv_objs, tuple(instr.args))
        )
        return True


def build_graphs(project: fe.ProjectModel, entries: list[EntryPoint], db: su.SummaryDb):
    """Fixpoint over every module script and each function reached from it."""
    engine = Engine(project, db)
    return engine.build(entries)
