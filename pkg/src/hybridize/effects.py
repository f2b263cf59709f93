"""Conservative ModRef side-effect analysis.

A function has a Python side effect iff its execution may modify heap state
it did not allocate: globals, objects reached through arguments (including
the receiver), or the synthetic external root standing in for console, file
and network channels.  Heap locations carry the call-graph node that
allocated them; writes whose allocator lies inside the function's own call
closure are exempt, even if the memory escapes.  Mod sets close
transitively over call edges, and unresolved call sites taint every caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import summaries as su
from .frontend import AttrRead, AttrWrite, Bind, Iterate, Read, Span, SubRead, SubWrite
from .graphs import (
    CallGraph, DataflowGraph, HEAPISH, NameVar, OpaqueObj, Temp,
)


class _ExternalRoot:
    """Single abstract location for console/file/network channels."""

    def __repr__(self):
        return "<external>"


EXTERNAL_ROOT = _ExternalRoot()


@dataclass(frozen=True)
class HeapLocation:
    base: object  # abstract object, ("global", module, name), or EXTERNAL_ROOT
    selector: Optional[str] = None  # field name, "elem", "*", or the api channel
    allocator: Optional[str] = None  # absent exactly for named roots / external

    @property
    def is_named_root(self) -> bool:
        return isinstance(self.base, tuple) and self.base and self.base[0] == "global"


@dataclass
class ModRefMap:
    mod: dict = field(default_factory=dict)  # node -> {(HeapLocation, Span, origin)}
    ref: dict = field(default_factory=dict)
    unknown_sites: dict = field(default_factory=dict)  # node -> [(Span, reason)]

    def mod_of(self, node: str) -> set:
        return self.mod.get(node, set())

    def ref_of(self, node: str) -> set:
        return self.ref.get(node, set())


@dataclass(frozen=True)
class EffectWitness:
    reason: str  # global_write | parameter_mutation | instance_field_write
    #            | effecting_builtin | unknown_callee
    node: str  # node containing the offending operation
    span: Span
    location: HeapLocation
    detail: str = ""


@dataclass
class SideEffectVerdict:
    function: str
    has_effects: bool
    witnesses: list[EffectWitness]


def _alloc_loc(obj, selector: str) -> HeapLocation:
    return HeapLocation(base=obj, selector=selector, allocator=obj.site.node)


def _direct_facts(cg: CallGraph, dfg: DataflowGraph, modref: ModRefMap) -> None:
    for node in sorted(cg.ir_by_node):
        ir = cg.ir_by_node[node]
        mods = modref.mod.setdefault(node, set())
        refs = modref.ref.setdefault(node, set())
        for instr in ir.instructions:
            if isinstance(instr, AttrWrite):
                targets = dfg.pts(Temp(node, instr.obj))
                hit = False
                for obj in targets:
                    if isinstance(obj, HEAPISH):
                        mods.add((_alloc_loc(obj, instr.attr), instr.span, node))
                        hit = True
                if not hit and any(isinstance(o, OpaqueObj) for o in targets):
                    mods.add((HeapLocation(EXTERNAL_ROOT, "opaque write"), instr.span, node))
            elif isinstance(instr, SubWrite):
                for obj in dfg.pts(Temp(node, instr.obj)):
                    if isinstance(obj, HEAPISH):
                        mods.add((_alloc_loc(obj, "elem"), instr.span, node))
            elif isinstance(instr, Bind):
                if instr.name in ir.globals_decl:
                    loc = HeapLocation(("global", ir.module, instr.name))
                    mods.add((loc, instr.span, node))
            elif isinstance(instr, Read):
                if instr.name in ir.globals_decl:
                    loc = HeapLocation(("global", ir.module, instr.name))
                    refs.add((loc, instr.span, node))
            elif isinstance(instr, AttrRead):
                for obj in dfg.pts(Temp(node, instr.obj)):
                    if isinstance(obj, HEAPISH):
                        refs.add((_alloc_loc(obj, instr.attr), instr.span, node))
            elif isinstance(instr, SubRead):
                for obj in dfg.pts(Temp(node, instr.obj)):
                    if isinstance(obj, HEAPISH):
                        refs.add((_alloc_loc(obj, "elem"), instr.span, node))
            elif isinstance(instr, Iterate):
                for obj in dfg.pts(Temp(node, instr.src)):
                    if isinstance(obj, HEAPISH):
                        refs.add((_alloc_loc(obj, "elem"), instr.span, node))
    for fact in cg.library_calls:
        mods = modref.mod.setdefault(fact.node, set())
        if fact.effect == su.EXTERNAL:
            mods.add((HeapLocation(EXTERNAL_ROOT, fact.api), fact.span, fact.node))
        elif fact.effect == su.MUTATES_RECEIVER:
            for obj in fact.recv_objs:
                if isinstance(obj, HEAPISH):
                    mods.add((_alloc_loc(obj, "*"), fact.span, fact.node))
    for node, span, reason in cg.unresolved_sites:
        modref.unknown_sites.setdefault(node, []).append((span, reason))


def compute_mod_ref(cg: CallGraph, dfg: DataflowGraph, db: su.SummaryDb) -> ModRefMap:
    """Direct write/read facts per node, closed transitively over calls:
    a node's mod set includes its resolved callees' mod sets."""
    modref = ModRefMap()
    _direct_facts(cg, dfg, modref)
    changed = True
    while changed:
        changed = False
        for caller in sorted(cg.succ):
            cur = modref.mod.setdefault(caller, set())
            before = len(cur)
            for callee in cg.succ[caller]:
                cur.update(modref.mod.get(callee, ()))
            if len(cur) != before:
                changed = True
    return modref


def side_effect_verdict(fn, modref: ModRefMap, cg: CallGraph, dfg: DataflowGraph) -> SideEffectVerdict:
    """Writes to locations allocated outside the function's call closure,
    to named roots, or to the external root; unknown callees taint."""
    key = fn if isinstance(fn, str) else fn.fq
    fn_unit = None if isinstance(fn, str) else fn
    closure = cg.closure(key)
    receiver_objs: set = set()
    param_objs: set = set()
    if fn_unit is not None:
        for param in fn_unit.params:
            objs = dfg.pts(NameVar(key, param.name))
            if param.is_implicit_receiver:
                receiver_objs |= set(objs)
            else:
                param_objs |= set(objs)
    witnesses: list[EffectWitness] = []
    for loc, span, origin in sorted(
        modref.mod_of(key),
        key=lambda w: (w[2], w[1].line, w[1].col, str(w[0].selector), repr(w[0].base)),
    ):
        if loc.base is EXTERNAL_ROOT:
            witnesses.append(
                EffectWitness("effecting_builtin", origin, span, loc, loc.selector or "")
            )
        elif loc.is_named_root:
            witnesses.append(
                EffectWitness("global_write", origin, span, loc, ".".join(loc.base[1:]))
            )
        else:
            if loc.allocator in closure:
                continue  # own allocation; escape is exempt
            if loc.base in receiver_objs:
                reason = "instance_field_write"
            elif loc.base in param_objs:
                reason = "parameter_mutation"
            else:
                reason = "global_write"
            witnesses.append(EffectWitness(reason, origin, span, loc, loc.selector or ""))
    for node in sorted(closure):
        for span, reason in modref.unknown_sites.get(node, ()):
            witnesses.append(
                EffectWitness("unknown_callee", node, span, HeapLocation(EXTERNAL_ROOT), reason)
            )
    return SideEffectVerdict(function=key, has_effects=bool(witnesses), witnesses=witnesses)
