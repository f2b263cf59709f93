"""Minimal source edits for the refactoring plan.

Each actionable verdict becomes one decorator edit anchored by original
file position, plus at most one import insertion per file when no usable
tensorflow import exists.  Edits apply in descending position order so
earlier anchors stay valid, and every byte outside the edit spans is
preserved.  Output is either rewritten file text or a standard unified
diff.
"""

from __future__ import annotations

import ast
import difflib
from dataclasses import dataclass, field
from typing import Optional

from . import frontend as fe
from .refactor import HYBRIDIZE, RefactoringPlan

INSERT_DECORATOR = "insert_decorator"
REMOVE_DECORATOR = "remove_decorator"
INSERT_IMPORT = "insert_import"

_APPLY_ORDER = {REMOVE_DECORATOR: 0, INSERT_DECORATOR: 1, INSERT_IMPORT: 2}


class EditConflictError(Exception):
    """Raised when edits overlap; the script would corrupt the file."""


@dataclass
class Edit:
    file: str  # path relative to the project root
    kind: str
    line: int  # 1-based anchor; inserts go before this line
    end_line: int = 0  # last removed line (inclusive), removals only
    text: str = ""  # exact inserted text, newline included


@dataclass
class EditScript:
    edits: list[Edit] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)  # stale-target notes

    def by_file(self) -> dict[str, list[Edit]]:
        out: dict[str, list[Edit]] = {}
        for edit in self.edits:
            out.setdefault(edit.file, []).append(edit)
        return out


def _detect_eol(text: str) -> str:
    return "\r\n" if "\r\n" in text else "\n"


def _indent_of(line: str) -> str:
    return line[: len(line) - len(line.lstrip(" \t"))]


def hybrid_spelling(unit: fe.SourceUnit) -> tuple[str, bool]:
    """Decorator spelling for this file, reusing an existing tensorflow
    import when present; (spelling, needs_new_import)."""
    direct: list[str] = []
    for bound, target in sorted(unit.imports.items()):
        if target == "tensorflow":
            direct.append(f"{bound}.function")
        elif target in ("tensorflow.function", "tensorflow.compat.v2.function"):
            direct.append(bound)
        elif target == "tensorflow.compat.v2":
            direct.append(f"{bound}.function")
    if "tf.function" in direct:
        return "tf.function", False
    if direct:
        return direct[0], False
    return "tf.function", True


def _import_anchor(unit: fe.SourceUnit) -> int:
    """First line of the import block: after the module docstring and any
    `from __future__ import ...` lines."""
    line = 1
    if unit.tree is None or not unit.tree.body:
        return line
    body = unit.tree.body
    idx = 0
    first = body[0]
    if isinstance(first, ast.Expr) and isinstance(first.value, ast.Constant) and isinstance(
        first.value.value, str
    ):
        line = (first.end_lineno or first.lineno) + 1
        idx = 1
    while idx < len(body):
        node = body[idx]
        if isinstance(node, ast.ImportFrom) and node.module == "__future__":
            line = (node.end_lineno or node.lineno) + 1
            idx += 1
        else:
            break
    return line


def apply_plan(plan: RefactoringPlan, project: fe.ProjectModel) -> EditScript:
    """Hybridize: one decorator line directly above the target (outermost
    when other decorators exist) plus an import when needed.  De-hybridize:
    remove the recognized decorator's full line span."""
    script = EditScript()
    units_by_rel = {u.rel_path: u for u in project.units}
    for rel_path in sorted(plan.edits_by_file):
        unit = units_by_rel.get(rel_path)
        if unit is None or unit.tree is None:
            script.failed.append(f"{rel_path}: file no longer analyzable")
            continue
        lines = unit.text.splitlines(keepends=True)
        eol = _detect_eol(unit.text)
        spelling, needs_import = hybrid_spelling(unit)
        want_import = False
        file_edits: list[Edit] = []
        for verdict, fn in plan.edits_by_file[rel_path]:
            if project.functions.get(fn.fq) is not fn:
                script.failed.append(f"{fn.fq}: function vanished before edit")
                continue
            if verdict.action == HYBRIDIZE:
                anchor = fn.location.line
                if fn.decorators:
                    anchor = min(d.span.line for d in fn.decorators)
                def_line = lines[fn.location.line - 1] if fn.location.line <= len(lines) else ""
                indent = _indent_of(def_line)
                file_edits.append(
                    Edit(rel_path, INSERT_DECORATOR, anchor, text=f"{indent}@{spelling}{eol}")
                )
                if needs_import:
                    want_import = True
            else:
                span = verdict.exe.hybrid_decorator_span
                if span is None:
                    script.failed.append(f"{fn.fq}: hybrid decorator not found")
                    continue
                file_edits.append(Edit(rel_path, REMOVE_DECORATOR, span.line, span.end_line))
        if want_import:
            file_edits.append(
                Edit(rel_path, INSERT_IMPORT, _import_anchor(unit), text=f"import tensorflow as tf{eol}")
            )
        script.edits.extend(file_edits)
    script.edits.sort(key=lambda e: (e.file, -e.line, _APPLY_ORDER[e.kind]))
    _check_overlaps(script)
    return script


def _check_overlaps(script: EditScript) -> None:
    removals: dict[str, list[tuple[int, int]]] = {}
    for edit in script.edits:
        if edit.kind == REMOVE_DECORATOR:
            removals.setdefault(edit.file, []).append((edit.line, edit.end_line))
    for edit in script.edits:
        for start, end in removals.get(edit.file, ()):
            if edit.kind == REMOVE_DECORATOR and (edit.line, edit.end_line) == (start, end):
                continue
            # Inserting exactly at a removal's start lands before the removed
            # block and is safe; anything inside the span is a conflict.
            if start < edit.line <= end:
                raise EditConflictError(
                    f"{edit.file}: edit at line {edit.line} overlaps removal {start}-{end}"
                )


def apply_edits_to_text(text: str, edits: list[Edit]) -> str:
    """Apply one file's edits in descending-position order."""
    lines = text.splitlines(keepends=True)
    for edit in sorted(edits, key=lambda e: (-e.line, _APPLY_ORDER[e.kind])):
        if edit.kind == REMOVE_DECORATOR:
            del lines[edit.line - 1: edit.end_line]
        else:
            lines.insert(edit.line - 1, edit.text)
    return "".join(lines)


def rewritten_files(script: EditScript, project: fe.ProjectModel) -> dict[str, str]:
    units_by_rel = {u.rel_path: u for u in project.units}
    out: dict[str, str] = {}
    for rel_path, edits in sorted(script.by_file().items()):
        unit = units_by_rel[rel_path]
        out[rel_path] = apply_edits_to_text(unit.text, edits)
    return out


def render_diff(script: EditScript, project: fe.ProjectModel) -> str:
    """Unified diff (3 context lines) per edited file, in path order."""
    units_by_rel = {u.rel_path: u for u in project.units}
    chunks: list[str] = []
    for rel_path, new_text in sorted(rewritten_files(script, project).items()):
        old_text = units_by_rel[rel_path].text
        diff = difflib.unified_diff(
            old_text.splitlines(keepends=True),
            new_text.splitlines(keepends=True),
            fromfile=f"a/{rel_path}",
            tofile=f"b/{rel_path}",
            n=3,
        )
        chunks.append("".join(diff))
    return "".join(chunks)


def write_files(script: EditScript, project: fe.ProjectModel) -> list[str]:
    """In-place rewrite; returns the relative paths written."""
    units_by_rel = {u.rel_path: u for u in project.units}
    written: list[str] = []
    for rel_path, new_text in sorted(rewritten_files(script, project).items()):
        unit = units_by_rel[rel_path]
        with open(unit.path, "w", encoding="utf-8", newline="") as fh:
            fh.write(new_text)
        written.append(rel_path)
    return written
