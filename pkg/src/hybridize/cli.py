"""Command-line driver: parse, analyze, plan, edit, report.

Usage: `hybridize analyze <root> [flags]`.  Prints a unified diff to stdout
(or rewrites files with --apply) and optionally emits a JSON report with
one record per candidate function plus the assumptions the speculative
analysis made.  Exit codes: 0 success (with or without edits), 1 fatal
configuration problem, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import effects as ef
from . import frontend as fe
from . import graphs as gr
from . import inference as inf
from . import refactor as rf
from . import summaries as su
from . import transform as tr


@dataclass
class ToolConfig:
    consider_booleans: bool = False
    speculative: bool = True
    follow_type_hints: bool = True
    pytest_entry_points: bool = True
    apply: bool = False
    summary_paths: list = field(default_factory=list)
    report_path: str = ""
    dump_callgraph: str = ""


class InternalInvariantError(Exception):
    """A consistency check on our own outputs failed."""


@dataclass
class FunctionAnalysis:
    fn: fe.FunctionUnit
    mode: rf.ExecutionMode
    reachable: bool
    recursive: bool
    tensor_evidence: list
    literal_evidence: list
    assumption: object
    se: ef.SideEffectVerdict
    verdict: rf.PreconditionVerdict


@dataclass
class PipelineResult:
    project: fe.ProjectModel
    config: ToolConfig
    entries: list
    cg: gr.CallGraph
    dfg: gr.DataflowGraph
    analyses: list[FunctionAnalysis]
    plan: rf.RefactoringPlan
    script: tr.EditScript
    diff: str
    report: dict


def analyze_project(root, config: ToolConfig) -> PipelineResult:
    """The whole pipeline on one project root; pure apart from file reads."""
    project = fe.parse_project(root, config)
    db = su.load_summaries(config.summary_paths)
    resolver = fe.NameResolver(project, db)
    hierarchy = gr.Hierarchy(project, resolver)
    entries = gr.discover_entry_points(project, config)
    cg, dfg = gr.build_graphs(project, entries, db)
    modref = ef.compute_mod_ref(cg, dfg, db)
    graphs = (cg, dfg)

    analyses: list[FunctionAnalysis] = []
    for fn in rf.candidate_functions(project):
        mode = rf.classify_execution_mode(fn, resolver)
        reachable = gr.is_reachable(cg, fn.fq)
        recursive = gr.is_recursive(cg, fn.fq) if reachable else False
        tensor_evidence: list = []
        assumption = None
        literal_evidence: list = []
        if reachable:
            tensor_evidence = inf.infer_tensor_params(fn, graphs, db, config)
            literal_evidence = inf.infer_literal_args(fn, graphs, config)
        if config.follow_type_hints:
            tensor_evidence = tensor_evidence + inf.infer_hint_evidence(fn, resolver, db, config)
        if config.speculative and not tensor_evidence:
            guess = inf.speculative_guess(fn, project, db, hierarchy)
            if guess is not None:
                tensor_evidence, assumption = guess
        se = ef.side_effect_verdict(fn, modref, cg, dfg)
        verdict = rf.check_preconditions(
            fn, mode, tensor_evidence, literal_evidence, se, recursive, reachable
        )
        analyses.append(
            FunctionAnalysis(
                fn=fn,
                mode=mode,
                reachable=reachable,
                recursive=recursive,
                tensor_evidence=tensor_evidence,
                literal_evidence=literal_evidence,
                assumption=assumption,
                se=se,
                verdict=verdict,
            )
        )

    plan = rf.plan_project(project, [a.verdict for a in analyses])
    script = tr.apply_plan(plan, project)
    diff = tr.render_diff(script, project)
    report = build_report(project, config, analyses, plan, script, cg)
    _check_invariants(report, plan, script, diff)
    return PipelineResult(
        project=project,
        config=config,
        entries=entries,
        cg=cg,
        dfg=dfg,
        analyses=analyses,
        plan=plan,
        script=script,
        diff=diff,
        report=report,
    )


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


def _node_file(project: fe.ProjectModel, node: str) -> str:
    module = node.split(":", 1)[0]
    fn = project.functions.get(node)
    if fn is not None:
        return fn.unit.rel_path
    unit = project.by_module.get(module)
    if unit is None and "." in module:
        unit = project.by_module.get(node.rsplit(".", 1)[0])
    return unit.rel_path if unit is not None else module


def _site_str(project, node, line) -> str:
    return f"{_node_file(project, node)}:{line}"


def build_report(project, config, analyses, plan, script, cg) -> dict:
    functions = []
    assumptions = []
    rule_counts = {"P1": 0, "P2": 0, "P3": 0}
    failure_counts = {"F1": 0, "F2": 0, "F3": 0, "F4": 0}
    refactorable = 0
    for a in analyses:
        v = a.verdict
        if v.rule:
            rule_counts[v.rule] += 1
        for f in v.failures:
            failure_counts[f] += 1
        if v.action != rf.NONE:
            refactorable += 1
        tens_witnesses = sorted(
            {
                f"{_site_str(project, w.node, w.line)} {w.api} ({w.via})"
                for ev in a.tensor_evidence
                for w in ev.witnesses
            }
        )
        tens_kinds = sorted({k for ev in a.tensor_evidence for k in ev.kinds})
        lit_kinds = sorted({k for ev in a.literal_evidence for k in ev.literal_kinds})
        lit_sites = sorted(
            {_site_str(project, n, line) for ev in a.literal_evidence for (n, line, _c) in ev.call_sites}
        )
        se_witnesses = [
            {
                "reason": w.reason,
                "where": _site_str(project, w.node, w.span.line),
                "detail": w.detail,
            }
            for w in a.se.witnesses
        ]
        notes = list(a.mode.notes)
        if v.action == rf.HYBRIDIZE and a.fn.decorators:
            notes.append(
                f"decorator inserted outermost, above {len(a.fn.decorators)} existing decorator(s)"
            )
        functions.append(
            {
                "fq_name": a.fn.fq,
                "file": a.fn.unit.rel_path,
                "line": a.fn.location.line,
                "exe": a.mode.mode,
                "tens": v.tens,
                "tens_kinds": tens_kinds,
                "tens_witnesses": tens_witnesses,
                "lit": v.lit,
                "lit_kinds": lit_kinds,
                "lit_call_sites": lit_sites,
                "se": v.se,
                "se_witnesses": se_witnesses,
                "rec": v.rec,
                "rule": v.rule,
                "action": v.action,
                "failures": sorted(v.failures),
                "warnings": sorted(v.warnings),
                "notes": notes,
            }
        )
        if a.assumption is not None:
            assumptions.append(
                {
                    "function": a.assumption.function,
                    "basis": a.assumption.basis,
                    "detail": a.assumption.detail,
                    "file": a.fn.unit.rel_path,
                    "line": a.assumption.line,
                }
            )
    functions.sort(key=lambda r: (r["file"], r["line"], r["fq_name"]))
    parse_failures = [
        {"file": u.rel_path, "error": u.error} for u in project.units if u.error
    ]
    report = {
        "version": __version__,
        "config": {
            "consider_booleans": config.consider_booleans,
            "speculative": config.speculative,
            "follow_type_hints": config.follow_type_hints,
            "pytest_entry_points": config.pytest_entry_points,
            "apply": config.apply,
            "summary_paths": [str(p) for p in config.summary_paths],
        },
        "functions": functions,
        "assumptions": assumptions,
        "summary": {
            "candidates": len(analyses),
            "refactorable": refactorable,
            "rules": rule_counts,
            "failures": failure_counts,
            "edits": len(script.edits),
            "parse_failures": parse_failures,
        },
    }
    return report


def _check_invariants(report, plan, script, diff) -> None:
    refactorable = sum(1 for r in report["functions"] if r["action"] != rf.NONE)
    if refactorable != report["summary"]["refactorable"]:
        raise InternalInvariantError("refactorable counter does not match records")
    decorator_edits = [e for e in script.edits if e.kind != tr.INSERT_IMPORT]
    if len(plan.actionable()) != len(decorator_edits) + len(
        [f for f in script.failed if "vanished" in f or "not found" in f]
    ):
        raise InternalInvariantError("plan actions and decorator edits disagree")
    for record in report["functions"]:
        if record["rule"] and record["action"] == rf.NONE:
            raise InternalInvariantError("matched rule without an action")


def emit_report(report: dict, path) -> None:
    """Serialize with stable key order; records are pre-sorted."""
    text = json.dumps(report, indent=2, sort_keys=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridize",
        description="Decide per function whether the graph-execution decorator "
        "should be added or removed, and emit the edits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    analyze = sub.add_parser("analyze", help="analyze a project root")
    analyze.add_argument("root", help="directory of .py files to analyze")
    analyze.add_argument("--consider-booleans", action="store_true",
                         help="count boolean literals during literal inference")
    analyze.add_argument("--no-speculative", action="store_true",
                         help="disable the keyword/context fallback")
    analyze.add_argument("--no-type-hints", action="store_true",
                         help="ignore parameter type hints")
    analyze.add_argument("--no-pytest-entrypoints", action="store_true",
                         help="do not treat test functions as entry points")
    analyze.add_argument("--apply", action="store_true",
                         help="rewrite files in place instead of printing a diff")
    analyze.add_argument("--report", metavar="PATH", default="",
                         help="write the JSON analysis report here")
    analyze.add_argument("--summaries", metavar="PATH", action="append", default=[],
                         help="extra summary files merged over the defaults")
    analyze.add_argument("--dump-callgraph", metavar="PATH", default="",
                         help="write the call graph in DOT format")
    return parser


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config = ToolConfig(
        consider_booleans=args.consider_booleans,
        speculative=not args.no_speculative,
        follow_type_hints=not args.no_type_hints,
        pytest_entry_points=not args.no_pytest_entrypoints,
        apply=args.apply,
        summary_paths=list(args.summaries),
        report_path=args.report,
        dump_callgraph=args.dump_callgraph,
    )
    try:
        result = analyze_project(args.root, config)
    except (fe.ProjectError, su.SummaryLoadError, FileNotFoundError) as exc:
        print(f"hybridize: error: {exc}", file=sys.stderr)
        return 1
    except (InternalInvariantError, tr.EditConflictError, gr.GraphConstructionError) as exc:
        print(f"hybridize: internal error: {exc}", file=sys.stderr)
        return 2
    for note in result.script.failed:
        print(f"hybridize: warning: {note}", file=sys.stderr)
    if config.apply:
        written = tr.write_files(result.script, result.project)
        for rel in written:
            print(f"rewrote {rel}")
    else:
        sys.stdout.write(result.diff)
    if config.dump_callgraph:
        try:
            Path(config.dump_callgraph).write_text(result.cg.to_dot(), encoding="utf-8")
        except OSError as exc:
            print(f"hybridize: error: {exc}", file=sys.stderr)
            return 1
    if config.report_path:
        try:
            emit_report(result.report, config.report_path)
        except OSError as exc:
            print(f"hybridize: error: {exc}", file=sys.stderr)
            return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
