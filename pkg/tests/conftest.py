"""Shared helpers: build throwaway projects and run the pipeline on them."""

from pathlib import Path

import pytest

from hybridize.cli import ToolConfig, analyze_project

FIXTURES = Path(__file__).parent / "fixtures"


def make_project(tmp_path, files: dict) -> Path:
    root = tmp_path / "proj"
    for rel, text in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    root.mkdir(exist_ok=True)
    return root


def analyze(root, **overrides):
    config = ToolConfig(**overrides)
    return analyze_project(root, config)


@pytest.fixture
def project_dir(tmp_path):
    def build(files: dict) -> Path:
        return make_project(tmp_path, files)

    return build


def record_for(result, fq: str) -> dict:
    for rec in result.report["functions"]:
        if rec["fq_name"] == fq:
            return rec
    raise AssertionError(f"no report record for {fq}")


def verdict_for(result, fq: str):
    for analysis in result.analyses:
        if analysis.fn.fq == fq:
            return analysis
    raise AssertionError(f"no analysis for {fq}")
