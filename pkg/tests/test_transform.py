"""Edit scripts, diff rendering, byte minimality, and tree preservation."""

import ast
import re

import pytest

from hybridize import transform as tr
from conftest import FIXTURES, analyze, make_project


def pipeline(tmp_path, files, **overrides):
    return analyze(make_project(tmp_path, files), **overrides)


def apply_unified_diff(original: str, diff: str) -> str:
    """Tiny independent patch interpreter used as a diff oracle."""
    lines = original.splitlines(keepends=True)
    out = []
    cursor = 0
    for hunk in re.finditer(r"@@ -(\d+)(?:,(\d+))? \+\d+(?:,\d+)? @@\n((?:[ +\-].*\n?)*)", diff):
        start = int(hunk.group(1))
        body = hunk.group(3).splitlines(keepends=True)
        out.extend(lines[cursor: start - 1])
        cursor = start - 1
        for entry in body:
            tag, content = entry[0], entry[1:]
            if tag == " ":
                out.append(content)
                cursor += 1
            elif tag == "-":
                cursor += 1
            elif tag == "+":
                out.append(content)
    out.extend(lines[cursor:])
    return "".join(out)


# ---------------------------------------------------------------------------
# Golden diffs
# ---------------------------------------------------------------------------

LISTING2_DIFF = (
    "--- a/model.py\n"
    "+++ b/model.py\n"
    "@@ -1,3 +1,4 @@\n"
    "+import tensorflow as tf\n"
    " class SequentialModel(Model):\n"
    "     def __init__(self, **kwargs):\n"
    "         super(SequentialModel, self).__init__(...)\n"
    "@@ -7,6 +8,7 @@\n"
    "         self.dropout = Dropout(0.2)\n"
    "         self.dense_2 = layers.Dense(10)\n"
    " \n"
    "+    @tf.function\n"
    "     def __call__(self, x):\n"
    "         x = self.flatten(x)\n"
    "         for layer in self.layers:\n"
)

LISTING5_DIFF = (
    "--- a/train.py\n"
    "+++ b/train.py\n"
    "@@ -2,7 +2,6 @@\n"
    "     pass\n"
    " \n"
    " \n"
    "-@tf.function\n"
    " def train(num_steps):\n"
    "     for _ in tf.range(num_steps):\n"
    "         train_one_step()\n"
)


def test_listing2_diff_is_byte_exact():
    result = analyze(FIXTURES / "listing2")
    assert result.diff == LISTING2_DIFF


def test_listing5_diff_removes_decorator_line():
    result = analyze(FIXTURES / "listing5")
    assert result.diff == LISTING5_DIFF


def test_zero_actionable_verdicts_empty_script():
    result = analyze(FIXTURES / "listing3")
    assert result.script.edits == []
    assert result.diff == ""


# ---------------------------------------------------------------------------
# Alias reuse on insertion
# ---------------------------------------------------------------------------

BODY = "def f(t):\n    return t\nf(tf.ones(1))\n"

ALIAS_REUSE_CASES = [
    ("import tensorflow as tff\n" + BODY.replace("tf.ones", "tff.ones"), "@tff.function", False),
    ("import tensorflow\n" + BODY.replace("tf.ones", "tensorflow.ones"), "@tensorflow.function", False),
    (
        "from tensorflow import function as graphed\nimport tensorflow as tf\n" + BODY,
        "@tf.function",
        False,
    ),
    (BODY, "@tf.function", True),  # no import anywhere: insert one
]


@pytest.mark.parametrize("source,decorator,expect_import", ALIAS_REUSE_CASES)
def test_alias_reuse(tmp_path, source, decorator, expect_import):
    result = pipeline(tmp_path, {"m.py": source})
    kinds = [e.kind for e in result.script.edits]
    assert kinds.count(tr.INSERT_DECORATOR) == 1
    dec = next(e for e in result.script.edits if e.kind == tr.INSERT_DECORATOR)
    assert dec.text.strip() == decorator
    assert (tr.INSERT_IMPORT in kinds) is expect_import


def test_import_goes_after_docstring_and_future(tmp_path):
    source = (
        '"""Module docstring."""\n'
        "from __future__ import annotations\n"
        "def f(t):\n"
        "    return t\n"
        "f(tf.ones(1))\n"
    )
    result = pipeline(tmp_path, {"m.py": source})
    imp = next(e for e in result.script.edits if e.kind == tr.INSERT_IMPORT)
    assert imp.line == 3
    new_text = tr.rewritten_files(result.script, result.project)["m.py"]
    lines = new_text.splitlines()
    assert lines[0] == '"""Module docstring."""'
    assert lines[1] == "from __future__ import annotations"
    assert lines[2] == "import tensorflow as tf"


# ---------------------------------------------------------------------------
# Application mechanics
# ---------------------------------------------------------------------------


def test_diff_reapplies_cleanly_with_independent_patcher(tmp_path):
    files = {
        "m.py": (
            "import tensorflow as tf\n"
            "def first(t):\n"
            "    return t\n"
            "\n"
            "\n"
            "def second(t):\n"
            "    return t\n"
            "\n"
            "\n"
            "first(tf.ones(1))\n"
            "second(tf.ones(1))\n"
        )
    }
    result = pipeline(tmp_path, files)
    assert len([e for e in result.script.edits if e.kind == tr.INSERT_DECORATOR]) == 2
    original = result.project.by_module["m"].text
    expected = tr.rewritten_files(result.script, result.project)["m.py"]
    assert apply_unified_diff(original, result.diff) == expected


def test_byte_minimality_outside_edit_lines(tmp_path):
    result = analyze(FIXTURES / "listing2")
    original = result.project.by_module["model"].text.splitlines(keepends=True)
    new = tr.rewritten_files(result.script, result.project)["model.py"].splitlines(keepends=True)
    inserted = {e.text for e in result.script.edits}
    assert [l for l in new if l not in inserted] == original


def test_multiline_call_form_decorator_removed_fully(tmp_path):
    source = (
        "import tensorflow as tf\n"
        "@tf.function(\n"
        "    reduce_retracing=True,\n"
        ")\n"
        "def add(a, b):\n"
        "    return a + b\n"
        "add(1, 2)\n"
    )
    result = pipeline(tmp_path, {"m.py": source})
    new_text = tr.rewritten_files(result.script, result.project)["m.py"]
    assert "tf.function" not in new_text.replace("import tensorflow as tf", "")
    assert "reduce_retracing" not in new_text
    assert "def add(a, b):" in new_text


def test_crlf_line_endings_matched(tmp_path):
    source = "def f(t):\r\n    return t\r\nf(tf.ones(1))\r\n"
    result = pipeline(tmp_path, {"m.py": source})
    for edit in result.script.edits:
        assert edit.text.endswith("\r\n")
    new_text = tr.rewritten_files(result.script, result.project)["m.py"]
    assert "\r\n" in new_text
    assert "@tf.function\r\n" in new_text


def test_tab_indentation_matched(tmp_path):
    source = (
        "import tensorflow as tf\n"
        "class C:\n"
        "\tdef run(self, t):\n"
        "\t\treturn t\n"
        "c = C()\n"
        "c.run(tf.ones(1))\n"
    )
    result = pipeline(tmp_path, {"m.py": source})
    dec = next(e for e in result.script.edits if e.kind == tr.INSERT_DECORATOR)
    assert dec.text == "\t@tf.function\n"


def test_inserted_decorator_is_outermost(tmp_path):
    source = (
        "import tensorflow as tf\n"
        "def passthrough(fn):\n"
        "    return fn\n"
        "@passthrough\n"
        "def f(t):\n"
        "    return t\n"
        "f(tf.ones(1))\n"
    )
    result = pipeline(tmp_path, {"m.py": source})
    new_text = tr.rewritten_files(result.script, result.project)["m.py"]
    lines = new_text.splitlines()
    idx = lines.index("@tf.function")
    assert lines[idx + 1] == "@passthrough"
    assert lines[idx + 2].startswith("def f")
    record = next(r for r in result.report["functions"] if r["fq_name"] == "m.f")
    assert any("outermost" in note for note in record["notes"])


def test_stale_plan_target_skipped_with_note(tmp_path):
    import copy

    result = pipeline(
        tmp_path,
        {"m.py": "import tensorflow as tf\ndef f(t):\n    return t\nf(tf.ones(1))\n"},
    )
    # Simulate the function changing between analysis and edit application.
    stale = copy.copy(result.project.functions["m.f"])
    result.project.functions["m.f"] = stale
    script = tr.apply_plan(result.plan, result.project)
    assert script.edits == []
    assert any("vanished" in note for note in script.failed)


# ---------------------------------------------------------------------------
# Tree preservation and idempotence
# ---------------------------------------------------------------------------


def strip_decorator_and_import(tree: ast.Module, fq_names, drop_import: bool):
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)) and node.name in fq_names:
            node.decorator_list = [
                d
                for d in node.decorator_list
                if not ("tf" in ast.dump(d) and "function" in ast.dump(d))
            ]
    if drop_import:
        tree.body = [
            n
            for n in tree.body
            if not (
                isinstance(n, ast.Import)
                and len(n.names) == 1
                and n.names[0].name == "tensorflow"
                and n.names[0].asname == "tf"
            )
        ]
    return tree


def test_tree_preservation_on_insertion(tmp_path):
    result = analyze(FIXTURES / "listing2")
    original = ast.parse(result.project.by_module["model"].text)
    rewritten = ast.parse(tr.rewritten_files(result.script, result.project)["model.py"])
    stripped = strip_decorator_and_import(rewritten, {"__call__"}, drop_import=True)
    assert ast.dump(stripped, include_attributes=False) == ast.dump(
        original, include_attributes=False
    )


def test_tree_preservation_on_removal(tmp_path):
    result = analyze(FIXTURES / "listing5")
    original = ast.parse(result.project.by_module["train"].text)
    rewritten = ast.parse(tr.rewritten_files(result.script, result.project)["train.py"])
    stripped = strip_decorator_and_import(original, {"train"}, drop_import=False)
    assert ast.dump(rewritten, include_attributes=False) == ast.dump(
        stripped, include_attributes=False
    )


def test_second_pass_is_empty_after_apply(tmp_path):
    import shutil

    for fixture in ("listing2", "listing5"):
        target = tmp_path / fixture
        shutil.copytree(FIXTURES / fixture, target)
        first = analyze(target)
        tr.write_files(first.script, first.project)
        second = analyze(target)
        assert second.script.edits == [], fixture
