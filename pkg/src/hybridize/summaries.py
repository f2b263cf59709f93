"""Declarative knowledge base of external-library behavior.

Holds three kinds of facts, loaded from line-oriented summary files:

- tensor "generators": APIs whose return value is a new tensor, tensor-like
  object, or dataset of tensors (the sources of tensor dataflow),
- effect classifications for builtins and library calls (externally
  side-effecting, receiver-mutating, or pure),
- keyword tokens used by the speculative name-based fallback.

The built-in default database ships as package data in the same format and
is always loaded first; user files are merged on top, last write wins.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from typing import Iterable, Optional

EXTERNAL = "external_side_effect"
MUTATES_RECEIVER = "mutates_receiver"
PURE = "pure"

_EFFECT_TOKENS = {
    "external": EXTERNAL,
    "mutates-receiver": MUTATES_RECEIVER,
    "pure": PURE,
}


class SummaryLoadError(Exception):
    """Raised for malformed or duplicate summary entries, naming file and line."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class GeneratorSpec:
    api: str
    aliases: tuple[str, ...]
    kind: str  # "tensor" | "dataset"
    tensor_like: bool


@dataclass(frozen=True)
class EffectSpec:
    api: str
    effect: str  # EXTERNAL | MUTATES_RECEIVER | PURE


@dataclass(frozen=True)
class KeywordSpec:
    token: str
    weight: float


def _spellings(name: str) -> set[str]:
    """All interchangeable spellings of an API path.

    The conventional import aliases `tf` for `tensorflow` and `keras` for
    `tf.keras` are folded so that lookups succeed whichever spelling the
    summary file or the analyzed source used.
    """
    out = {name}
    if name.startswith("tensorflow."):
        out.add("tf." + name[len("tensorflow."):])
    for nm in list(out):
        if nm.startswith("tf."):
            out.add("tensorflow." + nm[len("tf."):])
        if nm.startswith("tf.keras."):
            out.add("keras." + nm[len("tf.keras."):])
    if name.startswith("keras."):
        out.add("tf.keras." + name[len("keras."):])
        out.add("tensorflow.keras." + name[len("keras."):])
    return out


@dataclass
class SummaryDb:
    """Immutable-after-load lookup structure; every index is alias-closed."""

    generators: dict[str, GeneratorSpec] = field(default_factory=dict)
    effects: dict[str, EffectSpec] = field(default_factory=dict)
    keywords: list[KeywordSpec] = field(default_factory=list)

    def _index_generator(self, spec: GeneratorSpec) -> None:
        for nm in (spec.api, *spec.aliases):
            for variant in _spellings(nm):
                self.generators[variant] = spec

    def _index_effect(self, spec: EffectSpec) -> None:
        for variant in _spellings(spec.api):
            self.effects[variant] = spec

    def _add_keyword(self, spec: KeywordSpec) -> None:
        self.keywords = [k for k in self.keywords if k.token != spec.token]
        self.keywords.append(spec)

    def knows(self, name: str) -> bool:
        """True when the dotted name matches any generator or effect entry."""
        return name in self.generators or name in self.effects


def lookup_generator(db: SummaryDb, name: str) -> Optional[GeneratorSpec]:
    """Canonical generator spec for the name or any of its aliases."""
    return db.generators.get(name)


def lookup_effect(db: SummaryDb, name: str) -> Optional[EffectSpec]:
    """Effect classification for the name; generators default to pure.

    Absent means "unknown callee"; the caller decides how conservative to
    be about that.
    """
    spec = db.effects.get(name)
    if spec is not None:
        return spec
    gen = db.generators.get(name)
    if gen is not None:
        return EffectSpec(api=gen.api, effect=PURE)
    return None


def _parse_kv(token: str, path: str, lineno: int) -> tuple[str, str]:
    if "=" not in token:
        raise SummaryLoadError(path, lineno, f"expected key=value, got {token!r}")
    key, _, value = token.partition("=")
    return key, value


def _parse_line(line: str, path: str, lineno: int):
    tokens = line.split()
    head = tokens[0]
    if head == "generator":
        if len(tokens) < 2:
            raise SummaryLoadError(path, lineno, "generator entry needs an api name")
        api = tokens[1]
        aliases: tuple[str, ...] = ()
        kind = None
        tensor_like = None
        for tok in tokens[2:]:
            key, value = _parse_kv(tok, path, lineno)
            if key == "alias":
                aliases = tuple(a for a in value.split(",") if a)
            elif key == "kind":
                if value not in ("tensor", "dataset"):
                    raise SummaryLoadError(path, lineno, f"bad kind {value!r}")
                kind = value
            elif key == "tensorlike":
                if value not in ("true", "false"):
                    raise SummaryLoadError(path, lineno, f"bad tensorlike {value!r}")
                tensor_like = value == "true"
            else:
                raise SummaryLoadError(path, lineno, f"unknown field {key!r}")
        if kind is None or tensor_like is None:
            raise SummaryLoadError(path, lineno, "generator needs kind= and tensorlike=")
        return GeneratorSpec(api=api, aliases=aliases, kind=kind, tensor_like=tensor_like)
    if head == "effect":
        if len(tokens) != 3:
            raise SummaryLoadError(path, lineno, "effect entry is `effect <api> <class>`")
        effect = _EFFECT_TOKENS.get(tokens[2])
        if effect is None:
            raise SummaryLoadError(path, lineno, f"unknown effect class {tokens[2]!r}")
        return EffectSpec(api=tokens[1], effect=effect)
    if head == "keyword":
        if len(tokens) < 2:
            raise SummaryLoadError(path, lineno, "keyword entry needs a token")
        weight = 1.0
        for tok in tokens[2:]:
            key, value = _parse_kv(tok, path, lineno)
            if key != "weight":
                raise SummaryLoadError(path, lineno, f"unknown field {key!r}")
            try:
                weight = float(value)
            except ValueError:
                raise SummaryLoadError(path, lineno, f"bad weight {value!r}") from None
        return KeywordSpec(token=tokens[1], weight=weight)
    raise SummaryLoadError(path, lineno, f"unknown entry kind {head!r}")


def _merge_text(db: SummaryDb, text: str, path: str) -> None:
    seen_apis: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        entry = _parse_line(line, path, lineno)
        if isinstance(entry, (GeneratorSpec, EffectSpec)):
            key = (type(entry).__name__, entry.api)
            if key in seen_apis:
                raise SummaryLoadError(path, lineno, f"duplicate api {entry.api!r}")
            seen_apis.add(key)
        if isinstance(entry, GeneratorSpec):
            db._index_generator(entry)
        elif isinstance(entry, EffectSpec):
            db._index_effect(entry)
        else:
            db._add_keyword(entry)


def _default_text() -> str:
    return (
        importlib.resources.files("hybridize")
        .joinpath("data/defaults.summ")
        .read_text(encoding="utf-8")
    )


def load_summaries(paths: Iterable[str] = ()) -> SummaryDb:
    """Build the database: built-in defaults first, then user files on top."""
    db = SummaryDb()
    _merge_text(db, _default_text(), "<defaults>")
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        _merge_text(db, text, str(path))
    return db
