"""Declarative per-language configuration.

A profile names the parser backend, the kinds whose children may be
permuted, identifier-extraction rules, post-parse handlers and kinds to
flatten into single text leaves.  Profiles are JSON documents::

    {
      "name": "minilang",
      "extensions": [".mini"],
      "unordered_kinds": ["modifiers", "class_body", "import_group"],
      "identifier_rules": [
        {"target_kind": "class_decl",
         "capture_path": [{"kind": "name", "index": 0}],
         "compose": "{0}"}
      ],
      "handlers": ["group_imports"],
      "flatten_kinds": []
    }

A rule may give several paths under ``capture_paths``; ``{i}`` in
``compose`` is replaced by the values captured by path ``i``, joined with
commas.  An ``index`` of ``"*"`` selects every matching child.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Union

from .cst import Node, Tree, check_unique_identifiers, span_from_offsets


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class Selector:
    kind: str
    index: Union[int, str] = 0  # int or "*"


@dataclass(frozen=True)
class IdentifierRule:
    target_kind: str
    capture_paths: tuple[tuple[Selector, ...], ...]
    compose: str = "{0}"

    def apply(self, node: Node) -> Optional[str]:
        """Composed identifier, or None when a required capture is missing."""
        captured = []
        for path in self.capture_paths:
            found = _select(node, path)
            if found is None:
                return None
            captured.append(",".join(_leaf_text(n) for n in found))

        def sub(m: re.Match) -> str:
            i = int(m.group(1))
            if i >= len(captured):
                raise ProfileError(f"compose template {self.compose!r} refers to missing capture {i}")
            return captured[i]

        ident = _PLACEHOLDER.sub(sub, self.compose)
        return ident or None


_PLACEHOLDER = re.compile(r"\{(\d+)\}")


def _select(node: Node, path: tuple[Selector, ...]) -> Optional[list[Node]]:
    current = [node]
    wildcard = False
    for sel in path:
        nxt = []
        for n in current:
            matches = [c for c in n.children if c.kind == sel.kind]
            if sel.index == "*":
                nxt.extend(matches)
            elif sel.index < len(matches):
                nxt.append(matches[sel.index])
        if sel.index == "*":
            wildcard = True
        current = nxt
        if not current and not wildcard:
            return None
    return current


def _leaf_text(node: Node) -> str:
    if node.is_terminal:
        return node.value
    return " ".join(t.value for t in node.terminals())


@dataclass(frozen=True)
class LanguageProfile:
    name: str
    extensions: tuple[str, ...] = ()
    unordered_kinds: frozenset[str] = frozenset()
    identifier_rules: tuple[IdentifierRule, ...] = ()
    handlers: tuple[str, ...] = ()
    flatten_kinds: frozenset[str] = frozenset()
    backend: str = "minilang"
    unique_identifiers: bool = True

    def __post_init__(self):
        for h in self.handlers:
            if h not in HANDLERS:
                raise ProfileError(f"unknown handler {h!r} in profile {self.name!r}")
        overlap = self.unordered_kinds & self.flatten_kinds
        if overlap:
            raise ProfileError(f"kinds both unordered and flattened: {sorted(overlap)}")

    def rule_for(self, kind: str) -> Optional[IdentifierRule]:
        return self._rules.get(kind)

    @property
    def _rules(self) -> dict[str, IdentifierRule]:
        return {r.target_kind: r for r in self.identifier_rules}


# handlers ----------------------------------------------------------------

Handler = Callable[[Tree], Tree]
HANDLERS: dict[str, Handler] = {}


def register_handler(name: str):
    def deco(fn: Handler) -> Handler:
        HANDLERS[name] = fn
        return fn

    return deco


@register_handler("group_imports")
def group_imports(tree: Tree) -> Tree:
    """Wrap each contiguous run of ``import_decl`` children of the root
    in one unordered ``import_group`` node."""
    root = tree.root
    children: list[Node] = []
    run: list[Node] = []

    def flush():
        if run:
            span = span_from_offsets(tree.source, run[0].span.start, run[-1].span.end)
            children.append(Node(kind="import_group", children=tuple(run), span=span, unordered=True))
            run.clear()

    for child in root.children:
        if child.kind == "import_decl":
            run.append(child)
        else:
            flush()
            children.append(child)
    flush()
    if len(children) == len(root.children):
        return tree
    return replace(tree, root=replace(root, children=tuple(children)))


def apply_handlers(tree: Tree, profile: LanguageProfile) -> Tree:
    for name in profile.handlers:
        try:
            handler = HANDLERS[name]
        except KeyError:
            raise ProfileError(f"unknown handler {name!r}") from None
        tree = handler(tree)
    return tree


# tree passes -------------------------------------------------------------


def assign_identifiers(tree: Tree, profile: LanguageProfile) -> Tree:
    rules = profile._rules

    def go(node: Node) -> Node:
        if node.is_terminal:
            return node
        children = tuple(go(c) for c in node.children)
        rule = rules.get(node.kind)
        ident = rule.apply(node) if rule is not None else node.identifier
        out = replace(node, children=children, identifier=ident)
        if profile.unique_identifiers:
            check_unique_identifiers(out)
        return out

    return replace(tree, root=go(tree.root))


def mark_unordered(tree: Tree, profile: LanguageProfile) -> Tree:
    kinds = profile.unordered_kinds

    def go(node: Node) -> Node:
        if node.is_terminal:
            return node
        return replace(
            node,
            children=tuple(go(c) for c in node.children),
            unordered=node.kind in kinds,
        )

    return replace(tree, root=go(tree.root))


def flatten(tree: Tree, profile: LanguageProfile) -> Tree:
    """Replace every node whose kind is in ``flatten_kinds`` by a Terminal
    holding the exact source text of its span."""
    kinds = profile.flatten_kinds
    if not kinds:
        return tree
    source = tree.source

    def go(node: Node) -> Node:
        if node.is_terminal:
            return node
        if node.kind in kinds:
            return Node(
                kind=node.kind,
                value=node.text(source),
                span=node.span,
                identifier=node.identifier,
            )
        return replace(node, children=tuple(go(c) for c in node.children))

    return replace(tree, root=go(tree.root))


# loading -----------------------------------------------------------------

_KNOWN_KEYS = {
    "name",
    "extensions",
    "unordered_kinds",
    "identifier_rules",
    "handlers",
    "flatten_kinds",
    "backend",
    "unique_identifiers",
}


def profile_from_dict(doc: dict) -> LanguageProfile:
    if not isinstance(doc, dict):
        raise ProfileError("profile document must be an object")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ProfileError(f"unknown profile keys: {sorted(unknown)}")
    if not isinstance(doc.get("name"), str) or not doc["name"]:
        raise ProfileError("profile needs a non-empty 'name'")
    try:
        rules = tuple(_rule_from_dict(r) for r in doc.get("identifier_rules", []))
        return LanguageProfile(
            name=doc["name"],
            extensions=tuple(_str_list(doc, "extensions")),
            unordered_kinds=frozenset(_str_list(doc, "unordered_kinds")),
            identifier_rules=rules,
            handlers=tuple(_str_list(doc, "handlers")),
            flatten_kinds=frozenset(_str_list(doc, "flatten_kinds")),
            backend=doc.get("backend", "minilang"),
            unique_identifiers=bool(doc.get("unique_identifiers", True)),
        )
    except (TypeError, KeyError) as exc:
        raise ProfileError(f"malformed profile: {exc}") from exc


def _str_list(doc: dict, key: str) -> list[str]:
    value = doc.get(key, [])
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ProfileError(f"{key!r} must be a list of strings")
    return value


def _rule_from_dict(doc: dict) -> IdentifierRule:
    if "capture_paths" in doc:
        raw_paths = doc["capture_paths"]
    elif "capture_path" in doc:
        raw_paths = [doc["capture_path"]]
    else:
        raise ProfileError(f"identifier rule for {doc.get('target_kind')!r} has no capture path")
    paths = []
    for raw in raw_paths:
        path = []
        for sel in raw:
            index = sel.get("index", 0)
            if index != "*" and (not isinstance(index, int) or index < 0):
                raise ProfileError(f"bad selector index {index!r}")
            path.append(Selector(kind=sel["kind"], index=index))
        paths.append(tuple(path))
    return IdentifierRule(
        target_kind=doc["target_kind"],
        capture_paths=tuple(paths),
        compose=doc.get("compose", "{0}"),
    )


def load_profile(path: Union[str, Path]) -> LanguageProfile:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"{path}: malformed profile document: {exc}") from exc
    return profile_from_dict(doc)


def bundled_profile(name: str) -> LanguageProfile:
    return _bundled()[name]


_BUNDLED_CACHE: dict[str, LanguageProfile] = {}


def _bundled() -> dict[str, LanguageProfile]:
    if not _BUNDLED_CACHE:
        for entry in resources.files("structmerge.profiles").iterdir():
            if entry.name.endswith(".profile"):
                profile = profile_from_dict(json.loads(entry.read_text(encoding="utf-8")))
                _BUNDLED_CACHE[profile.name] = profile
    return _BUNDLED_CACHE


@dataclass
class ProfileRegistry:
    """Loaded profiles, indexed by name and by file extension."""

    profiles: dict[str, LanguageProfile] = field(default_factory=dict)
    by_extension: dict[str, str] = field(default_factory=dict)

    def add(self, profile: LanguageProfile) -> None:
        for ext in profile.extensions:
            owner = self.by_extension.get(ext)
            if owner is not None and owner != profile.name:
                raise ProfileError(f"extension {ext!r} claimed by both {owner!r} and {profile.name!r}")
        self.profiles[profile.name] = profile
        for ext in profile.extensions:
            self.by_extension[ext] = profile.name

    def for_path(self, path: Union[str, Path]) -> Optional[LanguageProfile]:
        suffixes = Path(path).suffixes
        for i in range(len(suffixes)):
            name = self.by_extension.get("".join(suffixes[i:]))
            if name is not None:
                return self.profiles[name]
        return None

    @classmethod
    def default(cls, search_paths=()) -> "ProfileRegistry":
        reg = cls()
        for profile in _bundled().values():
            reg.add(profile)
        for directory in search_paths:
            for p in sorted(Path(directory).glob("*.profile")):
                reg.add(load_profile(p))
        return reg
