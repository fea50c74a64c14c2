"""Source text to :class:`~structmerge.cst.Tree`.

Backends are looked up by name in :data:`BACKENDS`.  The built-in
``minilang`` backend parses a small Java-like language::

    program     := (import_decl | class_decl)*
    import_decl := "import" dotted_name ";"
    class_decl  := modifiers "class" NAME class_body
    class_body  := "{" (field_decl | method_decl)* "}"
    field_decl  := modifiers type NAME ("=" expr)? ";"
    method_decl := modifiers type NAME "(" params ")" (block | ";")
    params      := (param ("," param)*)?
    param       := type NAME
    block       := "{" stmt* "}"

Statements are single Terminals.  Keywords and punctuation are Terminals
whose kind is their own text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional

from .cst import Node, Origin, Span, Tree, renumber, span_from_offsets

if TYPE_CHECKING:
    from .langconfig import LanguageProfile


class ParseError(Exception):
    def __init__(self, message: str, position: Span):
        self.message = message
        self.position = position
        super().__init__(f"{position}: {message}")


MODIFIERS = frozenset({"public", "private", "protected", "static", "final", "abstract"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<word>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<number>\d+(?:\.\d+)?[lLfFdD]?)
  | (?P<string>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')
  | (?P<op>->|\+\+|--|[-+*/%&|^]=|==|!=|<=|>=|&&|\|\||::|[{}()\[\];,.=<>+\-*/%!&|^?:@~])
    """,
    re.VERBOSE | re.DOTALL,
)


_OPEN = frozenset("([{")
_CLOSE = {")": "(", "]": "[", "}": "{"}


@dataclass(frozen=True)
class Token:
    kind: str  # word, number, string, op
    text: str
    start: int
    end: int


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into significant tokens; whitespace and comments are dropped."""
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            raise ParseError(
                f"unexpected character {source[pos]!r}",
                span_from_offsets(source, pos, pos + 1),
            )
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), pos, m.end()))
        pos = m.end()
    return tokens


def collapse(tokens: list[Token]) -> str:
    """Join token texts; any trivia between two tokens becomes one space."""
    parts = []
    prev_end = None
    for tok in tokens:
        if prev_end is not None and tok.start > prev_end:
            parts.append(" ")
        parts.append(tok.text)
        prev_end = tok.end
    return "".join(parts)


class _MiniLangParser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    # token helpers -------------------------------------------------------

    def peek(self, offset: int = 0) -> Optional[Token]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        if tok is None:
            tok = self.peek()
        if tok is None:
            end = len(self.source)
            return ParseError(message + " at end of input", span_from_offsets(self.source, end, end))
        return ParseError(f"{message}, got {tok.text!r}", span_from_offsets(self.source, tok.start, tok.end))

    def span(self, start: int, end: int) -> Span:
        return span_from_offsets(self.source, start, end)

    def expect(self, text: str) -> Node:
        tok = self.peek()
        if tok is None or tok.text != text:
            raise self.error(f"expected {text!r}")
        self.pos += 1
        return Node(kind=text, value=text, span=self.span(tok.start, tok.end))

    def terminal_from(self, kind: str, first: int, last: int) -> Node:
        """Terminal covering tokens ``first..last`` inclusive."""
        toks = self.tokens[first:last + 1]
        start, end = toks[0].start, toks[-1].end
        value = collapse(toks)
        return Node(kind=kind, value=value, span=self.span(start, end))

    def name(self, kind: str = "name") -> Node:
        tok = self.peek()
        if tok is None or tok.kind != "word" or tok.text in MODIFIERS or tok.text in ("class", "import"):
            raise self.error("expected identifier")
        self.pos += 1
        return Node(kind=kind, value=tok.text, span=self.span(tok.start, tok.end))

    def here(self) -> int:
        tok = self.peek()
        return tok.start if tok is not None else len(self.source)

    def nonterminal(self, kind: str, children: list[Node], fallback: int) -> Node:
        if children:
            span = self.span(children[0].span.start, children[-1].span.end)
        else:
            span = self.span(fallback, fallback)
        return Node(kind=kind, children=tuple(children), span=span)

    # grammar -------------------------------------------------------------

    def program(self) -> Node:
        children = []
        while self.peek() is not None:
            if self.peek().text == "import":
                children.append(self.import_decl())
            else:
                children.append(self.class_decl())
        return Node(kind="program", children=tuple(children), span=self.span(0, len(self.source)))

    def import_decl(self) -> Node:
        kw = self.expect("import")
        first = self.pos
        self.name()
        while self.peek() is not None and self.peek().text == ".":
            self.pos += 1
            nxt = self.peek()
            if nxt is not None and nxt.text == "*":
                self.pos += 1
                break
            self.name()
        dotted = self.terminal_from("dotted_name", first, self.pos - 1)
        dotted = Node(kind="dotted_name", value=dotted.value.replace(" ", ""), span=dotted.span)
        semi = self.expect(";")
        return self.nonterminal("import_decl", [kw, dotted, semi], kw.span.start)

    def modifiers(self) -> Node:
        start = self.here()
        mods = []
        while self.peek() is not None and self.peek().text in MODIFIERS:
            tok = self.peek()
            self.pos += 1
            mods.append(Node(kind="modifier", value=tok.text, span=self.span(tok.start, tok.end)))
        return self.nonterminal("modifiers", mods, start)

    def class_decl(self) -> Node:
        mods = self.modifiers()
        kw = self.expect("class")
        name = self.name()
        body = self.class_body()
        return self.nonterminal("class_decl", [mods, kw, name, body], mods.span.start)

    def class_body(self) -> Node:
        children = [self.expect("{")]
        while True:
            tok = self.peek()
            if tok is None:
                raise self.error("unterminated class body")
            if tok.text == "}":
                break
            children.append(self.member())
        children.append(self.expect("}"))
        return self.nonterminal("class_body", children, children[0].span.start)

    def type_(self) -> Node:
        first = self.pos
        self.name("type")
        while self.peek() is not None and self.peek().text == ".":
            self.pos += 1
            self.name("type")
        if self.peek() is not None and self.peek().text == "<":
            depth = 0
            while True:
                tok = self.peek()
                if tok is None:
                    raise self.error("unterminated type arguments")
                self.pos += 1
                if tok.text == "<":
                    depth += 1
                elif tok.text == ">":
                    depth -= 1
                    if depth == 0:
                        break
                elif tok.kind != "word" and tok.text not in (",", ".", "?", "[", "]"):
                    raise self.error("unexpected token in type arguments", tok)
        while self.peek() is not None and self.peek().text == "[":
            self.pos += 1
            if self.peek() is None or self.peek().text != "]":
                raise self.error("expected ']'")
            self.pos += 1
        return self.terminal_from("type", first, self.pos - 1)

    def member(self) -> Node:
        mods = self.modifiers()
        typ = self.type_()
        name = self.name()
        tok = self.peek()
        if tok is None:
            raise self.error("expected member declaration")
        if tok.text == "(":
            return self.method_rest(mods, typ, name)
        if tok.text == ";":
            semi = self.expect(";")
            return self.nonterminal("field_decl", [mods, typ, name, semi], mods.span.start)
        if tok.text == "=":
            eq = self.expect("=")
            expr = self.until_semicolon("expr")
            semi = self.expect(";")
            return self.nonterminal("field_decl", [mods, typ, name, eq, expr, semi], mods.span.start)
        raise self.error("expected '(', ';' or '='")

    def until_semicolon(self, kind: str) -> Node:
        first = self.pos
        depth = 0
        while True:
            tok = self.peek()
            if tok is None:
                raise self.error("expected ';'")
            if tok.text in _OPEN:
                depth += 1
            elif tok.text in _CLOSE:
                if depth == 0:
                    raise self.error("unbalanced bracket", tok)
                depth -= 1
            elif tok.text == ";" and depth == 0:
                break
            self.pos += 1
        if self.pos == first:
            raise self.error("expected expression")
        return self.terminal_from(kind, first, self.pos - 1)

    def method_rest(self, mods: Node, typ: Node, name: Node) -> Node:
        lp = self.expect("(")
        params = self.params()
        rp = self.expect(")")
        tok = self.peek()
        if tok is not None and tok.text == ";":
            tail = self.expect(";")
        else:
            tail = self.block()
        return self.nonterminal("method_decl", [mods, typ, name, lp, params, rp, tail], mods.span.start)

    def params(self) -> Node:
        start = self.here()
        children = []
        if self.peek() is not None and self.peek().text != ")":
            while True:
                ptype = self.type_()
                pname = self.name()
                children.append(self.nonterminal("param", [ptype, pname], ptype.span.start))
                if self.peek() is not None and self.peek().text == ",":
                    children.append(self.expect(","))
                    continue
                break
        return self.nonterminal("params", children, start)

    def block(self) -> Node:
        children = [self.expect("{")]
        while True:
            tok = self.peek()
            if tok is None:
                raise self.error("unterminated block")
            if tok.text == "}":
                break
            children.append(self.stmt())
        children.append(self.expect("}"))
        return self.nonterminal("block", children, children[0].span.start)

    def stmt(self) -> Node:
        first = self.pos
        stack: list[str] = []
        while True:
            tok = self.peek()
            if tok is None:
                raise self.error("unterminated statement")
            self.pos += 1
            if tok.kind != "op":
                continue
            if tok.text in _OPEN:
                stack.append(tok.text)
            elif tok.text in _CLOSE:
                if not stack or stack[-1] != _CLOSE[tok.text]:
                    raise self.error("unbalanced bracket", tok)
                stack.pop()
                if tok.text == "}" and not stack:
                    nxt = self.peek()
                    if nxt is not None and nxt.text == "else":
                        continue
                    break
            elif tok.text == ";" and not stack:
                break
        return self.terminal_from("stmt", first, self.pos - 1)


def parse_minilang_raw(source: str) -> Node:
    """Backend entry point: a raw tree without identifiers or unordered flags."""
    return _MiniLangParser(source).program()


@dataclass(frozen=True)
class ParserBackend:
    name: str
    parse: Callable[[str], Node]
    tokenize: Callable[[str], list[str]]


BACKENDS: dict[str, ParserBackend] = {}


def register_backend(backend: ParserBackend) -> None:
    BACKENDS[backend.name] = backend


register_backend(
    ParserBackend(
        name="minilang",
        parse=parse_minilang_raw,
        tokenize=lambda text: [t.text for t in tokenize(text)],
    )
)


def parse(source: str, profile: "LanguageProfile", origin: Origin = Origin.BASE) -> Tree:
    """Parse with the profile's backend, then apply handlers, identifiers,
    unordered flags and flattening, in that order."""
    from . import langconfig

    backend = BACKENDS.get(profile.backend)
    if backend is None:
        raise KeyError(f"no parser backend registered for {profile.backend!r}")
    tree = Tree(root=backend.parse(source), source=source, language=profile.name, origin=origin)
    tree = langconfig.apply_handlers(tree, profile)
    tree = langconfig.assign_identifiers(tree, profile)
    tree = langconfig.mark_unordered(tree, profile)
    tree = langconfig.flatten(tree, profile)
    return Tree(root=renumber(tree.root, origin), source=source, language=profile.name, origin=origin)


def parse_minilang(source: str, origin: Origin = Origin.BASE) -> Tree:
    """Parse with the bundled ``minilang`` profile."""
    from .langconfig import bundled_profile

    return parse(source, bundled_profile("minilang"), origin)
