"""Turtle subset parser and canonical serializer.

The accepted subset: @prefix directives, prefixed names, absolute IRIs in
angle brackets, labeled blank nodes, string literals with ^^datatype or @lang,
integer/decimal/boolean shorthand, `a`, `;` and `,` abbreviations, `#`
comments. Collections `( ... )` and anonymous blanks `[ ... ]` are out.

Serialization is canonical: sorted prefixes, one fully-spelled triple per
line in canonical term order, blank labels renumbered, trailing newline.
Equal (triple set, prefix map) inputs produce byte-identical output, which is
what makes TTL deltas diffable as text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .namespaces import RDF_LANGSTRING, RDF_TYPE, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_STRING
from .rdf_core import (
    Blank,
    Graph,
    Iri,
    Literal,
    StructuralError,
    Term,
    Triple,
    escape_literal,
    term_key,
    unescape_literal,
)

PrefixMap = dict[str, str]


class Severity(Enum):
    ERROR = "ERROR"
    WARNING = "WARNING"


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: Severity = Severity.ERROR


class TurtleParseError(ValueError):
    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        first = diagnostics[0]
        super().__init__(f"{first.line}:{first.column}: {first.message}")


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_PNAME_RE = re.compile(
    r"(?:[A-Za-z_][A-Za-z0-9_.\-]*)?:"          # prefix label (optional) + colon
    r"(?:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)?"  # local, no trailing dot
)
_BLANK_RE = re.compile(r"_:[A-Za-z0-9_][A-Za-z0-9_.\-]*")
_DECIMAL_RE = re.compile(r"[+-]?[0-9]*\.[0-9]+")
_INTEGER_RE = re.compile(r"[+-]?[0-9]+")
_LANGTAG_RE = re.compile(r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*")
_KEYWORD_RE = re.compile(r"(a|true|false)(?![A-Za-z0-9_\-:])")


@dataclass(frozen=True)
class _Token:
    kind: str  # PREFIX_DIR IRIREF PNAME BLANK STRING LANGTAG HATHAT A BOOL INT DEC DOT SEMI COMMA EOF
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def err(message: str, at_line: int, at_col: int):
        raise TurtleParseError([ParseDiagnostic(at_line, at_col, message)])

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col

        if c == "@":
            if text.startswith("@prefix", i):
                tokens.append(_Token("PREFIX_DIR", "@prefix", line, col))
                i += 7
                col += 7
                continue
            m = _LANGTAG_RE.match(text, i)
            if m:
                tokens.append(_Token("LANGTAG", m.group()[1:], line, col))
                col += len(m.group())
                i = m.end()
                continue
            err("unsupported directive", line, col)

        if c == "<":
            end = text.find(">", i + 1)
            newline = text.find("\n", i + 1)
            if end == -1 or (newline != -1 and newline < end):
                err("unterminated IRI", start_line, start_col)
            iri = text[i + 1:end]
            tokens.append(_Token("IRIREF", iri, line, col))
            col += end - i + 1
            i = end + 1
            continue

        if c == '"':
            j = i + 1
            buf: list[str] = []
            while True:
                if j >= n or text[j] == "\n":
                    err("unterminated literal", start_line, start_col)
                ch = text[j]
                if ch == "\\":
                    if j + 1 >= n:
                        err("unterminated literal", start_line, start_col)
                    nxt = text[j + 1]
                    if nxt == "u" and j + 5 < n:
                        buf.append(chr(int(text[j + 2:j + 6], 16)))
                        j += 6
                        continue
                    if nxt == "U" and j + 9 < n:
                        buf.append(chr(int(text[j + 2:j + 10], 16)))
                        j += 10
                        continue
                    buf.append(unescape_literal(text[j:j + 2]))
                    j += 2
                    continue
                if ch == '"':
                    break
                buf.append(ch)
                j += 1
            tokens.append(_Token("STRING", "".join(buf), start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue

        if text.startswith("^^", i):
            tokens.append(_Token("HATHAT", "^^", line, col))
            i += 2
            col += 2
            continue

        if c == ".":
            tokens.append(_Token("DOT", ".", line, col))
            i += 1
            col += 1
            continue
        if c == ";":
            tokens.append(_Token("SEMI", ";", line, col))
            i += 1
            col += 1
            continue
        if c == ",":
            tokens.append(_Token("COMMA", ",", line, col))
            i += 1
            col += 1
            continue

        m = _BLANK_RE.match(text, i)
        if m:
            label = m.group()[2:]
            if label.endswith("."):  # trailing dot is the statement terminator
                label = label.rstrip(".")
                m_len = 2 + len(label)
            else:
                m_len = len(m.group())
            tokens.append(_Token("BLANK", label, line, col))
            i += m_len
            col += m_len
            continue

        m = _KEYWORD_RE.match(text, i)
        if m:
            kind = "A" if m.group(1) == "a" else "BOOL"
            tokens.append(_Token(kind, m.group(1), line, col))
            i = m.end()
            col += len(m.group())
            continue

        m = _DECIMAL_RE.match(text, i)
        if m:
            tokens.append(_Token("DEC", m.group(), line, col))
            i = m.end()
            col += len(m.group())
            continue
        m = _INTEGER_RE.match(text, i)
        if m:
            tokens.append(_Token("INT", m.group(), line, col))
            i = m.end()
            col += len(m.group())
            continue

        m = _PNAME_RE.match(text, i)
        if m and ":" in m.group():
            tokens.append(_Token("PNAME", m.group(), line, col))
            i = m.end()
            col += len(m.group())
            continue

        err(f"unexpected character {c!r}", line, col)

    tokens.append(_Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.prefixes: PrefixMap = {}
        self.graph = Graph()

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token):
        raise TurtleParseError([ParseDiagnostic(tok.line, tok.col, message)])

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.take()
        if tok.kind != kind:
            self.fail(f"expected {what}, found {tok.value!r}" if tok.value else f"expected {what}", tok)
        return tok

    def parse(self) -> tuple[Graph, PrefixMap]:
        while self.peek().kind != "EOF":
            if self.peek().kind == "PREFIX_DIR":
                self.directive()
            else:
                self.statement()
        return self.graph, self.prefixes

    def directive(self) -> None:
        self.take()  # @prefix
        name = self.expect("PNAME", "prefix label")
        label, _, local = name.value.partition(":")
        if local:
            self.fail("prefix declaration must end with ':'", name)
        iri = self.expect("IRIREF", "namespace IRI")
        self.expect("DOT", "'.'")
        self.prefixes[label] = iri.value

    def statement(self) -> None:
        subject = self.term("subject")
        while True:
            predicate = self.term("predicate")
            while True:
                obj = self.term("object")
                try:
                    self.graph.insert(Triple(subject, predicate, obj))
                except StructuralError as e:  # pragma: no cover - positions guard earlier
                    self.fail(str(e), self.peek())
                if self.peek().kind == "COMMA":
                    self.take()
                    continue
                break
            if self.peek().kind == "SEMI":
                while self.peek().kind == "SEMI":
                    self.take()
                if self.peek().kind == "DOT":  # trailing ';' permitted
                    break
                continue
            break
        self.expect("DOT", "'.'")

    def term(self, position: str) -> Term:
        tok = self.take()
        if tok.kind == "IRIREF":
            term: Term = Iri(tok.value)
        elif tok.kind == "PNAME":
            term = self.resolve_pname(tok)
        elif tok.kind == "A":
            if position != "predicate":
                self.fail("'a' keyword only valid as predicate", tok)
            term = Iri(RDF_TYPE)
        elif tok.kind == "BLANK":
            term = Blank(tok.value)
        elif tok.kind == "STRING":
            term = self.literal_tail(tok)
        elif tok.kind == "INT":
            term = Literal(tok.value, XSD_INTEGER)
        elif tok.kind == "DEC":
            term = Literal(tok.value, XSD_DECIMAL)
        elif tok.kind == "BOOL":
            term = Literal(tok.value, XSD_BOOLEAN)
        else:
            self.fail(f"expected {position} term", tok)

        if position == "subject" and isinstance(term, Literal):
            self.fail("literal in subject position", tok)
        if position == "predicate" and not isinstance(term, Iri):
            self.fail("predicate must be an IRI", tok)
        return term

    def literal_tail(self, tok: _Token) -> Literal:
        nxt = self.peek()
        if nxt.kind == "LANGTAG":
            self.take()
            return Literal(tok.value, RDF_LANGSTRING, nxt.value)
        if nxt.kind == "HATHAT":
            self.take()
            dt = self.take()
            if dt.kind == "IRIREF":
                return Literal(tok.value, dt.value)
            if dt.kind == "PNAME":
                resolved = self.resolve_pname(dt)
                return Literal(tok.value, resolved.value)
            self.fail("expected datatype IRI after '^^'", dt)
        return Literal(tok.value, XSD_STRING)

    def resolve_pname(self, tok: _Token) -> Iri:
        label, _, local = tok.value.partition(":")
        if label not in self.prefixes:
            self.fail(f"unknown prefix '{label}'", tok)
        return Iri(self.prefixes[label] + local)


def parse_turtle(text: str) -> tuple[Graph, PrefixMap]:
    """Parse a Turtle-subset document; raises TurtleParseError at the first error."""
    return _Parser(_tokenize(text)).parse()


# ---------------------------------------------------------------------------
# Canonical serializer
# ---------------------------------------------------------------------------

_LOCAL_SAFE_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_\-]*")


def serialize_turtle(graph: Graph, prefixes: PrefixMap) -> str:
    """Canonical text: a pure function of (triple set, prefix map)."""
    lines = [f"@prefix {label}: <{iri}> ." for label, iri in sorted(prefixes.items())]

    blanks = sorted(
        {t.subject.label for t in graph.triple_set() if isinstance(t.subject, Blank)}
        | {t.object.label for t in graph.triple_set() if isinstance(t.object, Blank)}
    )
    rename = {label: f"b{i}" for i, label in enumerate(blanks)}

    triples = []
    for t in graph.triple_set():
        s = Blank(rename[t.subject.label]) if isinstance(t.subject, Blank) else t.subject
        o = Blank(rename[t.object.label]) if isinstance(t.object, Blank) else t.object
        triples.append(Triple(s, t.predicate, o))
    triples.sort(key=lambda t: (term_key(t.subject), term_key(t.predicate), term_key(t.object)))

    if triples and lines:
        lines.append("")
    for t in triples:
        lines.append(
            f"{_format(t.subject, prefixes)} {_format(t.predicate, prefixes, predicate=True)} "
            f"{_format(t.object, prefixes)} ."
        )
    return "\n".join(lines) + "\n" if lines else ""


def _format(term: Term, prefixes: PrefixMap, predicate: bool = False) -> str:
    if isinstance(term, Iri):
        if predicate and term.value == RDF_TYPE:
            return "a"
        return _format_iri(term.value, prefixes)
    if isinstance(term, Blank):
        return f"_:{term.label}"
    body = f'"{escape_literal(term.lexical)}"'
    if term.language is not None:
        return f"{body}@{term.language}"
    if term.datatype == XSD_STRING:
        return body
    return f"{body}^^{_format_iri(term.datatype, prefixes)}"


def _format_iri(iri: str, prefixes: PrefixMap) -> str:
    best: tuple[int, str, str] | None = None  # (ns length, label, suffix)
    for label, ns in prefixes.items():
        if iri.startswith(ns):
            suffix = iri[len(ns):]
            if suffix == "" or _LOCAL_SAFE_RE.fullmatch(suffix):
                cand = (len(ns), label, suffix)
                if best is None or cand[0] > best[0] or (cand[0] == best[0] and cand[1] < best[1]):
                    best = cand
    if best is None:
        return f"<{iri}>"
    return f"{best[1]}:{best[2]}"
