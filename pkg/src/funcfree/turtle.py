"""Recursive-descent reader for the Turtle subset used by mapping files.

Produces a flat list of triples. Blank nodes are :class:`BNode` values
numbered in document order; the mapping builder decides which of them need
skolem IRIs. Collections and other constructs outside the subset raise
:class:`UnsupportedConstruct`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union
from urllib.parse import urljoin

from . import vocab
from .errors import MappingSyntaxError, UnsupportedConstruct
from .model import Literal, has_scheme


@dataclass(frozen=True)
class BNode:
    n: int


Node = Union[str, BNode, Literal]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<long_string>\"\"\"(?:[^"\\]|\\.|"(?!""))*\"\"\"|'''(?:[^'\\]|\\.|'(?!''))*''')
  | (?P<string>"(?:[^"\\\n\r]|\\.)*"|'(?:[^'\\\n\r]|\\.)*')
  | (?P<at>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dtype>\^\^)
  | (?P<bnode>_:[A-Za-z0-9_](?:[\w.\-]*[\w\-])?)
  | (?P<pname>(?:[A-Za-z](?:[\w.\-]*[\w\-])?)?:(?:[\w:%\-](?:[\w.:%\-]*[\w:%\-])?)?)
  | (?P<number>[+-]?(?:\d+\.\d+|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<word>[A-Za-z]+)
  | (?P<punct>[.;,\[\]()])
    """,
    re.VERBOSE,
)

_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def _unescape(body: str, line: int, col: int) -> str:
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        nxt = body[i + 1] if i + 1 < len(body) else ""
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in ("u", "U"):
            width = 4 if nxt == "u" else 8
            hexpart = body[i + 2:i + 2 + width]
            if len(hexpart) != width or not all(c in "0123456789abcdefABCDEF" for c in hexpart):
                raise MappingSyntaxError("bad unicode escape", line, col, "String")
            out.append(chr(int(hexpart, 16)))
            i += 2 + width
        else:
            raise MappingSyntaxError(f"bad escape \\{nxt}", line, col, "String")
    return "".join(out)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None or m.end() == pos:
            raise MappingSyntaxError(f"unexpected character {text[pos]!r}", line, col, "File")
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass
class Triple:
    s: Node
    p: str
    o: Node
    line: int
    col: int


class TurtleReader:
    def __init__(self, text: str, base: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.base = base
        self.prefixes: dict[str, str] = {}
        self.triples: list[Triple] = []
        self.positions: dict[Node, tuple[int, int]] = {}
        self._labels: dict[str, BNode] = {}
        self._next_bnode = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def _expect_punct(self, ch: str, production: str) -> Token:
        t = self.tok
        if t.kind != "punct" or t.text != ch:
            raise MappingSyntaxError(f"expected {ch!r}, found {t.text or 'end of input'!r}", t.line, t.col, production)
        return self._advance()

    def _is_punct(self, ch: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == ch

    def _fresh(self) -> BNode:
        self._next_bnode += 1
        return BNode(self._next_bnode)

    def _note(self, node: Node, t: Token) -> None:
        if not isinstance(node, Literal):
            self.positions.setdefault(node, (t.line, t.col))

    # -- grammar ---------------------------------------------------------
    def parse(self) -> list[Triple]:
        while self.tok.kind != "eof":
            self._statement()
        return self.triples

    def _statement(self) -> None:
        t = self.tok
        if t.kind == "at":
            word = t.text[1:]
            if word == "prefix":
                self._advance()
                self._prefix_body()
                self._expect_punct(".", "prefixID")
                return
            if word == "base":
                self._advance()
                self._base_body()
                self._expect_punct(".", "base")
                return
            raise UnsupportedConstruct(f"{t.line}:{t.col}: directive {t.text} is not supported")
        if t.kind == "word" and t.text.upper() == "PREFIX":
            self._advance()
            self._prefix_body()
            return
        if t.kind == "word" and t.text.upper() == "BASE":
            self._advance()
            self._base_body()
            return
        self._triples()
        self._expect_punct(".", "triples")

    def _prefix_body(self) -> None:
        t = self._advance()
        if t.kind != "pname" or not t.text.endswith(":") or t.text.count(":") != 1:
            raise MappingSyntaxError("expected prefix name", t.line, t.col, "prefixID")
        iri_tok = self._advance()
        if iri_tok.kind != "iri":
            raise MappingSyntaxError("expected IRI", iri_tok.line, iri_tok.col, "prefixID")
        self.prefixes[t.text[:-1]] = self._resolve(iri_tok.text[1:-1])

    def _base_body(self) -> None:
        t = self._advance()
        if t.kind != "iri":
            raise MappingSyntaxError("expected IRI", t.line, t.col, "base")
        self.base = self._resolve(t.text[1:-1])

    def _resolve(self, ref: str) -> str:
        ref = _unescape(ref, 0, 0) if "\\" in ref else ref
        if not self.base or has_scheme(ref):
            return ref
        if ref.startswith("#") or not ref:
            return self.base.split("#", 1)[0] + ref
        # urljoin drops an empty trailing fragment, which namespaces rely on.
        joined = urljoin(self.base, ref)
        return joined + "#" if ref.endswith("#") and not joined.endswith("#") else joined

    def _iri(self, t: Token) -> str:
        if t.kind == "iri":
            return self._resolve(t.text[1:-1])
        prefix, _, local = t.text.partition(":")
        if prefix not in self.prefixes:
            raise MappingSyntaxError(f"undeclared prefix {prefix!r}", t.line, t.col, "prefixID")
        return self.prefixes[prefix] + local.replace("\\", "")

    def _triples(self) -> None:
        if self._is_punct("["):
            subject = self._blank_property_list()
            if not self._is_punct("."):
                self._predicate_object_list(subject)
            return
        subject = self._subject()
        self._predicate_object_list(subject)

    def _subject(self) -> Node:
        t = self.tok
        if t.kind in ("iri", "pname"):
            self._advance()
            node = self._iri(t)
        elif t.kind == "bnode":
            self._advance()
            node = self._label(t.text)
        elif self._is_punct("("):
            raise UnsupportedConstruct(f"{t.line}:{t.col}: RDF collections are not supported")
        else:
            raise MappingSyntaxError(f"unexpected {t.text or 'end of input'!r}", t.line, t.col, "subject")
        self._note(node, t)
        return node

    def _label(self, text: str) -> BNode:
        if text not in self._labels:
            self._labels[text] = self._fresh()
        return self._labels[text]

    def _predicate_object_list(self, subject: Node) -> None:
        self._verb_objects(subject)
        while self._is_punct(";"):
            self._advance()
            while self._is_punct(";"):
                self._advance()
            if self.tok.kind in ("iri", "pname") or (self.tok.kind == "word" and self.tok.text == "a"):
                self._verb_objects(subject)

    def _verb_objects(self, subject: Node) -> None:
        t = self._advance()
        if t.kind == "word" and t.text == "a":
            pred = vocab.RDF_TYPE
        elif t.kind in ("iri", "pname"):
            pred = self._iri(t)
        else:
            raise MappingSyntaxError(f"expected predicate, found {t.text or 'end of input'!r}", t.line, t.col, "verb")
        self._object(subject, pred, t)
        while self._is_punct(","):
            self._advance()
            self._object(subject, pred, t)

    def _object(self, subject: Node, pred: str, pred_tok: Token) -> None:
        t = self.tok
        if t.kind in ("iri", "pname"):
            self._advance()
            obj: Node = self._iri(t)
        elif t.kind == "bnode":
            self._advance()
            obj = self._label(t.text)
        elif self._is_punct("["):
            obj = self._blank_property_list()
        elif self._is_punct("("):
            raise UnsupportedConstruct(f"{t.line}:{t.col}: RDF collections are not supported")
        elif t.kind in ("string", "long_string"):
            obj = self._literal()
        elif t.kind == "number":
            self._advance()
            text = t.text
            if "e" in text.lower():
                dt = vocab.XSD_DOUBLE
            elif "." in text:
                dt = vocab.XSD_DECIMAL
            else:
                dt = vocab.XSD_INTEGER
            obj = Literal(text, dt)
        elif t.kind == "word" and t.text in ("true", "false"):
            self._advance()
            obj = Literal(t.text, vocab.XSD_BOOLEAN)
        else:
            raise MappingSyntaxError(f"expected object, found {t.text or 'end of input'!r}", t.line, t.col, "object")
        self._note(obj, t)
        self.triples.append(Triple(subject, pred, obj, pred_tok.line, pred_tok.col))

    def _blank_property_list(self) -> BNode:
        open_tok = self._expect_punct("[", "blankNodePropertyList")
        node = self._fresh()
        self._note(node, open_tok)
        if not self._is_punct("]"):
            self._predicate_object_list(node)
        self._expect_punct("]", "blankNodePropertyList")
        return node

    def _literal(self) -> Literal:
        t = self._advance()
        if t.kind == "long_string":
            body = t.text[3:-3]
        else:
            body = t.text[1:-1]
        lexical = _unescape(body, t.line, t.col)
        if self.tok.kind == "at" and self.tok.text[1:] not in ("prefix", "base"):
            lang = self._advance().text[1:].lower()
            return Literal(lexical, None, lang)
        if self.tok.kind == "dtype":
            self._advance()
            dt_tok = self._advance()
            if dt_tok.kind not in ("iri", "pname"):
                raise MappingSyntaxError("expected datatype IRI", dt_tok.line, dt_tok.col, "Literal")
            dt = self._iri(dt_tok)
            return Literal(lexical, None if dt == vocab.XSD_STRING else dt, None)
        return Literal(lexical)


def read_turtle(text: str, base: str):
    """Parse ``text`` and return ``(triples, prefixes, base, positions)``."""
    reader = TurtleReader(text, base)
    triples = reader.parse()
    return triples, reader.prefixes, reader.base, reader.positions
