"""Typed, immutable model of an RML+FnO mapping document.

All IRIs stored in the model are absolute; prefixed names and relative IRIs
are expanded by the parser. Positions inside a TriplesMap that may hold a
function are represented by :class:`FunctionMapRef`, which points to a
:class:`FunctionMap` declared once at document level.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Union

from . import vocab


class Literal(NamedTuple):
    lexical: str
    datatype: Optional[str] = None
    language: Optional[str] = None


class TermType(str, enum.Enum):
    IRI = "IRI"
    LITERAL = "Literal"
    BLANK_NODE = "BlankNode"


class Position(str, enum.Enum):
    SUBJECT = "subject"
    PREDICATE = "predicate"
    OBJECT = "object"


_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


def has_scheme(value: str) -> bool:
    return _SCHEME.match(value) is not None


def template_parts(template: str) -> list[tuple[bool, str]]:
    """Split a template into ``(is_placeholder, text)`` chunks.

    ``\\{`` and ``\\}`` escape literal braces.
    """
    parts: list[tuple[bool, str]] = []
    buf: list[str] = []
    i = 0
    n = len(template)
    while i < n:
        ch = template[i]
        if ch == "\\" and i + 1 < n and template[i + 1] in "{}\\":
            buf.append(template[i + 1])
            i += 2
            continue
        if ch == "{":
            end = template.find("}", i + 1)
            if end < 0:
                raise ValueError(f"unterminated placeholder in template {template!r}")
            if buf:
                parts.append((False, "".join(buf)))
                buf = []
            name = template[i + 1:end]
            if not name:
                raise ValueError(f"empty placeholder in template {template!r}")
            parts.append((True, name))
            i = end + 1
            continue
        if ch == "}":
            raise ValueError(f"unbalanced '}}' in template {template!r}")
        buf.append(ch)
        i += 1
    if buf:
        parts.append((False, "".join(buf)))
    return parts


@dataclass(frozen=True)
class TermMap:
    kind: str  # "template" | "reference" | "constant"
    value: str
    term_type: Optional[TermType] = None
    datatype: Optional[str] = None
    language: Optional[str] = None

    @classmethod
    def template(cls, value: str, **kw) -> TermMap:
        return cls("template", value, **kw)

    @classmethod
    def reference(cls, attribute: str, **kw) -> TermMap:
        return cls("reference", attribute, **kw)

    @classmethod
    def constant_iri(cls, iri: str) -> TermMap:
        return cls("constant", iri, TermType.IRI)

    @classmethod
    def constant_literal(cls, lexical: str, datatype=None, language=None) -> TermMap:
        # "x"^^xsd:string and "x" are the same RDF term.
        if datatype == vocab.XSD_STRING:
            datatype = None
        return cls("constant", lexical, TermType.LITERAL, datatype, language)

    @property
    def attributes(self) -> tuple[str, ...]:
        if self.kind == "reference":
            return (self.value,)
        if self.kind == "template":
            return tuple(dict.fromkeys(t for is_ph, t in template_parts(self.value) if is_ph))
        return ()


@dataclass(frozen=True)
class FunctionMapRef:
    id: str


@dataclass(frozen=True)
class JoinCondition:
    child: Union[str, FunctionMapRef]
    parent: Union[str, FunctionMapRef]


@dataclass(frozen=True)
class RefObjectMap:
    parent_triples_map: str
    join_conditions: tuple[JoinCondition, ...] = ()


TermSpec = Union[TermMap, FunctionMapRef]
ObjectSpec = Union[TermMap, FunctionMapRef, RefObjectMap]


@dataclass(frozen=True)
class PredicateObjectMap:
    predicates: tuple[TermSpec, ...]
    objects: tuple[ObjectSpec, ...]


@dataclass(frozen=True)
class SubjectMap:
    term: TermSpec
    classes: tuple[str, ...] = ()


@dataclass(frozen=True)
class SourceDescriptor:
    """A logical source: a CSV file or an SQL query.

    For ``csv-file`` the locator is a path (resolved against the source roots
    at load time); for ``sql-query`` it is the query text and ``connection``
    optionally names the database (otherwise the context default is used).
    """

    kind: str  # "csv-file" | "sql-query"
    locator: str
    reference_formulation: str = "CSV"  # CSV | SQL | XPath | JSONPath
    connection: Optional[str] = None
    iterator: Optional[str] = None

    @classmethod
    def csv(cls, path: str) -> SourceDescriptor:
        return cls("csv-file", path, "CSV")

    @classmethod
    def sql(cls, query: str, connection: Optional[str] = None) -> SourceDescriptor:
        return cls("sql-query", query, "SQL", connection)

    @property
    def supported(self) -> bool:
        return self.reference_formulation in ("CSV", "SQL") and self.iterator is None


@dataclass(frozen=True)
class TriplesMap:
    id: str
    logical_source: SourceDescriptor
    subject: SubjectMap
    predicate_object_maps: tuple[PredicateObjectMap, ...] = ()

    def function_refs(self) -> list[tuple[tuple, FunctionMapRef]]:
        """Every FunctionMapRef in this map with its location.

        Locations are ``("subject",)``, ``("predicate", pom, k)``,
        ``("object", pom, k)`` and ``("join", pom, k, cond, side)``.
        """
        found: list[tuple[tuple, FunctionMapRef]] = []
        if isinstance(self.subject.term, FunctionMapRef):
            found.append((("subject",), self.subject.term))
        for i, pom in enumerate(self.predicate_object_maps):
            for k, pred in enumerate(pom.predicates):
                if isinstance(pred, FunctionMapRef):
                    found.append((("predicate", i, k), pred))
            for k, obj in enumerate(pom.objects):
                if isinstance(obj, FunctionMapRef):
                    found.append((("object", i, k), obj))
                elif isinstance(obj, RefObjectMap):
                    for c, jc in enumerate(obj.join_conditions):
                        for side in ("child", "parent"):
                            v = getattr(jc, side)
                            if isinstance(v, FunctionMapRef):
                                found.append((("join", i, k, c, side), v))
        return found


@dataclass(frozen=True)
class Parameter:
    predicate: str
    value: TermSpec


@dataclass(frozen=True)
class FunctionMap:
    id: str
    function: str
    parameters: tuple[Parameter, ...]
    term_type: Optional[TermType] = None
    datatype: Optional[str] = None
    language: Optional[str] = None
    logical_source: Optional[SourceDescriptor] = None
    # Filled from an in-document fno:Function declaration when one exists.
    output_predicate: Optional[str] = None

    @property
    def input_attributes(self) -> tuple[str, ...]:
        attrs: dict[str, None] = {}
        for p in self.parameters:
            if isinstance(p.value, TermMap):
                attrs.update(dict.fromkeys(p.value.attributes))
        return tuple(attrs)


@dataclass(frozen=True)
class FunctionDecl:
    iri: str
    name: Optional[str]
    parameters: tuple[tuple[str, bool], ...]
    outputs: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class MappingDocument:
    triples_maps: tuple[TriplesMap, ...] = ()
    function_maps: tuple[FunctionMap, ...] = ()
    base_iri: str = "http://example.org/mapping"
    prefixes: dict = field(default_factory=dict)
    functions: tuple[FunctionDecl, ...] = ()

    def _canonical(self):
        return (
            self.base_iri,
            sorted(self.prefixes.items()),
            sorted(self.triples_maps, key=lambda t: t.id),
            sorted(self.function_maps, key=lambda f: f.id),
            sorted(self.functions, key=lambda f: f.iri),
        )

    def __eq__(self, other):
        if not isinstance(other, MappingDocument):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        return hash((self.base_iri, len(self.triples_maps), len(self.function_maps)))

    def triples_map(self, iri: str) -> Optional[TriplesMap]:
        for tm in self.triples_maps:
            if tm.id == iri:
                return tm
        return None

    def function_map(self, iri: str) -> Optional[FunctionMap]:
        for fm in self.function_maps:
            if fm.id == iri:
                return fm
        return None

    def function_decl(self, iri: str) -> Optional[FunctionDecl]:
        for decl in self.functions:
            if decl.iri == iri:
                return decl
        return None

    def evolve(self, **changes) -> MappingDocument:
        return replace(self, **changes)


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # UnresolvedReference | UnsupportedConstruct | DuplicateId | InvalidTermMap | ...
    message: str
    subject: str = ""

    def __str__(self):
        where = f" [{self.subject}]" if self.subject else ""
        return f"{self.kind}: {self.message}{where}"


def local_name(iri: str) -> str:
    for sep in ("#", "/", ":"):
        if sep in iri:
            tail = iri.rsplit(sep, 1)[1]
            if tail:
                return tail
    return iri


def _check_term(tm: TermMap, owner: str, out: list[Diagnostic]) -> None:
    if tm.kind == "template":
        try:
            parts = template_parts(tm.value)
        except ValueError as exc:
            out.append(Diagnostic("InvalidTermMap", str(exc), owner))
            return
        if not any(is_ph for is_ph, _ in parts):
            out.append(Diagnostic("InvalidTermMap", f"template {tm.value!r} has no placeholder", owner))
    elif tm.kind == "reference":
        if not tm.value:
            out.append(Diagnostic("InvalidTermMap", "empty reference", owner))
    elif tm.kind != "constant":
        out.append(Diagnostic("InvalidTermMap", f"unknown term map kind {tm.kind!r}", owner))
    if tm.term_type is TermType.BLANK_NODE:
        out.append(Diagnostic("UnsupportedConstruct", "blank node term type", owner))
    if tm.language and tm.datatype:
        out.append(Diagnostic("InvalidTermMap", "both language and datatype set", owner))


def _check_source(src: SourceDescriptor, owner: str, out: list[Diagnostic]) -> None:
    # File sources may carry XPath/JSONPath (flagged below), never SQL.
    if src.kind == "csv-file" and src.reference_formulation == "SQL":
        out.append(Diagnostic("InvalidSource", "csv-file source with SQL formulation", owner))
    if src.kind == "sql-query" and src.reference_formulation != "SQL":
        out.append(Diagnostic("InvalidSource", "sql-query source must use the SQL formulation", owner))
    if src.kind not in ("csv-file", "sql-query"):
        out.append(Diagnostic("InvalidSource", f"unknown source kind {src.kind!r}", owner))
    if not src.supported:
        out.append(
            Diagnostic(
                "UnsupportedConstruct",
                f"{src.reference_formulation} logical source"
                + (" with iterator" if src.iterator else ""),
                owner,
            )
        )


def validate_document(doc: MappingDocument) -> list[Diagnostic]:
    """Return every structural violation found in ``doc`` (empty when well formed)."""
    out: list[Diagnostic] = []
    tm_ids: dict[str, TriplesMap] = {}
    for tm in doc.triples_maps:
        if tm.id in tm_ids:
            out.append(Diagnostic("DuplicateId", "TriplesMap declared twice", tm.id))
        tm_ids[tm.id] = tm
    fm_ids: dict[str, FunctionMap] = {}
    for fm in doc.function_maps:
        if fm.id in fm_ids:
            out.append(Diagnostic("DuplicateId", "FunctionMap declared twice", fm.id))
        fm_ids[fm.id] = fm

    def check_spec(spec, owner):
        if isinstance(spec, FunctionMapRef):
            if spec.id not in fm_ids:
                out.append(Diagnostic("UnresolvedReference", f"FunctionMap <{spec.id}> is not declared", owner))
        elif isinstance(spec, TermMap):
            _check_term(spec, owner, out)

    for tm in doc.triples_maps:
        _check_source(tm.logical_source, tm.id, out)
        check_spec(tm.subject.term, tm.id)
        if isinstance(tm.subject.term, TermMap) and tm.subject.term.term_type is TermType.LITERAL and (
            tm.predicate_object_maps or tm.subject.classes
        ):
            out.append(Diagnostic("InvalidTermMap", "literal subject cannot produce triples", tm.id))
        for pom in tm.predicate_object_maps:
            if not pom.predicates or not pom.objects:
                out.append(Diagnostic("InvalidTermMap", "predicateObjectMap needs a predicate and an object", tm.id))
            for pred in pom.predicates:
                check_spec(pred, tm.id)
            for obj in pom.objects:
                if isinstance(obj, RefObjectMap):
                    parent = tm_ids.get(obj.parent_triples_map)
                    if parent is None:
                        out.append(
                            Diagnostic(
                                "UnresolvedReference",
                                f"parent TriplesMap <{obj.parent_triples_map}> is not declared",
                                tm.id,
                            )
                        )
                    elif not obj.join_conditions and parent.logical_source != tm.logical_source:
                        out.append(
                            Diagnostic(
                                "InvalidJoin",
                                "RefObjectMap without joinCondition over a different logical source",
                                tm.id,
                            )
                        )
                    for jc in obj.join_conditions:
                        check_spec(jc.child, tm.id)
                        check_spec(jc.parent, tm.id)
                else:
                    check_spec(obj, tm.id)

    for fm in doc.function_maps:
        if not fm.parameters:
            out.append(Diagnostic("InvalidFunctionMap", "FunctionMap has no parameters", fm.id))
        if fm.logical_source is not None:
            _check_source(fm.logical_source, fm.id, out)
        decl = doc.function_decl(fm.function)
        for p in fm.parameters:
            if isinstance(p.value, FunctionMapRef):
                out.append(Diagnostic("UnsupportedConstruct", "nested function as parameter value", fm.id))
                if p.value.id not in fm_ids:
                    out.append(Diagnostic("UnresolvedReference", f"FunctionMap <{p.value.id}> is not declared", fm.id))
            else:
                _check_term(p.value, fm.id, out)
                if p.value.kind == "template":
                    out.append(Diagnostic("UnsupportedConstruct", "template parameter value", fm.id))
            if decl is not None and decl.parameters and p.predicate not in {q for q, _ in decl.parameters}:
                out.append(
                    Diagnostic("UnknownParameter", f"<{p.predicate}> is not expected by <{fm.function}>", fm.id)
                )
        if fm.term_type is TermType.BLANK_NODE:
            out.append(Diagnostic("UnsupportedConstruct", "blank node term type", fm.id))
    for decl in doc.functions:
        if len(decl.outputs) != 1:
            out.append(Diagnostic("InvalidFunction", "function must declare exactly one output", decl.iri))
    return out


__all__ = [
    "Diagnostic",
    "FunctionDecl",
    "FunctionMap",
    "FunctionMapRef",
    "JoinCondition",
    "Literal",
    "MappingDocument",
    "ObjectSpec",
    "Parameter",
    "Position",
    "PredicateObjectMap",
    "RefObjectMap",
    "SourceDescriptor",
    "SubjectMap",
    "TermMap",
    "TermSpec",
    "TermType",
    "TriplesMap",
    "has_scheme",
    "local_name",
    "template_parts",
    "validate_document",
    "vocab",
]
