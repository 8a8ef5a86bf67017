"""Reference RML+FnO executor producing knowledge-graph triples.

TriplesMaps are compiled into closures over attribute indices, then run row
by row. FunctionMaps are evaluated per row (this is the naive baseline the
rewrite is measured against); joins use a hash index on the parent source.
"""
from __future__ import annotations

import re
from collections import defaultdict
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Optional, Sequence, Union
from urllib.parse import quote

from .errors import (
    ArityMismatch,
    InvalidDocument,
    UnknownAttribute,
    UnsupportedConstruct,
)
from .functions import FunctionRegistry, default_registry
from .model import (
    FunctionMap,
    FunctionMapRef,
    Literal,
    MappingDocument,
    Position,
    RefObjectMap,
    TermMap,
    TermType,
    TriplesMap,
    has_scheme,
    template_parts,
    validate_document,
)
from .sources import Relation, SourceContext
from .vocab import RDF_TYPE, XSD_STRING

Term = Union[str, Literal]


class RdfTriple(NamedTuple):
    subject: str
    predicate: str
    object: Term


TripleSet = set

_BLOCKING = {"UnresolvedReference", "DuplicateId", "InvalidTermMap", "InvalidSource", "InvalidJoin"}


@lru_cache(maxsize=1 << 16)
def iri_safe(value: str) -> str:
    return quote(value, safe="")


def expand_template(template: str, row: dict, iri: bool = True) -> Optional[str]:
    """Substitute ``{attr}`` placeholders from ``row``.

    Returns None when any placeholder value is NULL. Values are
    percent-encoded when the result is an IRI.
    """
    out = []
    for is_ph, text in template_parts(template):
        if not is_ph:
            out.append(text)
            continue
        if text not in row:
            raise UnknownAttribute(text, tuple(row))
        value = row[text]
        if value is None:
            return None
        out.append(iri_safe(value) if iri else value)
    return "".join(out)


def default_term_type(spec, position: Position) -> TermType:
    """Term type used when a term map does not set rr:termType."""
    if isinstance(spec, TermMap) and spec.term_type is not None:
        return spec.term_type
    if isinstance(spec, FunctionMap) and spec.term_type is not None:
        return spec.term_type
    if position is not Position.OBJECT:
        return TermType.IRI
    if isinstance(spec, TermMap) and spec.kind == "template":
        head = spec.value.split("{", 1)[0]
        return TermType.IRI if has_scheme(head) else TermType.LITERAL
    return TermType.LITERAL


def _datatype(iri: Optional[str]) -> Optional[str]:
    return None if iri == XSD_STRING else iri


class JoinIndex:
    """Hash index over ``parent`` keyed by the tuple of ``attrs`` values."""

    def __init__(self, parent: Relation, attrs: Sequence[str]):
        idx = [parent.index(a) for a in attrs]
        self._buckets: dict[tuple, list[int]] = defaultdict(list)
        for j, row in enumerate(parent.rows):
            key = tuple(row[i] for i in idx)
            if None in key:
                continue
            self._buckets[key].append(j)

    def lookup(self, key: tuple) -> list[int]:
        if None in key:
            return []
        return self._buckets.get(key, [])


def hash_join(child: Relation, parent: Relation, conditions: Sequence[tuple[str, str]]) -> set[tuple[int, int]]:
    """Row-index pairs ``(i, j)`` satisfying every ``child[c] == parent[p]``.

    NULL never equals NULL.
    """
    index = JoinIndex(parent, [p for _, p in conditions])
    cidx = [child.index(c) for c, _ in conditions]
    pairs = set()
    for i, row in enumerate(child.rows):
        for j in index.lookup(tuple(row[k] for k in cidx)):
            pairs.add((i, j))
    return pairs


class _Compiler:
    def __init__(self, doc: MappingDocument, functions, context: SourceContext):
        self.doc = doc
        self.functions = functions
        self.context = context
        self.base = doc.base_iri
        self._fms = {fm.id: fm for fm in doc.function_maps}
        self._tms = {tm.id: tm for tm in doc.triples_maps}
        self._parent_subjects: dict[str, list] = {}
        self._indexes: dict[tuple, JoinIndex] = {}

    def relation(self, tm: TriplesMap) -> Relation:
        return self.context.load(tm.logical_source)

    @staticmethod
    def _attr(index: dict[str, int], name: str) -> int:
        try:
            return index[name]
        except KeyError:
            raise UnknownAttribute(name, tuple(index)) from None

    def _as_iri(self, value: str) -> str:
        return value if has_scheme(value) else self.base + value

    # raw string producers ------------------------------------------------
    def value_fn(self, spec, index: dict[str, int]) -> Callable[[tuple], Optional[str]]:
        """Closure computing the lexical value of ``spec`` for a row."""
        if isinstance(spec, FunctionMapRef):
            return self.function_fn(self._fms[spec.id], index)
        if isinstance(spec, str):
            i = self._attr(index, spec)
            return lambda row: row[i]
        if spec.kind == "reference":
            i = self._attr(index, spec.value)
            return lambda row: row[i]
        if spec.kind == "constant":
            value = spec.value
            return lambda row: value
        return self._template_fn(spec.value, index, encode=False)

    def _template_fn(self, template: str, index: dict[str, int], encode: bool):
        parts = [(is_ph, self._attr(index, t) if is_ph else t) for is_ph, t in template_parts(template)]

        def expand(row):
            out = []
            for is_ph, v in parts:
                if is_ph:
                    cell = row[v]
                    if cell is None:
                        return None
                    out.append(iri_safe(cell) if encode else cell)
                else:
                    out.append(v)
            return "".join(out)

        return expand

    def function_fn(self, fm: FunctionMap, index: dict[str, int]):
        impl = self.functions.lookup(fm.function)
        by_pred = {p.predicate: p.value for p in fm.parameters}
        unknown = set(by_pred) - set(impl.signature.param_predicates)
        if unknown:
            raise ArityMismatch(f"<{fm.id}>: parameters {sorted(unknown)} not accepted by <{fm.function}>")
        getters = []
        for pred, required in impl.signature.input_params:
            if pred in by_pred:
                getters.append(self.value_fn(by_pred[pred], index))
            elif required:
                raise ArityMismatch(f"<{fm.id}>: missing required parameter <{pred}> of <{fm.function}>")
            else:
                getters.append(lambda row: None)
        name = fm.function
        evaluate = self.functions.evaluate
        return lambda row: evaluate(name, tuple(g(row) for g in getters))

    # RDF term producers --------------------------------------------------
    def term_fn(self, spec, index: dict[str, int], position: Position) -> Callable[[tuple], Optional[Term]]:
        if isinstance(spec, FunctionMapRef):
            fm = self._fms[spec.id]
            raw = self.function_fn(fm, index)
            ttype = default_term_type(fm, position)
            return self._wrap(raw, ttype, fm.datatype, fm.language, position)
        ttype = default_term_type(spec, position)
        if spec.kind == "constant":
            if ttype is TermType.IRI:
                term = self._as_iri(spec.value)
            else:
                term = Literal(spec.value, _datatype(spec.datatype), spec.language)
            return lambda row: term
        if spec.kind == "template" and ttype is TermType.IRI:
            expand = self._template_fn(spec.value, index, encode=True)
            as_iri = self._as_iri

            def template_iri(row):
                v = expand(row)
                return None if v is None else as_iri(v)

            return template_iri
        return self._wrap(self.value_fn(spec, index), ttype, spec.datatype, spec.language, position)

    def _wrap(self, raw, ttype: TermType, datatype, language, position: Position):
        if ttype is TermType.BLANK_NODE:
            raise UnsupportedConstruct("blank node term type is not supported")
        if ttype is TermType.IRI:
            as_iri = self._as_iri

            def to_iri(row):
                v = raw(row)
                return None if v is None else as_iri(v)

            return to_iri
        if position is Position.PREDICATE:
            raise UnsupportedConstruct("predicates must be IRIs")
        datatype = _datatype(datatype)

        def to_literal(row):
            v = raw(row)
            return None if v is None else Literal(v, datatype, language)

        return to_literal

    # joins ----------------------------------------------------------------
    def parent_subjects(self, parent: TriplesMap) -> list:
        cached = self._parent_subjects.get(parent.id)
        if cached is None:
            rel = self.relation(parent)
            index = {a: i for i, a in enumerate(rel.attributes)}
            subj = self.term_fn(parent.subject.term, index, Position.SUBJECT)
            cached = [subj(row) for row in rel.rows]
            self._parent_subjects[parent.id] = cached
        return cached

    def join_fn(self, ref: RefObjectMap, child: TriplesMap, index: dict[str, int]):
        parent = self._tms[ref.parent_triples_map]
        if not ref.join_conditions:
            if parent.logical_source != child.logical_source:
                raise UnsupportedConstruct(
                    f"RefObjectMap from <{child.id}> to <{parent.id}> needs a joinCondition"
                )
            subj = self.term_fn(parent.subject.term, index, Position.SUBJECT)
            return lambda row: (subj(row),)
        parent_rel = self.relation(parent)
        parent_index = {a: i for i, a in enumerate(parent_rel.attributes)}
        if all(isinstance(jc.parent, str) for jc in ref.join_conditions):
            key = (parent.id, tuple(jc.parent for jc in ref.join_conditions))
            jindex = self._indexes.get(key)
            if jindex is None:
                jindex = self._indexes[key] = JoinIndex(parent_rel, key[1])
        else:
            jindex = self._function_index(parent_rel, parent_index, ref)
        child_getters = [self.value_fn(jc.child, index) for jc in ref.join_conditions]
        subjects = self.parent_subjects(parent)

        def joined(row):
            key = tuple(g(row) for g in child_getters)
            return [subjects[j] for j in jindex.lookup(key)]

        return joined

    def _function_index(self, parent_rel: Relation, parent_index, ref: RefObjectMap) -> JoinIndex:
        getters = [self.value_fn(jc.parent, parent_index) for jc in ref.join_conditions]
        computed = Relation(
            tuple(f"k{i}" for i in range(len(getters))),
            tuple(tuple(g(row) for g in getters) for row in parent_rel.rows),
        )
        return JoinIndex(computed, computed.attributes)

    # triples maps -----------------------------------------------------------
    def run(self, tm: TriplesMap, out: set) -> None:
        rel = self.relation(tm)
        index = {a: i for i, a in enumerate(rel.attributes)}
        subject = self.term_fn(tm.subject.term, index, Position.SUBJECT)
        classes = [self._as_iri(c) for c in tm.subject.classes]
        poms = []
        for pom in tm.predicate_object_maps:
            preds = [self.term_fn(p, index, Position.PREDICATE) for p in pom.predicates]
            fixed = all(isinstance(p, TermMap) and p.kind == "constant" for p in pom.predicates)
            if fixed:
                preds = [f(()) for f in preds]  # no per-row work
                if any(isinstance(p, Literal) for p in preds):
                    raise UnsupportedConstruct(f"<{tm.id}>: predicates must be IRIs")
            objs = []
            for obj in pom.objects:
                if isinstance(obj, RefObjectMap):
                    objs.append((True, self.join_fn(obj, tm, index)))
                else:
                    objs.append((False, self.term_fn(obj, index, Position.OBJECT)))
            poms.append((preds, objs, fixed))
        if not poms and not classes:
            # Used only as a join parent; nothing to emit.
            return
        add = out.add
        for row in rel.rows:
            s = subject(row)
            if s is None:
                continue
            if isinstance(s, Literal):
                raise UnsupportedConstruct(f"<{tm.id}> produces a literal subject")
            for c in classes:
                add(RdfTriple(s, RDF_TYPE, c))
            for preds, objs, fixed in poms:
                ps = preds if fixed else [p for p in (pf(row) for pf in preds) if p is not None]
                if not ps:
                    continue
                for is_join, of in objs:
                    if is_join:
                        terms: Iterable = of(row)
                    else:
                        t = of(row)
                        terms = () if t is None else (t,)
                    for o in terms:
                        if o is None:
                            continue
                        for p in ps:
                            add(RdfTriple(s, p, o))


def function_evaluator(
    doc: MappingDocument,
    fm: FunctionMap,
    attributes: Sequence[str],
    functions,
) -> Callable[[tuple], Optional[str]]:
    """Closure evaluating ``fm`` on rows laid out as ``attributes``."""
    compiler = _Compiler(doc, functions, SourceContext())
    return compiler.function_fn(fm, {a: i for i, a in enumerate(attributes)})


def materialize(
    doc: MappingDocument,
    context: Optional[SourceContext] = None,
    functions: Optional[FunctionRegistry] = None,
) -> set:
    """Evaluate every TriplesMap of ``doc`` and return the set of triples."""
    problems = [d for d in validate_document(doc) if d.kind in _BLOCKING]
    if problems:
        raise InvalidDocument(problems)
    context = context or SourceContext()
    functions = functions if functions is not None else default_registry()
    compiler = _Compiler(doc, functions, context)
    out: set = set()
    for tm in doc.triples_maps:
        compiler.run(tm, out)
    return out


# -- N-Triples ------------------------------------------------------------------

_IRI_ESCAPE = re.compile(r'[\x00-\x20<>"{}|^`\\]')


def _iri_text(iri: str) -> str:
    return "<" + _IRI_ESCAPE.sub(lambda m: f"\\u{ord(m.group()):04X}", iri) + ">"


def _literal_text(lit: Literal) -> str:
    body = (
        lit.lexical.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )
    out = f'"{body}"'
    if lit.language:
        out += "@" + lit.language
    elif lit.datatype:
        out += "^^" + _iri_text(lit.datatype)
    return out


def term_text(term: Term) -> str:
    return _literal_text(term) if isinstance(term, Literal) else _iri_text(term)


def ntriples_lines(triples: Iterable) -> list[str]:
    return sorted(f"{term_text(s)} {term_text(p)} {term_text(o)} ." for s, p, o in triples)


def serialize_ntriples(triples: Iterable, path) -> None:
    lines = ntriples_lines(triples)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


_NT_LINE = re.compile(
    r'^(<[^>]*>)\s+(<[^>]*>)\s+(<[^>]*>|"((?:[^"\\]|\\.)*)"(?:@([A-Za-z0-9\-]+)|\^\^(<[^>]*>))?)\s*\.\s*$'
)
_UCHAR = re.compile(r"\\u([0-9A-Fa-f]{4})|\\U([0-9A-Fa-f]{8})")
_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt in ("u", "U"):
                width = 4 if nxt == "u" else 8
                out.append(chr(int(text[i + 2:i + 2 + width], 16)))
                i += 2 + width
                continue
            out.append(_ECHAR.get(nxt, nxt))
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def parse_ntriples(text: str) -> set:
    triples = set()
    # only LF ends a statement; str.splitlines would also split on U+2028 and friends
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.strip(" \t\r")
        if not line or line.startswith("#"):
            continue
        m = _NT_LINE.match(line)
        if m is None:
            raise ValueError(f"line {lineno}: not an N-Triples statement: {line!r}")
        s = _unescape(m.group(1)[1:-1])
        p = _unescape(m.group(2)[1:-1])
        if m.group(4) is not None:
            dt = _datatype(_unescape(m.group(6)[1:-1])) if m.group(6) else None
            o: Term = Literal(_unescape(m.group(4)), dt, m.group(5).lower() if m.group(5) else None)
        else:
            o = _unescape(m.group(3)[1:-1])
        triples.add(RdfTriple(s, p, o))
    return triples


def read_ntriples(path) -> set:
    with open(path, encoding="utf-8") as fh:
        return parse_ntriples(fh.read())
