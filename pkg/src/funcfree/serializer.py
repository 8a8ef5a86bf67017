"""Deterministic Turtle output for mapping documents."""
from __future__ import annotations

import re

from .model import (
    FunctionDecl,
    FunctionMap,
    FunctionMapRef,
    MappingDocument,
    PredicateObjectMap,
    RefObjectMap,
    SourceDescriptor,
    TermMap,
    TermType,
    TriplesMap,
)
from .parser import DEFAULT_BASE
from .vocab import FNML, FNO, QL, RML, RR, XSD_BOOLEAN

_PN_LOCAL = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")
_INDENT = "    "


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


class _Writer:
    def __init__(self, doc: MappingDocument):
        self.doc = doc
        self.frag_base = doc.base_iri.split("#", 1)[0] + "#"
        # Longest namespace first so nested namespaces compact correctly.
        self.prefixes = sorted(doc.prefixes.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    def iri(self, value: str) -> str:
        for prefix, ns in self.prefixes:
            if value.startswith(ns) and _PN_LOCAL.match(value[len(ns):]):
                return f"{prefix}:{value[len(ns):]}"
        if value.startswith(self.frag_base) and _PN_LOCAL.match(value[len(self.frag_base):]):
            return f"<#{value[len(self.frag_base):]}>"
        return f"<{value}>"

    def literal(self, lexical: str, datatype=None, language=None) -> str:
        out = f'"{_escape(lexical)}"'
        if language:
            out += f"@{language}"
        elif datatype:
            out += f"^^{self.iri(datatype)}"
        return out

    def block(self, pairs: list[tuple[str, str]], depth: int) -> str:
        """Render ``[ p o ; ... ]`` with one pair per line."""
        if not pairs:
            return "[ ]"
        inner = _INDENT * (depth + 1)
        body = " ;\n".join(f"{inner}{p} {o}" for p, o in pairs)
        return f"[\n{body}\n{_INDENT * depth}]"

    # -- pieces --------------------------------------------------------
    def source(self, src: SourceDescriptor, depth: int) -> str:
        pairs = []
        if src.kind == "sql-query":
            if src.connection is not None:
                pairs.append((self.iri(RML + "source"), self.literal(src.connection)))
            pairs.append((self.iri(RML + "query"), self.literal(src.locator)))
            pairs.append((self.iri(RML + "referenceFormulation"), self.iri(RR + "SQL2008")))
        else:
            pairs.append((self.iri(RML + "source"), self.literal(src.locator)))
            pairs.append(
                (self.iri(RML + "referenceFormulation"), self.iri(QL + src.reference_formulation))
            )
            if src.iterator is not None:
                pairs.append((self.iri(RML + "iterator"), self.literal(src.iterator)))
        return self.block(pairs, depth)

    def term_pairs(self, tm: TermMap) -> list[tuple[str, str]]:
        pairs = []
        if tm.kind == "constant":
            if tm.term_type is TermType.LITERAL:
                value = self.literal(tm.value, tm.datatype, tm.language)
            else:
                value = self.iri(tm.value)
            return [(self.iri(RR + "constant"), value)]
        if tm.kind == "template":
            pairs.append((self.iri(RR + "template"), self.literal(tm.value)))
        else:
            pairs.append((self.iri(RML + "reference"), self.literal(tm.value)))
        pairs.extend(self.term_options(tm.term_type, tm.datatype, tm.language))
        return pairs

    def term_options(self, term_type, datatype, language) -> list[tuple[str, str]]:
        pairs = []
        if term_type is not None:
            pairs.append((self.iri(RR + "termType"), self.iri(RR + term_type.value)))
        if datatype:
            pairs.append((self.iri(RR + "datatype"), self.iri(datatype)))
        if language:
            pairs.append((self.iri(RR + "language"), self.literal(language)))
        return pairs

    def term_ref(self, spec, depth: int) -> str:
        if isinstance(spec, FunctionMapRef):
            return self.iri(spec.id)
        return self.block(self.term_pairs(spec), depth)

    def join_side(self, value) -> str:
        if isinstance(value, FunctionMapRef):
            return self.iri(value.id)
        return self.literal(value)

    def object_value(self, obj, depth: int) -> tuple[str, str]:
        if isinstance(obj, RefObjectMap):
            pairs = [(self.iri(RR + "parentTriplesMap"), self.iri(obj.parent_triples_map))]
            for jc in obj.join_conditions:
                cond = self.block(
                    [
                        (self.iri(RR + "child"), self.join_side(jc.child)),
                        (self.iri(RR + "parent"), self.join_side(jc.parent)),
                    ],
                    depth + 1,
                )
                pairs.append((self.iri(RR + "joinCondition"), cond))
            return self.iri(RR + "objectMap"), self.block(pairs, depth)
        if isinstance(obj, TermMap) and obj.kind == "constant":
            if obj.term_type is TermType.LITERAL:
                return self.iri(RR + "object"), self.literal(obj.value, obj.datatype, obj.language)
            return self.iri(RR + "object"), self.iri(obj.value)
        return self.iri(RR + "objectMap"), self.term_ref(obj, depth)

    def pom(self, pom: PredicateObjectMap, depth: int) -> str:
        pairs = []
        for pred in pom.predicates:
            if isinstance(pred, TermMap) and pred.kind == "constant" and pred.term_type is TermType.IRI:
                pairs.append((self.iri(RR + "predicate"), self.iri(pred.value)))
            else:
                pairs.append((self.iri(RR + "predicateMap"), self.term_ref(pred, depth + 1)))
        for obj in pom.objects:
            pairs.append(self.object_value(obj, depth + 1))
        return self.block(pairs, depth)

    def triples_map(self, tm: TriplesMap) -> str:
        pairs = [("a", self.iri(RR + "TriplesMap"))]
        pairs.append((self.iri(RML + "logicalSource"), self.source(tm.logical_source, 1)))
        subj = tm.subject
        if isinstance(subj.term, FunctionMapRef):
            pairs.append((self.iri(RR + "subjectMap"), self.iri(subj.term.id)))
        elif subj.term.kind == "constant" and not subj.classes:
            t = subj.term
            value = (
                self.literal(t.value, t.datatype, t.language)
                if t.term_type is TermType.LITERAL
                else self.iri(t.value)
            )
            pairs.append((self.iri(RR + "subject"), value))
        else:
            sp = self.term_pairs(subj.term)
            sp.extend((self.iri(RR + "class"), self.iri(c)) for c in subj.classes)
            pairs.append((self.iri(RR + "subjectMap"), self.block(sp, 1)))
        for pom in tm.predicate_object_maps:
            pairs.append((self.iri(RR + "predicateObjectMap"), self.pom(pom, 1)))
        return self.statement(self.iri(tm.id), pairs)

    def statement(self, subject: str, pairs: list[tuple[str, str]]) -> str:
        head = f"{subject} {pairs[0][0]} {pairs[0][1]}"
        rest = "".join(f" ;\n{_INDENT}{p} {o}" for p, o in pairs[1:])
        return head + rest + " .\n"

    def function_map(self, fm: FunctionMap, classes: tuple[str, ...]) -> str:
        exec_pairs = []
        if fm.logical_source is not None:
            exec_pairs.append((self.iri(RML + "logicalSource"), self.source(fm.logical_source, 2)))
        exec_pom = [
            (self.iri(RR + "predicate"), self.iri(FNO + "executes")),
            (self.iri(RR + "objectMap"), self.block([(self.iri(RR + "constant"), self.iri(fm.function))], 3)),
        ]
        exec_pairs.append((self.iri(RR + "predicateObjectMap"), self.block(exec_pom, 2)))
        for p in fm.parameters:
            param = [(self.iri(RR + "predicate"), self.iri(p.predicate))]
            param.append((self.iri(RR + "objectMap"), self.term_ref(p.value, 3)))
            exec_pairs.append((self.iri(RR + "predicateObjectMap"), self.block(param, 2)))
        pairs = [("a", self.iri(FNML + "FunctionTermMap"))]
        pairs.append((self.iri(FNML + "functionValue"), self.block(exec_pairs, 1)))
        pairs.extend(self.term_options(fm.term_type, fm.datatype, fm.language))
        pairs.extend((self.iri(RR + "class"), self.iri(c)) for c in classes)
        return self.statement(self.iri(fm.id), pairs)

    def function_decl(self, decl: FunctionDecl) -> str:
        pairs = [("a", self.iri(FNO + "Function"))]
        if decl.name is not None:
            pairs.append((self.iri(FNO + "name"), self.literal(decl.name)))
        for pred, required in decl.parameters:
            block = self.block(
                [
                    (self.iri(FNO + "predicate"), self.iri(pred)),
                    (self.iri(FNO + "required"), self.literal(str(required).lower(), XSD_BOOLEAN)),
                ],
                1,
            )
            pairs.append((self.iri(FNO + "expects"), block))
        for out in decl.outputs:
            pairs.append((self.iri(FNO + "returns"), self.block([(self.iri(FNO + "predicate"), self.iri(out))], 1)))
        return self.statement(self.iri(decl.iri), pairs)

    def document(self) -> str:
        head = []
        if self.doc.base_iri != DEFAULT_BASE:
            head.append(f"@base <{self.doc.base_iri}> .\n")
        for prefix, ns in sorted(self.doc.prefixes.items()):
            head.append(f"@prefix {prefix}: <{ns}> .\n")
        # rr:class on a function subject lives on the FunctionMap node itself.
        fm_classes: dict[str, tuple[str, ...]] = {}
        for tm in self.doc.triples_maps:
            if isinstance(tm.subject.term, FunctionMapRef) and tm.subject.classes:
                fm_classes[tm.subject.term.id] = tm.subject.classes
        chunks = ["".join(head)]
        for tm in sorted(self.doc.triples_maps, key=lambda t: t.id):
            chunks.append(self.triples_map(tm))
        for fm in sorted(self.doc.function_maps, key=lambda f: f.id):
            chunks.append(self.function_map(fm, fm_classes.get(fm.id, ())))
        for decl in sorted(self.doc.functions, key=lambda d: d.iri):
            chunks.append(self.function_decl(decl))
        return "\n".join(chunks)


def serialize_mapping_document(doc: MappingDocument) -> str:
    return _Writer(doc).document()


def write_mapping(doc: MappingDocument, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_mapping_document(doc))
