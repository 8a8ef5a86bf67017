"""Build a :class:`MappingDocument` from mapping text.

The Turtle layer yields triples; this module walks them following the
mapping grammar (TriplesMap, logicalMap, subjectMap, predicateObjectMap,
objectMap, refObjectMap, joinCondition, predicateMap, FunctionMap,
Execution, Function, Parameters, Output) and reports the production that
failed when a node does not fit.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import replace
from typing import Optional

from . import vocab
from .errors import MappingSyntaxError, UnresolvedReference, UnsupportedConstruct
from .model import (
    FunctionDecl,
    FunctionMap,
    FunctionMapRef,
    JoinCondition,
    Literal,
    MappingDocument,
    Parameter,
    PredicateObjectMap,
    RefObjectMap,
    SourceDescriptor,
    SubjectMap,
    TermMap,
    TermType,
    TriplesMap,
    template_parts,
)
from .turtle import BNode, Node, read_turtle
from .vocab import FNML, FNO, QL, RDF_TYPE, RML, RR

DEFAULT_BASE = "http://example.org/mapping"

_TERM_TYPES = {
    RR + "IRI": TermType.IRI,
    RR + "Literal": TermType.LITERAL,
    RR + "BlankNode": TermType.BLANK_NODE,
}

_FORMULATIONS = {
    QL + "CSV": "CSV",
    QL + "XPath": "XPath",
    QL + "JSONPath": "JSONPath",
    QL + "SQL": "SQL",
    QL + "SQL2008": "SQL",
    RR + "SQL2008": "SQL",
}

# Predicates each node kind understands; other structural-namespace
# predicates on that node are outside the subset.
_TERM_KEYS = {
    RDF_TYPE, RR + "template", RML + "reference", RR + "constant", RR + "termType",
    RR + "datatype", RR + "language", RR + "column",
}
_ALLOWED = {
    "TriplesMap": {RDF_TYPE, RML + "logicalSource", RR + "logicalTable", RR + "subjectMap", RR + "subject",
                   RR + "predicateObjectMap"},
    "logicalMap": {RDF_TYPE, RML + "source", RML + "referenceFormulation", RML + "iterator", RML + "query",
                   RR + "sqlQuery", RR + "sqlVersion", RR + "tableName"},
    "subjectMap": _TERM_KEYS | {RR + "class"},
    "predicateObjectMap": {RDF_TYPE, RR + "predicate", RR + "predicateMap", RR + "object", RR + "objectMap"},
    "objectMap": _TERM_KEYS | {RR + "parentTriplesMap", RR + "joinCondition"},
    "predicateMap": _TERM_KEYS,
    "joinCondition": {RDF_TYPE, RR + "child", RR + "parent"},
    "FunctionMap": _TERM_KEYS | {FNML + "functionValue", RR + "class"},
    "Execution": {RDF_TYPE, RML + "logicalSource", RR + "predicateObjectMap", FNO + "executes",
                  RR + "subjectMap"},
    "Function": {RDF_TYPE, FNO + "name", FNO + "expects", FNO + "returns"},
    "Parameters": {RDF_TYPE, FNO + "predicate", FNO + "required", RR + "objectMap"},
}


def _structural(pred: str) -> bool:
    return pred.startswith(vocab.STRUCTURAL_NAMESPACES)


class _Builder:
    def __init__(self, triples, prefixes, base, positions):
        self.base = base
        self.prefixes = prefixes
        self.positions = positions
        self.props: dict[Node, dict[str, list[Node]]] = defaultdict(lambda: defaultdict(list))
        self.order: list[Node] = []
        for t in triples:
            if t.s not in self.props:
                self.order.append(t.s)
            self.props[t.s][t.p].append(t.o)
        self.function_maps: dict[str, FunctionMap] = {}
        self.fm_order: list[str] = []
        self.tm_ids: set[str] = set()

    # -- helpers -------------------------------------------------------
    def _where(self, node: Node) -> tuple[int, int]:
        return self.positions.get(node, (0, 0))

    def _fail(self, node: Node, message: str, production: str):
        line, col = self._where(node)
        raise MappingSyntaxError(message, line, col, production)

    def _id(self, node: Node) -> str:
        if isinstance(node, BNode):
            return f"{self.base.split('#', 1)[0]}#_b{node.n}"
        return node

    def _check_allowed(self, node: Node, production: str) -> None:
        for pred in self.props.get(node, {}):
            if _structural(pred) and pred not in _ALLOWED[production]:
                line, col = self._where(node)
                if pred == RR + "graphMap" or pred == RR + "graph":
                    raise UnsupportedConstruct(f"{line}:{col}: named graphs are not supported")
                raise UnsupportedConstruct(f"{line}:{col}: <{pred}> is not supported in {production}")

    def _values(self, node: Node, pred: str) -> list[Node]:
        return self.props.get(node, {}).get(pred, [])

    def _one(self, node: Node, pred: str, production: str, required: bool = True) -> Optional[Node]:
        vals = self._values(node, pred)
        if len(vals) > 1:
            self._fail(node, f"more than one value for <{pred}>", production)
        if not vals:
            if required:
                self._fail(node, f"missing <{pred}>", production)
            return None
        return vals[0]

    def _string(self, node: Node, pred: str, production: str, required: bool = True) -> Optional[str]:
        val = self._one(node, pred, production, required)
        if val is None:
            return None
        if not isinstance(val, Literal):
            self._fail(node, f"<{pred}> must be a literal", production)
        return val.lexical

    def _iri_value(self, node: Node, pred: str, production: str, required: bool = True) -> Optional[str]:
        val = self._one(node, pred, production, required)
        if val is None:
            return None
        if not isinstance(val, str):
            self._fail(node, f"<{pred}> must be an IRI", production)
        return val

    def _is_function_node(self, node: Node) -> bool:
        return bool(self._values(node, FNML + "functionValue"))

    def _is_triples_map(self, node: Node) -> bool:
        props = self.props.get(node, {})
        if RR + "TriplesMap" in props.get(RDF_TYPE, []):
            return True
        return (RML + "logicalSource" in props or RR + "logicalTable" in props) and (
            RR + "subjectMap" in props or RR + "subject" in props
        )

    # -- productions ---------------------------------------------------
    def build(self) -> MappingDocument:
        tm_nodes = [n for n in self.order if self._is_triples_map(n)]
        self.tm_ids = {self._id(n) for n in tm_nodes}
        tms = tuple(self.triples_map(n) for n in tm_nodes)
        for n in self.order:
            if self._is_function_node(n) and not isinstance(n, BNode):
                self.function_ref(n)
        decls = tuple(
            self.function_decl(n)
            for n in self.order
            if FNO + "Function" in self._values(n, RDF_TYPE)
        )
        fms = []
        for fid in self.fm_order:
            fm = self.function_maps[fid]
            decl = next((d for d in decls if d.iri == fm.function), None)
            if decl is not None and decl.outputs:
                fm = replace(fm, output_predicate=decl.outputs[0])
            fms.append(fm)
        return MappingDocument(
            triples_maps=tms,
            function_maps=tuple(fms),
            base_iri=self.base,
            prefixes=dict(self.prefixes),
            functions=decls,
        )

    def triples_map(self, node: Node) -> TriplesMap:
        self._check_allowed(node, "TriplesMap")
        if self._values(node, RR + "logicalTable"):
            raise UnsupportedConstruct("rr:logicalTable is not supported; use rml:logicalSource")
        ls = self._one(node, RML + "logicalSource", "logicalMap")
        source = self.logical_map(ls)
        subj_maps = self._values(node, RR + "subjectMap")
        subj_consts = self._values(node, RR + "subject")
        if len(subj_maps) + len(subj_consts) != 1:
            self._fail(node, "a TriplesMap needs exactly one subject specification", "subjectMap")
        if subj_maps:
            subject = self.subject_map(subj_maps[0])
        else:
            subject = SubjectMap(self._constant(node, subj_consts[0], "TriplesMap"))
        poms = tuple(self.predicate_object_map(p) for p in self._values(node, RR + "predicateObjectMap"))
        return TriplesMap(self._id(node), source, subject, poms)

    def logical_map(self, node: Node) -> SourceDescriptor:
        if isinstance(node, Literal):
            self._fail(node, "logicalSource must be a node", "logicalMap")
        self._check_allowed(node, "logicalMap")
        if self._values(node, RR + "tableName"):
            raise UnsupportedConstruct("rr:tableName is not supported; use rml:query")
        query = self._string(node, RML + "query", "logicalMap", required=False)
        if query is None:
            query = self._string(node, RR + "sqlQuery", "logicalMap", required=False)
        source = self._one(node, RML + "source", "logicalMap", required=query is None)
        if isinstance(source, BNode):
            self._fail(node, "rml:source must be a string or IRI", "logicalMap")
        source_text = source.lexical if isinstance(source, Literal) else source
        rf_iri = self._iri_value(node, RML + "referenceFormulation", "logicalMap", required=False)
        if rf_iri is not None and rf_iri not in _FORMULATIONS:
            self._fail(node, f"unknown reference formulation <{rf_iri}>", "logicalMap")
        formulation = _FORMULATIONS.get(rf_iri) if rf_iri else ("SQL" if query is not None else "CSV")
        iterator = self._string(node, RML + "iterator", "logicalMap", required=False)
        line, col = self._where(node)
        if formulation in ("XPath", "JSONPath") or iterator is not None:
            raise UnsupportedConstruct(
                f"{line}:{col}: {formulation} logical sources"
                + (" with rml:iterator" if iterator is not None else "")
                + " are not supported"
            )
        if formulation == "SQL":
            if query is None:
                self._fail(node, "SQL logical source needs rml:query", "logicalMap")
            return SourceDescriptor("sql-query", query, "SQL", source_text)
        if query is not None:
            self._fail(node, "rml:query requires the SQL reference formulation", "logicalMap")
        return SourceDescriptor("csv-file", source_text, "CSV")

    def subject_map(self, node: Node) -> SubjectMap:
        if isinstance(node, Literal):
            self._fail(node, "subjectMap must be a node", "subjectMap")
        classes = tuple(self._class_iris(node, "subjectMap"))
        if self._is_function_node(node):
            return SubjectMap(self.function_ref(node), classes)
        self._check_allowed(node, "subjectMap")
        return SubjectMap(self.term_map(node, "subjectMap"), classes)

    def _class_iris(self, node: Node, production: str) -> list[str]:
        out = []
        for c in self._values(node, RR + "class"):
            if not isinstance(c, str):
                self._fail(node, "rr:class must be an IRI", production)
            out.append(c)
        return out

    def _constant(self, owner: Node, value: Node, production: str) -> TermMap:
        if isinstance(value, BNode):
            self._fail(owner, "constant must be an IRI or literal", production)
        if isinstance(value, Literal):
            return TermMap.constant_literal(value.lexical, value.datatype, value.language)
        return TermMap.constant_iri(value)

    def term_map(self, node: Node, production: str) -> TermMap:
        if self.props.get(node) is None:
            if isinstance(node, str):
                raise UnresolvedReference(node, f"term map <{node}> is not defined")
            self._fail(node, "term map must be a node", production)
        template = self._string(node, RR + "template", production, required=False)
        reference = self._string(node, RML + "reference", production, required=False)
        if reference is None:
            reference = self._string(node, RR + "column", production, required=False)
        constant = self._one(node, RR + "constant", production, required=False)
        given = [x for x in (template, reference, constant) if x is not None]
        if len(given) != 1:
            self._fail(node, "expected exactly one of rr:template, rml:reference, rr:constant", production)
        tt_iri = self._iri_value(node, RR + "termType", production, required=False)
        if tt_iri is not None and tt_iri not in _TERM_TYPES:
            self._fail(node, f"unknown term type <{tt_iri}>", production)
        term_type = _TERM_TYPES.get(tt_iri) if tt_iri else None
        if term_type is TermType.BLANK_NODE:
            raise UnsupportedConstruct("rr:BlankNode term type is not supported")
        datatype = self._iri_value(node, RR + "datatype", production, required=False)
        language = self._string(node, RR + "language", production, required=False)
        if constant is not None:
            tm = self._constant(node, constant, production)
            if term_type is not None and term_type != tm.term_type:
                self._fail(node, "rr:termType contradicts the constant", production)
            return tm
        if template is not None:
            try:
                parts = template_parts(template)
            except ValueError as exc:
                self._fail(node, str(exc), production)
            if not any(is_ph for is_ph, _ in parts):
                self._fail(node, "template must contain a {placeholder}", production)
            return TermMap("template", template, term_type, datatype, language)
        return TermMap("reference", reference, term_type, datatype, language)

    def predicate_object_map(self, node: Node) -> PredicateObjectMap:
        if isinstance(node, Literal) or node not in self.props:
            self._fail(node, "predicateObjectMap must be a node", "predicateObjectMap")
        self._check_allowed(node, "predicateObjectMap")
        preds = []
        for p in self._values(node, RR + "predicate"):
            if not isinstance(p, str):
                self._fail(node, "rr:predicate must be an IRI", "predicateObjectMap")
            preds.append(TermMap.constant_iri(p))
        for pm in self._values(node, RR + "predicateMap"):
            if self._is_function_node(pm):
                preds.append(self.function_ref(pm))
            else:
                if isinstance(pm, Literal):
                    self._fail(node, "predicateMap must be a node", "predicateMap")
                self._check_allowed(pm, "predicateMap")
                tm = self.term_map(pm, "predicateMap")
                if tm.term_type is TermType.LITERAL:
                    self._fail(pm, "predicates must be IRIs", "predicateMap")
                preds.append(tm)
        if not preds:
            self._fail(node, "missing rr:predicate / rr:predicateMap", "predicateObjectMap")
        objs = []
        for o in self._values(node, RR + "object"):
            objs.append(self._constant(node, o, "predicateObjectMap"))
        for om in self._values(node, RR + "objectMap"):
            objs.append(self.object_map(om))
        if not objs:
            self._fail(node, "missing rr:object / rr:objectMap", "predicateObjectMap")
        return PredicateObjectMap(tuple(preds), tuple(objs))

    def object_map(self, node: Node):
        if isinstance(node, Literal):
            self._fail(node, "objectMap must be a node", "objectMap")
        if node not in self.props:
            raise UnresolvedReference(self._id(node), f"objectMap <{self._id(node)}> is not defined")
        if self._is_function_node(node):
            return self.function_ref(node)
        self._check_allowed(node, "objectMap")
        if self._values(node, RR + "parentTriplesMap"):
            return self.ref_object_map(node)
        if self._values(node, RR + "joinCondition"):
            self._fail(node, "rr:joinCondition without rr:parentTriplesMap", "refObjectMap")
        return self.term_map(node, "objectMap")

    def ref_object_map(self, node: Node) -> RefObjectMap:
        parent = self._one(node, RR + "parentTriplesMap", "refObjectMap")
        if isinstance(parent, Literal):
            self._fail(node, "rr:parentTriplesMap must be a TriplesMap", "refObjectMap")
        parent_id = self._id(parent)
        if parent_id not in self.tm_ids:
            raise UnresolvedReference(parent_id, f"parent TriplesMap <{parent_id}> is not declared")
        for key in (RR + "template", RML + "reference", RR + "constant"):
            if self._values(node, key):
                self._fail(node, "RefObjectMap cannot also be a term map", "refObjectMap")
        conds = tuple(self.join_condition(j) for j in self._values(node, RR + "joinCondition"))
        return RefObjectMap(parent_id, conds)

    def join_condition(self, node: Node) -> JoinCondition:
        if isinstance(node, Literal) or node not in self.props:
            self._fail(node, "joinCondition must be a node", "joinCondition")
        self._check_allowed(node, "joinCondition")
        sides = []
        for key in ("child", "parent"):
            val = self._one(node, RR + key, "joinCondition")
            if isinstance(val, Literal):
                sides.append(val.lexical)
            elif self._is_function_node(val):
                sides.append(self.function_ref(val))
            else:
                self._fail(node, f"rr:{key} must be an attribute name or FunctionMap", "joinCondition")
        return JoinCondition(sides[0], sides[1])

    def function_ref(self, node: Node) -> FunctionMapRef:
        fid = self._id(node)
        if fid not in self.function_maps:
            self.function_maps[fid] = None  # guards against cycles through parameters
            self.function_maps[fid] = self.function_map(node)
            self.fm_order.append(fid)
        elif self.function_maps[fid] is None:
            self._fail(node, "FunctionMap refers to itself", "FunctionMap")
        return FunctionMapRef(fid)

    def function_map(self, node: Node) -> FunctionMap:
        self._check_allowed(node, "FunctionMap")
        value = self._one(node, FNML + "functionValue", "FunctionMap")
        if isinstance(value, Literal) or value not in self.props:
            self._fail(node, "fnml:functionValue must describe an execution", "FunctionMap")
        self._check_allowed(value, "Execution")
        source = None
        ls = self._one(value, RML + "logicalSource", "Execution", required=False)
        if ls is not None:
            source = self.logical_map(ls)
        function = self._iri_value(value, FNO + "executes", "Execution", required=False)
        params: list[Parameter] = []
        for pom in self._values(value, RR + "predicateObjectMap"):
            if isinstance(pom, Literal) or pom not in self.props:
                self._fail(value, "predicateObjectMap must be a node", "Execution")
            self._check_allowed(pom, "predicateObjectMap")
            preds = self._values(pom, RR + "predicate")
            pmaps = self._values(pom, RR + "predicateMap")
            for pm in pmaps:
                inner = self.term_map(pm, "predicateMap")
                if inner.kind != "constant":
                    self._fail(pm, "function parameter predicates must be constant", "Parameters")
                preds = preds + [inner.value]
            if len(preds) != 1 or not isinstance(preds[0], str):
                self._fail(pom, "each function predicateObjectMap needs one IRI predicate", "Parameters")
            objs = [self._constant(pom, o, "Parameters") for o in self._values(pom, RR + "object")]
            for om in self._values(pom, RR + "objectMap"):
                if isinstance(om, Literal):
                    self._fail(pom, "objectMap must be a node", "Parameters")
                if self._is_function_node(om):
                    objs.append(self.function_ref(om))
                else:
                    self._check_allowed(om, "objectMap")
                    objs.append(self.term_map(om, "objectMap"))
            if len(objs) != 1:
                self._fail(pom, "each function predicateObjectMap needs exactly one value", "Parameters")
            pred, obj = preds[0], objs[0]
            if pred == FNO + "executes":
                if not (isinstance(obj, TermMap) and obj.kind == "constant" and obj.term_type is TermType.IRI):
                    self._fail(pom, "fno:executes must name a function IRI", "Execution")
                if function is not None:
                    self._fail(value, "more than one fno:executes", "Execution")
                function = obj.value
            else:
                params.append(Parameter(pred, obj))
        if function is None:
            self._fail(value, "missing fno:executes", "Execution")
        tt_iri = self._iri_value(node, RR + "termType", "FunctionMap", required=False)
        if tt_iri is not None and tt_iri not in _TERM_TYPES:
            self._fail(node, f"unknown term type <{tt_iri}>", "FunctionMap")
        term_type = _TERM_TYPES.get(tt_iri) if tt_iri else None
        if term_type is TermType.BLANK_NODE:
            raise UnsupportedConstruct("rr:BlankNode term type is not supported")
        for key in (RR + "template", RML + "reference", RR + "constant"):
            if self._values(node, key):
                self._fail(node, "FunctionMap cannot also be a template/reference/constant", "FunctionMap")
        return FunctionMap(
            id=self._id(node),
            function=function,
            parameters=tuple(params),
            term_type=term_type,
            datatype=self._iri_value(node, RR + "datatype", "FunctionMap", required=False),
            language=self._string(node, RR + "language", "FunctionMap", required=False),
            logical_source=source,
        )

    def function_decl(self, node: Node) -> FunctionDecl:
        self._check_allowed(node, "Function")
        if isinstance(node, BNode):
            self._fail(node, "functions must be named by an IRI", "Function")
        name = self._string(node, FNO + "name", "Function")
        expects = self._values(node, FNO + "expects")
        if not expects:
            self._fail(node, "missing fno:expects", "Function")
        params = []
        for p in expects:
            params.extend(self._parameter_decl(p, "Parameters"))
        returns = self._values(node, FNO + "returns")
        if not returns:
            self._fail(node, "missing fno:returns", "Function")
        outputs = []
        for r in returns:
            outputs.extend(pred for pred, _ in self._parameter_decl(r, "Output"))
        return FunctionDecl(node, name, tuple(params), tuple(outputs))

    def _parameter_decl(self, node: Node, production: str) -> list[tuple[str, bool]]:
        if isinstance(node, Literal) or node not in self.props:
            self._fail(node, f"{production} must be described by a node", production)
        self._check_allowed(node, "Parameters")
        preds = self._values(node, FNO + "predicate")
        if not preds:
            self._fail(node, "missing fno:predicate", production)
        required = True
        req = self._one(node, FNO + "required", production, required=False)
        if req is not None:
            if not isinstance(req, Literal) or req.lexical not in ("true", "false"):
                self._fail(node, "fno:required must be a boolean", production)
            required = req.lexical == "true"
        out = []
        for p in preds:
            if not isinstance(p, str):
                self._fail(node, "fno:predicate must be an IRI", production)
            out.append((p, required))
        return out


def parse_mapping_document(text: str, base: str = DEFAULT_BASE) -> MappingDocument:
    """Parse mapping text into a :class:`MappingDocument`.

    Raises MappingSyntaxError, UnresolvedReference or UnsupportedConstruct.
    """
    triples, prefixes, base, positions = read_turtle(text, base)
    builder = _Builder(triples, prefixes, base, positions)
    doc = builder.build()
    seen = set()
    for tm in doc.triples_maps:
        if tm.id in seen:
            raise MappingSyntaxError(f"TriplesMap <{tm.id}> declared twice", 0, 0, "SetTriplesMap")
        seen.add(tm.id)
    return doc


def load_mapping(path) -> MappingDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_mapping_document(fh.read())
