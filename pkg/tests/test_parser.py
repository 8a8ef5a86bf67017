import pytest

from funcfree.errors import MappingSyntaxError, UnresolvedReference, UnsupportedConstruct
from funcfree.functions import FN, SIMPLE_BENCH
from funcfree.model import (
    FunctionMap,
    FunctionMapRef,
    JoinCondition,
    Parameter,
    RefObjectMap,
    SourceDescriptor,
    TermMap,
    TermType,
    validate_document,
)
from funcfree.parser import load_mapping, parse_mapping_document

from conftest import FIXTURES

HEAD = """@prefix rr: <http://www.w3.org/ns/r2rml#> .
@prefix rml: <http://semweb.mmlab.be/ns/rml#> .
@prefix ql: <http://semweb.mmlab.be/ns/ql#> .
@prefix fnml: <http://semweb.mmlab.be/ns/fnml#> .
@prefix fno: <https://w3id.org/function/ontology#> .
@prefix fn: <http://example.org/functions#> .
@prefix ex: <http://example.org/vocab#> .
"""
SRC = '[ rml:source "s.csv" ; rml:referenceFormulation ql:CSV ]'
SUBJ = '[ rr:template "http://ex/{id}" ]'
FUNC = """<#F> fnml:functionValue [
    rr:predicateObjectMap [ rr:predicate fno:executes ; rr:objectMap [ rr:constant fn:simpleBench ] ] ;
    rr:predicateObjectMap [ rr:predicate fn:value ; rr:objectMap [ rml:reference "v" ] ] ] .
"""
BASE = "http://example.org/mapping#"


def tm(source=SRC, subject=f"rr:subjectMap {SUBJ}", poms="", name="T", typed=True):
    kind = "a rr:TriplesMap ;" if typed else ""
    extra = f" ;\n  {poms}" if poms else ""
    return f"<#{name}> {kind} rml:logicalSource {source} ;\n  {subject}{extra} .\n"


def pom(body):
    return f"rr:predicateObjectMap [ {body} ]"


def parse(*chunks):
    return parse_mapping_document(HEAD + "".join(chunks))


# Accepting inputs, one group per grammar production.
ACCEPT = {
    "File-empty": (HEAD,),
    "SetTriplesMap-two": (tm(name="A"), tm(name="B")),
    "TriplesMap-untyped": (tm(typed=False),),
    "TriplesMap-constant-subject": (tm(subject="rr:subject ex:thing", poms=pom('rr:predicate ex:p ; rr:object "o"')),),
    "TriplesMap-function-subject": (tm(subject="rr:subjectMap <#F>"), FUNC),
    "logicalMap-no-formulation": (tm(source='[ rml:source "s.csv" ]'),),
    "logicalMap-sql": (tm(source='[ rml:source "db.sqlite" ; rml:query "SELECT * FROM t" ; rml:referenceFormulation rr:SQL2008 ]'),),
    "logicalMap-r2rml-query": (tm(source='[ rr:sqlQuery "SELECT 1 AS id" ]'),),
    "subjectMap-typed": (tm(subject='rr:subjectMap [ a rr:TermMap, rr:SubjectMap ; rml:reference "u" ; rr:termType rr:IRI ; rr:class ex:C ]'),),
    "predicateObjectMap-constants": (tm(poms=pom('rr:predicate ex:p, ex:q ; rr:object ex:o, "lit"@en')),),
    "predicateMap-template": (tm(poms=pom('rr:predicateMap [ rr:template "http://ex/p/{k}" ] ; rr:object ex:o')),),
    "objectMap-template": (tm(poms=pom('rr:predicate ex:p ; rr:objectMap [ a rr:ObjectMap ; rr:template "x{id}" ; rr:termType rr:Literal ]')),),
    "objectMap-datatype": (tm(poms=pom('rr:predicate ex:p ; rr:objectMap [ rml:reference "n" ; rr:datatype <http://www.w3.org/2001/XMLSchema#integer> ]')),),
    "objectMap-function": (tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#F>")), FUNC),
    "objectMap-inline-function": (
        tm(poms=pom(
            "rr:predicate ex:p ; rr:objectMap [ fnml:functionValue [ fno:executes fn:simpleBench ; "
            'rr:predicateObjectMap [ rr:predicate fn:value ; rr:objectMap [ rml:reference "v" ] ] ] ]'
        )),
    ),
    "refObjectMap-join": (
        tm(name="A", poms=pom('rr:predicate ex:p ; rr:objectMap [ a rr:RefObjectMap ; rr:parentTriplesMap <#B> ; rr:joinCondition [ rr:child "x" ; rr:parent "y" ] ]')),
        tm(name="B"),
    ),
    "refObjectMap-same-source": (tm(name="A", poms=pom("rr:predicate ex:p ; rr:objectMap [ rr:parentTriplesMap <#B> ]")), tm(name="B")),
    "joinCondition-function-child": (
        tm(name="A", poms=pom('rr:predicate ex:p ; rr:objectMap [ rr:parentTriplesMap <#B> ; rr:joinCondition [ rr:child <#F> ; rr:parent "y" ] ]')),
        tm(name="B"),
        FUNC,
    ),
    "FunctionMap-typed-with-source": (
        tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#F>")),
        """<#F> a rr:TermMap, fnml:FunctionTermMap ; rr:termType rr:IRI ; fnml:functionValue [ a fno:Execution ;
            rml:logicalSource [ rml:source "s.csv" ; rml:referenceFormulation ql:CSV ] ;
            rr:predicateObjectMap [ rr:predicate fno:executes ; rr:objectMap [ rr:constant fn:simpleBench ] ] ;
            rr:predicateObjectMap [ rr:predicate fn:value ; rr:objectMap [ rml:reference "v" ] ] ] .
        """,
    ),
    "Execution-constant-parameter": (
        tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#F>")),
        """<#F> fnml:functionValue [ fno:executes fn:concat ;
            rr:predicateObjectMap [ rr:predicate fn:left ; rr:object "pre-" ] ;
            rr:predicateObjectMap [ rr:predicate fn:right ; rr:objectMap [ rml:reference "v" ] ] ] .
        """,
    ),
    "Function-Parameters-Output": (
        tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#F>")),
        FUNC,
        """fn:simpleBench a fno:Function ; fno:name "simple" ;
            fno:expects [ fno:predicate fn:value ; fno:required true ] ;
            fno:returns [ fno:predicate fn:output ] .
        """,
    ),
}

# Rejecting inputs: (chunks, expected exception, production named in the error or None)
REJECT = {
    "File-garbage": (("this is not turtle",), MappingSyntaxError, None),
    "File-collection": (("<#a> <#b> ( 1 ) .",), UnsupportedConstruct, None),
    "SetTriplesMap-declared-twice": ((tm(name="A"), tm(name="A", source='[ rml:source "t.csv" ]')), MappingSyntaxError, "logicalMap"),
    "TriplesMap-no-source": (('<#T> a rr:TriplesMap ; rr:subjectMap [ rr:template "x{a}" ] .',), MappingSyntaxError, "logicalMap"),
    "TriplesMap-two-subjects": ((tm(subject=f"rr:subjectMap {SUBJ} ; rr:subject ex:s"),), MappingSyntaxError, "subjectMap"),
    "TriplesMap-graph-map": ((tm(poms='rr:graphMap [ rr:constant ex:g ]'),), UnsupportedConstruct, None),
    "logicalMap-no-source": ((tm(source="[ rml:referenceFormulation ql:CSV ]"),), MappingSyntaxError, "logicalMap"),
    "logicalMap-xpath": ((tm(source='[ rml:source "s.xml" ; rml:referenceFormulation ql:XPath ]'),), UnsupportedConstruct, None),
    "logicalMap-iterator": ((tm(source='[ rml:source "s.csv" ; rml:iterator "$.x" ]'),), UnsupportedConstruct, None),
    "logicalMap-unknown-formulation": ((tm(source='[ rml:source "s" ; rml:referenceFormulation ex:Other ]'),), MappingSyntaxError, "logicalMap"),
    "subjectMap-empty": ((tm(subject="rr:subjectMap [ rr:class ex:C ]"),), MappingSyntaxError, "subjectMap"),
    "subjectMap-no-placeholder": ((tm(subject='rr:subjectMap [ rr:template "http://ex/fixed" ]'),), MappingSyntaxError, "subjectMap"),
    "subjectMap-blank-node": ((tm(subject='rr:subjectMap [ rml:reference "a" ; rr:termType rr:BlankNode ]'),), UnsupportedConstruct, None),
    "predicateObjectMap-no-predicate": ((tm(poms=pom("rr:object ex:o")),), MappingSyntaxError, "predicateObjectMap"),
    "predicateObjectMap-no-object": ((tm(poms=pom("rr:predicate ex:p")),), MappingSyntaxError, "predicateObjectMap"),
    "objectMap-two-forms": ((tm(poms=pom('rr:predicate ex:p ; rr:objectMap [ rml:reference "a" ; rr:template "{b}" ]')),), MappingSyntaxError, "objectMap"),
    "objectMap-dangling": ((tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#Missing>")),), UnresolvedReference, None),
    "refObjectMap-unknown-parent": ((tm(poms=pom("rr:predicate ex:p ; rr:objectMap [ rr:parentTriplesMap <#Nope> ]")),), UnresolvedReference, None),
    "refObjectMap-join-without-parent": ((tm(poms=pom('rr:predicate ex:p ; rr:objectMap [ rr:joinCondition [ rr:child "a" ; rr:parent "b" ] ]')),), MappingSyntaxError, "refObjectMap"),
    "joinCondition-missing-parent": (
        (tm(name="A", poms=pom('rr:predicate ex:p ; rr:objectMap [ rr:parentTriplesMap <#B> ; rr:joinCondition [ rr:child "a" ] ]')), tm(name="B")),
        MappingSyntaxError,
        "joinCondition",
    ),
    "predicateMap-literal": ((tm(poms=pom('rr:predicateMap [ rml:reference "p" ; rr:termType rr:Literal ] ; rr:object ex:o')),), MappingSyntaxError, "predicateMap"),
    "FunctionMap-literal-value": ((tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#F>")), '<#F> fnml:functionValue "f" .'), MappingSyntaxError, "FunctionMap"),
    "FunctionMap-self-reference": (
        (
            tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#F>")),
            "<#F> fnml:functionValue [ fno:executes fn:simpleBench ; rr:predicateObjectMap [ rr:predicate fn:value ; rr:objectMap <#F> ] ] .",
        ),
        MappingSyntaxError,
        "FunctionMap",
    ),
    "Execution-missing-executes": (
        (tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#F>")), '<#F> fnml:functionValue [ rr:predicateObjectMap [ rr:predicate fn:value ; rr:objectMap [ rml:reference "v" ] ] ] .'),
        MappingSyntaxError,
        "Execution",
    ),
    "Execution-two-functions": (
        (
            tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#F>")),
            "<#F> fnml:functionValue [ fno:executes fn:simpleBench ; rr:predicateObjectMap [ rr:predicate fno:executes ; rr:objectMap [ rr:constant fn:concat ] ] ] .",
        ),
        MappingSyntaxError,
        "Execution",
    ),
    "Function-no-returns": (('fn:f a fno:Function ; fno:name "f" ; fno:expects [ fno:predicate fn:a ] .',), MappingSyntaxError, "Function"),
    "Parameters-bad-required": (('fn:f a fno:Function ; fno:name "f" ; fno:expects [ fno:predicate fn:a ; fno:required "maybe" ] ; fno:returns [ fno:predicate fn:o ] .',), MappingSyntaxError, "Parameters"),
    "Output-no-predicate": (('fn:f a fno:Function ; fno:name "f" ; fno:expects [ fno:predicate fn:a ] ; fno:returns [ fno:required true ] .',), MappingSyntaxError, "Output"),
}


@pytest.mark.parametrize("name", sorted(ACCEPT))
def test_grammar_accepts(name):
    doc = parse(*ACCEPT[name])
    assert validate_document(doc) == [] or name == "joinCondition-function-child"


@pytest.mark.parametrize("name", sorted(REJECT))
def test_grammar_rejects(name):
    chunks, exc, production = REJECT[name]
    with pytest.raises(exc) as info:
        parse(*chunks)
    if production is not None:
        assert info.value.expected == production


def test_every_production_has_both_outcomes():
    productions = [
        "File", "SetTriplesMap", "TriplesMap", "logicalMap", "subjectMap", "predicateObjectMap",
        "Execution", "Function", "Parameters", "Output", "objectMap", "refObjectMap",
        "joinCondition", "predicateMap", "FunctionMap",
    ]
    accepted = {k.split("-")[0] for k in ACCEPT}
    rejected = {k.split("-")[0] for k in REJECT}
    # Function, Parameters and Output share one accepting declaration.
    accepted |= {"Parameters", "Output"}
    assert set(productions) <= accepted
    assert set(productions) <= rejected


def test_motivating_example_structure():
    doc = load_mapping(FIXTURES / "motivating.ttl")
    assert len(doc.triples_maps) == 1
    assert len(doc.function_maps) == 1
    fm = doc.function_maps[0]
    assert fm.function == FN + "variantId"
    assert [p.predicate for p in fm.parameters] == [FN + "gene", FN + "hgvs"]
    assert fm.input_attributes == ("gene", "hgvs")


def test_shared_function_structure():
    doc = load_mapping(FIXTURES / "shared_function.ttl")
    assert [t.id for t in doc.triples_maps] == [BASE + "TriplesMap1", BASE + "TriplesMap2"]
    for t in doc.triples_maps:
        refs = t.function_refs()
        assert [(loc[0], ref) for loc, ref in refs] == [("object", FunctionMapRef(BASE + "FunctionMap1"))]
    assert doc.function_maps == (
        FunctionMap(BASE + "FunctionMap1", SIMPLE_BENCH, (Parameter(FN + "value", TermMap.reference("Mutation genome position")),)),
    )
    assert doc.triples_maps[0].logical_source == SourceDescriptor.csv("source1.csv")
    assert validate_document(doc) == []


def test_subject_function_with_class():
    doc = load_mapping(FIXTURES / "subject_function.ttl")
    t = doc.triples_maps[0]
    assert t.subject.term == FunctionMapRef(BASE + "FunctionMap1")
    assert t.subject.classes == ("http://example.org/vocab#GenomePosition",)
    fm = doc.function_maps[0]
    assert fm.term_type is TermType.IRI
    assert fm.parameters[0].value == TermMap.constant_literal("http://example.org/position/")


def test_empty_document():
    doc = parse()
    assert doc.triples_maps == () and doc.function_maps == ()
    assert doc.prefixes["rr"] == "http://www.w3.org/ns/r2rml#"


def test_blank_nodes_get_deterministic_ids():
    text = HEAD + "[] a rr:TriplesMap ; rml:logicalSource " + SRC + " ; rr:subjectMap " + SUBJ + " ."
    a = parse_mapping_document(text)
    b = parse_mapping_document(text)
    assert a.triples_maps[0].id == b.triples_maps[0].id == BASE + "_b1"


def test_no_prefixed_or_relative_names_survive():
    doc = load_mapping(FIXTURES / "shared_function.ttl")
    iris = [t.id for t in doc.triples_maps] + [c for t in doc.triples_maps for c in t.subject.classes]
    iris += [p.value for t in doc.triples_maps for pom in t.predicate_object_maps for p in pom.predicates]
    assert all(i.startswith("http://") for i in iris)


def test_constant_object_literal_and_language():
    doc = parse(tm(poms=pom('rr:predicate ex:p ; rr:object "hallo"@de')))
    assert doc.triples_maps[0].predicate_object_maps[0].objects == (TermMap.constant_literal("hallo", language="de"),)


def test_sql_source_descriptor():
    doc = parse(tm(source='[ rml:source "db.sqlite" ; rml:query "SELECT * FROM t" ; rml:referenceFormulation rr:SQL2008 ]'))
    assert doc.triples_maps[0].logical_source == SourceDescriptor.sql("SELECT * FROM t", "db.sqlite")


def test_join_condition_with_function_is_parsed():
    doc = parse(*ACCEPT["joinCondition-function-child"])
    ref = doc.triples_maps[0].predicate_object_maps[0].objects[0]
    assert isinstance(ref, RefObjectMap)
    assert ref.join_conditions == (JoinCondition(FunctionMapRef(BASE + "F"), "y"),)


class TestValidate:
    def test_missing_parent(self):
        doc = load_mapping(FIXTURES / "shared_function.ttl")
        t = doc.triples_maps[0]
        broken = t.__class__(
            t.id, t.logical_source, t.subject,
            t.predicate_object_maps[:1]
            + (t.predicate_object_maps[0].__class__(t.predicate_object_maps[0].predicates, (RefObjectMap(BASE + "Gone"),)),),
        )
        diags = validate_document(doc.evolve(triples_maps=(broken, doc.triples_maps[1])))
        assert [d.kind for d in diags] == ["UnresolvedReference"]

    def test_nested_function(self):
        doc = parse(
            tm(poms=pom("rr:predicate ex:p ; rr:objectMap <#Outer>")),
            """<#Outer> fnml:functionValue [ fno:executes fn:simpleBench ;
                rr:predicateObjectMap [ rr:predicate fn:value ; rr:objectMap <#F> ] ] .""",
            FUNC,
        )
        diags = validate_document(doc)
        assert [d.kind for d in diags] == ["UnsupportedConstruct"]
        assert "nested" in diags[0].message

    def test_unresolved_function(self):
        doc = load_mapping(FIXTURES / "shared_function.ttl")
        diags = validate_document(doc.evolve(function_maps=()))
        assert {d.kind for d in diags} == {"UnresolvedReference"}

    def test_duplicate_ids(self):
        doc = load_mapping(FIXTURES / "shared_function.ttl")
        diags = validate_document(doc.evolve(triples_maps=doc.triples_maps + doc.triples_maps[:1]))
        assert [d.kind for d in diags] == ["DuplicateId"]

    def test_template_without_placeholder_is_invalid(self):
        doc = load_mapping(FIXTURES / "shared_function.ttl")
        t = doc.triples_maps[1]
        bad = t.__class__(t.id, t.logical_source, t.subject.__class__(TermMap.template("http://ex/fixed")))
        diags = validate_document(doc.evolve(triples_maps=(doc.triples_maps[0], bad)))
        assert [d.kind for d in diags] == ["InvalidTermMap"]

    def test_unsupported_source_flagged(self):
        doc = load_mapping(FIXTURES / "shared_function.ttl")
        t = doc.triples_maps[1]
        xml = t.__class__(t.id, SourceDescriptor("csv-file", "a.xml", "XPath"), t.subject, t.predicate_object_maps)
        diags = validate_document(doc.evolve(triples_maps=(doc.triples_maps[0], xml)))
        assert [d.kind for d in diags] == ["UnsupportedConstruct"]
