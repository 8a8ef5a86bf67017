import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funcfree.functions import CONCAT, FN, SIMPLE_BENCH
from funcfree.model import (
    FunctionMap,
    FunctionMapRef,
    JoinCondition,
    MappingDocument,
    Parameter,
    PredicateObjectMap,
    RefObjectMap,
    SourceDescriptor,
    SubjectMap,
    TermMap,
    TermType,
    TriplesMap,
)
from funcfree.parser import load_mapping, parse_mapping_document
from funcfree.rewrite import rewrite_system
from funcfree.serializer import serialize_mapping_document, write_mapping
from funcfree.testbed import TestbedSpec, generate_mappings
from funcfree.vocab import DEFAULT_PREFIXES

from conftest import FIXTURES
from test_parser import ACCEPT, HEAD

FIXTURE_FILES = sorted(p.name for p in FIXTURES.glob("*.ttl"))


def round_trip(doc):
    text = serialize_mapping_document(doc)
    again = parse_mapping_document(text, doc.base_iri)
    return text, again


@pytest.mark.parametrize("name", FIXTURE_FILES)
def test_fixture_round_trip(name):
    doc = load_mapping(FIXTURES / name)
    text, again = round_trip(doc)
    assert again == doc
    assert serialize_mapping_document(again) == text


@pytest.mark.parametrize("name", sorted(ACCEPT))
def test_grammar_inputs_round_trip(name):
    doc = parse_mapping_document(HEAD + "".join(ACCEPT[name]))
    assert round_trip(doc)[1] == doc


@pytest.mark.parametrize("mode", ["full", "dtr1-only", "sql-pushdown"])
@pytest.mark.parametrize("name", ["shared_function.ttl", "subject_function.ttl", "motivating.ttl"])
def test_rewritten_documents_round_trip(name, mode, context, tmp_path):
    doc = load_mapping(FIXTURES / name)
    rewritten = rewrite_system(doc, context, mode, tmp_path).document
    text, again = round_trip(rewritten)
    assert again == rewritten
    assert "rr:joinCondition" in text
    assert "fnml:functionValue" not in text


def test_testbed_mapping_round_trip():
    for function in ("simple", "complex"):
        doc = generate_mappings(TestbedSpec(triples_maps=6, function=function), SourceDescriptor.csv("m.csv"))
        assert round_trip(doc)[1] == doc


def test_empty_document_is_prefix_block():
    doc = MappingDocument(prefixes={"rr": "http://www.w3.org/ns/r2rml#"})
    assert serialize_mapping_document(doc) == "@prefix rr: <http://www.w3.org/ns/r2rml#> .\n"


def test_custom_base_is_written():
    doc = MappingDocument(base_iri="http://other.org/m", prefixes={})
    text = serialize_mapping_document(doc)
    assert text.startswith("@base <http://other.org/m> .")
    assert parse_mapping_document(text) == doc


def test_output_is_deterministic(tmp_path):
    doc = load_mapping(FIXTURES / "shared_function.ttl")
    shuffled = doc.evolve(triples_maps=tuple(reversed(doc.triples_maps)))
    write_mapping(doc, tmp_path / "a.ttl")
    write_mapping(shuffled, tmp_path / "b.ttl")
    assert (tmp_path / "a.ttl").read_bytes() == (tmp_path / "b.ttl").read_bytes()


# -- random documents ------------------------------------------------------------

BASE = "http://example.org/mapping#"
names = st.text(st.characters(codec="utf-8", exclude_characters="{}\\\x00", exclude_categories=("Cs", "Cc")), min_size=1, max_size=8)
literal_text = st.text(st.characters(codec="utf-8", exclude_categories=("Cs",)), max_size=12)
iris = st.sampled_from(["http://example.org/vocab#p", "http://example.org/vocab#q", "http://other.org/x/y", "urn:z:1"])


@st.composite
def term_maps(draw, position):
    kind = draw(st.sampled_from(["template", "reference", "constant"]))
    if kind == "template":
        return TermMap.template("http://ex/" + "/".join("{" + draw(names) + "}" for _ in range(draw(st.integers(1, 2)))))
    if kind == "reference":
        tt = draw(st.sampled_from([None, TermType.IRI, TermType.LITERAL] if position == "object" else [None, TermType.IRI]))
        lang = draw(st.sampled_from([None, "en", "pt-br"])) if tt is TermType.LITERAL else None
        return TermMap.reference(draw(names), term_type=tt, language=lang)
    if position == "object" and draw(st.booleans()):
        return TermMap.constant_literal(draw(literal_text), draw(st.sampled_from([None, "http://www.w3.org/2001/XMLSchema#string"])))
    return TermMap.constant_iri(draw(iris))


@st.composite
def documents(draw):
    n = draw(st.integers(0, 3))
    ids = [f"{BASE}TM{i}" for i in range(n)]
    fms = []
    if draw(st.booleans()):
        fms.append(FunctionMap(BASE + "F1", SIMPLE_BENCH, (Parameter(FN + "value", TermMap.reference(draw(names))),)))
    if draw(st.booleans()):
        fms.append(
            FunctionMap(
                BASE + "F2", CONCAT,
                (Parameter(FN + "left", TermMap.constant_literal(draw(literal_text))), Parameter(FN + "right", TermMap.reference(draw(names)))),
                term_type=TermType.IRI,
            )
        )
    maps = []
    for tid in ids:
        src = draw(st.sampled_from([SourceDescriptor.csv("a b.csv"), SourceDescriptor.sql('SELECT "x" FROM t', "d.db")]))
        poms = []
        for _ in range(draw(st.integers(0, 3))):
            choice = draw(st.integers(0, 2))
            if choice == 0 or (choice == 1 and not fms) or (choice == 2 and not ids):
                obj = draw(term_maps("object"))
            elif choice == 1:
                obj = FunctionMapRef(draw(st.sampled_from(fms)).id)
            else:
                conds = tuple(JoinCondition(draw(names), draw(names)) for _ in range(draw(st.integers(1, 2))))
                obj = RefObjectMap(draw(st.sampled_from(ids)), conds)
            poms.append(PredicateObjectMap((TermMap.constant_iri(draw(iris)),), (obj,)))
        subject = draw(term_maps("subject"))
        classes = tuple(draw(st.lists(iris, max_size=2, unique=True)))
        maps.append(TriplesMap(tid, src, SubjectMap(subject, classes), tuple(poms)))
    return MappingDocument(tuple(maps), tuple(fms), "http://example.org/mapping", dict(DEFAULT_PREFIXES) | {"fn": FN})


@settings(max_examples=200, deadline=None)
@given(documents())
def test_random_documents_round_trip(doc):
    text, again = round_trip(doc)
    assert again == doc
    assert serialize_mapping_document(again) == text
