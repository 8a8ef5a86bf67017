"""Worked examples pinned byte for byte after their structure and graphs were checked."""
import json
import shutil
from pathlib import Path

import pytest

from funcfree.materialize import materialize, serialize_ntriples
from funcfree.model import RefObjectMap
from funcfree.parser import load_mapping
from funcfree.rewrite import rewrite_system
from funcfree.serializer import write_mapping
from funcfree.sources import SourceContext

from conftest import FIXTURES

GOLDENS = Path(__file__).parent / "goldens"
BASE = "http://example.org/mapping#"
POS = "Mutation genome position"


def produce(name, work):
    """Rewrite and materialize fixture ``name`` into ``work``; return the files written."""
    src = work / "src"
    shutil.copytree(FIXTURES, src)
    out = work / "out"
    doc = load_mapping(src / f"{name}.ttl")
    result = rewrite_system(doc, SourceContext([src]), "full", out)
    write_mapping(result.document, out / "rewritten.ttl")
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(result.report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    rewritten = load_mapping(out / "rewritten.ttl")
    serialize_ntriples(materialize(rewritten, SourceContext([out, src])), out / "graph.nt")
    return out, result


def golden_mismatches(name, work):
    out, _ = produce(name, work)
    expected = sorted(p.name for p in (GOLDENS / name).iterdir())
    got = sorted(p.name for p in out.iterdir())
    if got != expected:
        return [f"files {got} != {expected}"]
    return [f for f in expected if (out / f).read_bytes() != (GOLDENS / name / f).read_bytes()]


@pytest.mark.parametrize("name", ["shared_function", "subject_function"])
def test_golden_bytes(name, tmp_path):
    assert golden_mismatches(name, tmp_path / "a") == []
    assert golden_mismatches(name, tmp_path / "b") == []


def test_shared_function_structure(tmp_path):
    _, result = produce("shared_function", tmp_path)
    doc = result.document
    output_map = doc.triples_map(BASE + "TM_F_FunctionMap1")
    assert output_map.subject.term.value == "functionOutput"
    assert output_map.logical_source.locator == "output_FunctionMap1.csv"
    joins = [
        o
        for t in doc.triples_maps
        for p in t.predicate_object_maps
        for o in p.objects
        if isinstance(o, RefObjectMap)
    ]
    assert len(joins) == 2
    for j in joins:
        assert j.parent_triples_map == output_map.id
        assert [(c.child, c.parent) for c in j.join_conditions] == [(POS, POS)]


def test_generated_sources_collapse_shared_position():
    # the shared position collapses rows 2 and 4 of the source
    output = (GOLDENS / "shared_function" / "output_FunctionMap1.csv").read_text().splitlines()
    assert output[0] == f"{POS},functionOutput"
    assert len(output) == 1 + 3
    project = (GOLDENS / "shared_function" / "project_TriplesMap1.csv").read_text().splitlines()
    assert project[0] == f"GENOMIC_MUTATION_ID,Primary site,{POS}"


def test_subject_function_structure(tmp_path):
    _, result = produce("subject_function", tmp_path)
    assert len(result.document.triples_maps) == 3
    main = result.document.triples_map(BASE + "TriplesMap1_rw")
    assert main.subject.term.value == "functionOutput"
    first = main.predicate_object_maps[0]
    parent = result.document.triples_map(first.objects[0].parent_triples_map)
    assert parent.subject.term.value == "Mutation"


@pytest.mark.parametrize("name", ["shared_function", "subject_function"])
def test_golden_graph_matches_original(name, fixtures_dir):
    direct = materialize(load_mapping(fixtures_dir / f"{name}.ttl"), SourceContext([fixtures_dir]))
    path = fixtures_dir / "direct.nt"
    serialize_ntriples(direct, path)
    assert path.read_bytes() == (GOLDENS / name / "graph.nt").read_bytes()
