import json
import subprocess
import sys

from funcfree.cli import main
from funcfree.materialize import read_ntriples

from conftest import FIXTURES
from test_parser import HEAD


def test_no_command(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_list_functions(capsys):
    assert main(["--list-functions"]) == 0
    out = capsys.readouterr().out
    assert "http://example.org/functions#variantId(gene, hgvs)" in out
    assert "simpleBench(value)" in out
    assert "complexBench(value1, value2)" in out


def test_rewrite_shared_function(fixtures_dir, capsys):
    out = fixtures_dir / "out"
    code = main(["rewrite", "--mapping", str(fixtures_dir / "shared_function.ttl"), "--out", str(out)])
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "output_FunctionMap1.csv",
        "project_TriplesMap1.csv",
        "project_TriplesMap2.csv",
        "report.json",
        "rewritten.ttl",
    ]
    report = json.loads((out / "report.json").read_text())
    assert report["mode"] == "full"
    assert "rewrote 2 TriplesMaps into 3" in capsys.readouterr().out


def test_rewrite_dtr1_only_mode(fixtures_dir):
    out = fixtures_dir / "out"
    assert main(["rewrite", "--mapping", str(fixtures_dir / "shared_function.ttl"), "--out", str(out), "--mode", "dtr1-only"]) == 0
    assert sorted(p.name for p in out.glob("*.csv")) == ["output_FunctionMap1.csv"]


def test_rewrite_sources_flag(tmp_path, fixtures_dir):
    mapping = tmp_path / "m.ttl"
    mapping.write_text((fixtures_dir / "shared_function.ttl").read_text())
    args = ["rewrite", "--mapping", str(mapping), "--out", str(tmp_path / "out"), "--sources", str(fixtures_dir)]
    assert main(args) == 0


def test_rewrite_empty_mapping(tmp_path):
    mapping = tmp_path / "empty.ttl"
    mapping.write_text(HEAD)
    assert main(["rewrite", "--mapping", str(mapping), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "rewritten.ttl").read_bytes() == mapping.read_bytes()
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["generated_sources"] == [] and report["created_maps"] == []


def test_rewrite_unknown_function(fixtures_dir, capsys):
    mapping = fixtures_dir / "bad.ttl"
    mapping.write_text((fixtures_dir / "shared_function.ttl").read_text().replace("fn:simpleBench", "fn:noSuchThing"))
    assert main(["rewrite", "--mapping", str(mapping), "--out", str(fixtures_dir / "out")]) == 1
    assert "error: UnknownFunction" in capsys.readouterr().err


def test_rewrite_syntax_error(tmp_path, capsys):
    mapping = tmp_path / "bad.ttl"
    mapping.write_text("this is not turtle")
    assert main(["rewrite", "--mapping", str(mapping), "--out", str(tmp_path / "out")]) == 1
    assert "error: MappingSyntaxError" in capsys.readouterr().err


def test_missing_mapping_file(tmp_path, capsys):
    assert main(["materialize", "--mapping", str(tmp_path / "none.ttl")]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_materialize_stdout(fixtures_dir, capsys):
    assert main(["materialize", "--mapping", str(fixtures_dir / "motivating.ttl")]) == 0
    out = capsys.readouterr().out
    assert '<http://example.org/mutation/COSV1001> <http://example.org/vocab#variantId> "BCR_1001C~T" .' in out


def test_materialize_then_diff_equal(fixtures_dir, capsys):
    out = fixtures_dir / "out"
    assert main(["rewrite", "--mapping", str(fixtures_dir / "shared_function.ttl"), "--out", str(out)]) == 0
    a, b = fixtures_dir / "a.nt", fixtures_dir / "b.nt"
    assert main(["materialize", "--mapping", str(fixtures_dir / "shared_function.ttl"), "--out", str(a)]) == 0
    rewritten = ["materialize", "--mapping", str(out / "rewritten.ttl"), "--sources", str(fixtures_dir), "--out", str(b)]
    assert main(rewritten) == 0
    capsys.readouterr()
    assert main(["diff", str(a), str(b)]) == 0
    assert capsys.readouterr().out.strip() == "equal: 18 triples"


def test_diff_same_file(tmp_path):
    path = tmp_path / "x.nt"
    path.write_text("<http://ex/a> <http://ex/p> \"1\" .\n")
    assert main(["diff", str(path), str(path)]) == 0


def test_diff_one_triple(tmp_path, capsys):
    a, b = tmp_path / "a.nt", tmp_path / "b.nt"
    a.write_text('<http://ex/a> <http://ex/p> "1" .\n<http://ex/a> <http://ex/p> "2" .\n')
    b.write_text('<http://ex/a> <http://ex/p> "1" .\n')
    assert main(["diff", str(a), str(b)]) == 1
    assert capsys.readouterr().out.splitlines() == ['- <http://ex/a> <http://ex/p> "2" .']


def test_gen(tmp_path, capsys):
    args = ["gen", "--rows", "40", "--dup-rate", "0.5", "--maps", "3", "--function", "complex", "--out", str(tmp_path), "--seed", "2"]
    assert main(args) == 0
    assert (tmp_path / "mutations.csv").exists()
    assert (tmp_path / "mapping.ttl").exists()
    assert "r40-d50-m3-complex-csv-s2" in capsys.readouterr().out


def test_gen_sql_then_materialize(tmp_path, capsys):
    assert main(["gen", "--rows", "30", "--backend", "sql", "--out", str(tmp_path)]) == 0
    out = tmp_path / "g.nt"
    assert main(["materialize", "--mapping", str(tmp_path / "mapping.ttl"), "--out", str(out)]) == 0
    assert len(read_ntriples(out)) > 0


def test_gen_invalid_spec(tmp_path, capsys):
    assert main(["gen", "--dup-rate", "1.5", "--out", str(tmp_path)]) == 1
    assert "duplicate_rate" in capsys.readouterr().err


def test_bench(tmp_path, capsys):
    args = ["bench", "--rows", "60", "--maps", "2", "--repeats", "1", "--out", str(tmp_path), "--pipelines", "naive", "funmap"]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "naive" in out and "funmap" in out
    assert (tmp_path / "bench.csv").exists()
    assert json.loads((tmp_path / "bench.json").read_text())[0]["config_id"] == "r60-d25-m2-simple-csv-s0"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "funcfree", "materialize", "--mapping", str(FIXTURES / "motivating.ttl")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "BCR_1001C~T" in proc.stdout
