"""Synthetic testbeds and the naive vs rewritten benchmark.

Datasets mimic a somatic-mutation export: 39 columns of which the generated
mappings use at most seven. Duplicates are exact copies of earlier records
(``dup_mode="record"``) or copies of the mapping-relevant columns only
(``dup_mode="key"``).
"""
from __future__ import annotations

import csv
import json
import math
import random
import sqlite3
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import EquivalenceFailure
from .functions import COMPLEX_BENCH, FN, SIMPLE_BENCH, CountingEvaluator, default_registry
from .materialize import materialize
from .model import (
    FunctionMap,
    FunctionMapRef,
    MappingDocument,
    Parameter,
    PredicateObjectMap,
    SourceDescriptor,
    SubjectMap,
    TermMap,
    TriplesMap,
)
from .parser import DEFAULT_BASE
from .rewrite import rewrite_system
from .serializer import write_mapping
from .sources import Relation, SourceContext, quote_ident, write_csv
from .vocab import DEFAULT_PREFIXES

COLUMNS = (
    "gene", "Accession Number", "Gene CDS length", "HGNC ID", "Sample name",
    "ID_sample", "ID_tumour", "Primary site", "Site subtype 1", "Site subtype 2",
    "Site subtype 3", "Primary histology", "Histology subtype 1", "Histology subtype 2",
    "Histology subtype 3", "Genome-wide screen", "GENOMIC_MUTATION_ID", "LEGACY_MUTATION_ID",
    "MUTATION_ID", "Mutation CDS", "Mutation AA", "Mutation Description", "Mutation zygosity",
    "LOH", "GRCh", "Mutation genome position", "Mutation strand", "SNP",
    "Resistance Mutation", "FATHMM prediction", "FATHMM score", "Mutation somatic status",
    "Pubmed_PMID", "ID_STUDY", "Sample Type", "Tumour origin", "Age", "HGVSP", "hgvs",
)
KEY_COLUMNS = ("GENOMIC_MUTATION_ID", "Primary site", "Mutation genome position", "gene", "hgvs", "Mutation AA", "Sample name")
TABLE = "mutations"
EX = "http://example.org/vocab#"

PIPELINES = ("naive", "funmap-minus", "funmap", "sql-pushdown")
_MODES = {"funmap-minus": "dtr1-only", "funmap": "full", "sql-pushdown": "sql-pushdown"}

_GENES = ("BCR", "KRAS", "BRAF", "TP53", "EGFR", "PIK3CA", "NRAS", "APC", "PTEN", "IDH1", "JAK2", "KIT")
_SITES = (
    "lung", "breast", "skin", "large intestine", "haematopoietic and lymphoid tissue",
    "central nervous system", "soft tissue", "thyroid", "liver", "prostate", "upper aerodigestive tract",
    "urinary tract", "pancreas", "stomach", "ovary", "kidney", "endometrium", "bone",
)
_HISTOLOGY = ("carcinoma", "malignant melanoma", "glioma", "lymphoid neoplasm", "sarcoma", "adenoma")
_BASES = "ACGT"


@dataclass(frozen=True)
class TestbedSpec:
    rows: int = 2000
    duplicate_rate: float = 0.25
    triples_maps: int = 4
    function: str = "simple"  # simple | complex
    backend: str = "csv"  # csv | sql
    seed: int = 0
    dup_mode: str = "record"  # record | key

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.rows < 1:
            raise ValueError("rows must be at least 1")
        if not 0 <= self.duplicate_rate < 1:
            raise ValueError("duplicate_rate must be in [0, 1)")
        if self.triples_maps < 1:
            raise ValueError("triples_maps must be at least 1")
        if self.function not in ("simple", "complex"):
            raise ValueError(f"unknown function kind {self.function!r}")
        if self.backend not in ("csv", "sql"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.dup_mode not in ("record", "key"):
            raise ValueError(f"unknown dup_mode {self.dup_mode!r}")

    @property
    def duplicates(self) -> int:
        return min(math.ceil(self.rows * self.duplicate_rate), self.rows - 1)

    @property
    def config_id(self) -> str:
        return (
            f"r{self.rows}-d{int(round(self.duplicate_rate * 100))}-m{self.triples_maps}"
            f"-{self.function}-{self.backend}-s{self.seed}"
        )


def _mutation(rng: random.Random, i: int) -> tuple[str, ...]:
    gene = rng.choice(_GENES)
    pos = rng.randrange(100, 4000)
    ref, alt = rng.sample(_BASES, 2)
    chrom = rng.randrange(1, 23)
    # Unique per record: the start coordinate is spaced by record number.
    start = 1_000_000 + i * 11 + rng.randrange(10)
    values = {
        "gene": gene,
        "Accession Number": f"ENST{rng.randrange(10**10):011d}",
        "Gene CDS length": str(rng.randrange(300, 9000)),
        "HGNC ID": str(rng.randrange(1, 50000)),
        "Sample name": f"TCGA-{rng.randrange(10**4):04d}",
        "ID_sample": str(rng.randrange(10**6, 10**7)),
        "ID_tumour": str(rng.randrange(10**6, 10**7)),
        "Primary site": rng.choice(_SITES),
        "Site subtype 1": rng.choice(("NS", "left", "right", "upper lobe")),
        "Site subtype 2": "NS",
        "Site subtype 3": "NS",
        "Primary histology": rng.choice(_HISTOLOGY),
        "Histology subtype 1": rng.choice(("NS", "adenocarcinoma", "squamous")),
        "Histology subtype 2": "NS",
        "Histology subtype 3": "NS",
        "Genome-wide screen": rng.choice("yn"),
        "GENOMIC_MUTATION_ID": f"COSV{50_000_000 + i:09d}",
        "LEGACY_MUTATION_ID": f"COSM{rng.randrange(10**7)}",
        "MUTATION_ID": str(rng.randrange(10**8)),
        "Mutation CDS": f"c.{pos}{ref}>{alt}",
        "Mutation AA": f"p.{rng.choice('ARNDCQEGHILKMFPSTWYV')}{pos // 3}{rng.choice('ARNDCQEGHILKMFPSTWYV')}",
        "Mutation Description": rng.choice(("Substitution - Missense", "Substitution - coding silent", "Nonsense")),
        "Mutation zygosity": rng.choice(("het", "hom", "")),
        "LOH": rng.choice("yn"),
        "GRCh": "38",
        "Mutation genome position": f"{chrom}:{start}-{start}",
        "Mutation strand": rng.choice("+-"),
        "SNP": rng.choice("yn"),
        "Resistance Mutation": "-",
        "FATHMM prediction": rng.choice(("PATHOGENIC", "NEUTRAL")),
        "FATHMM score": f"{rng.random():.5f}",
        "Mutation somatic status": rng.choice(("Confirmed somatic variant", "Reported in another cancer sample")),
        "Pubmed_PMID": str(rng.randrange(10**7, 10**8)),
        "ID_STUDY": str(rng.randrange(100, 1000)),
        "Sample Type": rng.choice(("surgery fresh/frozen", "cell-line", "NS")),
        "Tumour origin": rng.choice(("primary", "metastasis", "NS")),
        "Age": str(rng.randrange(18, 95)),
        "HGVSP": f"ENSP{rng.randrange(10**10):011d}:p.X{pos // 3}X",
        "hgvs": f"c.{pos}{ref}>{alt}",
    }
    return tuple(values[c] for c in COLUMNS)


def generate_relation(spec: TestbedSpec) -> Relation:
    """The testbed rows: unique records plus shuffled-in duplicates."""
    rng = random.Random(spec.seed)
    unique_count = spec.rows - spec.duplicates
    unique = [_mutation(rng, i) for i in range(unique_count)]
    key_idx = [COLUMNS.index(c) for c in KEY_COLUMNS]
    copies = []
    for n in range(spec.duplicates):
        original = unique[rng.randrange(unique_count)]
        if spec.dup_mode == "key":
            filler = list(_mutation(rng, unique_count + n))
            for i in key_idx:
                filler[i] = original[i]
            copies.append(tuple(filler))
        else:
            copies.append(original)
    rows = unique + copies
    rng.shuffle(rows)
    return Relation(COLUMNS, tuple(rows))


def generate_dataset(spec: TestbedSpec, out_dir) -> SourceDescriptor:
    """Write the testbed to ``out_dir`` as ``mutations.csv`` or ``mutations.db``.

    The returned descriptor is relative to ``out_dir``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rel = generate_relation(spec)
    if spec.backend == "csv":
        write_csv(rel, out_dir / f"{TABLE}.csv")
        return SourceDescriptor.csv(f"{TABLE}.csv")
    db = out_dir / f"{TABLE}.db"
    if db.exists():
        db.unlink()
    cols = ", ".join(f"{quote_ident(c)} TEXT" for c in COLUMNS)
    conn = sqlite3.connect(db)
    try:
        with conn:
            conn.execute(f"CREATE TABLE {TABLE} ({cols})")
            conn.executemany(f"INSERT INTO {TABLE} VALUES ({', '.join('?' for _ in COLUMNS)})", rel.rows)
    finally:
        conn.close()
    return SourceDescriptor.sql(f"SELECT * FROM {TABLE}", f"{TABLE}.db")


def _function_map(spec: TestbedSpec, base: str) -> FunctionMap:
    if spec.function == "simple":
        params = (Parameter(FN + "value", TermMap.reference("Mutation genome position")),)
        function = SIMPLE_BENCH
    else:
        params = (
            Parameter(FN + "value1", TermMap.reference("Primary site")),
            Parameter(FN + "value2", TermMap.reference("Mutation genome position")),
        )
        function = COMPLEX_BENCH
    return FunctionMap(base + "FunctionMap1", function, params)


_EXTRA_POMS = ("gene", "hgvs", "Mutation AA", "Sample name", None)


def generate_mappings(spec: TestbedSpec, source: SourceDescriptor, base: str = DEFAULT_BASE) -> MappingDocument:
    """``spec.triples_maps`` maps sharing one FunctionMap in object position."""
    frag = base.split("#", 1)[0] + "#"
    fm = _function_map(spec, frag)
    maps = []
    for i in range(1, spec.triples_maps + 1):
        poms = [
            PredicateObjectMap((TermMap.constant_iri(EX + "functionValue"),), (FunctionMapRef(fm.id),)),
            PredicateObjectMap((TermMap.constant_iri(EX + "primarySite"),), (TermMap.reference("Primary site"),)),
        ]
        extra = _EXTRA_POMS[(i - 1) % len(_EXTRA_POMS)]
        if extra is not None:
            pred = EX + extra.replace(" ", "")
            poms.append(PredicateObjectMap((TermMap.constant_iri(pred),), (TermMap.reference(extra),)))
        subject = SubjectMap(
            TermMap.template(f"http://example.org/mutation{i}/{{GENOMIC_MUTATION_ID}}"), (EX + "Mutation",)
        )
        maps.append(TriplesMap(f"{frag}TriplesMap{i}", source, subject, tuple(poms)))
    prefixes = dict(DEFAULT_PREFIXES)
    prefixes["ex"] = EX
    prefixes["fn"] = FN
    return MappingDocument(tuple(maps), (fm,), base, prefixes)


def write_testbed(spec: TestbedSpec, out_dir) -> tuple[SourceDescriptor, MappingDocument]:
    """Dataset plus ``mapping.ttl`` in ``out_dir``."""
    source = generate_dataset(spec, out_dir)
    doc = generate_mappings(spec, source)
    write_mapping(doc, Path(out_dir) / "mapping.ttl")
    return source, doc


# -- benchmark ------------------------------------------------------------------


@dataclass
class PipelineTiming:
    rewrite: list[float] = field(default_factory=list)
    materialize: list[float] = field(default_factory=list)

    @property
    def totals(self) -> list[float]:
        return [r + m for r, m in zip(self.rewrite, self.materialize)]

    def summary(self) -> dict:
        return {
            "rewrite": statistics.fmean(self.rewrite),
            "materialize": statistics.fmean(self.materialize),
            "total": statistics.fmean(self.totals),
            "runs": self.totals,
        }


@dataclass
class BenchResult:
    config_id: str
    spec: TestbedSpec
    timings: dict[str, dict] = field(default_factory=dict)
    triple_counts: dict[str, int] = field(default_factory=dict)
    eval_counts: dict[str, int] = field(default_factory=dict)

    def total(self, pipeline: str) -> float:
        return self.timings[pipeline]["total"]

    def to_dict(self) -> dict:
        return {
            "config_id": self.config_id,
            "spec": asdict(self.spec),
            "timings": self.timings,
            "triple_counts": self.triple_counts,
            "eval_counts": self.eval_counts,
        }

    def csv_rows(self) -> list[dict]:
        rows = []
        for pipeline, t in self.timings.items():
            rows.append(
                {
                    "config_id": self.config_id,
                    "pipeline": pipeline,
                    "rewrite_s": f"{t['rewrite']:.6f}",
                    "materialize_s": f"{t['materialize']:.6f}",
                    "total_s": f"{t['total']:.6f}",
                    "triples": self.triple_counts[pipeline],
                    "function_calls": self.eval_counts[pipeline],
                }
            )
        return rows


def _run_once(pipeline: str, doc: MappingDocument, root: Path, scratch: Path):
    context = SourceContext([root])
    evaluator = CountingEvaluator(default_registry())
    if pipeline == "naive":
        t0 = time.perf_counter()
        triples = materialize(doc, context, evaluator)
        return 0.0, time.perf_counter() - t0, triples, evaluator.total
    t0 = time.perf_counter()
    result = rewrite_system(doc, context, _MODES[pipeline], scratch / pipeline, evaluator)
    t1 = time.perf_counter()
    triples = materialize(result.document, result.context(SourceContext([root])))
    t2 = time.perf_counter()
    return t1 - t0, t2 - t1, triples, evaluator.total


def run_bench(
    spec: TestbedSpec,
    work_dir,
    pipelines: Sequence[str] = PIPELINES,
    repeats: int = 5,
    doc: Optional[MappingDocument] = None,
) -> BenchResult:
    """Time each pipeline ``repeats`` times after checking they agree.

    Rewriting (function evaluation and writing generated sources) counts
    towards the rewriting pipelines. ``sql-pushdown`` is skipped for CSV
    testbeds, where it would just repeat ``funmap``.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    root = Path(work_dir)
    if doc is None:
        _, doc = write_testbed(spec, root)
    pipelines = [p for p in pipelines if not (p == "sql-pushdown" and spec.backend != "sql")]
    unknown = set(pipelines) - set(PIPELINES)
    if unknown:
        raise ValueError(f"unknown pipelines {sorted(unknown)}")
    result = BenchResult(spec.config_id, spec)
    timings = {p: PipelineTiming() for p in pipelines}
    reference = None
    for p in pipelines:
        rw, mat, triples, calls = _run_once(p, doc, root, root / "generated")
        if reference is None:
            reference = (p, triples)
        elif triples != reference[1]:
            missing = len(reference[1] - triples)
            extra = len(triples - reference[1])
            raise EquivalenceFailure(
                f"{spec.config_id}: {p} differs from {reference[0]} ({missing} missing, {extra} extra triples)"
            )
        result.triple_counts[p] = len(triples)
        result.eval_counts[p] = calls
    for _ in range(repeats):
        for p in pipelines:
            rw, mat, _, _ = _run_once(p, doc, root, root / "generated")
            timings[p].rewrite.append(rw)
            timings[p].materialize.append(mat)
    result.timings = {p: t.summary() for p, t in timings.items()}
    return result


def write_results(results: Sequence[BenchResult], csv_path=None, json_path=None) -> None:
    if csv_path is not None:
        rows = [r for res in results for r in res.csv_rows()]
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            fields = ["config_id", "pipeline", "rewrite_s", "materialize_s", "total_s", "triples", "function_calls"]
            writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump([r.to_dict() for r in results], fh, indent=2, sort_keys=True)
            fh.write("\n")
