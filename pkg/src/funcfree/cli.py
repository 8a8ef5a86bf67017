"""Command-line entry point: ``funcfree <rewrite|materialize|diff|gen|bench>``."""
from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import FuncFreeError, InvalidDocument
from .functions import default_registry
from .materialize import materialize, ntriples_lines, read_ntriples, serialize_ntriples
from .parser import load_mapping
from .rewrite import MODES, rewrite_system
from .serializer import write_mapping
from .sources import SourceContext
from .testbed import PIPELINES, TestbedSpec, run_bench, write_results, write_testbed


def _context(args) -> SourceContext:
    roots = list(args.sources or [])
    roots.append(str(Path(args.mapping).resolve().parent))
    return SourceContext(roots, args.sql)


def cmd_rewrite(args) -> int:
    doc = load_mapping(args.mapping)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = rewrite_system(doc, _context(args), args.mode, out)
    target = out / "rewritten.ttl"
    if result.document == doc:
        shutil.copyfile(args.mapping, target)
    else:
        write_mapping(result.document, target)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(result.report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    report = result.report
    print(
        f"rewrote {len(report.removed_maps)} TriplesMaps into {len(report.created_maps)}; "
        f"{len(report.generated_sources)} generated sources; wrote {target}"
    )
    return 0


def cmd_materialize(args) -> int:
    doc = load_mapping(args.mapping)
    triples = materialize(doc, _context(args))
    if args.out:
        serialize_ntriples(triples, args.out)
    else:
        for line in ntriples_lines(triples):
            print(line)
    return 0


def cmd_diff(args) -> int:
    left = read_ntriples(args.graph_a)
    right = read_ntriples(args.graph_b)
    if left == right:
        print(f"equal: {len(left)} triples")
        return 0
    for line in ntriples_lines(left - right):
        print(f"- {line}")
    for line in ntriples_lines(right - left):
        print(f"+ {line}")
    return 1


def _spec(args) -> TestbedSpec:
    return TestbedSpec(
        rows=args.rows,
        duplicate_rate=args.dup_rate,
        triples_maps=args.maps,
        function=args.function,
        backend=args.backend,
        seed=args.seed,
        dup_mode=args.dup_mode,
    )


def cmd_gen(args) -> int:
    spec = _spec(args)
    source, _ = write_testbed(spec, args.out)
    print(f"{spec.config_id}: wrote {source.connection or source.locator} and mapping.ttl to {args.out}")
    return 0


def cmd_bench(args) -> int:
    spec = _spec(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_bench(spec, out / spec.config_id, args.pipelines, args.repeats)
    write_results([result], out / "bench.csv", out / "bench.json")
    print(f"{'pipeline':<14}{'total s':>10}{'rewrite s':>11}{'triples':>10}{'calls':>10}")
    for pipeline, t in result.timings.items():
        print(
            f"{pipeline:<14}{t['total']:>10.3f}{t['rewrite']:>11.3f}"
            f"{result.triple_counts[pipeline]:>10}{result.eval_counts[pipeline]:>10}"
        )
    return 0


def _add_sources(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mapping", required=True, help="RML+FnO mapping file (Turtle)")
    p.add_argument(
        "--sources",
        action="append",
        metavar="DIR",
        help="directory for relative CSV paths; repeatable (the mapping's directory is always searched)",
    )
    p.add_argument("--sql", metavar="DB", help="default SQLite database for SQL logical sources")


def _add_spec(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--dup-rate", type=float, default=0.25, help="fraction of duplicated records, in [0, 1)")
    p.add_argument("--maps", type=int, default=4, help="TriplesMaps sharing the FunctionMap")
    p.add_argument("--function", choices=("simple", "complex"), default="simple")
    p.add_argument("--backend", choices=("csv", "sql"), default="csv")
    p.add_argument("--dup-mode", choices=("record", "key"), default="record")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funcfree", description="Rewrite RML+FnO mappings into function-free RML."
    )
    parser.add_argument("--list-functions", action="store_true", help="print the built-in functions and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("rewrite", help="rewrite a mapping and generate its sources")
    _add_sources(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mode", choices=MODES, default="full")
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("materialize", help="execute a mapping and write sorted N-Triples")
    _add_sources(p)
    p.add_argument("--out", help="N-Triples file (default: stdout)")
    p.set_defaults(func=cmd_materialize)

    p = sub.add_parser("diff", help="compare two N-Triples files as sets")
    p.add_argument("graph_a")
    p.add_argument("graph_b")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("gen", help="generate a synthetic testbed")
    _add_spec(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="benchmark naive and rewritten pipelines")
    _add_spec(p)
    p.add_argument("--out", required=True)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--pipelines", nargs="+", choices=PIPELINES, default=list(PIPELINES))
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_functions:
        for impl in default_registry():
            params = ", ".join(p.rsplit("#", 1)[-1] for p in impl.signature.param_predicates)
            print(f"{impl.name}({params})")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except InvalidDocument as exc:
        for diag in exc.diagnostics:
            print(f"error: {diag}", file=sys.stderr)
        return 1
    except (FuncFreeError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
