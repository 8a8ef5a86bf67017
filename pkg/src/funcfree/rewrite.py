"""Function-free rewriting of RML+FnO mapping documents.

A FunctionMap is evaluated once per distinct tuple of its input attributes
(the *output* source) and every TriplesMap that used it is rewritten to join
against a generated TriplesMap over that source. TriplesMaps are also
narrowed to a duplicate-free projection of the attributes they reference
(the *project* source). The knowledge graph produced by the rewritten
document equals the one produced by the original, as a set of triples.

Three modes are supported:

``full``
    output and project sources, joins through generated TriplesMaps.
``dtr1-only``
    output sources only; rewritten TriplesMaps keep their original source.
``sql-pushdown``
    for SQL origins the projection becomes a ``SELECT DISTINCT`` over the
    original query and the join to the output table is fused into the
    logical-source query, so no joinCondition is emitted. CSV origins fall
    back to ``full``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

from .errors import (
    CrossSourceFunction,
    InvalidDocument,
    PreconditionViolation,
    UnknownAttribute,
    UnsupportedConstruct,
)
from .functions import CountingEvaluator, default_registry
from .materialize import default_term_type, function_evaluator
from .model import (
    FunctionMap,
    FunctionMapRef,
    JoinCondition,
    MappingDocument,
    Position,
    PredicateObjectMap,
    RefObjectMap,
    SourceDescriptor,
    SubjectMap,
    TermMap,
    TriplesMap,
    local_name,
    validate_document,
)
from .sources import (
    Relation,
    SourceContext,
    distinct_project,
    push_distinct_to_sql,
    quote_ident,
    write_csv,
    write_sql_table,
)

MODES = ("full", "dtr1-only", "sql-pushdown")
OUTPUT_ATTRIBUTE = "functionOutput"

_BLOCKING = {
    "UnresolvedReference",
    "DuplicateId",
    "InvalidTermMap",
    "InvalidSource",
    "InvalidJoin",
    "InvalidFunctionMap",
    "UnknownParameter",
}


@dataclass
class GeneratedSource:
    name: str
    provenance: str  # "dtr1-output" | "dtr2-project"
    defined_by: str  # FunctionMap id for outputs, TriplesMap id for projections
    origin: SourceDescriptor
    attributes: tuple[str, ...]
    relation: Optional[Relation] = None  # None when the projection is pushed into SQL
    descriptor: Optional[SourceDescriptor] = None
    output_attribute: Optional[str] = None

    def to_dict(self) -> dict:
        desc = self.descriptor
        return {
            "name": self.name,
            "provenance": self.provenance,
            "defined_by": self.defined_by,
            "origin": self.origin.locator,
            "attributes": list(self.attributes),
            "output_attribute": self.output_attribute,
            "rows": None if self.relation is None else len(self.relation),
            "kind": None if desc is None else desc.kind,
            "locator": None if desc is None else desc.locator,
        }


@dataclass
class FunctionPlan:
    function_map: FunctionMap
    inputs: tuple[str, ...]
    output: str
    origin: SourceDescriptor
    users: list[tuple[str, tuple]]


@dataclass
class RewritePlan:
    mode: str
    functions: dict[str, FunctionPlan]
    attributes: dict[str, tuple[str, ...]]
    steps: list[str] = field(default_factory=list)


@dataclass
class RewriteReport:
    mode: str
    generated_sources: list[GeneratedSource] = field(default_factory=list)
    created_maps: list[str] = field(default_factory=list)
    removed_maps: list[str] = field(default_factory=list)
    rewritten_maps: list[str] = field(default_factory=list)
    function_eval_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "generated_sources": [g.to_dict() for g in self.generated_sources],
            "created_maps": list(self.created_maps),
            "removed_maps": list(self.removed_maps),
            "rewritten_maps": list(self.rewritten_maps),
            "function_eval_counts": dict(self.function_eval_counts),
        }


class RewriteResult(NamedTuple):
    document: MappingDocument
    sources: list[SourceDescriptor]
    report: RewriteReport
    out_dir: Optional[Path] = None

    def context(self, base: SourceContext) -> SourceContext:
        """A fresh context that also resolves the generated CSV files."""
        if self.out_dir is None:
            return base.fresh()
        return base.with_roots(self.out_dir)


# -- analysis -------------------------------------------------------------------


def _spec_attributes(doc: MappingDocument, spec) -> tuple[str, ...]:
    if isinstance(spec, FunctionMapRef):
        fm = doc.function_map(spec.id)
        return fm.input_attributes if fm is not None else ()
    if isinstance(spec, TermMap):
        return spec.attributes
    return ()


def referenced_attributes(doc: MappingDocument, tm: TriplesMap) -> tuple[str, ...]:
    """Every attribute of ``tm``'s source that the document needs from it.

    Includes attributes used by the subject, predicates and objects (the
    inputs of FunctionMaps too), child attributes of its joins and parent
    attributes of joins pointing at it.
    """
    attrs: dict[str, None] = {}
    attrs.update(dict.fromkeys(_spec_attributes(doc, tm.subject.term)))
    for pom in tm.predicate_object_maps:
        for pred in pom.predicates:
            attrs.update(dict.fromkeys(_spec_attributes(doc, pred)))
        for obj in pom.objects:
            if isinstance(obj, RefObjectMap):
                attrs.update(dict.fromkeys(jc.child for jc in obj.join_conditions if isinstance(jc.child, str)))
            else:
                attrs.update(dict.fromkeys(_spec_attributes(doc, obj)))
    for other in doc.triples_maps:
        for pom in other.predicate_object_maps:
            for obj in pom.objects:
                if isinstance(obj, RefObjectMap) and obj.parent_triples_map == tm.id:
                    attrs.update(
                        dict.fromkeys(jc.parent for jc in obj.join_conditions if isinstance(jc.parent, str))
                    )
    return tuple(attrs)


def _check_document(doc: MappingDocument) -> None:
    diags = validate_document(doc)
    blocking = [d for d in diags if d.kind in _BLOCKING]
    if blocking:
        raise InvalidDocument(blocking)
    unsupported = [d for d in diags if d.kind == "UnsupportedConstruct"]
    if unsupported:
        raise UnsupportedConstruct("; ".join(str(d) for d in unsupported))


def inline_joinless_refs(doc: MappingDocument) -> MappingDocument:
    """Replace RefObjectMaps without joinCondition by the parent's subject term.

    Such a reference evaluates the parent subject on the child row, which
    only works while both maps read the same source. Inlining keeps that
    meaning once the rewrite gives each map its own projected source.
    """
    changed = False
    new_maps = []
    for tm in doc.triples_maps:
        poms = []
        for pom in tm.predicate_object_maps:
            objs = []
            for obj in pom.objects:
                if isinstance(obj, RefObjectMap) and not obj.join_conditions:
                    parent = doc.triples_map(obj.parent_triples_map)
                    term = parent.subject.term
                    if isinstance(term, FunctionMapRef):
                        raise UnsupportedConstruct(
                            f"<{tm.id}> references <{parent.id}> without joinCondition "
                            "and that map's subject is a FunctionMap"
                        )
                    obj = replace(
                        term, term_type=default_term_type(term, Position.SUBJECT), datatype=None, language=None
                    )
                    changed = True
                objs.append(obj)
            poms.append(replace(pom, objects=tuple(objs)))
        new_maps.append(replace(tm, predicate_object_maps=tuple(poms)))
    return doc.evolve(triples_maps=tuple(new_maps)) if changed else doc


def plan_rewrite(doc: MappingDocument, context: SourceContext, mode: str = "full") -> RewritePlan:
    """Check preconditions and decide inputs, output names and projections.

    Each FunctionMap is analysed exactly once, however many TriplesMaps use it.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    _check_document(doc)
    users: dict[str, list[tuple[str, tuple]]] = {}
    for tm in doc.triples_maps:
        for loc, ref in tm.function_refs():
            if loc[0] == "predicate":
                raise UnsupportedConstruct(f"<{tm.id}>: FunctionMap in predicate position cannot be rewritten")
            if loc[0] == "join":
                raise UnsupportedConstruct(f"<{tm.id}>: FunctionMap inside a joinCondition cannot be rewritten")
            users.setdefault(ref.id, []).append((tm.id, loc))

    functions: dict[str, FunctionPlan] = {}
    taken: dict[SourceDescriptor, set[str]] = {}
    for fm_id, uses in users.items():
        fm = doc.function_map(fm_id)
        origins = list(dict.fromkeys(doc.triples_map(t).logical_source for t, _ in uses))
        if fm.logical_source is not None and fm.logical_source not in origins:
            origins.append(fm.logical_source)
        if len(origins) > 1:
            raise CrossSourceFunction(
                f"<{fm_id}> is applied to {len(origins)} different logical sources; "
                "a FunctionMap must read a single source"
            )
        origin = origins[0]
        inputs = fm.input_attributes
        if not inputs:
            raise UnsupportedConstruct(f"<{fm_id}> has no attribute inputs to join on")
        schema = context.load(origin).attributes
        for a in inputs:
            if a not in schema:
                raise UnknownAttribute(a, schema)
        used = taken.setdefault(origin, set(schema))
        output = OUTPUT_ATTRIBUTE
        n = 2
        while output in used:
            output = f"{OUTPUT_ATTRIBUTE}_{n}"
            n += 1
        used.add(output)
        functions[fm_id] = FunctionPlan(fm, inputs, output, origin, uses)

    attributes = {tm.id: referenced_attributes(doc, tm) for tm in doc.triples_maps}
    plan = RewritePlan(mode, functions, attributes)
    plan.steps.extend(f"DTR1 {fm_id}" for fm_id in functions)
    if mode != "dtr1-only":
        plan.steps.extend(f"DTR2 {tm.id}" for tm in doc.triples_maps if attributes[tm.id])
    for tm in doc.triples_maps:
        if any(t == tm.id for p in functions.values() for t, _ in p.users):
            kind = "subject" if isinstance(tm.subject.term, FunctionMapRef) else "object"
            plan.steps.append(f"MTR-{kind} {tm.id}")
    return plan


# -- map builders -----------------------------------------------------------------


def output_triples_map(map_id: str, fm: FunctionMap, source: SourceDescriptor, output: str) -> TriplesMap:
    """Map over a FunctionMap's output source whose subject is the function value."""
    subject = TermMap.reference(
        output,
        term_type=default_term_type(fm, Position.OBJECT),
        datatype=fm.datatype,
        language=fm.language,
    )
    return TriplesMap(map_id, source, SubjectMap(subject))


def join_on(inputs: Sequence[str]) -> tuple[JoinCondition, ...]:
    return tuple(JoinCondition(a, a) for a in inputs)


def object_rewrite(
    tm: TriplesMap, map_id: str, source: SourceDescriptor, parents: dict[str, tuple[str, Sequence[str]]]
) -> TriplesMap:
    """``tm`` with each FunctionMap object replaced by a join to its output map.

    ``parents`` maps FunctionMap ids to ``(output map id, input attributes)``.
    """
    poms = []
    for pom in tm.predicate_object_maps:
        objs = []
        for obj in pom.objects:
            if isinstance(obj, FunctionMapRef) and obj.id in parents:
                parent_id, inputs = parents[obj.id]
                obj = RefObjectMap(parent_id, join_on(inputs))
            objs.append(obj)
        poms.append(replace(pom, objects=tuple(objs)))
    return TriplesMap(map_id, source, tm.subject, tuple(poms))


def subject_rewrite(
    tm: TriplesMap,
    fm: FunctionMap,
    map_id: str,
    output_source: SourceDescriptor,
    output: str,
    project_source: Optional[SourceDescriptor],
    fresh_id,
) -> list[TriplesMap]:
    """Rewrite a map whose subject is ``fm``.

    The rewritten map reads the output source with the function value as
    subject; every non-constant object moves into its own map over the
    project source and is reached through a join on the function inputs.
    Returns the rewritten map followed by the object maps.
    """
    subject = TermMap.reference(
        output,
        term_type=default_term_type(fm, Position.SUBJECT),
        datatype=fm.datatype,
        language=fm.language,
    )
    local = local_name(tm.id)
    created = []
    poms = []
    for j, pom in enumerate(tm.predicate_object_maps, start=1):
        movable = [o for o in pom.objects if not (isinstance(o, TermMap) and o.kind == "constant")]
        objs = []
        for k, obj in enumerate(pom.objects, start=1):
            if isinstance(obj, TermMap) and obj.kind == "constant":
                objs.append(obj)
                continue
            if project_source is None:
                raise PreconditionViolation(f"<{tm.id}> needs a project source for its objects")
            suffix = f"_po{j}" if len(movable) == 1 else f"_po{j}o{k}"
            term = replace(obj, term_type=default_term_type(obj, Position.OBJECT))
            child = TriplesMap(fresh_id(local + suffix), project_source, SubjectMap(term))
            created.append(child)
            objs.append(RefObjectMap(child.id, join_on(fm.input_attributes)))
        poms.append(replace(pom, objects=tuple(objs)))
    rewritten = TriplesMap(map_id, output_source, SubjectMap(subject, tm.subject.classes), tuple(poms))
    return [rewritten] + created


# -- the rewriter ---------------------------------------------------------------


class Rewriter:
    def __init__(
        self,
        doc: MappingDocument,
        context: Optional[SourceContext] = None,
        mode: str = "full",
        out_dir=None,
        functions=None,
    ):
        self.context = context or SourceContext()
        self.mode = mode
        self.out_dir = Path(out_dir) if out_dir is not None else None
        registry = functions if functions is not None else default_registry()
        self.evaluator = CountingEvaluator(registry)
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        self.original = doc
        self.doc = doc if mode == "dtr1-only" else inline_joinless_refs(doc)
        self.plan = plan_rewrite(self.doc, self.context, mode)
        self.report = RewriteReport(mode)
        self._names: set[str] = set()
        self._ids = {tm.id for tm in doc.triples_maps}
        self.outputs: dict[str, GeneratedSource] = {}
        self.projections: dict[str, GeneratedSource] = {}
        self._parents: dict[str, TriplesMap] = {}

    # helpers ---------------------------------------------------------------
    def _fresh_name(self, stem: str) -> str:
        name, n = stem, 2
        while name in self._names:
            name = f"{stem}_{n}"
            n += 1
        self._names.add(name)
        return name

    def _fresh_id(self, local: str) -> str:
        base = self.doc.base_iri.split("#", 1)[0] + "#"
        candidate, n = base + local, 2
        while candidate in self._ids:
            candidate = f"{base}{local}_{n}"
            n += 1
        self._ids.add(candidate)
        return candidate

    def _persist(self, gen: GeneratedSource) -> SourceDescriptor:
        origin = gen.origin
        if origin.kind == "sql-query":
            conn = self.context.connection_for(origin)
            desc = write_sql_table(conn, gen.name, gen.relation)
            return replace(desc, connection=origin.connection)
        if self.out_dir is None:
            raise PreconditionViolation("CSV sources are generated but no output directory was given")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        rel = gen.relation
        if gen.provenance == "dtr1-output":
            # CSV cannot hold NULL; a NULL output yields no triple anyway.
            rel = Relation(rel.attributes, tuple(r for r in rel.rows if r[-1] is not None))
        write_csv(rel, self.out_dir / f"{gen.name}.csv")
        return SourceDescriptor.csv(f"{gen.name}.csv")

    def _pushdown(self, tm: TriplesMap) -> bool:
        return self.mode == "sql-pushdown" and tm.logical_source.kind == "sql-query"

    # data transformations ---------------------------------------------------
    def dtr1(self, fm_id: str) -> GeneratedSource:
        if fm_id in self.outputs:
            return self.outputs[fm_id]
        fp = self.plan.functions[fm_id]
        if self.mode == "sql-pushdown" and fp.origin.kind == "sql-query":
            # let the database deduplicate; only the input columns cross over
            inputs = self.context.load(push_distinct_to_sql(fp.origin, fp.inputs))
        else:
            inputs = distinct_project(self.context.load(fp.origin), fp.inputs)
        evaluate = function_evaluator(self.doc, fp.function_map, fp.inputs, self.evaluator)
        before = self.evaluator.total
        rows = tuple(row + (evaluate(row),) for row in inputs.rows)
        name = fp.function_map.function
        self.report.function_eval_counts[name] = (
            self.report.function_eval_counts.get(name, 0) + self.evaluator.total - before
        )
        gen = GeneratedSource(
            self._fresh_name(f"output_{local_name(fm_id)}"),
            "dtr1-output",
            fm_id,
            fp.origin,
            fp.inputs + (fp.output,),
            Relation(fp.inputs + (fp.output,), rows),
            output_attribute=fp.output,
        )
        gen.descriptor = self._persist(gen)
        self.outputs[fm_id] = gen
        self.report.generated_sources.append(gen)
        return gen

    def dtr2(self, tm: TriplesMap) -> Optional[GeneratedSource]:
        if tm.id in self.projections:
            return self.projections[tm.id]
        attrs = self.plan.attributes[tm.id]
        if not attrs:
            return None
        origin = tm.logical_source
        name = self._fresh_name(f"project_{local_name(tm.id)}")
        if self.mode == "sql-pushdown" and origin.kind == "sql-query":
            schema = self.context.load(origin).attributes
            for a in attrs:
                if a not in schema:
                    raise UnknownAttribute(a, schema)
            gen = GeneratedSource(name, "dtr2-project", tm.id, origin, attrs)
            gen.descriptor = push_distinct_to_sql(origin, attrs)
        else:
            rel = distinct_project(self.context.load(origin), attrs)
            gen = GeneratedSource(name, "dtr2-project", tm.id, origin, attrs, rel)
            gen.descriptor = self._persist(gen)
        self.projections[tm.id] = gen
        self.report.generated_sources.append(gen)
        return gen

    # mapping transformations -------------------------------------------------
    def output_map(self, fm_id: str) -> TriplesMap:
        """The generated map over a FunctionMap's output source (shared by all users)."""
        existing = self._parents.get(fm_id)
        if existing is not None:
            return existing
        out = self.dtr1(fm_id)
        fm = self.plan.functions[fm_id].function_map
        map_id = self._fresh_id(f"TM_F_{local_name(fm_id)}")
        tm = output_triples_map(map_id, fm, out.descriptor, out.output_attribute)
        self._parents[fm_id] = tm
        self.report.created_maps.append(tm.id)
        return tm

    def mtr_object(self, tm: TriplesMap) -> list[TriplesMap]:
        created = []
        parents = {}
        for _, ref in tm.function_refs():
            if ref.id not in self._parents:
                created.append(self.output_map(ref.id))
            parents[ref.id] = (self._parents[ref.id].id, self.plan.functions[ref.id].inputs)
        source = tm.logical_source
        if self.mode != "dtr1-only":
            proj = self.dtr2(tm)
            source = proj.descriptor if proj is not None else source
        rewritten = object_rewrite(tm, self._fresh_id(f"{local_name(tm.id)}_rw"), source, parents)
        self.report.created_maps.append(rewritten.id)
        return created + [rewritten]

    def _check_subject_case(self, tm: TriplesMap) -> None:
        for pom in tm.predicate_object_maps:
            for pred in pom.predicates:
                if not (isinstance(pred, TermMap) and pred.kind == "constant"):
                    raise UnsupportedConstruct(
                        f"<{tm.id}>: non-constant predicates are not supported with a FunctionMap subject"
                    )
            for obj in pom.objects:
                if isinstance(obj, FunctionMapRef):
                    raise UnsupportedConstruct(
                        f"<{tm.id}>: FunctionMaps in both subject and object position need sql-pushdown"
                    )
                if isinstance(obj, RefObjectMap):
                    raise UnsupportedConstruct(
                        f"<{tm.id}>: RefObjectMap in a map whose subject is a FunctionMap"
                    )
        for other in self.doc.triples_maps:
            for pom in other.predicate_object_maps:
                for obj in pom.objects:
                    if isinstance(obj, RefObjectMap) and obj.parent_triples_map == tm.id:
                        raise UnsupportedConstruct(
                            f"<{other.id}> joins to <{tm.id}> whose subject is a FunctionMap"
                        )

    def mtr_subject(self, tm: TriplesMap) -> list[TriplesMap]:
        self._check_subject_case(tm)
        fm_id = tm.subject.term.id
        fm = self.plan.functions[fm_id].function_map
        out = self.dtr1(fm_id)
        needs_project = any(
            not (isinstance(o, TermMap) and o.kind == "constant")
            for pom in tm.predicate_object_maps
            for o in pom.objects
        )
        project = None
        if needs_project:
            project = tm.logical_source if self.mode == "dtr1-only" else self.dtr2(tm).descriptor
        map_id = self._fresh_id(f"{local_name(tm.id)}_rw")
        maps = subject_rewrite(tm, fm, map_id, out.descriptor, out.output_attribute, project, self._fresh_id)
        self.report.created_maps.extend(m.id for m in maps)
        return maps

    def mtr_fused(self, tm: TriplesMap) -> list[TriplesMap]:
        """SQL push-down: one map whose query joins the projection with the outputs."""
        proj = self.dtr2(tm)
        attrs = proj.attributes
        select = [f"p.{quote_ident(a)}" for a in attrs]
        joins = []
        replacements: dict[str, TermMap] = {}
        refs = list(dict.fromkeys(r for _, r in tm.function_refs()))
        for n, ref in enumerate(refs, start=1):
            out = self.dtr1(ref.id)
            fp = self.plan.functions[ref.id]
            alias = f"f{n}"
            select.append(f"{alias}.{quote_ident(fp.output)}")
            cond = " AND ".join(f"p.{quote_ident(a)} = {alias}.{quote_ident(a)}" for a in fp.inputs)
            joins.append(f"LEFT JOIN ({out.descriptor.locator}) AS {alias} ON {cond}")
            replacements[ref.id] = fp.output
        query = f"SELECT {', '.join(select)} FROM ({proj.descriptor.locator}) AS p " + " ".join(joins)
        source = SourceDescriptor("sql-query", query, "SQL", tm.logical_source.connection)

        def swap(spec, position: Position):
            if isinstance(spec, FunctionMapRef):
                fm = self.plan.functions[spec.id].function_map
                return TermMap.reference(
                    replacements[spec.id],
                    term_type=default_term_type(fm, position),
                    datatype=fm.datatype,
                    language=fm.language,
                )
            return spec

        subject = SubjectMap(swap(tm.subject.term, Position.SUBJECT), tm.subject.classes)
        poms = tuple(
            PredicateObjectMap(pom.predicates, tuple(swap(o, Position.OBJECT) for o in pom.objects))
            for pom in tm.predicate_object_maps
        )
        rewritten = TriplesMap(self._fresh_id(f"{local_name(tm.id)}_rw"), source, subject, poms)
        self.report.created_maps.append(rewritten.id)
        return [rewritten]

    # driver ------------------------------------------------------------------
    def run(self) -> RewriteResult:
        renamed: dict[str, str] = {}
        new_maps: list[TriplesMap] = []
        for tm in self.doc.triples_maps:
            if not tm.function_refs():
                if self.mode == "dtr1-only":
                    new_maps.append(tm)
                    continue
                proj = self.dtr2(tm)
                if proj is None:
                    new_maps.append(tm)
                    continue
                new_maps.append(replace(tm, logical_source=proj.descriptor))
                self.report.rewritten_maps.append(tm.id)
                continue
            if self._pushdown(tm):
                maps = self.mtr_fused(tm)
                renamed[tm.id] = maps[0].id
            elif isinstance(tm.subject.term, FunctionMapRef):
                maps = self.mtr_subject(tm)
            else:
                maps = self.mtr_object(tm)
                renamed[tm.id] = maps[-1].id
            self.report.removed_maps.append(tm.id)
            new_maps.extend(maps)
        if renamed:
            new_maps = [_redirect(tm, renamed) for tm in new_maps]
        doc = self.doc.evolve(triples_maps=tuple(new_maps), function_maps=())
        generated = [g.descriptor for g in self.report.generated_sources]
        originals = list(dict.fromkeys(tm.logical_source for tm in self.original.triples_maps))
        sources = originals + [d for d in generated if d not in originals]
        return RewriteResult(doc, sources, self.report, self.out_dir)


def _redirect(tm: TriplesMap, renamed: dict[str, str]) -> TriplesMap:
    changed = False
    poms = []
    for pom in tm.predicate_object_maps:
        objs = []
        for obj in pom.objects:
            if isinstance(obj, RefObjectMap) and obj.parent_triples_map in renamed:
                obj = replace(obj, parent_triples_map=renamed[obj.parent_triples_map])
                changed = True
            objs.append(obj)
        poms.append(replace(pom, objects=tuple(objs)))
    return replace(tm, predicate_object_maps=tuple(poms)) if changed else tm


# -- public entry points ------------------------------------------------------------


def rewrite_system(
    doc: MappingDocument,
    context: Optional[SourceContext] = None,
    mode: str = "full",
    out_dir=None,
    functions=None,
) -> RewriteResult:
    """Rewrite ``doc`` into a function-free document plus generated sources."""
    return Rewriter(doc, context, mode, out_dir, functions).run()


def apply_dtr1(
    doc: MappingDocument, context: SourceContext, fm: FunctionMap, functions=None, out_dir=None
) -> GeneratedSource:
    """Evaluate ``fm`` once per distinct input tuple of its source."""
    rw = Rewriter(_only_users_of(doc, fm.id), context, "dtr1-only", out_dir, functions)
    rw._persist = lambda gen: None  # in-memory only unless the caller persists it
    return rw.dtr1(fm.id)


def apply_dtr2(doc: MappingDocument, context: SourceContext, tm: TriplesMap) -> GeneratedSource:
    """Duplicate-free projection of ``tm``'s source on the attributes it references."""
    attrs = referenced_attributes(doc, tm)
    if not attrs:
        raise PreconditionViolation(f"<{tm.id}> references no attributes")
    rel = distinct_project(context.load(tm.logical_source), attrs)
    return GeneratedSource(f"project_{local_name(tm.id)}", "dtr2-project", tm.id, tm.logical_source, attrs, rel)


def _only_users_of(doc: MappingDocument, fm_id: str) -> MappingDocument:
    users = tuple(tm for tm in doc.triples_maps if any(r.id == fm_id for _, r in tm.function_refs()))
    if not users:
        raise PreconditionViolation(f"<{fm_id}> is not used by any TriplesMap")
    return doc.evolve(triples_maps=users)


def _require(gen: Optional[GeneratedSource], what: str) -> SourceDescriptor:
    if gen is None or gen.descriptor is None:
        raise PreconditionViolation(f"{what} source has not been generated and persisted")
    return gen.descriptor


def apply_mtr_object(
    doc: MappingDocument,
    tm: TriplesMap,
    fm: FunctionMap,
    output: Optional[GeneratedSource],
    project: Optional[GeneratedSource],
) -> tuple[TriplesMap, TriplesMap]:
    """Replace ``fm`` in object position of ``tm`` by a join to a map over its output."""
    if not any(loc[0] == "object" and r.id == fm.id for loc, r in tm.function_refs()):
        raise PreconditionViolation(f"<{fm.id}> is not an object of <{tm.id}>")
    out_desc = _require(output, "output")
    proj_desc = _require(project, "project")
    base = doc.base_iri.split("#", 1)[0] + "#"
    parent = output_triples_map(f"{base}TM_F_{local_name(fm.id)}", fm, out_desc, output.output_attribute)
    parents = {fm.id: (parent.id, fm.input_attributes)}
    rewritten = object_rewrite(tm, f"{base}{local_name(tm.id)}_rw", proj_desc, parents)
    return rewritten, parent


def apply_mtr_subject(
    doc: MappingDocument,
    tm: TriplesMap,
    fm: FunctionMap,
    output: Optional[GeneratedSource],
    project: Optional[GeneratedSource],
) -> tuple[TriplesMap, list[TriplesMap]]:
    """Move ``tm`` onto ``fm``'s output source; objects become joins to new maps."""
    if not (isinstance(tm.subject.term, FunctionMapRef) and tm.subject.term.id == fm.id):
        raise PreconditionViolation(f"<{fm.id}> is not the subject of <{tm.id}>")
    out_desc = _require(output, "output")
    proj_desc = project.descriptor if project is not None else None
    base = doc.base_iri.split("#", 1)[0] + "#"
    maps = subject_rewrite(
        tm,
        fm,
        f"{base}{local_name(tm.id)}_rw",
        out_desc,
        output.output_attribute,
        proj_desc,
        lambda local: base + local,
    )
    return maps[0], maps[1:]
