"""Rewrite RML+FnO data integration systems into function-free ones.

Functions are evaluated once per distinct input tuple and their results
joined back into the mappings, so the knowledge graph stays the same while
the costly transformations run far fewer times.
"""
from .errors import FuncFreeError
from .functions import CountingEvaluator, FunctionImpl, FunctionRegistry, FunctionSignature, default_registry
from .materialize import RdfTriple, materialize, parse_ntriples, serialize_ntriples
from .model import MappingDocument, validate_document
from .parser import load_mapping, parse_mapping_document
from .rewrite import (
    RewriteReport,
    apply_dtr1,
    apply_dtr2,
    apply_mtr_object,
    apply_mtr_subject,
    rewrite_system,
)
from .serializer import serialize_mapping_document, write_mapping
from .sources import Relation, SourceContext, distinct_project

__all__ = [
    "CountingEvaluator",
    "FuncFreeError",
    "FunctionImpl",
    "FunctionRegistry",
    "FunctionSignature",
    "MappingDocument",
    "RdfTriple",
    "Relation",
    "RewriteReport",
    "SourceContext",
    "apply_dtr1",
    "apply_dtr2",
    "apply_mtr_object",
    "apply_mtr_subject",
    "default_registry",
    "distinct_project",
    "load_mapping",
    "materialize",
    "parse_mapping_document",
    "parse_ntriples",
    "rewrite_system",
    "serialize_mapping_document",
    "serialize_ntriples",
    "validate_document",
    "write_mapping",
]
