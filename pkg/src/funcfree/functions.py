"""Registry of transformation functions referenced from FunctionMaps.

Functions are keyed by IRI and called with positional string arguments in
the order of their declared input parameters. ``None`` stands for a NULL
cell; a NULL in any required argument short-circuits to NULL without
calling the implementation.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .errors import ArityMismatch, DuplicateFunction, UnknownFunction

FN = "http://example.org/functions#"

VARIANT_ID = FN + "variantId"
SIMPLE_BENCH = FN + "simpleBench"
COMPLEX_BENCH = FN + "complexBench"
CONCAT = FN + "concat"

COMPLEX_TAG = "tag"


@dataclass(frozen=True)
class FunctionSignature:
    name: str
    input_params: tuple[tuple[str, bool], ...]
    output_predicate: str

    @property
    def arity(self) -> int:
        return sum(1 for _, required in self.input_params if required)

    @property
    def param_predicates(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.input_params)


@dataclass(frozen=True)
class FunctionImpl:
    signature: FunctionSignature
    eval: Callable[..., Optional[str]]

    @property
    def name(self) -> str:
        return self.signature.name


class FunctionRegistry:
    def __init__(self, impls: Iterable[FunctionImpl] = ()):
        self._impls: dict[str, FunctionImpl] = {}
        for impl in impls:
            self.register(impl)

    def register(self, impl: FunctionImpl) -> None:
        if impl.signature.arity < 1:
            raise ValueError(f"function <{impl.name}> needs at least one required input")
        if impl.name in self._impls:
            raise DuplicateFunction(f"function <{impl.name}> is already registered")
        self._impls[impl.name] = impl

    def lookup(self, name: str) -> FunctionImpl:
        try:
            return self._impls[name]
        except KeyError:
            raise UnknownFunction(f"function <{name}> is not registered") from None

    def __contains__(self, name: str) -> bool:
        return name in self._impls

    def __iter__(self):
        return iter(self._impls.values())

    def __len__(self) -> int:
        return len(self._impls)

    def evaluate(self, name: str, args: Sequence[Optional[str]]) -> Optional[str]:
        impl = self.lookup(name)
        params = impl.signature.input_params
        if len(args) != len(params):
            raise ArityMismatch(f"<{name}> takes {len(params)} arguments, got {len(args)}")
        for value, (_, required) in zip(args, params):
            if required and value is None:
                return None
        return impl.eval(*args)


class CountingEvaluator:
    """Wraps a registry and counts calls per function IRI."""

    def __init__(self, registry: FunctionRegistry):
        self.registry = registry
        self.counts: Counter = Counter()

    def lookup(self, name: str) -> FunctionImpl:
        return self.registry.lookup(name)

    def __contains__(self, name: str) -> bool:
        return name in self.registry

    def evaluate(self, name: str, args: Sequence[Optional[str]]) -> Optional[str]:
        self.counts[name] += 1
        return self.registry.evaluate(name, args)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def variant_id(gene: str, hgvs: str) -> str:
    # BCR + c.1001C>T -> BCR_1001C~T
    alteration = hgvs[2:] if hgvs.startswith("c.") else hgvs
    return f"{gene}_{alteration.replace('>', '~')}"


def simple_bench(value: str) -> str:
    return value.lower()


def complex_bench(first: str, second: str) -> str:
    first = first.strip()
    second = second.strip()
    joined = f"{first.lower()}_{second.lower()}"
    joined = joined.replace(" ", "-")
    return f"{COMPLEX_TAG}_{joined}"


def concat(left: str, right: str) -> str:
    return left + right


def _sig(name: str, *params: str) -> FunctionSignature:
    return FunctionSignature(name, tuple((FN + p, True) for p in params), FN + "output")


def builtin_catalog() -> list[FunctionImpl]:
    return [
        FunctionImpl(_sig(VARIANT_ID, "gene", "hgvs"), variant_id),
        FunctionImpl(_sig(SIMPLE_BENCH, "value"), simple_bench),
        FunctionImpl(_sig(COMPLEX_BENCH, "value1", "value2"), complex_bench),
        FunctionImpl(_sig(CONCAT, "left", "right"), concat),
    ]


def default_registry() -> FunctionRegistry:
    return FunctionRegistry(builtin_catalog())
