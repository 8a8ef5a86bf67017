"""Exception hierarchy shared by every funcfree module."""


class FuncFreeError(Exception):
    """Base class for all errors raised by the package."""


class MappingSyntaxError(FuncFreeError):
    """The mapping text violates the accepted grammar.

    ``expected`` names the grammar production that could not be matched.
    """

    def __init__(self, message: str, line: int = 0, col: int = 0, expected: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        where = f"{line}:{col}: " if line else ""
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{where}{message}{hint}")


class UnresolvedReference(FuncFreeError):
    def __init__(self, iri: str, message: str = ""):
        self.iri = iri
        super().__init__(message or f"unresolved reference <{iri}>")


class UnsupportedConstruct(FuncFreeError):
    pass


class SchemaError(FuncFreeError):
    pass


class UnknownAttribute(FuncFreeError):
    def __init__(self, attribute: str, available=()):
        self.attribute = attribute
        msg = f"unknown attribute {attribute!r}"
        if available:
            msg += f"; available: {', '.join(available)}"
        super().__init__(msg)


class SourceIOError(FuncFreeError, OSError):
    pass


class SqlError(FuncFreeError):
    pass


class DuplicateFunction(FuncFreeError):
    pass


class UnknownFunction(FuncFreeError):
    pass


class ArityMismatch(FuncFreeError):
    pass


class CrossSourceFunction(FuncFreeError):
    pass


class PreconditionViolation(FuncFreeError):
    pass


class InvalidDocument(FuncFreeError):
    """Raised when an operation requires a well-formed document and gets diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class EquivalenceFailure(FuncFreeError):
    pass
