"""Exception types shared across the package."""


class CkmlError(Exception):
    """Base class for all errors raised by this package."""


class ContextError(CkmlError):
    """Malformed formal context (duplicate or empty names, ragged incidence)."""


class InvalidSetError(ContextError):
    """Object/attribute set refers to names or indices outside its context."""


class AppositionError(ContextError):
    """Apposition operands disagree on their object sets."""


class ContextFormatError(ContextError):
    """Unreadable context file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConceptLimitError(CkmlError):
    """Concept enumeration exceeded the configured bound."""

    def __init__(self, limit):
        super().__init__(f"more than {limit} concepts")
        self.limit = limit


class ForeignConceptError(CkmlError):
    """Concept does not belong to the lattice it was used with."""


class ExportFormatError(CkmlError):
    """Unknown lattice export format."""


class TheoryError(CkmlError):
    """Ill-formed theory, sequent, or expansion arguments."""


class UnknownAttributeError(TheoryError):
    """Sequent mentions attributes a context does not have."""

    def __init__(self, names):
        names = sorted(names)
        super().__init__("unknown attributes: " + ", ".join(names))
        self.names = tuple(names)


class ModelBoundError(TheoryError):
    """Theory has too many types for model enumeration."""


class MarkupError(CkmlError):
    """Unparseable document; carries the source position."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            message = f"{where}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class OntologyError(CkmlError):
    """Ill-formed ontology or instance collection."""


class UnknownTypeError(OntologyError):
    """Name does not resolve to a declared type."""


class EvaluationError(CkmlError):
    """Query cannot be evaluated (unbound variable, unknown relation)."""


class AmbiguousNameError(EvaluationError):
    """Shorthand name denotes both a type and an instance."""


class QueryShapeError(CkmlError):
    """Query falls outside the SQL-translatable fragment."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SqlRunError(CkmlError):
    """SQL refers to tables or columns the collection cannot render."""


class ScaleError(CkmlError):
    """Ill-formed scale or unrealizable binding."""
