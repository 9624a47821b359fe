"""Exception hierarchy shared by every layer of the engine."""


class GridRelError(Exception):
    """Base class for all engine errors."""


class StorageError(GridRelError):
    pass


class UnknownPageError(StorageError):
    pass


class WrongLengthError(StorageError):
    pass


class CorruptFileError(StorageError):
    pass


class SchemaError(GridRelError):
    pass


class DomainError(GridRelError):
    """A value does not belong to an attribute's domain."""


class DirectoryError(GridRelError):
    pass


class ScaleError(GridRelError):
    pass


class RelationExistsError(GridRelError):
    pass


class RelationNotFoundError(GridRelError):
    pass


class QuerySyntaxError(GridRelError):
    def __init__(self, message, position, expected=(), found=None):
        self.position = position
        self.expected = tuple(expected)
        self.found = found
        detail = f"{message} at position {position}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        super().__init__(detail)


class AnalysisError(GridRelError):
    """Name resolution or typing failure."""


class TypeMismatchError(AnalysisError):
    pass
