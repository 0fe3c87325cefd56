"""Exception types shared across the package."""


class SpecmapError(Exception):
    """Base class for all errors raised by this package."""


class MeshError(SpecmapError):
    """Mesh file cannot be parsed or violates mesh invariants.

    Carries the offending line number when the problem is tied to a
    specific line of the input file.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        if prefix:
            message = f"{prefix}: {message}"
        super().__init__(message)


class EigenSolveError(SpecmapError):
    """Eigensolver failed to converge or was asked for too many pairs."""
