"""Exception hierarchy shared across the package."""


class TactiletexError(Exception):
    """Base class for all errors raised by this package."""


class MeshError(TactiletexError):
    """Invalid mesh geometry or topology."""


class ObjParseError(MeshError):
    """Malformed OBJ input; carries the offending file and line number."""

    def __init__(self, message: str, path: str = "<string>", line: int = 0):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class ImageError(TactiletexError):
    """Unreadable or unsupported raster input."""


class DisplacementError(TactiletexError):
    """Displacement preconditions violated (missing uvs, bad mask)."""


class StatError(TactiletexError):
    """Statistical test preconditions violated (degenerate samples, bad df)."""


class DatasetError(TactiletexError):
    """Manifest or corpus inconsistency."""


class GeneratorError(TactiletexError):
    """Heightfield generator failure; carries the generator description."""

    def __init__(self, message: str, source: str = ""):
        super().__init__(f"{source}: {message}" if source else message)
        self.source = source
