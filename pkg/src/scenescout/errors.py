"""Exception types shared across the package."""


class SceneScoutError(Exception):
    """Base class for all package-specific errors."""


class ParseError(SceneScoutError):
    """Malformed file contents (bad header, wrong counts, corrupt data)."""


class UnsupportedFormat(SceneScoutError):
    """File is structurally valid but lacks required properties."""


class EmptyScene(SceneScoutError):
    """An operation needs geometry but none is available."""


class InvalidSpec(SceneScoutError):
    """Scene-generation spec violates its own constraints."""


class InvalidDensity(SceneScoutError):
    """Grid density outside the supported range."""


class OutOfGrid(SceneScoutError):
    """Lattice index outside [0, d] on some axis."""


class StyleOverflow(SceneScoutError):
    """Overlay labels do not fit the image at the requested style."""


class InvalidDepth(SceneScoutError):
    """Depth value is non-finite or non-positive."""


class LatticeExhausted(SceneScoutError):
    """No unused (grid point, orientation) pairs remain."""


class HttpError(SceneScoutError):
    """VLM HTTP backend failed after retries."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class NoRuleMatched(SceneScoutError):
    """Strict scripted backend found no rule for the request."""


class CacheCorrupt(SceneScoutError):
    """A cache entry exists but cannot be decoded."""


class PlanningError(SceneScoutError):
    """View planning failed after exhausting parse retries."""


class AnswerParseError(SceneScoutError):
    """Numbered-answer extraction yielded the wrong item count."""


class NonConsecutiveIndices(SceneScoutError):
    """Mask image indices are not 1..K consecutive."""


class LengthMismatch(SceneScoutError):
    """Paired label arrays differ in length."""


class CorpusTooSmall(SceneScoutError):
    """Consensus metric needs at least two evaluation items."""


class ManifestError(SceneScoutError):
    """Scene manifest failed validation; message carries the field path."""
