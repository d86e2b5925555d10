"""Exception types shared across the package."""


class ZtyperError(Exception):
    """Base class for all package-specific errors."""


class HierarchyError(ZtyperError):
    """Malformed type hierarchy: orphan paths, duplicates, bad ids."""


class DimensionError(ZtyperError):
    """Tensor or embedding width mismatch."""


class EmbeddingError(ZtyperError):
    """Unusable embedding file or missing label/sentence key."""


class AlignmentError(ZtyperError):
    """Contextual row count disagrees with the sentence token count."""


class SpanError(ZtyperError):
    """Mention span outside sentence bounds or empty."""


class CorpusError(ZtyperError):
    """Malformed corpus record."""


class SplitError(ZtyperError):
    """Zero-shot split produced an empty train or test partition."""


class CheckpointError(ZtyperError):
    """Incompatible or corrupt parameter checkpoint."""


class DivergenceError(ZtyperError):
    """Training loss became non-finite."""


class EmptyPositiveSet(ZtyperError):
    """Signal: a mention has no positive labels among the candidates.

    Raised by the loss and caught by the training loop, which counts the
    example as skipped rather than aborting.
    """
