"""Exception hierarchy shared across the package."""


class MotionChatError(Exception):
    """Base class for all package errors."""


class DegenerateSixD(MotionChatError):
    """cont6d vector cannot be orthonormalized (zero or parallel triples)."""


class NotARotation(MotionChatError):
    """Matrix is not orthonormal with determinant +1 within tolerance."""


class SkeletonMismatch(MotionChatError):
    """Clip joint count does not match the skeleton."""


class DegenerateCloud(MotionChatError):
    """Point cloud has no spatial extent (all points coincident)."""


class ParseError(MotionChatError):
    """Structured parse failure with location diagnostics."""

    def __init__(self, message, *, position=None, line=None, expected=None,
                 found=None, incomplete=False):
        super().__init__(message)
        self.position = position
        self.line = line
        self.expected = expected
        self.found = found
        self.incomplete = incomplete


class ClipTooShort(MotionChatError):
    """Motion clip shorter than one temporal-downsample window."""


class IndexOutOfRange(MotionChatError):
    """Token index outside the codebook or vocabulary range."""


class ShapeMismatch(MotionChatError):
    """Array arguments have incompatible shapes."""


class DimMismatch(MotionChatError):
    """Feature dimension does not match the codebook dimension."""


class EmptyDataset(MotionChatError):
    """Training requested on an empty dataset."""


class SignalTooShort(MotionChatError):
    """Speech signal shorter than one analysis frame."""


class ContextOverflow(MotionChatError):
    """Token sequence exceeds the model's maximum context length."""


class AllMasked(MotionChatError):
    """No supervised position in the batch."""


class AlreadyAttached(MotionChatError):
    """Low-rank adapters are already attached to the model."""


class TokenOutOfRange(MotionChatError):
    """A token to be rendered lies outside its vocabulary range."""


class UnknownTask(MotionChatError):
    """Unrecognized pretraining task id."""


class ClientError(MotionChatError):
    """External client failed (after the retry policy was exhausted)."""


class RetrievalFailure(MotionChatError):
    """Motion retrieval produced no usable result."""


class EmptyIndex(MotionChatError):
    """Retrieval requested against an empty embedding index."""


class ConfigError(MotionChatError):
    """Invalid or inconsistent configuration."""


class SessionBusy(MotionChatError):
    """A generation is already in flight for this session."""


class SessionNotFound(MotionChatError):
    """Unknown session id."""


class UnknownProfile(MotionChatError):
    """Unknown character profile id."""


class UnknownMethod(MotionChatError):
    """Unknown serving method."""


class BadRequest(MotionChatError):
    """Malformed request payload."""
