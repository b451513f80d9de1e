"""Exception hierarchy shared by all orthoalign modules."""


class OrthoAlignError(Exception):
    """Base class for all orthoalign errors."""


class IndexOutOfRange(OrthoAlignError):
    pass


class ShapeMismatch(OrthoAlignError):
    pass


class DanglingLabel(OrthoAlignError):
    pass


class ChannelMismatch(OrthoAlignError):
    pass


class KTooLarge(OrthoAlignError):
    pass


class KTooLargeForRegion(KTooLarge):
    """k exceeds the smaller side of a labeled region pair."""

    def __init__(self, label: int, message: str):
        super().__init__(message)
        self.label = label


class EmptyAffinity(OrthoAlignError):
    """No correspondences exist; alignment is undefined."""


class DimensionMismatch(OrthoAlignError):
    pass


class NonOrthogonalPair(OrthoAlignError):
    pass


class NumericalFailure(OrthoAlignError):
    pass


class BadHeader(OrthoAlignError):
    pass


class TruncatedPayload(OrthoAlignError):
    pass


class UnsupportedDtype(OrthoAlignError):
    pass


class IoFailure(OrthoAlignError):
    pass


class ManifestError(OrthoAlignError):
    pass
