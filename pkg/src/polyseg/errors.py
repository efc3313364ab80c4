"""Exception types raised across the engine."""


class PolysegError(Exception):
    """Base class for all engine errors."""


class UnsupportedFormat(PolysegError):
    """File or datatype not supported by a reader/writer."""


class CorruptInput(PolysegError):
    """Byte stream is truncated or structurally invalid."""


class InvalidMetadata(PolysegError):
    """Grid metadata violates an invariant (dims, spacing, direction)."""


class IoError(PolysegError):
    """Filesystem read/write failure."""


class UnsupportedAxisCount(PolysegError):
    """Requested axis count is not one of the supported set."""


class InvalidAxis(PolysegError):
    """Axis vector is zero-length or otherwise unusable."""


class OffPlane(PolysegError):
    """World point lies outside the slab of the slice plane."""


class NoPositivePrompts(PolysegError):
    """Prompt set contains no positive polyline."""


class BackendUnavailable(PolysegError):
    """Segmentation backend cannot be reached (after retry)."""


class ProtocolError(PolysegError):
    """Remote backend reply violates the wire protocol."""


class GridMismatch(PolysegError):
    """Two masks do not share identical grid metadata."""


class EmptyMask(PolysegError):
    """Operation requires a nonempty mask."""
