"""Exception and warning types shared across the package."""


class ParseError(ValueError):
    """Malformed mesh file, manifest, or ratings file."""


class EmptyMesh(ValueError):
    """Mesh has no vertices or no faces where faces are required."""


class IndexOutOfRange(ParseError):
    """Face references a vertex index past the end of the vertex list."""


class ZeroAreaMesh(ValueError):
    """Every triangle in the mesh is degenerate (zero area)."""


class ZeroExtent(ValueError):
    """All vertices coincide; no scale can be derived."""


class DegenerateConfiguration(ValueError):
    """Point configuration too thin to determine a unique rigid transform."""


class DegenerateConfigurationWarning(UserWarning):
    """Covariance is rank-deficient; the returned transform is best-effort."""


class DegenerateCameraWarning(UserWarning):
    """Mesh lies entirely behind the camera; depth image is all background."""


class ZeroExtentAxisWarning(UserWarning):
    """Generated mesh is flat along an axis; that axis keeps scale 1."""


class EmptySlot(ValueError):
    """Prompt template slot is empty or missing."""


class CountMismatch(ParseError):
    """Manifest header declares a different row count than the file holds."""


class StoreError(RuntimeError):
    """Job or asset store cannot be read or written."""


class TransportError(RuntimeError):
    """Retryable network-level failure talking to a backend stage."""


class BackendRejection(RuntimeError):
    """Backend refused the request; retrying will not help."""


class InvalidArtifact(RuntimeError):
    """Backend returned an artifact that fails validation (e.g. empty mesh)."""


class EmptyForeground(ValueError):
    """Depth image contains no foreground pixels to extrude."""


class DegenerateMarginals(ValueError):
    """All ratings fall in one category; chance agreement is 1 and kappa undefined."""


class EmptyGroup(ValueError):
    """A required rating condition group has no items."""


class AllZeroDifferences(ValueError):
    """Every paired difference is zero; the signed-rank test is undefined."""
