"""Exception types shared across the package.

Every domain error carries a short machine-readable ``code`` used by the
command line front end for its ``error:<code>:`` diagnostics.
"""


class BandgapError(Exception):
    """Base class for domain errors."""

    code = "domain"


class FormatError(BandgapError):
    """An input JSON document is malformed (unknown keys, bad types)."""

    code = "format"


class CellStructureError(BandgapError):
    """Identifiers in a cell do not resolve, or are duplicated."""

    code = "structure"


class DegenerateConstantsError(BandgapError):
    """Two limit constants coincide within tolerance; they must be distinct."""

    code = "degenerate-constants"


class PoleError(BandgapError):
    """Evaluation requested too close to a pole of the characteristic function."""

    code = "pole"


class TargetOrderError(BandgapError):
    """Gap targets violate the required strict interleaving."""

    code = "target-order"


class DesignConditioningError(BandgapError):
    """A computed design failed its verification residual bound."""

    code = "design-conditioning"


class AssemblyError(BandgapError):
    """Cell structure and vertex conditions are inconsistent at assembly time."""

    code = "assembly"


class GridResolutionError(BandgapError):
    """The eigenvalue scan grid cannot separate nearby roots."""

    code = "resolution"


class CeilingError(BandgapError):
    """Too few eigenvalues fit below the requested spectral ceiling."""

    code = "ceiling"
