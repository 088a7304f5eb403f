"""Exception types shared across the package."""

__all__ = [
    "HdlogitError",
    "OutsideExistenceRegionError",
    "NonConvergenceError",
    "SeparatedDataError",
    "FrontierNotReachedError",
    "DataFormatError",
]


class HdlogitError(Exception):
    """Base class for package errors."""


class OutsideExistenceRegionError(HdlogitError):
    """(kappa, gamma) lies outside the region where the MLE exists."""


class NonConvergenceError(HdlogitError):
    """An iterative solver hit its iteration cap before its tolerance."""


class SeparatedDataError(HdlogitError):
    """The data is perfectly separated, so the MLE does not exist."""


class FrontierNotReachedError(HdlogitError):
    """Subsampling never crossed the separation threshold below kappa = 1/2."""


class DataFormatError(HdlogitError):
    """A dataset file could not be parsed."""
