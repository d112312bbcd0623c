"""Exception taxonomy for the density pipeline.

Every failure the library raises deliberately derives from DensityLabError so
callers (the CLI in particular) can map library failures to a single exit
path. Subclasses are grouped by the stage that raises them.
"""

from __future__ import annotations


class DensityLabError(Exception):
    """Base class for all errors raised by this package."""


# -- input / registry ------------------------------------------------------


class ParseError(DensityLabError):
    """Malformed input text (bad CSV/JSON shape, unreadable number or date)."""


class ValidationError(DensityLabError):
    """Structurally parseable input with an out-of-contract value."""


class DuplicateName(DensityLabError):
    """Two registry records share a model name."""


# -- numerical core --------------------------------------------------------


class RankDeficient(DensityLabError):
    """Linear system has fewer independent columns than unknowns."""


class NoFiniteStart(DensityLabError):
    """Every multistart candidate evaluated to a non-finite objective."""


class DegenerateData(DensityLabError):
    """Data has no variance where variance is required (e.g. r-squared)."""


# -- curve fitting ---------------------------------------------------------


class InsufficientData(DensityLabError):
    """Too few observations for the number of free parameters."""


class DegenerateGrid(DensityLabError):
    """Observations do not vary in a dimension the fit must resolve."""


class FlatScores(DensityLabError):
    """Score spread is too small to constrain a sigmoid."""


# -- inversion -------------------------------------------------------------


class UnattainablePerformance(DensityLabError):
    """Requested loss is at or below the data floor of the fitted law."""


class ScoreBelowFloor(DensityLabError):
    """Score at or below the fitted sigmoid's lower asymptote."""


class ScoreAboveCeiling(DensityLabError):
    """Score at or above the fitted sigmoid's upper asymptote."""


class MissingScore(DensityLabError):
    """Model record has no score for the requested benchmark."""


# -- aggregation / comparison ----------------------------------------------


class EmptyInput(DensityLabError):
    """An aggregate was requested over zero items."""


class MixedModels(DensityLabError):
    """Aggregate mixes estimates from different models or token budgets."""


class NoCommonBenchmarks(DensityLabError):
    """Two models share no benchmark, so they cannot be compared."""


class LinkMismatch(DensityLabError):
    """Compression link does not point at the claimed source model."""


# -- trends ----------------------------------------------------------------


class InsufficientPoints(DensityLabError):
    """Fewer than two usable points for a trend fit."""


class DegenerateTimes(DensityLabError):
    """All trend points share one timestamp; slope is undefined."""


class ZeroSlope(DensityLabError):
    """Doubling period requested for a flat trend."""


class NonConvergenceWarning(UserWarning):
    """A fit stopped at the iteration cap without meeting tolerance."""
