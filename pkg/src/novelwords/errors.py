"""Exception types raised across the package.

Every domain failure maps to one of these classes so callers (and the CLI,
which turns them into exit codes) can tell validation problems apart from
numerical failures and from incomplete detection runs.
"""

from __future__ import annotations


class NovelWordsError(Exception):
    """Base class for all package-specific errors."""


class NotSeparable(NovelWordsError):
    """A topic matrix has at least one topic with no novel word."""


class DegeneratePrior(NovelWordsError):
    """A prior violates its basic requirements (zero mean component, bad weights, ...)."""


class DegenerateWord(NovelWordsError):
    """A word has an all-zero row where a positive row is required."""


class SimplicialPrior(NovelWordsError):
    """An adversarial construction was asked for, but the prior admits no certificate."""


class ScaleTooLarge(NovelWordsError):
    """The adversarial row scale leaves no probability mass for the filler rows."""


class SolverFailure(NovelWordsError):
    """The min-norm-point solver hit its iteration cap before reaching tolerance."""


class DegenerateGeometry(NovelWordsError):
    """A geometric statistic could not be formed (e.g. no positive pair separations)."""


class NotSimplicial(NovelWordsError):
    """An oracle computation requires a simplicial prior and the given one is not."""


class IncompleteRecovery(NovelWordsError):
    """Selection exhausted all candidates before accepting K words.

    Attributes:
        selected: the partial selection, in acceptance order.
    """

    def __init__(self, message: str, selected: list[int] | None = None):
        super().__init__(message)
        self.selected: list[int] = list(selected) if selected else []


class ShardMissing(NovelWordsError):
    """A distributed run finished without output from one or more shards."""


class VersionMismatch(NovelWordsError):
    """A wire message carried an unsupported protocol version."""


class ProtocolError(NovelWordsError):
    """A wire message was malformed or arrived out of protocol order."""
