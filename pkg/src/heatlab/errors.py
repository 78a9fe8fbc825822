"""Exception types shared across the package."""


class HeatlabError(Exception):
    """Base class for all heatlab errors."""


class DisconnectedGraph(HeatlabError):
    """Edge list does not describe a single connected graph."""


class NonPositiveWeight(HeatlabError):
    """An edge weight is zero or negative."""


class ConflictingWeight(HeatlabError):
    """The same edge appears twice with different weights."""


class SelfLoopNotAllowed(HeatlabError):
    """Self-loop supplied while self-loops are disabled."""


class RadiusOrder(HeatlabError):
    """Inner radius exceeds outer radius."""


class HorizonExceeded(HeatlabError):
    """Requested radius or time reaches the truncation boundary, so the
    finite graph no longer stands in exactly for the infinite one."""


class SourceOutsideSet(HeatlabError):
    """Start vertex is not a member of the given set."""


class AbsorbingSet(HeatlabError):
    """Operation needs the walk to exit the set, but the set is the
    whole graph."""


class EmptySet(HeatlabError):
    """Vertex set is empty."""


class WholeGraph(HeatlabError):
    """Vertex set must be a proper subset of the graph."""


class SetsIntersect(HeatlabError):
    """Two sets that must be disjoint share a vertex."""


class SizeTooSmall(HeatlabError):
    """Generator parameter below the minimum size."""


class BadWeightSequence(HeatlabError):
    """Block weight sequence has the wrong length or is not nondecreasing."""


class BudgetTooLarge(HeatlabError):
    """Exhaustive subset enumeration would exceed the hard cap."""


class BeyondProfile(HeatlabError):
    """Query outside the tabulated range of an exit profile."""


class BadConstants(HeatlabError):
    """Invalid constant pair (c1 must be strictly below c2)."""


class UnknownPreset(HeatlabError):
    """No experiment preset registered under the given name."""
