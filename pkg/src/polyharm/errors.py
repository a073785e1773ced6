"""Exception hierarchy shared by all polyharm modules.

Every failure mode that callers are expected to branch on gets its own
class; generic misuse (wrong types, shape mismatches) raises plain
``ValueError`` instead.
"""


class PolyharmError(Exception):
    """Base class for all library-specific errors."""


# ---------------------------------------------------------------- chains

class ChainError(PolyharmError):
    """Invalid absorbing-chain structure."""


class EmptyPart(ChainError):
    """Interior or boundary set is empty."""


class NotStochastic(ChainError):
    """A transition row does not form a probability vector."""


class NotAbsorbing(ChainError):
    """A boundary row is not the unit vector at itself."""


class DeadInterior(ChainError):
    """An interior vertex cannot reach the boundary."""


class InactiveBoundary(ChainError):
    """A boundary vertex is unreachable from the interior."""


class NotConnected(ChainError):
    """Underlying network graph is not connected."""


class ZeroDegree(ChainError):
    """A network vertex has zero total conductance."""


class SpectralRadiusViolation(ChainError):
    """Interior spectral radius not strictly below one (numeric trouble)."""


# --------------------------------------------------------- linear algebra

class Singular(PolyharmError):
    """Pivot below threshold during factorisation; the matrix is
    numerically singular."""


class NoConvergence(PolyharmError):
    """Eigenvalue iteration failed to converge or produced roots with
    unacceptable residuals."""


# ---------------------------------------------------------------- solvers

class LambdaInSpectrum(PolyharmError):
    """The requested resolvent parameter is (numerically) an interior
    eigenvalue."""


class ConsistencyError(PolyharmError):
    """Two independent computation routes disagree beyond tolerance."""


class TowerMismatch(ConsistencyError):
    """Closed-form and recursive tower solutions disagree."""


# --------------------------------------------------------------- spectral

class NotAnEigenvalue(PolyharmError):
    """Requested value is not within clustering tolerance of any computed
    eigenvalue."""


class IllConditioned(PolyharmError):
    """Rank decision is ambiguous: retained and discarded pivots are too
    close to separate reliably."""


class ReportedViolation(PolyharmError):
    """A property that holds mathematically failed numerically."""


# ---------------------------------------------------------------- kernels

class NotInResStar(PolyharmError):
    """Some hitting value F(origin, w) vanishes, so Martin kernels are
    undefined at this parameter."""


# ------------------------------------------------------------------ trees

class TreeError(PolyharmError):
    """Invalid forward-tree structure."""


class NonPositiveMass(TreeError):
    """Arc measure or forward probability is not strictly positive."""


class AdditivityViolation(TreeError):
    """Arc masses do not add up across children."""


class NotASection(TreeError):
    """Vertex set is not met exactly once by every root-to-depth path."""


class ZeroLambda(TreeError):
    """Closed-form tree kernels require a non-zero parameter."""
