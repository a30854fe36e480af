"""Exception types shared across the package."""


class GraphfrontError(Exception):
    """Base class for all package errors."""


# --- graph construction / document parsing ---

class GraphSpecError(GraphfrontError):
    """Invalid graph specification document or graph data."""


class DanglingReference(GraphSpecError):
    """An edge or outer path refers to a vertex id that was never declared."""


class NonpositiveLength(GraphSpecError):
    """Edge length, thickness or truncation is not strictly positive."""


class FewerThanTwoOuterPaths(GraphSpecError):
    """A simulation domain needs at least two outer paths."""


class DisconnectedCenter(GraphSpecError):
    """The center graph is not connected."""


class UnknownKey(GraphSpecError):
    """Strict parsing rejected an unrecognized key in the document."""


# --- graph transforms ---

class UnknownEdgeId(GraphfrontError):
    """An edge id does not exist in the graph."""


class InvalidSplicePoint(GraphfrontError):
    """Splice offset lies outside the open interior of the edge."""


class ReattachmentIncomplete(GraphfrontError):
    """Vertex replacement left an incident edge or outer path unmapped."""


class IndexCollision(GraphfrontError):
    """Path indices passed to a transform are not mutually distinct."""


class NonpositiveOffset(GraphfrontError):
    """An offset along an outer path must be strictly positive."""


# --- nonlinearity ---

class UnbalancedNonlinearity(GraphfrontError):
    """The nonlinearity violates the positive-integral condition."""


class OutOfRange(GraphfrontError):
    """A scalar parameter lies outside its admissible interval."""


# --- 1-D phase plane ---

class NoConvergence(GraphfrontError):
    """Shooting or bisection failed to bracket / converge."""


class RadiusTooSmall(GraphfrontError):
    """No interval bump exists at the requested half-width."""

    def __init__(self, requested, r_min):
        super().__init__(f"no bump of half-width {requested}; minimal half-width is {r_min:.6g}")
        self.requested = requested
        self.r_min = r_min


# --- discretization / time stepping ---

class SpacingTooCoarse(GraphfrontError):
    """Target grid spacing exceeds a quarter of the shortest edge."""


class LinearSolveFailure(GraphfrontError):
    """The implicit diffusion solve failed."""


class NoSteadyState(GraphfrontError):
    """Rate norm did not drop below tolerance within the step cap."""


class BoundViolation(GraphfrontError):
    """Field values left [0,1] beyond round-off; the time step is too large."""


class OffsetOutOfRange(GraphfrontError):
    """Front interface offset lies outside the truncated outer path."""


class InvalidInitialClass(GraphfrontError):
    """Initial data violates the sandwich condition of its declared class."""

    def __init__(self, message, dof=None):
        super().__init__(message)
        self.dof = dof


# --- stationary analysis ---

class EmptyBoundary(GraphfrontError):
    """A boundary value problem needs at least one boundary vertex."""


class SingularSystem(GraphfrontError):
    """The harmonic linear system is singular (should not happen on connected graphs)."""


class IncompatibleFlux(GraphfrontError):
    """Neumann data violates the solvability condition sum(rho_i * b_i) = 0."""

    def __init__(self, total):
        super().__init__(f"flux compatibility sum is {total:.3e}, expected 0")
        self.total = total


class NotBlocking(GraphfrontError):
    """The star criterion margin is not strictly negative."""


# --- spectra ---

class ConvergenceFailure(GraphfrontError):
    """Eigenvalue iteration hit its cap before the tolerance was met."""


# --- scenarios ---

class ConditionUnsatisfiable(GraphfrontError):
    """No parameter in the scanned family satisfies the required sign pattern."""


class HypothesisUnmet(GraphfrontError):
    """A scenario hypothesis failed; conclusions are recorded, not asserted."""
