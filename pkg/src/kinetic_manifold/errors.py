"""Exception hierarchy shared by all modules."""


class KineticError(Exception):
    """Base class for library errors."""


class ModelError(KineticError):
    """Malformed model input (schema, shapes, symmetry of the metric)."""


class HypothesisError(KineticError):
    """A model fails the structural hypotheses required by an operation."""


class DecompositionError(KineticError):
    """Rank decisions or block inversions could not be made reliably."""


class ConvergenceError(KineticError):
    """An iterative solver (Newton, Picard, BVP) failed to converge."""


class ContractionError(ConvergenceError):
    """The fixed-point map was observed not to contract."""


class ClassificationError(KineticError):
    """The model is in the wrong characteristic case for the request."""


class ProfileError(KineticError):
    """A shock profile could not be constructed."""
