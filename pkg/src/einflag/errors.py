"""Exception hierarchy.

``ValidationError`` subclasses signal bad user input (CLI exit code 2);
``CheckViolation`` subclasses signal that a computed property failed (exit code 3).
"""


class EinflagError(Exception):
    pass


class ValidationError(EinflagError):
    pass


class CheckViolation(EinflagError):
    pass


class AntisymmetryViolation(ValidationError):
    def __init__(self, triple, residual, kind="antisymmetry"):
        self.triple = tuple(int(i) for i in triple)
        self.residual = float(residual)
        super().__init__(f"{kind} violated at {self.triple}: residual {self.residual:.3e}")


class JacobiViolation(ValidationError):
    def __init__(self, triple, residual):
        self.triple = tuple(int(i) for i in triple)
        self.residual = float(residual)
        super().__init__(f"Jacobi identity violated at {self.triple}: residual {self.residual:.3e}")


class DimensionMismatch(ValidationError):
    pass


class NotSubalgebra(ValidationError):
    pass


class NotNested(ValidationError):
    pass


class FullAlgebra(ValidationError):
    pass


class DegeneratePoint(ValidationError):
    pass


class BadPartition(ValidationError):
    pass


class AllToral(ValidationError):
    pass


class EmptyFilter(ValidationError):
    pass


class EmptyComplement(ValidationError):
    pass


class NotPositiveDefinite(ValidationError):
    pass


class InvalidRay(ValidationError):
    pass


class InconsistentEquivalence(ValidationError):
    pass


class KernelNotSubalgebra(CheckViolation):
    pass


class NonConvergence(CheckViolation):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics
        super().__init__(message)


class NotAFlag(CheckViolation):
    pass


class NotInSimplex(CheckViolation):
    pass


class NotInButterfly(CheckViolation):
    pass


class EndpointBoundViolated(CheckViolation):
    def __init__(self, message, worst=None):
        self.worst = worst
        super().__init__(message)


class StarViolation(CheckViolation):
    pass


class NotInVI(CheckViolation):
    pass


class SystemResidual(CheckViolation):
    def __init__(self, residual):
        self.residual = float(residual)
        super().__init__(f"join system residual {self.residual:.3e}")


class WitnessNotFound(CheckViolation):
    pass


class KappaZero(CheckViolation):
    pass


class NoRepresentativeFlag(CheckViolation):
    def __init__(self, clique):
        self.clique = tuple(clique)
        super().__init__(f"no catalog flag realizes clique {self.clique}")


class BoundViolated(CheckViolation):
    def __init__(self, message, worst_t=None):
        self.worst_t = worst_t
        super().__init__(message)


class Misclassification(CheckViolation):
    pass
