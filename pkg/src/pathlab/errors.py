"""Exception hierarchy. The CLI maps these onto exit codes."""


class PathlabError(Exception):
    pass


class ValidationError(PathlabError, ValueError):
    """Bad inputs or violated preconditions (CLI exit code 1)."""


class EnumerationCapError(ValidationError):
    def __init__(self, count, cap):
        super().__init__(
            f"path enumeration would yield {count} paths, above the cap of {cap}"
        )
        self.count = count
        self.cap = cap


class TruncationError(ValidationError):
    """Inputs leak too much mass toward the artificial domain boundary."""

    def __init__(self, message, edge_leak):
        super().__init__(f"{message} (edge leak {edge_leak:.3e})")
        self.edge_leak = edge_leak


class NumericalError(PathlabError, ArithmeticError):
    """Numerical failure during a computation (CLI exit code 2)."""


class FocalPointError(NumericalError):
    pass


class ConjugatePointError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual
