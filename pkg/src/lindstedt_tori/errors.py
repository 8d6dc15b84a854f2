"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front-end can map
failures onto its documented exit statuses (1 input, 2 numerical, 3 internal).
"""


class LindstedtError(Exception):
    exit_code = 2


class InputError(LindstedtError, ValueError):
    exit_code = 1


class NumericalError(LindstedtError, ArithmeticError):
    exit_code = 2


class SingularSystemError(NumericalError):
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"pivot vanishes in column {column}")


class ConvergenceError(NumericalError):
    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class SolvabilityError(NumericalError):
    def __init__(self, average, message=None):
        self.average = average
        super().__init__(message or f"right-hand side has nonzero average {average}")


class NearResonanceError(NumericalError):
    def __init__(self, mode, divisor):
        self.mode = mode
        self.divisor = divisor
        super().__init__(f"small divisor {float(divisor):.3e} at mode {mode}")


class DegenerateConfigError(NumericalError):
    pass


class DegenerateTableError(NumericalError):
    def __init__(self, m, n, rank):
        self.m, self.n, self.rank = m, n, rank
        super().__init__(f"Pade [{m}/{n}] system is singular (numerical rank {rank} < {n})")


class ConsistencyError(LindstedtError):
    exit_code = 3


class ArchiveFormatError(InputError):
    def __init__(self, message, line=None, order=None):
        self.line = line
        self.order = order
        where = []
        if line is not None:
            where.append(f"line {line}")
        if order is not None:
            where.append(f"order {order}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class NotFoundError(NumericalError):
    pass
