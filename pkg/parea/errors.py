from parea.enums import UIntEnum


class Status(UIntEnum):
    SUCCESS = 0
    ERROR_INVALID_ARGUMENT = 1
    ERROR_STRUCTURE_MISMATCH = 2
    ERROR_SIZE_LIMIT = 3
    ERROR_DIVERGED = 4
    ERROR_NOT_CONVERGED = 5
    ERROR_DIAGNOSTIC = 6
    ERROR_IO = 7

    def __str__(self):
        status_to_string = {
            Status.SUCCESS: "Success",
            Status.ERROR_INVALID_ARGUMENT: "Invalid Argument",
            Status.ERROR_STRUCTURE_MISMATCH: "Structure Mismatch",
            Status.ERROR_SIZE_LIMIT: "Size Limit Exceeded",
            Status.ERROR_DIVERGED: "Iteration Diverged",
            Status.ERROR_NOT_CONVERGED: "Not Converged",
            Status.ERROR_DIAGNOSTIC: "Diagnostic Undefined",
            Status.ERROR_IO: "Input/Output Error",
        }
        return status_to_string[self]

    def get_exception(self):
        status2exception = {
            Status.ERROR_INVALID_ARGUMENT: PAreaErrorInvalidArgument,
            Status.ERROR_STRUCTURE_MISMATCH: PAreaErrorStructureMismatch,
            Status.ERROR_SIZE_LIMIT: PAreaErrorSizeLimit,
            Status.ERROR_DIVERGED: PAreaErrorDiverged,
            Status.ERROR_NOT_CONVERGED: PAreaErrorNotConverged,
            Status.ERROR_DIAGNOSTIC: PAreaErrorDiagnostic,
            Status.ERROR_IO: PAreaErrorIO,
        }
        return status2exception[self]

    @property
    def exit_code(self) -> int:
        """Process exit code: 0 success, 2 non-convergence, 1 anything else."""
        if self is Status.SUCCESS:
            return 0
        if self is Status.ERROR_NOT_CONVERGED:
            return 2
        return 1

    @staticmethod
    def check(status: "Status", *args):
        if status is Status.SUCCESS:
            return status
        raise status.get_exception()(*args)


class PAreaError(Exception):
    status = None

    def __init__(self, *args):
        super().__init__(*args)

    def __str__(self):
        detail = " ".join(str(x) for x in self.args)
        if detail:
            return f"{self.status}: {detail}"
        return str(self.status)

    @property
    def exit_code(self) -> int:
        return self.status.exit_code


class PAreaErrorInvalidArgument(PAreaError, ValueError):
    status = Status.ERROR_INVALID_ARGUMENT


class PAreaErrorStructureMismatch(PAreaError, ValueError):
    status = Status.ERROR_STRUCTURE_MISMATCH


class PAreaErrorSizeLimit(PAreaError):
    status = Status.ERROR_SIZE_LIMIT


class PAreaErrorDiverged(PAreaError, ArithmeticError):
    status = Status.ERROR_DIVERGED

    def __init__(self, iteration: int, *args):
        super().__init__(f"non-finite iterate at iteration {iteration}", *args)
        self.iteration = iteration


class PAreaErrorNotConverged(PAreaError):
    status = Status.ERROR_NOT_CONVERGED


class PAreaErrorDiagnostic(PAreaError):
    status = Status.ERROR_DIAGNOSTIC


class PAreaErrorIO(PAreaError):
    status = Status.ERROR_IO
