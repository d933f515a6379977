from enum import IntFlag


class ReportFlag(IntFlag):
    """Conditions a report can carry next to its numbers."""
    NONE = 0
    DEGENERATE_SCALING = 1
    NON_CONSERVATIVE = 2
    FULL_MASK = 4
    CONSTANT_FIELD = 8
    NOT_CONVERGED = 16
    INADMISSIBLE = 32
    HYPOTHESIS_VIOLATED = 64
    All = (NONE |
           DEGENERATE_SCALING |
           NON_CONSERVATIVE |
           FULL_MASK |
           CONSTANT_FIELD |
           NOT_CONVERGED |
           INADMISSIBLE |
           HYPOTHESIS_VIOLATED)

    def names(self):
        """Names of the single flags set in this word, in declaration order."""
        return [flag.name for flag in ReportFlag
                if flag not in (ReportFlag.NONE, ReportFlag.All) and flag in self]
