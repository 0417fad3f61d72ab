class YBError(Exception):

    exit_code = 1

    def __init__(self, message, details=None):
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})

    def to_dict(self):

        return {
            "type": type(self).__name__,
            "message": self.message,
            "details": self.details
        }


# =====================================================
# NUMERICAL DEGENERACY (exit 3)
# =====================================================

class NumericalDegeneracy(YBError):
    exit_code = 3


class SingularMatrix(NumericalDegeneracy):
    pass


class SingularParameter(NumericalDegeneracy):
    pass


class DegeneratePi(NumericalDegeneracy):
    pass


class DegenerateDenominator(NumericalDegeneracy):
    pass


class DegenerateSimilarity(NumericalDegeneracy):
    pass


class NonCommuting(NumericalDegeneracy):
    pass


class IllConditioned(NumericalDegeneracy):
    pass


class ResidualExceeded(NumericalDegeneracy):
    pass


class LeafMismatch(NumericalDegeneracy):
    pass


# =====================================================
# DOMAIN (exit 3)
# =====================================================

class DomainError(YBError):
    exit_code = 3


class PoleError(DomainError):
    pass


class BranchCut(DomainError):
    pass


class OutOfWindow(DomainError):
    pass


# =====================================================
# DIAGNOSTICS / RUNS
# =====================================================

class StepTooLarge(YBError):
    exit_code = 1


class PoleEncountered(YBError):

    exit_code = 3

    def __init__(self, message, step, details=None):
        super().__init__(message, details)
        self.step = step
        self.details["step"] = step


class ConfigError(YBError):
    exit_code = 2
