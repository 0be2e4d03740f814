"""Exception hierarchy shared by all kanskew modules."""


class KanskewError(Exception):
    """Base class for domain errors (CLI exit code 1)."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class NotUnimodular(KanskewError):
    code = "NotUnimodular"


class NotHyperbolic(KanskewError):
    code = "NotHyperbolic"


class ParallelLeaves(KanskewError):
    code = "ParallelLeaves"


class NotBoundaryFixing(KanskewError):
    code = "NotBoundaryFixing"


class NotMonotone(KanskewError):
    code = "NotMonotone"


class NoConvergence(KanskewError):
    code = "NoConvergence"


class DomainCollapse(KanskewError):
    code = "DomainCollapse"


class DegenerateDerivative(KanskewError):
    code = "DegenerateDerivative"


class FactorizationBudgetExceeded(KanskewError):
    code = "FactorizationBudgetExceeded"


class PrecisionExhausted(KanskewError):
    code = "PrecisionExhausted"


class NoPairInBudget(KanskewError):
    code = "NoPairInBudget"


class ExhaustedCandidates(KanskewError):
    code = "ExhaustedCandidates"


class NotFixedPoint(KanskewError):
    code = "NotFixedPoint"


class NotOnLeaf(KanskewError):
    code = "NotOnLeaf"


class InvalidSystem(KanskewError):
    """Raised when a proof-guided operation receives a system failing K1-K3."""

    code = "InvalidSystem"


class BudgetExceeded(KanskewError):
    code = "BudgetExceeded"


class IndependenceUnknown(KanskewError):
    code = "IndependenceUnknown"


class VerificationFailed(KanskewError):
    code = "VerificationFailed"


class DepthTooFine(KanskewError):
    code = "DepthTooFine"


class ConfigError(KanskewError):
    """Malformed configuration; the CLI maps this to a usage error."""

    code = "ConfigError"
