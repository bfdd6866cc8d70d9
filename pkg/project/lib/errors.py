"""Error types shared by every jlab module.

Each error carries a short ``kind`` label (used in reports and CLI
messages) and the process ``exit_code`` the command-line front end
returns when the error escapes a command.

Exit codes:
    2 - unsupported request (level without golden file, needs decomposition)
    3 - invalid input (bad document, inconsistent geodesic, bad argument)
    4 - domain error (outside the oracle domain, poles, degenerate jets)
    5 - budget exceeded (Groebner computation aborted)
"""


class JLabError(Exception):
    """Base class for all toolkit errors."""

    kind = "error"
    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def describe(self):
        """Return a one-line ``kind: message`` description."""
        return "{}: {}".format(self.kind, self)


class InvalidArgument(JLabError):
    kind = "invalid-argument"
    exit_code = 3


class InvalidInput(JLabError):
    kind = "invalid-input"
    exit_code = 3


class InvalidGeodesic(InvalidInput):
    kind = "invalid-geodesic"


class UnlinkedPair(InvalidArgument):
    kind = "unlinked-pair"


class PointNotOnVariety(InvalidInput):
    kind = "point-not-on-variety"


class PoleOnComponent(InvalidInput):
    kind = "pole-on-component"


class NonRadicalOrSingular(InvalidInput):
    kind = "non-radical-or-singular-generators"


class UnsupportedLevel(JLabError):
    kind = "unsupported-level"
    exit_code = 2


class NeedsDecomposition(JLabError):
    kind = "needs-decomposition"
    exit_code = 2


class NoCanonicalClosure(JLabError):
    kind = "no-canonical-closure"
    exit_code = 2


class OutOfDomain(JLabError):
    kind = "out-of-domain"
    exit_code = 4


class PoleAtPoint(JLabError):
    kind = "pole-at-point"
    exit_code = 4


class PoleOfR(PoleAtPoint):
    kind = "pole-of-R"


class PoleProximity(PoleAtPoint):
    kind = "pole-proximity"


class DegenerateJet(JLabError):
    kind = "degenerate-jet"
    exit_code = 4


class DegenerateJetLocus(DegenerateJet):
    kind = "degenerate-jet-locus"


class SingularModularPoint(JLabError):
    kind = "singular-modular-point"
    exit_code = 4


class PrecisionInsufficient(JLabError):
    kind = "precision-insufficient"
    exit_code = 4


class ComputationAborted(JLabError):
    """Raised when a Groebner computation exceeds its resource budget.

    ``details`` holds the partial diagnostics: basis size reached, the
    largest degree seen and the number of pairs still pending.
    """

    kind = "computation-aborted"
    exit_code = 5
