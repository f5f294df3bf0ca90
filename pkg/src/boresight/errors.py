"""Exception types shared across the library.

Fatal simulation errors derive from SimulationFatal so that drivers can map
them to a single exit status while still telling the failure modes apart.
"""


class BoresightError(Exception):
    """Base class for all library-specific errors."""


class AntipodalInput(BoresightError):
    """Two unit vectors are (numerically) antipodal; the rotation axis is undefined."""


class DegenerateMatrix(BoresightError):
    """A matrix could not be projected onto SO(3) (determinant <= 0)."""


class DomainError(BoresightError):
    """An argument lies outside the domain of a gain function."""


class HypothesisViolated(BoresightError):
    """A convergence-lemma hypothesis (e.g. alpha > 1/T) does not hold."""


class NoSolution(BoresightError):
    """A root search has no admissible solution (degenerate configuration)."""


class ParseError(BoresightError):
    """A scenario file is malformed; the message names the offending field."""


class ValidationError(BoresightError):
    """A scenario or guidance configuration violates one or more constraints."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class SimulationFatal(BoresightError):
    """Base class for errors that abort a simulation run.

    Carries the simulation time and, when available, the offending state so
    the failure can be reported in metrics output.
    """

    def __init__(self, message, t=None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t:.6g} s)"
        super().__init__(message)


class BoundaryViolation(SimulationFatal):
    """A state entered a margin-augmented forbidden zone."""

    def __init__(self, zone_index, t=None):
        self.zone_index = zone_index
        super().__init__(f"state inside augmented forbidden zone {zone_index}", t=t)


class TubeBreach(SimulationFatal):
    """The tracking error left the safe tube (xi >= 1); the barrier is singular."""

    def __init__(self, xi, t=None):
        self.xi = xi
        super().__init__(f"safe tube breached (xi={xi:.6g})", t=t)


class NonFiniteState(SimulationFatal):
    """A state component became NaN or infinite during integration."""
