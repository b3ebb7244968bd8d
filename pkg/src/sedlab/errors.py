"""Exception hierarchy shared by all sedlab modules."""


class SedlabError(Exception):
    """Base class for every error raised by sedlab."""


class NonPositiveInput(SedlabError, ValueError):
    pass


class StrongCouplingOutOfScope(SedlabError, ValueError):
    pass


class EmptyBandwidth(SedlabError, ValueError):
    pass


class TooFewModes(SedlabError, ValueError):
    pass


class NonPositiveCutoff(SedlabError, ValueError):
    pass


class StepTooLarge(SedlabError, ValueError):
    pass


class NonFiniteState(SedlabError, FloatingPointError):
    """Integration produced NaN/inf. ``step`` is the first offending step index."""

    def __init__(self, step, trajectory=None):
        self.step = int(step)
        self.trajectory = trajectory
        where = f"step {self.step}"
        if trajectory is not None:
            where = f"trajectory {trajectory}, " + where
        super().__init__(f"non-finite state at {where}")


class NonConservativeForce(SedlabError, TypeError):
    pass


class MissingJacobian(SedlabError, TypeError):
    pass


class MissingSecondDerivative(SedlabError, TypeError):
    pass


class GridMismatch(SedlabError, ValueError):
    pass


class DimensionTooSmall(SedlabError, ValueError):
    pass


class IndexOutOfRange(SedlabError, IndexError):
    pass


class MismatchedModeSets(SedlabError, ValueError):
    pass


class InconsistentInputs(SedlabError, ValueError):
    pass


class DuplicateLabels(SedlabError, ValueError):
    pass


class EdgeState(SedlabError, IndexError):
    pass


class UpwardTransition(SedlabError, ValueError):
    pass


class ConfigParseError(SedlabError, ValueError):
    """Bad experiment config. ``field`` names the offending key, ``line`` the JSON line."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        parts = [message]
        if field is not None:
            parts.append(f"field={field!r}")
        if line is not None:
            parts.append(f"line={line}")
        super().__init__("; ".join(parts))


class MultipleSweptAxes(SedlabError, ValueError):
    pass


class EmptySweep(SedlabError, ValueError):
    pass


class ExperimentError(SedlabError, RuntimeError):
    """Wraps a module error with the experiment that raised it."""

    def __init__(self, experiment, cause):
        self.experiment = experiment
        self.cause = cause
        super().__init__(f"{experiment}: {type(cause).__name__}: {cause}")
