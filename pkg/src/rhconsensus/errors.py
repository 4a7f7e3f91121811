"""Exception hierarchy for the toolkit.

Every error carries a short machine-readable ``code`` used by the CLI's JSON
error field. ``InputError`` subclasses map to exit code 1 (bad input),
``NumericalError`` subclasses to exit code 2 (computation failed).
"""


class ToolkitError(Exception):
    code = "Error"


class InputError(ToolkitError):
    code = "InputError"


class NumericalError(ToolkitError):
    code = "NumericalError"


class NonSquareError(InputError):
    code = "NonSquare"


class SelfLoopError(InputError):
    code = "SelfLoop"

    def __init__(self, agent: int):
        super().__init__(f"agent {agent} has a self-loop")
        self.agent = agent


class ZeroInDegreeError(InputError):
    code = "ZeroInDegree"

    def __init__(self, agent: int):
        super().__init__(
            f"agent {agent} has no in-neighbors; per-agent input weight and "
            "the normalized adjacency are undefined"
        )
        self.agent = agent


class NonBinaryEntryError(InputError):
    code = "NonBinaryEntry"

    def __init__(self, i: int, j: int, value):
        super().__init__(f"adjacency entry ({i}, {j}) = {value!r} is not 0 or 1")
        self.position = (i, j)


class DimensionMismatchError(InputError):
    code = "DimensionMismatch"


class NotControllableError(InputError):
    code = "NotControllable"


class NotScalarError(InputError):
    code = "NotScalar"


class HeterogeneousWeightsError(InputError):
    code = "HeterogeneousWeights"


class NeighborSetMismatchError(InputError):
    code = "NeighborSetMismatch"


class ControllerTopologyMismatchError(InputError):
    code = "ControllerTopologyMismatch"


class InvalidStepsError(InputError):
    code = "InvalidSteps"


class ConfigError(InputError):
    code = "ConfigError"


class MethodDisagreementError(NumericalError):
    code = "MethodDisagreement"


class EigenFailureError(NumericalError):
    code = "EigenFailure"


class SingularInnerMatrixError(NumericalError):
    code = "SingularInnerMatrix"


class LostPositivityError(NumericalError):
    code = "LostPositivity"


class PushThroughMismatchError(NumericalError):
    code = "PushThroughMismatch"


class GainFormMismatchError(NumericalError):
    code = "GainFormMismatch"


class SingularNormalEquationsError(NumericalError):
    code = "SingularNormalEquations"


class UnstableUncoupledModeError(NumericalError):
    code = "UnstableUncoupledMode"


class PreconditionViolatedError(NumericalError):
    code = "PreconditionViolated"


class MissingMessageError(NumericalError):
    code = "MissingMessage"
