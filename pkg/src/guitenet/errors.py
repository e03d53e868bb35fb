"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` (lower_snake_case)
that the CLI and the HTTP service surface verbatim.
"""

from __future__ import annotations


class GuiteNetError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__doc__ or self.code)


class ActionError(GuiteNetError):
    """An editing action could not be applied to the network."""

    code = "action_error"


class UnknownEntity(ActionError):
    """An action referenced a tensor or leg that does not exist."""

    code = "unknown_entity"


class ContractNotSingleComponent(ActionError):
    """The selected tensors do not form one junction-connected component
    covering all summed junctions."""

    code = "contract_not_single_component"


class InvalidSplitPartition(ActionError):
    """Row and column dimension lists of a split are not a partition of the
    tensor's dimensions into two non-empty groups."""

    code = "invalid_split_partition"


class InvalidSplitParams(ActionError):
    """Numeric split parameters are out of range."""

    code = "invalid_split_params"


class LegAlreadyConnected(ActionError):
    """ConnectLegs would not change the network: the legs already share a
    junction (or a leg was paired with itself)."""

    code = "leg_already_connected"


class LoweringError(GuiteNetError):
    """An action cannot be expressed as elementary operations."""

    code = "lowering_error"


class ScriptError(GuiteNetError):
    """An action script failed; ``action_index`` names the offending entry."""

    code = "script_error"

    def __init__(self, action_index: int, cause: Exception):
        self.action_index = action_index
        self.cause = cause
        cause_code = getattr(cause, "code", cause.__class__.__name__)
        super().__init__(f"action {action_index}: [{cause_code}] {cause}")


class ScriptParseError(GuiteNetError):
    """An action script document is malformed."""

    code = "script_parse_error"

    def __init__(self, message: str, action_index: int | None = None):
        self.action_index = action_index
        if action_index is not None:
            message = f"action {action_index}: {message}"
        super().__init__(message)


class InvalidDag(GuiteNetError):
    """An operation dag failed validation."""

    code = "invalid_dag"

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"dag validation failed: {lines}")


class CycleDetected(GuiteNetError):
    """The node graph contains a cycle."""

    code = "cycle_detected"


class ShapeMismatch(GuiteNetError):
    """Tensor shapes are inconsistent with the requested operation."""

    code = "shape_mismatch"


class InvalidPermutation(GuiteNetError):
    """A dimension permutation is not a bijection on 0..rank-1."""

    code = "invalid_permutation"


class InvalidLeading(GuiteNetError):
    """The number of leading (row) dimensions of a matricization must be
    strictly between 0 and the tensor rank."""

    code = "invalid_leading"


class UnsupportedTarget(GuiteNetError):
    """The requested code-generation target is not available."""

    code = "unsupported_target"


class DagEvaluationError(GuiteNetError):
    """Evaluation of one or more dag nodes failed."""

    code = "dag_evaluation_error"

    def __init__(self, failures):
        # failures: list of (node_id, exception)
        self.failures = list(failures)
        text = "; ".join(f"node {nid}: {err}" for nid, err in self.failures)
        super().__init__(text)
