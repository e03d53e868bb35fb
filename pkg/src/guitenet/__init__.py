"""Interactive tensor-network editor core: a network of tensors joined by
junctions is edited through a small action vocabulary, lowered to a dag of
elementary operations (contraction, transposition, QR and SVD splitting),
optionally simplified, and emitted as a plain numpy function.
"""

from .codegen import TARGETS, EmittedProgram, emit, emit_module
from .compare import compare_evaluations, relative_deviation
from .errors import (
    ActionError,
    ContractNotSingleComponent,
    CycleDetected,
    DagEvaluationError,
    GuiteNetError,
    InvalidDag,
    InvalidLeading,
    InvalidPermutation,
    InvalidSplitParams,
    InvalidSplitPartition,
    LegAlreadyConnected,
    LoweringError,
    ScriptError,
    ScriptParseError,
    ShapeMismatch,
    UnknownEntity,
    UnsupportedTarget,
)
from .interpreter import (
    DenseTensor,
    eval_contraction,
    eval_dag,
    eval_dag_values,
    eval_qr,
    eval_svd,
    eval_transpose,
)
from .ir import (
    DAG_SCHEMA_VERSION,
    ContractionNode,
    InputNode,
    NodeRef,
    OpDag,
    QRSplitNode,
    SVDSplitNode,
    TranspositionNode,
    dag_from_dict,
    dag_to_dict,
    topo_levels,
    topo_order,
    validate,
)
from .lowering import LoweringContext, lower_contract, lower_script, lower_split
from .network import (
    AttachLeg,
    ConnectLegs,
    Contract,
    CreateTensor,
    DisconnectLeg,
    Junction,
    Leg,
    MoveTensor,
    NetworkState,
    Split,
    TensorNode,
    apply_action,
    connected_components,
)
from .optimizer import (
    PassReport,
    Rewrite,
    fold_transpose_into_contraction,
    merge_contractions,
    push_transpose_through_qr,
    run_pipeline,
)
from .session import (
    SCRIPT_SCHEMA_VERSION,
    Session,
    SessionStore,
    StaleRevision,
    UnknownSession,
    action_from_dict,
    action_to_dict,
    load_script,
    script_from_dict,
    script_to_dict,
)

__version__ = "0.1.0"

__all__ = [
    "ActionError",
    "AttachLeg",
    "ConnectLegs",
    "Contract",
    "ContractNotSingleComponent",
    "ContractionNode",
    "CreateTensor",
    "CycleDetected",
    "DAG_SCHEMA_VERSION",
    "DagEvaluationError",
    "DenseTensor",
    "DisconnectLeg",
    "EmittedProgram",
    "GuiteNetError",
    "InputNode",
    "InvalidDag",
    "InvalidLeading",
    "InvalidPermutation",
    "InvalidSplitParams",
    "InvalidSplitPartition",
    "Junction",
    "Leg",
    "LegAlreadyConnected",
    "LoweringContext",
    "LoweringError",
    "MoveTensor",
    "NetworkState",
    "NodeRef",
    "OpDag",
    "PassReport",
    "QRSplitNode",
    "Rewrite",
    "SCRIPT_SCHEMA_VERSION",
    "SVDSplitNode",
    "ScriptError",
    "ScriptParseError",
    "Session",
    "SessionStore",
    "ShapeMismatch",
    "Split",
    "StaleRevision",
    "TARGETS",
    "TensorNode",
    "TranspositionNode",
    "UnknownEntity",
    "UnknownSession",
    "UnsupportedTarget",
    "action_from_dict",
    "action_to_dict",
    "apply_action",
    "compare_evaluations",
    "connected_components",
    "dag_from_dict",
    "dag_to_dict",
    "emit",
    "emit_module",
    "eval_contraction",
    "eval_dag",
    "eval_dag_values",
    "eval_qr",
    "eval_svd",
    "eval_transpose",
    "fold_transpose_into_contraction",
    "load_script",
    "lower_contract",
    "lower_script",
    "lower_split",
    "merge_contractions",
    "push_transpose_through_qr",
    "relative_deviation",
    "run_pipeline",
    "script_from_dict",
    "script_to_dict",
    "topo_levels",
    "topo_order",
    "validate",
    "__version__",
]
