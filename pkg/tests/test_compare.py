"""Equivalence harness: reconstructions and base-vs-optimized deviation."""

import numpy as np
import pytest

from guitenet.compare import (
    compare_evaluations,
    recorded_operand_perms,
    relative_deviation,
    split_children,
    split_node_ids,
    split_reconstruction,
    tree_reconstruction,
)
from guitenet.interpreter import DenseTensor, eval_dag_values
from guitenet.ir import (
    InputNode,
    NodeRef,
    OpDag,
    QRSplitNode,
    SVDSplitNode,
    TranspositionNode,
)
from guitenet.lowering import lower_script
from guitenet.optimizer import run_pipeline
from guitenet.network import Split
from helpers import dense, random_inputs, three_tensor_actions


def test_relative_deviation_basics():
    a = DenseTensor((2,), [3.0, 4.0])
    assert relative_deviation(a, a) == 0.0
    zero = DenseTensor((2,), [0.0, 0.0])
    assert relative_deviation(zero, zero) == 0.0
    assert relative_deviation(a, zero) == 1.0  # ||a|| / max norm
    assert relative_deviation(a, DenseTensor((3,), [0, 0, 0])) == float(
        "inf")
    b = DenseTensor((2,), [3.0, 4.0 + 5e-9])
    assert 0 < relative_deviation(a, b) < 1e-8


def test_split_reconstruction_inverts_qr():
    dag = OpDag()
    dag.nodes[0] = InputNode(0, 3)
    dag.nodes[1] = QRSplitNode(1, NodeRef(0), 2)
    dag.results = [NodeRef(1, 0), NodeRef(1, 1)]
    inputs = random_inputs(dag, seed=1)
    values = eval_dag_values(dag, inputs)
    recon = split_reconstruction(dag, values, 1)
    assert relative_deviation(recon, inputs[0]) < 1e-12


def test_split_reconstruction_inverts_untruncated_svd():
    dag = OpDag()
    dag.nodes[0] = InputNode(0, 3)
    dag.nodes[1] = SVDSplitNode(1, NodeRef(0), 1)
    dag.results = [NodeRef(1, 0), NodeRef(1, 1), NodeRef(1, 2)]
    inputs = random_inputs(dag, seed=2)
    values = eval_dag_values(dag, inputs)
    recon = split_reconstruction(dag, values, 1)
    assert relative_deviation(recon, inputs[0]) < 1e-12


def chained_split_dag():
    """Split a rank-3 input, transpose the R factor, split it again."""
    dag = OpDag()
    dag.nodes[0] = InputNode(0, 3)
    dag.nodes[1] = QRSplitNode(1, NodeRef(0), 1)
    dag.nodes[3] = TranspositionNode(3, NodeRef(1, 1), (0, 2, 1))
    dag.nodes[4] = QRSplitNode(4, NodeRef(3), 2)
    dag.results = [NodeRef(1, 0), NodeRef(4, 0), NodeRef(4, 1)]
    return dag


def test_split_children_walk_sole_consumer_transpose_chains():
    dag = chained_split_dag()
    assert split_node_ids(dag) == [1, 4]
    assert split_children(dag) == {4: 1}
    # An extra result observer keeps the chain intact (reconstruction is
    # exact along the route), but a second operand consumer makes the
    # tree shape ambiguous and stops the walk.
    dag.results.append(NodeRef(3))
    assert split_children(dag) == {4: 1}
    dag.nodes[6] = TranspositionNode(6, NodeRef(3), (0, 1, 2))
    assert split_children(dag) == {}


def test_tree_reconstruction_rebuilds_through_the_chain():
    dag = chained_split_dag()
    inputs = random_inputs(dag, seed=3)
    values = eval_dag_values(dag, inputs)
    recon = tree_reconstruction(dag, values, 1)
    assert relative_deviation(recon, inputs[0]) < 1e-12


def test_compare_evaluations_accepts_the_rewrite_pipeline():
    base = lower_script(three_tensor_actions())
    inputs = random_inputs(base, seed=4, dim=2)
    values_base = eval_dag_values(base, inputs)
    for level in (1, 2):
        opt, reports = run_pipeline(base, level)
        values_opt = eval_dag_values(opt, inputs)
        dev = compare_evaluations(base, values_base, opt, values_opt,
                                  reports)
        assert dev < 1e-12


def test_compare_evaluations_detects_corruption():
    base = lower_script(three_tensor_actions())
    inputs = random_inputs(base, seed=5, dim=2)
    values_base = eval_dag_values(base, inputs)
    opt, reports = run_pipeline(base, 1)
    values_opt = eval_dag_values(opt, inputs)
    ref = opt.results[0]
    tampered = values_opt[ref].to_ndarray() + 1.0
    values_opt[ref] = DenseTensor.from_ndarray(tampered)
    dev = compare_evaluations(base, values_base, opt, values_opt, reports)
    assert dev > 0.01


def test_compare_evaluations_needs_matching_structure():
    base = lower_script(three_tensor_actions())
    inputs = random_inputs(base, seed=6, dim=2)
    values = eval_dag_values(base, inputs)
    shorter = base.copy()
    shorter.results = shorter.results[:1]
    with pytest.raises(ValueError):
        compare_evaluations(base, values, shorter, values, [])


def test_recorded_perms_are_undone_at_the_tree_root():
    dag = OpDag()
    dag.nodes[0] = InputNode(0, 3)
    dag.nodes[1] = QRSplitNode(1, NodeRef(0), 2)
    dag.nodes[3] = TranspositionNode(3, NodeRef(1, 0), (1, 0, 2))
    dag.results = [NodeRef(3), NodeRef(1, 1)]
    inputs = random_inputs(dag, seed=7)
    values_base = eval_dag_values(dag, inputs)
    opt, reports = run_pipeline(dag, 2)
    values_opt = eval_dag_values(opt, inputs)
    recorded = recorded_operand_perms(reports)
    assert recorded == {1: [(1, 0, 2)]}
    dev = compare_evaluations(dag, values_base, opt, values_opt, reports)
    assert dev < 1e-12
    # Dropping the report loses the permutation bookkeeping, and the
    # reconstructions stop lining up: the undo step is load-bearing.
    dev_without = compare_evaluations(dag, values_base, opt, values_opt,
                                      [])
    assert dev_without > 0.01


def test_truncating_split_keeps_slots_comparable_when_gap_is_clear():
    # With a hard rank cap on a random tensor the kept subspace is well
    # separated, so base and optimized evaluations still reconstruct the
    # same truncated tensor.
    actions = three_tensor_actions()[:-1] + [
        Split(3, (3, 0), (2, 1), kind="svd", max_bond=2),
    ]
    base = lower_script(actions)
    inputs = random_inputs(base, seed=8, dim=2)
    values_base = eval_dag_values(base, inputs)
    opt, reports = run_pipeline(base, 2)
    values_opt = eval_dag_values(opt, inputs)
    dev = compare_evaluations(base, values_base, opt, values_opt, reports)
    assert dev < 1e-10
