"""Reference evaluation of dags, checked against loop-based oracles."""

import numpy as np
import pytest

from guitenet.errors import (
    DagEvaluationError,
    InvalidLeading,
    InvalidPermutation,
    ShapeMismatch,
)
from guitenet.interpreter import (
    DenseTensor,
    eval_contraction,
    eval_dag,
    eval_dag_values,
    eval_qr,
    eval_svd,
    eval_transpose,
)
from guitenet.ir import (
    ContractionNode,
    InputNode,
    NodeRef,
    OpDag,
    TranspositionNode,
)
from guitenet.lowering import lower_script
from helpers import dense, random_inputs, three_tensor_actions
from reference import loop_einsum, loop_transpose


def as_pairs(*shape_label_pairs, seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    for shape, labels in shape_label_pairs:
        arr = rng.standard_normal(shape)
        pairs.append((DenseTensor.from_ndarray(arr), tuple(labels)))
    return pairs


def check_against_loop(pairs, output_labels):
    got = eval_contraction(pairs, tuple(output_labels))
    want = loop_einsum(
        [(t.to_ndarray(), labels) for t, labels in pairs],
        tuple(output_labels))
    assert got.shape == want.shape
    assert np.allclose(got.to_ndarray(), want, atol=1e-12, rtol=1e-12)


def test_matrix_product_matches_loop_oracle():
    check_against_loop(as_pairs(((3, 4), (0, 1)), ((4, 5), (1, 2))), (0, 2))


def test_output_label_order_permutes_the_result():
    pairs = as_pairs(((3, 4), (0, 1)), ((4, 5), (1, 2)))
    check_against_loop(pairs, (2, 0))


def test_trace_and_partial_trace():
    check_against_loop(as_pairs(((4, 4), (0, 0))), ())
    check_against_loop(as_pairs(((4, 3, 4), (0, 1, 0))), (1,))


def test_repeated_label_takes_the_diagonal():
    # One operand using a label twice contributes only its diagonal.
    check_against_loop(
        as_pairs(((3, 3), (0, 0)), ((3, 2), (0, 1))), (0, 1))


def test_hyperedge_label_shared_by_three_operands():
    check_against_loop(
        as_pairs(((3, 2), (0, 1)), ((3, 4), (0, 2)), ((3,), (0,))),
        (1, 2))


def test_scalar_operands_multiply_in():
    pairs = as_pairs(((), ()), ((3,), (0,)))
    check_against_loop(pairs, (0,))
    out = eval_contraction(as_pairs(((), ()), ((), ())), ())
    assert out.shape == ()


def test_outer_product_has_no_summed_labels():
    check_against_loop(as_pairs(((2,), (0,)), ((3,), (1,))), (0, 1))


def test_full_network_contraction_matches_oracle():
    check_against_loop(
        as_pairs(((2, 3, 2), (0, 1, 2)), ((4, 2), (3, 2)),
                 ((2, 3, 2), (0, 4, 5))),
        (1, 3, 4, 5))


def test_conflicting_label_sizes_are_rejected():
    pairs = as_pairs(((3, 4), (0, 1)), ((5, 2), (1, 2)))
    with pytest.raises(ShapeMismatch) as info:
        eval_contraction(pairs, (0, 2))
    assert "1" in str(info.value)  # the offending label is named


def test_transpose_convention_is_exact():
    arr = np.arange(10 * 11 * 12, dtype=float).reshape(10, 11, 12)
    out = eval_transpose(DenseTensor.from_ndarray(arr), (1, 2, 0))
    assert out.shape == (11, 12, 10)
    view = out.to_ndarray()
    for i in range(0, 10, 3):
        for j in range(0, 11, 3):
            for k in range(0, 12, 3):
                assert view[j, k, i] == arr[i, j, k]
    assert np.array_equal(view, loop_transpose(arr, (1, 2, 0)))


def test_transpose_matches_loop_oracle_on_random_perms():
    rng = np.random.default_rng(7)
    for _ in range(10):
        rank = int(rng.integers(1, 5))
        shape = tuple(int(d) for d in rng.integers(1, 5, size=rank))
        perm = tuple(int(p) for p in rng.permutation(rank))
        arr = rng.standard_normal(shape)
        out = eval_transpose(DenseTensor.from_ndarray(arr), perm)
        assert np.array_equal(out.to_ndarray(), loop_transpose(arr, perm))


def test_transpose_of_scalar_and_identity():
    scalar = DenseTensor((), [2.5])
    assert eval_transpose(scalar, ()).item() == 2.5
    t = dense((2, 3))
    assert np.array_equal(
        eval_transpose(t, (0, 1)).to_ndarray(), t.to_ndarray())


def test_bad_permutations_are_rejected():
    t = dense((2, 3))
    with pytest.raises(InvalidPermutation):
        eval_transpose(t, (0, 0))
    with pytest.raises(InvalidPermutation):
        eval_transpose(t, (0,))
    with pytest.raises(InvalidPermutation):
        eval_transpose(t, (0, 2))


def test_qr_factors_carry_the_split_shapes():
    t = dense((3, 4, 5), seed=1)
    q, r = eval_qr(t, 2)
    assert q.shape == (3, 4, 5)   # 12 rows, 5 columns: bond is min = 5
    assert r.shape == (5, 5)
    recon = np.tensordot(q.to_ndarray(), r.to_ndarray(), axes=([2], [0]))
    assert np.allclose(recon, t.to_ndarray(), atol=1e-10)

    q, r = eval_qr(t, 1)          # 3 rows, 20 columns: bond is 3
    assert q.shape == (3, 3)
    assert r.shape == (3, 4, 5)


def test_svd_factors_carry_the_split_shapes():
    t = dense((3, 4, 5), seed=2)
    u, s, v = eval_svd(t, 2)
    assert u.shape == (3, 4, 5)
    assert s.shape == (5,)
    assert v.shape == (5, 5)
    recon = np.einsum("abk,k,kc->abc", u.to_ndarray(), s.to_ndarray(),
                      v.to_ndarray())
    assert np.allclose(recon, t.to_ndarray(), atol=1e-10)
    assert np.all(np.diff(s.to_ndarray()) <= 1e-12)  # descending


def test_svd_truncation_respects_cutoff_and_cap():
    t = dense((4, 6), seed=3)
    _, s_full, _ = eval_svd(t, 1)
    cutoff = float(s_full.to_ndarray()[1])  # keep strictly above sigma_2
    u, s, v = eval_svd(t, 1, sv_cutoff_abs=cutoff)
    assert s.shape == (1,)
    u, s, v = eval_svd(t, 1, max_bond=2)
    assert (u.shape, s.shape, v.shape) == ((4, 2), (2,), (2, 6))
    # Even a cutoff above every singular value keeps one direction.
    u, s, v = eval_svd(t, 1, sv_cutoff_abs=1e9)
    assert s.shape == (1,)
    with pytest.raises(ShapeMismatch):
        eval_svd(t, 1, sv_cutoff_abs=-1.0)


def test_matricization_needs_an_interior_cut():
    t = dense((3, 4))
    for leading in (0, 2):
        with pytest.raises(InvalidLeading):
            eval_qr(t, leading)
        with pytest.raises(InvalidLeading):
            eval_svd(t, leading)


def test_dense_tensor_validates_entry_count():
    with pytest.raises(ShapeMismatch):
        DenseTensor((2, 3), np.zeros(5))
    with pytest.raises(ShapeMismatch):
        DenseTensor((-2,), np.zeros(2))
    with pytest.raises(ShapeMismatch):
        dense((2, 2)).item()
    assert DenseTensor((), [4.0]).item() == 4.0


def test_eval_dag_composes_the_whole_script():
    dag = lower_script(three_tensor_actions())
    inputs = random_inputs(dag, seed=5, dim=2)
    results = eval_dag(dag, inputs)
    assert len(results) == 2
    q, r = results
    # Recontracting the factors gives the transposed contraction value.
    pairs = [(inputs[nid], labels) for (ref, labels) in
             dag.nodes[3].operands for nid in [ref.node]]
    contracted = eval_contraction(pairs, dag.nodes[3].output_labels)
    reordered = eval_transpose(contracted, dag.nodes[4].perm)
    recon = np.tensordot(q.to_ndarray(), r.to_ndarray(), axes=([2], [0]))
    assert np.allclose(recon, reordered.to_ndarray(), atol=1e-10)


def test_eval_dag_values_exposes_every_port():
    dag = lower_script(three_tensor_actions(split_kind="svd"))
    inputs = random_inputs(dag, seed=6, dim=2)
    values = eval_dag_values(dag, inputs)
    assert NodeRef(5, 0) in values
    assert NodeRef(5, 1) in values
    assert NodeRef(5, 2) in values
    assert values[NodeRef(5, 1)].rank == 1


def test_evaluation_failures_are_aggregated_and_poison_downstream():
    dag = OpDag()
    dag.nodes[0] = InputNode(0, 2)
    dag.nodes[1] = TranspositionNode(1, NodeRef(0), (1, 0))
    dag.nodes[2] = ContractionNode(
        2, [(NodeRef(1), (0, 1)), (NodeRef(0), (1, 2))], (0, 2))
    dag.nodes[3] = InputNode(3, 1)
    dag.results = [NodeRef(2), NodeRef(3)]
    with pytest.raises(DagEvaluationError) as info:
        eval_dag(dag, {0: dense((2, 3, 4)), 3: dense((5,))})
    failed = [nid for nid, _ in info.value.failures]
    assert failed == [0]  # node 1 and 2 are skipped, not failed
    with pytest.raises(DagEvaluationError):
        eval_dag(dag, {3: dense((5,))})  # missing input tensor
