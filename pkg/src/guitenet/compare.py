"""Compare evaluations of two dags that are supposed to agree.

Factorizations make bitwise comparison of raw results meaningless: a QR or
SVD factor is only determined up to the factorization's internal
conventions, and pushing a transposition through a QR deliberately trades
one pair of factors for another with the same product.  Equivalence is
therefore checked in two parts:

* result slots whose lineage contains no split node are compared
  directly (passes preserve their values exactly up to float
  reassociation);
* each maximal tree of split nodes (a split whose factor feeds another
  split, and so on) is compared through its bond-contracted
  reconstruction, rebuilt bottom-up: a factor consumed by a child split
  is replaced by the child's own reconstruction with the connecting
  transpositions inverted, so the tree's product collapses back to the
  root's operand.  Permutations that the pipeline pre-composed into the
  root's operand (recorded in its PassReports) are undone before
  comparing; pre-compositions at interior splits need no bookkeeping
  because the inverted connecting transpositions already absorb them.
"""

from __future__ import annotations

import numpy as np

from .interpreter import DenseTensor, eval_contraction, eval_transpose
from .ir import (
    NodeRef,
    OpDag,
    QRSplitNode,
    SVDSplitNode,
    TranspositionNode,
    operand_refs,
    output_rank,
    port_count,
)
from .optimizer import PassReport

_FLOOR = 1e-30


def relative_deviation(a: DenseTensor, b: DenseTensor) -> float:
    """Frobenius distance over the larger Frobenius norm (0 for two zero
    tensors); infinity when the shapes disagree."""
    if a.shape != b.shape:
        return float("inf")
    diff = float(np.sqrt(((a.values - b.values) ** 2).sum()))
    scale = max(float(np.sqrt((a.values ** 2).sum())),
                float(np.sqrt((b.values ** 2).sum())))
    if scale < _FLOOR:
        return 0.0 if diff < _FLOOR else float("inf")
    return diff / scale


def split_node_ids(dag: OpDag) -> list[int]:
    return sorted(nid for nid, node in dag.nodes.items()
                  if isinstance(node, (QRSplitNode, SVDSplitNode)))


def _contract_factors(node, r: int,
                      factors: list[DenseTensor]) -> DenseTensor:
    leading = node.leading
    bond = r
    q_labels = tuple(range(leading)) + (bond,)
    r_labels = (bond,) + tuple(range(leading, r))
    if isinstance(node, QRSplitNode):
        operands = [(factors[0], q_labels), (factors[1], r_labels)]
    else:
        operands = [(factors[0], q_labels), (factors[1], (bond,)),
                    (factors[2], r_labels)]
    return eval_contraction(operands, tuple(range(r)))


def split_reconstruction(dag: OpDag, values: dict[NodeRef, DenseTensor],
                         nid: int) -> DenseTensor:
    """Contract the factors of one split node back over their shared bond."""
    node = dag.nodes[nid]
    r = output_rank(dag, node.operand)
    factors = [values[NodeRef(nid, port)]
               for port in range(port_count(node))]
    return _contract_factors(node, r, factors)


def _node_uses(dag: OpDag) -> dict[NodeRef, list[int]]:
    uses: dict[NodeRef, list[int]] = {}
    for nid, node in dag.nodes.items():
        for ref in operand_refs(node):
            uses.setdefault(ref, []).append(nid)
    return uses


def _follow_to_child_split(
    dag: OpDag, uses: dict[NodeRef, list[int]], ref: NodeRef,
) -> tuple[list[tuple[int, ...]], int] | None:
    """Walk the sole-consumer transposition chain from a factor; when it
    ends at a split node, return the chain's permutations and that node's
    id, otherwise None."""
    perms: list[tuple[int, ...]] = []
    while True:
        consumers = uses.get(ref, [])
        if len(consumers) != 1:
            return None
        node = dag.nodes[consumers[0]]
        if isinstance(node, TranspositionNode):
            perms.append(node.perm)
            ref = NodeRef(node.id, 0)
            continue
        if isinstance(node, (QRSplitNode, SVDSplitNode)):
            return perms, node.id
        return None


def _inverse(perm: tuple[int, ...]) -> tuple[int, ...]:
    inverse = [0] * len(perm)
    for k, p in enumerate(perm):
        inverse[p] = k
    return tuple(inverse)


def split_children(dag: OpDag) -> dict[int, int]:
    """Map from each split node id to the id of the split consuming one of
    its factors, for splits that feed another split."""
    uses = _node_uses(dag)
    children: dict[int, int] = {}
    for nid in split_node_ids(dag):
        node = dag.nodes[nid]
        for port in range(port_count(node)):
            chain = _follow_to_child_split(dag, uses, NodeRef(nid, port))
            if chain is not None:
                children[chain[1]] = nid
    return children


def tree_reconstruction(dag: OpDag, values: dict[NodeRef, DenseTensor],
                        nid: int) -> DenseTensor:
    """Reconstruction of a whole split tree rooted at ``nid``: factors that
    were themselves split are replaced by their own reconstructions, with
    the transpositions between the factor and the child split inverted."""
    uses = _node_uses(dag)

    def rebuild(sid: int) -> DenseTensor:
        node = dag.nodes[sid]
        r = output_rank(dag, node.operand)
        factors = []
        for port in range(port_count(node)):
            ref = NodeRef(sid, port)
            chain = _follow_to_child_split(dag, uses, ref)
            if chain is None:
                factors.append(values[ref])
                continue
            perms, child = chain
            value = rebuild(child)
            for perm in reversed(perms):
                value = eval_transpose(value, _inverse(perm))
            factors.append(value)
        return _contract_factors(node, r, factors)

    return rebuild(nid)


def recorded_operand_perms(
    reports: list[PassReport],
) -> dict[int, list[tuple[int, ...]]]:
    """Permutations pre-composed into split operands, per split node id, in
    application order."""
    perms: dict[int, list[tuple[int, ...]]] = {}
    for report in reports:
        for rewrite in report.rewrites:
            if rewrite.rule.startswith("push_transpose_through_qr"):
                split_id = rewrite.nodes[1]
                perms.setdefault(split_id, []).append(tuple(rewrite.perm))
    return perms


def _undo_perms(tensor: DenseTensor,
                perms: list[tuple[int, ...]]) -> DenseTensor:
    for perm in reversed(perms):
        tensor = eval_transpose(tensor, _inverse(perm))
    return tensor


def _split_free_slots(dag: OpDag) -> list[int]:
    """Indices of result slots whose ancestry holds no split node."""
    touched: dict[int, bool] = {}

    def visit(nid: int) -> bool:
        if nid in touched:
            return touched[nid]
        node = dag.nodes[nid]
        hit = isinstance(node, (QRSplitNode, SVDSplitNode))
        touched[nid] = hit
        if not hit:
            hit = any(visit(ref.node) for ref in operand_refs(node))
            touched[nid] = hit
        return hit

    return [index for index, ref in enumerate(dag.results)
            if not visit(ref.node)]


def compare_evaluations(
    dag_base: OpDag,
    values_base: dict[NodeRef, DenseTensor],
    dag_opt: OpDag,
    values_opt: dict[NodeRef, DenseTensor],
    reports: list[PassReport],
) -> float:
    """Maximum relative deviation between two evaluated dags.

    ``dag_opt`` must have come out of the rewrite pipeline applied to
    ``dag_base`` (same result slots, same split node ids).
    """
    if len(dag_base.results) != len(dag_opt.results):
        raise ValueError("result slot count differs")
    splits_base = split_node_ids(dag_base)
    splits_opt = split_node_ids(dag_opt)
    if splits_base != splits_opt:
        raise ValueError(
            f"split nodes differ: {splits_base} vs {splits_opt}")

    worst = 0.0
    free_base = set(_split_free_slots(dag_base))
    free_opt = set(_split_free_slots(dag_opt))
    for index in free_base & free_opt:
        a = values_base[dag_base.results[index]]
        b = values_opt[dag_opt.results[index]]
        worst = max(worst, relative_deviation(a, b))

    roots_base = set(splits_base) - set(split_children(dag_base))
    roots_opt = set(splits_opt) - set(split_children(dag_opt))
    if roots_base != roots_opt:
        raise ValueError(
            f"split tree roots differ: {sorted(roots_base)} vs "
            f"{sorted(roots_opt)}")

    perms = recorded_operand_perms(reports)
    for nid in sorted(roots_base):
        recon_base = tree_reconstruction(dag_base, values_base, nid)
        recon_opt = tree_reconstruction(dag_opt, values_opt, nid)
        recon_opt = _undo_perms(recon_opt, perms.get(nid, []))
        worst = max(worst, relative_deviation(recon_base, recon_opt))
    return worst
