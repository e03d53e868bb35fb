"""Translate editing actions into elementary-operation dag nodes.

Contractions assign summation labels by scanning the selected tensors in
ascending id, legs in position order: legs sharing a junction reuse the
junction's label, everything else gets the next fresh integer.  That scan
order makes the emitted label lists already canonical (dense, first
appearance order).  Splits lower to an optional dimension reordering
followed by a QR or SVD node; the reordering consumes a tensor id of its
own even though the intermediate never shows up in the editable network.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import network as nw
from .errors import LoweringError, ScriptError, UnknownEntity
from .ir import (
    ContractionNode,
    InputNode,
    LabelList,
    NodeRef,
    OpDag,
    OpNode,
    QRSplitNode,
    SVDSplitNode,
    TranspositionNode,
)


@dataclass(frozen=True)
class LabeledContraction:
    """Labels of a Contract action: one list per selected tensor (ascending
    id) plus the labels of the surviving open legs in canonical order
    (owner id ascending, position ascending)."""

    selection: tuple[int, ...]
    operand_labels: tuple[LabelList, ...]
    output_labels: LabelList


def lower_contract(state: nw.NetworkState,
                   selection) -> LabeledContraction | None:
    """Compute the label lists for contracting ``selection``.

    Returns None for the degenerate single-tensor, no-junction case (the
    contraction sums nothing, so no operation is emitted).
    """
    plan = nw.contract_plan(state, selection)
    if plan is None:
        return None
    junction_label: dict[int, int] = {}
    fresh = 0
    labels_by_tensor: dict[int, list[int]] = {t: [] for t in plan.selection}
    open_labels: list[int] = []
    for owner, _pos, junction in plan.legs:
        if junction is None:
            label = fresh
            fresh += 1
            open_labels.append(label)
        elif junction in junction_label:
            label = junction_label[junction]
        else:
            label = fresh
            fresh += 1
            junction_label[junction] = label
        labels_by_tensor[owner].append(label)
    return LabeledContraction(
        selection=plan.selection,
        operand_labels=tuple(tuple(labels_by_tensor[t])
                             for t in plan.selection),
        output_labels=tuple(open_labels),
    )


@dataclass(frozen=True)
class LoweredSplit:
    """Elementary steps of a Split action: an optional dimension reordering
    (``perm`` is None when row_dims ++ col_dims is already the identity)
    followed by a factorization with ``leading`` row dimensions."""

    tensor: int
    perm: tuple[int, ...] | None
    leading: int
    kind: str
    temp_id: int | None
    output_ids: tuple[int, ...]
    sv_cutoff_abs: float
    max_bond: int | None


def lower_split(state: nw.NetworkState, action: nw.Split) -> LoweredSplit:
    plan = nw.split_plan(state, action)
    return LoweredSplit(
        tensor=plan.tensor,
        perm=plan.perm if plan.needs_transpose else None,
        leading=plan.leading,
        kind=action.kind,
        temp_id=plan.temp_id,
        output_ids=plan.output_ids,
        sv_cutoff_abs=action.sv_cutoff_abs,
        max_bond=action.max_bond,
    )


class LoweringContext:
    """Keeps a network state and its dag in lockstep while actions apply.

    ``binding`` maps each live tensor id to the dag output that computes it.
    Errors raised by ``apply`` leave state, dag and binding untouched.
    """

    def __init__(self) -> None:
        self.state = nw.NetworkState()
        self.nodes: dict[int, OpNode] = {}
        self.input_order: list[int] = []
        self.binding: dict[int, NodeRef] = {}

    def apply(self, action: nw.UserAction) -> list[OpNode]:
        """Apply one action; returns the dag nodes the action added."""
        added: list[OpNode] = []

        if isinstance(action, nw.CreateTensor):
            self.state, effects = nw.apply_action(self.state, action)
            tid = effects[0].tensor
            node = InputNode(id=tid, rank=0)
            self.nodes[tid] = node
            self.input_order.append(tid)
            self.binding[tid] = NodeRef(tid)
            added.append(node)
            return added

        if isinstance(action, nw.AttachLeg):
            target = self.state.tensor(action.tensor)
            bound = self.nodes[self.binding[target.id].node]
            if not isinstance(bound, InputNode):
                raise LoweringError(
                    f"tensor {target.id} is computed by operation "
                    f"{bound.id}; its rank is fixed, legs can only be "
                    f"attached to input tensors")
            self.state, _ = nw.apply_action(self.state, action)
            bound.rank += 1
            return added

        if isinstance(action, nw.Contract):
            labeled = lower_contract(self.state, action.tensors)
            self.state, effects = nw.apply_action(self.state, action)
            if labeled is None:
                return added
            new_tensor = effects[0].new_tensor
            node = ContractionNode(
                id=new_tensor,
                operands=[
                    (self.binding[tid], labels)
                    for tid, labels in zip(labeled.selection,
                                           labeled.operand_labels)
                ],
                output_labels=labeled.output_labels,
            )
            self.nodes[new_tensor] = node
            for tid in labeled.selection:
                del self.binding[tid]
            self.binding[new_tensor] = NodeRef(new_tensor)
            added.append(node)
            return added

        if isinstance(action, nw.Split):
            lowered = lower_split(self.state, action)
            self.state, _ = nw.apply_action(self.state, action)
            operand = self.binding.pop(lowered.tensor)
            if lowered.perm is not None:
                trans = TranspositionNode(
                    id=lowered.temp_id, operand=operand, perm=lowered.perm)
                self.nodes[trans.id] = trans
                operand = NodeRef(trans.id)
                added.append(trans)
            first = lowered.output_ids[0]
            if lowered.kind == "qr":
                split: OpNode = QRSplitNode(
                    id=first, operand=operand, leading=lowered.leading)
            else:
                split = SVDSplitNode(
                    id=first, operand=operand, leading=lowered.leading,
                    sv_cutoff_abs=lowered.sv_cutoff_abs,
                    max_bond=lowered.max_bond)
            self.nodes[first] = split
            for port, tid in enumerate(lowered.output_ids):
                self.binding[tid] = NodeRef(first, port)
            added.append(split)
            return added

        # Connect / disconnect / move only touch the network.
        self.state, _ = nw.apply_action(self.state, action)
        return added

    def snapshot_dag(self) -> OpDag:
        """Dag copy whose results are the live tensors, ascending id."""
        dag = OpDag()
        dag.nodes = {nid: _copy_node(node) for nid, node in self.nodes.items()}
        dag.results = [self.binding[tid] for tid in sorted(self.binding)]
        return dag


def _copy_node(node: OpNode) -> OpNode:
    if isinstance(node, InputNode):
        return InputNode(id=node.id, rank=node.rank)
    if isinstance(node, ContractionNode):
        return ContractionNode(id=node.id, operands=list(node.operands),
                               output_labels=node.output_labels)
    if isinstance(node, TranspositionNode):
        return TranspositionNode(id=node.id, operand=node.operand,
                                 perm=node.perm)
    if isinstance(node, QRSplitNode):
        return QRSplitNode(id=node.id, operand=node.operand,
                           leading=node.leading)
    return SVDSplitNode(id=node.id, operand=node.operand,
                        leading=node.leading,
                        sv_cutoff_abs=node.sv_cutoff_abs,
                        max_bond=node.max_bond)


def lower_script(actions) -> OpDag:
    """Lower a whole action list to a dag.

    Inputs are the created tensors in creation order; results are the
    tensors still alive at the end, ascending id.  The first failing action
    aborts the run with a ScriptError naming its index.
    """
    ctx = LoweringContext()
    for index, action in enumerate(actions):
        try:
            ctx.apply(action)
        except Exception as exc:
            raise ScriptError(index, exc) from exc
    return ctx.snapshot_dag()
