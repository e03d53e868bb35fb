"""Elementary-operation dag: the intermediate form between network editing
and code emission.

Node kinds: tensor inputs, einsum-style contractions with integer label
lists, dimension transpositions, and QR / truncated-SVD splits of a
matricized tensor.  Multi-output nodes expose ports (QR: 0=Q, 1=R;
SVD: 0=U, 1=S, 2=V).  Node ids double as the monotone tensor counter of the
editing session, so the id of a split node names its first output and the
following ids name the remaining ports.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Union

from .errors import CycleDetected

LabelList = tuple[int, ...]


@dataclass(frozen=True)
class NodeRef:
    node: int
    port: int = 0


@dataclass
class InputNode:
    id: int
    rank: int


@dataclass
class ContractionNode:
    id: int
    operands: list[tuple[NodeRef, LabelList]]
    output_labels: LabelList


@dataclass
class TranspositionNode:
    id: int
    operand: NodeRef
    perm: tuple[int, ...]  # output dimension k is input dimension perm[k]


@dataclass
class QRSplitNode:
    id: int
    operand: NodeRef
    leading: int  # number of row dimensions of the matricization


@dataclass
class SVDSplitNode:
    id: int
    operand: NodeRef
    leading: int
    sv_cutoff_abs: float = 0.0
    max_bond: int | None = None


OpNode = Union[InputNode, ContractionNode, TranspositionNode,
               QRSplitNode, SVDSplitNode]


@dataclass
class OpDag:
    nodes: dict[int, OpNode] = field(default_factory=dict)
    results: list[NodeRef] = field(default_factory=list)

    def copy(self) -> "OpDag":
        return copy.deepcopy(self)


def port_count(node: OpNode) -> int:
    if isinstance(node, QRSplitNode):
        return 2
    if isinstance(node, SVDSplitNode):
        return 3
    return 1


def operand_refs(node: OpNode) -> list[NodeRef]:
    if isinstance(node, ContractionNode):
        return [ref for ref, _ in node.operands]
    if isinstance(node, (TranspositionNode, QRSplitNode, SVDSplitNode)):
        return [node.operand]
    return []


def output_rank(dag: OpDag, ref: NodeRef) -> int:
    """Rank of the tensor at a (node, port) output."""
    node = dag.nodes[ref.node]
    if isinstance(node, InputNode):
        return node.rank
    if isinstance(node, ContractionNode):
        return len(node.output_labels)
    if isinstance(node, TranspositionNode):
        return len(node.perm)
    r = output_rank(dag, node.operand)
    leading = node.leading
    if isinstance(node, QRSplitNode):
        return leading + 1 if ref.port == 0 else r - leading + 1
    # SVD: U, S, V
    if ref.port == 0:
        return leading + 1
    if ref.port == 1:
        return 1
    return r - leading + 1


def topo_order(dag: OpDag) -> list[int]:
    """Node ids in a deterministic topological order (smallest id first
    among the ready nodes).  Raises CycleDetected on cyclic graphs."""
    import heapq

    pending = {nid: set() for nid in dag.nodes}
    dependents: dict[int, list[int]] = {nid: [] for nid in dag.nodes}
    for nid, node in dag.nodes.items():
        for ref in operand_refs(node):
            if ref.node in pending and ref.node != nid:
                pending[nid].add(ref.node)
        for dep in pending[nid]:
            dependents[dep].append(nid)
    ready = [nid for nid, deps in pending.items() if not deps]
    heapq.heapify(ready)
    order = []
    done = set()
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        done.add(nid)
        for follower in dependents[nid]:
            deps = pending[follower]
            deps.discard(nid)
            if not deps and follower not in done:
                heapq.heappush(ready, follower)
    if len(order) != len(dag.nodes):
        stuck = sorted(set(dag.nodes) - done)
        raise CycleDetected(f"cycle through nodes {stuck}")
    return order


def topo_levels(dag: OpDag) -> list[list[int]]:
    """Group non-input nodes into parallelizable levels.

    Level k contains the nodes whose operands all come from inputs or from
    levels < k; within a level, ids ascend.
    """
    order = topo_order(dag)
    level: dict[int, int] = {}
    for nid in order:
        node = dag.nodes[nid]
        if isinstance(node, InputNode):
            continue
        depth = 0
        for ref in operand_refs(node):
            producer = dag.nodes[ref.node]
            if not isinstance(producer, InputNode):
                depth = max(depth, level[ref.node] + 1)
        level[nid] = depth
    if not level:
        return []
    levels: list[list[int]] = [[] for _ in range(max(level.values()) + 1)]
    for nid in sorted(level):
        levels[level[nid]].append(nid)
    return levels


# ---------------------------------------------------------------------------
# Validation

@dataclass(frozen=True)
class Violation:
    code: str
    node: int | None
    message: str

    def __str__(self) -> str:
        where = f"node {self.node}" if self.node is not None else "dag"
        return f"{where}: {self.code}: {self.message}"


def normalized_labels(node: ContractionNode) -> tuple[
        list[tuple[NodeRef, LabelList]], LabelList]:
    """Canonical relabeling: dense integers in first-appearance order over
    the operand lists (left to right)."""
    mapping: dict[int, int] = {}
    for _, labels in node.operands:
        for label in labels:
            if label not in mapping:
                mapping[label] = len(mapping)
    operands = [(ref, tuple(mapping[l] for l in labels))
                for ref, labels in node.operands]
    try:
        output = tuple(mapping[l] for l in node.output_labels)
    except KeyError as exc:
        raise KeyError(
            f"output label {exc.args[0]} of node {node.id} does not occur "
            f"in any operand") from None
    return operands, output


def normalize_contraction(node: ContractionNode) -> ContractionNode:
    operands, output = normalized_labels(node)
    node.operands = operands
    node.output_labels = output
    return node


def validate(dag: OpDag) -> list[Violation]:
    """Structural checks; violations are returned, not raised."""
    out: list[Violation] = []

    def bad(code: str, node: int | None, message: str) -> None:
        out.append(Violation(code, node, message))

    for nid, node in dag.nodes.items():
        if node.id != nid:
            bad("id_mismatch", nid, f"node carries id {node.id}")
        for ref in operand_refs(node):
            if ref.node not in dag.nodes:
                bad("unknown_operand", nid, f"operand node {ref.node}")
            elif not 0 <= ref.port < port_count(dag.nodes[ref.node]):
                bad("bad_port", nid,
                    f"port {ref.port} of node {ref.node}")
    for ref in dag.results:
        if ref.node not in dag.nodes:
            bad("unknown_result", None, f"result node {ref.node}")
        elif not 0 <= ref.port < port_count(dag.nodes[ref.node]):
            bad("bad_port", None,
                f"result port {ref.port} of node {ref.node}")
    if out:
        return out

    try:
        topo_order(dag)
    except CycleDetected as exc:
        bad("cycle", None, str(exc))
        return out

    for nid in sorted(dag.nodes):
        node = dag.nodes[nid]
        if isinstance(node, InputNode):
            if node.rank < 0:
                bad("bad_rank", nid, "negative rank")
        elif isinstance(node, ContractionNode):
            _validate_contraction(dag, node, bad)
        elif isinstance(node, TranspositionNode):
            r = output_rank(dag, node.operand)
            if sorted(node.perm) != list(range(r)):
                bad("bad_perm", nid,
                    f"perm {node.perm} is not a bijection on 0..{r - 1}")
        elif isinstance(node, (QRSplitNode, SVDSplitNode)):
            r = output_rank(dag, node.operand)
            if not 0 < node.leading < r:
                bad("bad_leading", nid,
                    f"leading {node.leading} outside 0 < l < {r}")
            if isinstance(node, SVDSplitNode):
                if node.sv_cutoff_abs < 0:
                    bad("bad_cutoff", nid, "sv_cutoff_abs must be >= 0")
                if node.max_bond is not None and node.max_bond < 1:
                    bad("bad_max_bond", nid, "max_bond must be >= 1")
    return out


def _validate_contraction(dag: OpDag, node: ContractionNode, bad) -> None:
    if not node.operands:
        bad("no_operands", node.id, "contraction needs >= 1 operand")
        return
    for ref, labels in node.operands:
        r = output_rank(dag, ref)
        if len(labels) != r:
            bad("rank_mismatch", node.id,
                f"operand {ref.node}.{ref.port} has rank {r} but "
                f"{len(labels)} labels")
            return
    counts: dict[int, int] = {}
    seen: list[int] = []
    for _, labels in node.operands:
        for label in labels:
            counts[label] = counts.get(label, 0) + 1
            if label not in seen:
                seen.append(label)
    if seen != list(range(len(seen))) or seen != sorted(counts):
        bad("labels_not_normalized", node.id,
            f"labels must be dense 0..{len(counts) - 1} in first-appearance "
            f"order, got {seen}")
    if len(set(node.output_labels)) != len(node.output_labels):
        bad("duplicate_output_label", node.id,
            f"output labels {node.output_labels} repeat a label")
    for label in node.output_labels:
        if label not in counts:
            bad("unknown_output_label", node.id,
                f"output label {label} not among operands")
        elif counts[label] != 1:
            # A label may either survive to the output or be summed over,
            # never both.
            bad("output_label_summed", node.id,
                f"output label {label} occurs {counts[label]} times")


# ---------------------------------------------------------------------------
# Serialization

DAG_SCHEMA_VERSION = 1


def _ref_to_dict(ref: NodeRef) -> dict:
    return {"node": ref.node, "port": ref.port}


def _ref_from_dict(data: dict) -> NodeRef:
    return NodeRef(node=data["node"], port=data.get("port", 0))


def dag_to_dict(dag: OpDag) -> dict:
    nodes = []
    for nid in sorted(dag.nodes):
        node = dag.nodes[nid]
        if isinstance(node, InputNode):
            nodes.append({"id": nid, "kind": "input", "rank": node.rank})
        elif isinstance(node, ContractionNode):
            nodes.append({
                "id": nid,
                "kind": "contraction",
                "operands": [
                    {"ref": _ref_to_dict(ref), "labels": list(labels)}
                    for ref, labels in node.operands
                ],
                "output_labels": list(node.output_labels),
            })
        elif isinstance(node, TranspositionNode):
            nodes.append({
                "id": nid,
                "kind": "transposition",
                "operand": _ref_to_dict(node.operand),
                "perm": list(node.perm),
            })
        elif isinstance(node, QRSplitNode):
            nodes.append({
                "id": nid,
                "kind": "qr_split",
                "operand": _ref_to_dict(node.operand),
                "leading": node.leading,
            })
        elif isinstance(node, SVDSplitNode):
            nodes.append({
                "id": nid,
                "kind": "svd_split",
                "operand": _ref_to_dict(node.operand),
                "leading": node.leading,
                "sv_cutoff_abs": node.sv_cutoff_abs,
                "max_bond": node.max_bond,
            })
    return {
        "version": DAG_SCHEMA_VERSION,
        "nodes": nodes,
        "results": [_ref_to_dict(ref) for ref in dag.results],
    }


def dag_from_dict(data: dict) -> OpDag:
    if data.get("version") != DAG_SCHEMA_VERSION:
        raise ValueError(f"unsupported dag schema version "
                         f"{data.get('version')!r}")
    dag = OpDag()
    for entry in data["nodes"]:
        nid = entry["id"]
        kind = entry["kind"]
        if kind == "input":
            node: OpNode = InputNode(id=nid, rank=entry["rank"])
        elif kind == "contraction":
            node = ContractionNode(
                id=nid,
                operands=[(_ref_from_dict(op["ref"]), tuple(op["labels"]))
                          for op in entry["operands"]],
                output_labels=tuple(entry["output_labels"]),
            )
        elif kind == "transposition":
            node = TranspositionNode(
                id=nid, operand=_ref_from_dict(entry["operand"]),
                perm=tuple(entry["perm"]))
        elif kind == "qr_split":
            node = QRSplitNode(
                id=nid, operand=_ref_from_dict(entry["operand"]),
                leading=entry["leading"])
        elif kind == "svd_split":
            node = SVDSplitNode(
                id=nid, operand=_ref_from_dict(entry["operand"]),
                leading=entry["leading"],
                sv_cutoff_abs=entry["sv_cutoff_abs"],
                max_bond=entry["max_bond"])
        else:
            raise ValueError(f"unknown node kind {kind!r}")
        dag.nodes[nid] = node
    dag.results = [_ref_from_dict(ref) for ref in data["results"]]
    return dag
