"""Rewrite passes over the operation dag.

Three local rewrites, each run to a fixpoint and combined into numbered
pipeline levels:

* ``merge_contractions``: a contraction whose output feeds exactly one
  other contraction (and nothing else) is inlined into its consumer, so
  chains of pairwise contractions collapse into one multi-operand einsum.
* ``fold_transpose_into_contraction``: a transposition sitting directly
  after a contraction is absorbed by permuting the producer's output
  labels; a transposition feeding only contractions is absorbed by
  relabeling the consumers' operand lists.  Identity transpositions are
  dropped outright.
* ``push_transpose_through_qr``: a transposition of the Q factor that
  keeps the bond in place only reorders the matricization's rows, so it
  commutes with the factorization and can be applied to the operand
  instead (merging with an already-present upstream transposition when
  there is one).  Ditto for the R factor and the trailing dimensions,
  which reorders matricization columns; that leaves the factor *product*
  intact but not the individual factors, so equivalence of rewritten dags
  is defined on reconstructed products (see PassReport.rewrites for the
  permutations applied to split operands).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidDag
from .ir import (
    ContractionNode,
    InputNode,
    NodeRef,
    OpDag,
    QRSplitNode,
    SVDSplitNode,
    TranspositionNode,
    normalize_contraction,
    output_rank,
    port_count,
    validate,
)


@dataclass(frozen=True)
class Rewrite:
    rule: str
    nodes: tuple[int, ...]
    perm: tuple[int, ...] | None = None


@dataclass
class PassReport:
    pass_name: str
    nodes_before: int
    nodes_after: int
    rewrites: list[Rewrite] = field(default_factory=list)


def report_to_dict(report: PassReport) -> dict:
    return {
        "pass_name": report.pass_name,
        "nodes_before": report.nodes_before,
        "nodes_after": report.nodes_after,
        "rewrites": [
            {
                "rule": rw.rule,
                "nodes": list(rw.nodes),
                "perm": list(rw.perm) if rw.perm is not None else None,
            }
            for rw in report.rewrites
        ],
    }


# ---------------------------------------------------------------------------
# Shared helpers

def _uses(dag: OpDag, ref: NodeRef) -> list[tuple[str, int]]:
    """Where a (node, port) output is consumed: ("operand", consumer id)
    entries, one per referencing slot, plus ("result", slot index)."""
    found: list[tuple[str, int]] = []
    for nid, node in dag.nodes.items():
        if isinstance(node, ContractionNode):
            for op_ref, _ in node.operands:
                if op_ref == ref:
                    found.append(("operand", nid))
        elif isinstance(node, (TranspositionNode, QRSplitNode,
                               SVDSplitNode)):
            if node.operand == ref:
                found.append(("operand", nid))
    for index, res in enumerate(dag.results):
        if res == ref:
            found.append(("result", index))
    return found


def _repoint(dag: OpDag, old: NodeRef, new: NodeRef) -> None:
    for node in dag.nodes.values():
        if isinstance(node, ContractionNode):
            node.operands = [(new if ref == old else ref, labels)
                             for ref, labels in node.operands]
        elif isinstance(node, (TranspositionNode, QRSplitNode,
                               SVDSplitNode)):
            if node.operand == old:
                node.operand = new
    dag.results = [new if ref == old else ref for ref in dag.results]


def _invert(perm: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for k, p in enumerate(perm):
        inv[p] = k
    return tuple(inv)


def _identity(n: int) -> tuple[int, ...]:
    return tuple(range(n))


def _next_free_id(dag: OpDag) -> int:
    # Port outputs of split nodes occupy the ids right after the node's
    # own, so fresh ids must clear those as well.
    top = -1
    for nid, node in dag.nodes.items():
        top = max(top, nid + port_count(node) - 1)
    return top + 1


# ---------------------------------------------------------------------------
# merge_contractions

def merge_contractions(dag: OpDag) -> PassReport:
    report = PassReport("merge_contractions", len(dag.nodes), len(dag.nodes))
    while True:
        merged = _merge_one(dag)
        if merged is None:
            break
        report.rewrites.append(merged)
    report.nodes_after = len(dag.nodes)
    return report


def _merge_one(dag: OpDag) -> Rewrite | None:
    for pid in sorted(dag.nodes):
        producer = dag.nodes[pid]
        if not isinstance(producer, ContractionNode):
            continue
        uses = _uses(dag, NodeRef(pid))
        if not uses or any(kind == "result" for kind, _ in uses):
            continue
        consumer_ids = {target for kind, target in uses}
        if len(consumer_ids) != 1:
            continue
        cid = consumer_ids.pop()
        consumer = dag.nodes[cid]
        if not isinstance(consumer, ContractionNode):
            continue
        _inline(producer, consumer)
        del dag.nodes[pid]
        return Rewrite("merge_contractions", (pid, cid))
    return None


def _inline(producer: ContractionNode, consumer: ContractionNode) -> None:
    """Substitute the producer's operand list into every consumer slot that
    references it.  The producer's output labels take the labels of the
    slot; its summed labels are renamed fresh per slot."""
    fresh = 1 + max(
        (l for _, labels in consumer.operands for l in labels),
        default=-1,
    )
    out_set = set(producer.output_labels)
    new_operands: list = []
    for ref, labels in consumer.operands:
        if ref != NodeRef(producer.id):
            new_operands.append((ref, labels))
            continue
        mapping = dict(zip(producer.output_labels, labels))
        for _, p_labels in producer.operands:
            for label in p_labels:
                if label not in out_set and label not in mapping:
                    mapping[label] = fresh
                    fresh += 1
        for p_ref, p_labels in producer.operands:
            new_operands.append(
                (p_ref, tuple(mapping[l] for l in p_labels)))
    consumer.operands = new_operands
    normalize_contraction(consumer)


# ---------------------------------------------------------------------------
# fold_transpose_into_contraction

def fold_transpose_into_contraction(dag: OpDag) -> PassReport:
    report = PassReport("fold_transpose_into_contraction",
                        len(dag.nodes), len(dag.nodes))
    while True:
        rewrite = _fold_one(dag)
        if rewrite is None:
            break
        report.rewrites.append(rewrite)
    report.nodes_after = len(dag.nodes)
    return report


def _fold_one(dag: OpDag) -> Rewrite | None:
    for tid in sorted(dag.nodes):
        trans = dag.nodes[tid]
        if not isinstance(trans, TranspositionNode):
            continue
        t_ref = NodeRef(tid)
        t_uses = _uses(dag, t_ref)
        t_is_result = any(kind == "result" for kind, _ in t_uses)

        if trans.perm == _identity(len(trans.perm)):
            _repoint(dag, t_ref, trans.operand)
            del dag.nodes[tid]
            return Rewrite("drop_identity_transposition", (tid,))

        # Producer side: the transposition is the sole consumer of a
        # contraction, so the contraction can emit in permuted order.
        source = trans.operand
        producer = dag.nodes[source.node]
        if isinstance(producer, ContractionNode):
            p_uses = _uses(dag, source)
            if (len(p_uses) == 1 and p_uses[0][0] == "operand"
                    and p_uses[0][1] == tid):
                old_out = producer.output_labels
                producer.output_labels = tuple(
                    old_out[p] for p in trans.perm)
                _repoint(dag, t_ref, source)
                del dag.nodes[tid]
                return Rewrite("fold_transpose_into_producer",
                               (tid, producer.id), perm=trans.perm)

        # Consumer side: every use is a contraction operand slot, so the
        # slots can address the untransposed tensor directly.
        if t_uses and not t_is_result and all(
                isinstance(dag.nodes[target], ContractionNode)
                for kind, target in t_uses):
            inv = _invert(trans.perm)
            consumers = sorted({target for _, target in t_uses})
            for cid in consumers:
                consumer = dag.nodes[cid]
                consumer.operands = [
                    (trans.operand, tuple(labels[inv[d]]
                                          for d in range(len(labels))))
                    if ref == t_ref else (ref, labels)
                    for ref, labels in consumer.operands
                ]
                normalize_contraction(consumer)
            del dag.nodes[tid]
            return Rewrite("fold_transpose_into_consumers",
                           (tid, *consumers), perm=trans.perm)
    return None


# ---------------------------------------------------------------------------
# push_transpose_through_qr

def push_transpose_through_qr(dag: OpDag) -> PassReport:
    report = PassReport("push_transpose_through_qr",
                        len(dag.nodes), len(dag.nodes))
    while True:
        rewrite = _push_one(dag)
        if rewrite is None:
            break
        report.rewrites.append(rewrite)
    report.nodes_after = len(dag.nodes)
    return report


def _factor_values_reach_contraction(dag: OpDag, sid: int) -> bool:
    """Whether any value derived from the split's factors (through
    transpositions or further splits) feeds a contraction."""
    node = dag.nodes[sid]
    stack = [NodeRef(sid, port) for port in range(port_count(node))]
    seen: set[NodeRef] = set()
    while stack:
        ref = stack.pop()
        if ref in seen:
            continue
        seen.add(ref)
        for kind, target in _uses(dag, ref):
            if kind != "operand":
                continue
            consumer = dag.nodes[target]
            if isinstance(consumer, ContractionNode):
                return True
            if isinstance(consumer, TranspositionNode):
                stack.append(NodeRef(target))
            elif isinstance(consumer, (QRSplitNode, SVDSplitNode)):
                stack.extend(NodeRef(target, p)
                             for p in range(port_count(consumer)))
    return False


def _push_one(dag: OpDag) -> Rewrite | None:
    for tid in sorted(dag.nodes):
        trans = dag.nodes[tid]
        if not isinstance(trans, TranspositionNode):
            continue
        source = trans.operand
        split = dag.nodes[source.node]
        if not isinstance(split, QRSplitNode):
            continue
        src_uses = _uses(dag, source)
        if len(src_uses) != 1 or src_uses[0] != ("operand", tid):
            continue  # the factor is observed elsewhere; leave it alone
        r = output_rank(dag, split.operand)
        leading = split.leading
        perm = trans.perm
        if source.port == 0:
            # Reordering matricization rows leaves R untouched and applies
            # the same reordering to Q (reduced QR with a non-negative
            # diagonal is unique), so every consumer keeps its value.
            if perm[leading] != leading:
                continue
            extended = perm[:leading] + tuple(range(leading, r))
        else:
            # Reordering matricization columns replaces *both* factors
            # while keeping their product; only sound when no contraction
            # ever observes a value derived from these factors.
            if perm[0] != 0:
                continue
            if _factor_values_reach_contraction(dag, split.id):
                continue
            extended = tuple(range(leading)) + tuple(
                leading + perm[j] - 1 for j in range(1, len(perm)))

        _precompose_operand(dag, split, extended)
        _repoint(dag, NodeRef(tid), source)
        del dag.nodes[tid]
        side = "q" if source.port == 0 else "r"
        return Rewrite(f"push_transpose_through_qr_{side}",
                       (tid, split.id), perm=extended)
    return None


def _precompose_operand(dag: OpDag, split: QRSplitNode,
                        extended: tuple[int, ...]) -> None:
    """Make the split consume ``transpose(operand, extended)``, reusing an
    exclusive upstream transposition when one is already there."""
    upstream_ref = split.operand
    upstream = dag.nodes[upstream_ref.node]
    if isinstance(upstream, TranspositionNode):
        up_uses = _uses(dag, upstream_ref)
        if len(up_uses) == 1 and up_uses[0] == ("operand", split.id):
            composed = tuple(upstream.perm[e] for e in extended)
            if composed == _identity(len(composed)):
                split.operand = upstream.operand
                del dag.nodes[upstream_ref.node]
            else:
                upstream.perm = composed
            return
    fresh = _next_free_id(dag)
    dag.nodes[fresh] = TranspositionNode(
        id=fresh, operand=split.operand, perm=extended)
    split.operand = NodeRef(fresh)


# ---------------------------------------------------------------------------
# Pipeline

PIPELINE_LEVELS = (0, 1, 2)
_MAX_ROUNDS = 50


def run_pipeline(dag: OpDag, level: int) -> tuple[OpDag, list[PassReport]]:
    """Copy the dag and run the passes for the given optimization level.

    Level 0 applies nothing, level 1 folds transpositions and merges
    contraction chains, level 2 additionally pushes transpositions through
    QR splits.  Passes repeat until a full round changes nothing.
    """
    if level not in PIPELINE_LEVELS:
        raise ValueError(f"unknown optimization level {level!r}")
    out = dag.copy()
    reports: list[PassReport] = []
    if level == 0:
        return out, reports
    passes = [fold_transpose_into_contraction, merge_contractions]
    if level == 2:
        passes.append(push_transpose_through_qr)
    n_results = len(out.results)
    for _ in range(_MAX_ROUNDS):
        round_reports = [p(out) for p in passes]
        reports.extend(round_reports)
        if all(not r.rewrites for r in round_reports):
            break
    else:
        raise RuntimeError("rewrite pipeline did not reach a fixpoint")
    assert len(out.results) == n_results
    violations = validate(out)
    if violations:
        raise InvalidDag(violations)
    return out, reports
