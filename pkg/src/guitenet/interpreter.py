"""Reference evaluator for operation dags on dense tensors.

Semantics are defined directly: a contraction is the sum of the operand
entry products over every assignment of the summed labels, a transposition
is an explicit index relabeling, and the factorizations use the package's
own kernels.  None of the evaluation paths call einsum, transpose or the
linear-algebra routines of the emission target, so results computed here
are an independent check on generated code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    DagEvaluationError,
    InvalidLeading,
    InvalidPermutation,
    ShapeMismatch,
)
from .ir import (
    ContractionNode,
    InputNode,
    NodeRef,
    OpDag,
    QRSplitNode,
    SVDSplitNode,
    TranspositionNode,
    topo_order,
)


@dataclass(frozen=True)
class DenseTensor:
    """Dense real tensor: a shape and the row-major entry vector.

    A rank-0 tensor has shape () and exactly one entry.
    """

    shape: tuple[int, ...]
    values: np.ndarray  # 1-d float64, length = product of shape

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        expected = 1
        for d in self.shape:
            if d < 0:
                raise ShapeMismatch(f"negative dimension in {self.shape}")
            expected *= d
        if len(values) != expected:
            raise ShapeMismatch(
                f"shape {self.shape} needs {expected} entries, "
                f"got {len(values)}")

    @property
    def rank(self) -> int:
        return len(self.shape)

    @staticmethod
    def from_ndarray(arr) -> "DenseTensor":
        arr = np.asarray(arr, dtype=float)
        return DenseTensor(arr.shape, arr.reshape(-1).copy())

    def to_ndarray(self) -> np.ndarray:
        return self.values.reshape(self.shape)

    def item(self) -> float:
        if self.shape != ():
            raise ShapeMismatch("item() needs a rank-0 tensor")
        return float(self.values[0])


def _row_major_strides(shape: tuple[int, ...]) -> tuple[int, ...]:
    strides = [1] * len(shape)
    for i in range(len(shape) - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]
    return tuple(strides)


def eval_transpose(tensor: DenseTensor,
                   perm: tuple[int, ...]) -> DenseTensor:
    """Reorder dimensions: output dimension k is input dimension perm[k],
    so the entry at (i_0, ..) of the result is the input entry whose index
    at position perm[k] equals i_k."""
    r = tensor.rank
    if sorted(perm) != list(range(r)):
        raise InvalidPermutation(
            f"perm {tuple(perm)} is not a bijection on 0..{r - 1}")
    out_shape = tuple(tensor.shape[p] for p in perm)
    if not out_shape:
        return DenseTensor((), tensor.values.copy())
    in_strides = _row_major_strides(tensor.shape)
    out_strides = _row_major_strides(out_shape)
    total = len(tensor.values)
    gather = np.zeros(total, dtype=np.intp)
    flat = np.arange(total)
    for k in range(r):
        coord = (flat // out_strides[k]) % out_shape[k]
        gather += coord * in_strides[perm[k]]
    return DenseTensor(out_shape, tensor.values[gather])


def eval_contraction(operands, output_labels) -> DenseTensor:
    """Contract ``operands`` (pairs of DenseTensor and label list).

    Every assignment of the label variables contributes the product of the
    operand entries addressed by it; assignments are summed over all labels
    that do not survive to ``output_labels``.  A label appearing twice on
    one operand addresses that operand's diagonal.
    """
    if not operands:
        raise ShapeMismatch("contraction needs at least one operand")
    sizes: dict[int, int] = {}
    for opi, (tensor, labels) in enumerate(operands):
        if len(labels) != tensor.rank:
            raise ShapeMismatch(
                f"operand {opi} has rank {tensor.rank} but "
                f"{len(labels)} labels")
        for dim, label in zip(tensor.shape, labels):
            if label in sizes and sizes[label] != dim:
                raise ShapeMismatch(
                    f"label {label} carries both size {sizes[label]} "
                    f"and size {dim}")
            sizes.setdefault(label, dim)
    for label in output_labels:
        if label not in sizes:
            raise ShapeMismatch(f"output label {label} not among operands")

    all_labels = sorted(sizes)
    axis_of = {label: axis for axis, label in enumerate(all_labels)}
    space = tuple(sizes[l] for l in all_labels)
    n_axes = len(all_labels)

    product = np.ones(space)
    for tensor, labels in operands:
        nd = tensor.values.reshape(tensor.shape)
        if labels:
            index = tuple(
                np.arange(sizes[label]).reshape(
                    (1,) * axis_of[label]
                    + (sizes[label],)
                    + (1,) * (n_axes - axis_of[label] - 1))
                for label in labels
            )
            product = product * nd[index]
        else:
            product = product * nd.reshape(())

    summed_axes = tuple(axis_of[l] for l in all_labels
                        if l not in set(output_labels))
    if summed_axes:
        reduced = product.sum(axis=summed_axes)
    else:
        reduced = product
    kept = [l for l in all_labels if l in set(output_labels)]
    result = DenseTensor(tuple(reduced.shape), reduced.reshape(-1))
    if tuple(output_labels) == tuple(kept):
        return result
    rearrange = tuple(kept.index(l) for l in output_labels)
    return eval_transpose(result, rearrange)


def _matricize(tensor: DenseTensor, leading: int) -> tuple[np.ndarray, int, int]:
    if not 0 < leading < tensor.rank:
        raise InvalidLeading(
            f"leading {leading} outside 0 < l < {tensor.rank}")
    rows = 1
    for d in tensor.shape[:leading]:
        rows *= d
    cols = 1
    for d in tensor.shape[leading:]:
        cols *= d
    return tensor.values.reshape(rows, cols), rows, cols


def eval_qr(tensor: DenseTensor,
            leading: int) -> tuple[DenseTensor, DenseTensor]:
    """Reduced QR of the matricization with ``leading`` row dimensions.

    Q regains the leading dimensions plus the bond as its last dimension,
    R carries the bond first and the trailing dimensions after it.
    """
    matrix, rows, cols = _matricize(tensor, leading)
    q, r = linalg.householder_qr(matrix)
    k = min(rows, cols)
    q_tensor = DenseTensor(tensor.shape[:leading] + (k,), q.reshape(-1))
    r_tensor = DenseTensor((k,) + tensor.shape[leading:], r.reshape(-1))
    return q_tensor, r_tensor


def eval_svd(tensor: DenseTensor, leading: int, sv_cutoff_abs: float = 0.0,
             max_bond: int | None = None
             ) -> tuple[DenseTensor, DenseTensor, DenseTensor]:
    """Truncated SVD of the matricization with ``leading`` row dimensions.

    Keeps the singular values strictly above ``sv_cutoff_abs`` (at most
    ``max_bond`` of them, at least one) and reshapes U and V like the QR
    factors; S stays a rank-1 tensor holding the kept values.
    """
    if sv_cutoff_abs < 0:
        raise ShapeMismatch("sv_cutoff_abs must be >= 0")
    matrix, _rows, _cols = _matricize(tensor, leading)
    u, s, vt = linalg.jacobi_svd(matrix)
    k = linalg.truncation_count(s, sv_cutoff_abs, max_bond)
    u_tensor = DenseTensor(tensor.shape[:leading] + (k,),
                           u[:, :k].reshape(-1))
    s_tensor = DenseTensor((k,), s[:k].copy())
    v_tensor = DenseTensor((k,) + tensor.shape[leading:],
                           vt[:k, :].reshape(-1))
    return u_tensor, s_tensor, v_tensor


def eval_dag_values(dag: OpDag,
                    inputs: dict[int, DenseTensor]
                    ) -> dict[NodeRef, DenseTensor]:
    """Evaluate every node, returning the tensor at each (node, port).

    Individual node failures are collected (downstream nodes of a failed
    one are skipped) and raised together as DagEvaluationError.
    """
    values: dict[NodeRef, DenseTensor] = {}
    failures: list[tuple[int, Exception]] = []
    poisoned: set[int] = set()

    for nid in topo_order(dag):
        node = dag.nodes[nid]
        try:
            if isinstance(node, InputNode):
                if nid not in inputs:
                    raise ShapeMismatch(f"no input tensor for T{nid}")
                tensor = inputs[nid]
                if tensor.rank != node.rank:
                    raise ShapeMismatch(
                        f"input T{nid} declared rank {node.rank}, "
                        f"got shape {tensor.shape}")
                values[NodeRef(nid)] = tensor
                continue
            refs = ([ref for ref, _ in node.operands]
                    if isinstance(node, ContractionNode)
                    else [node.operand])
            if any(ref.node in poisoned for ref in refs):
                poisoned.add(nid)
                continue
            if isinstance(node, ContractionNode):
                pairs = [(values[ref], labels)
                         for ref, labels in node.operands]
                values[NodeRef(nid)] = eval_contraction(
                    pairs, node.output_labels)
            elif isinstance(node, TranspositionNode):
                values[NodeRef(nid)] = eval_transpose(
                    values[node.operand], node.perm)
            elif isinstance(node, QRSplitNode):
                q, r = eval_qr(values[node.operand], node.leading)
                values[NodeRef(nid, 0)] = q
                values[NodeRef(nid, 1)] = r
            elif isinstance(node, SVDSplitNode):
                u, s, v = eval_svd(values[node.operand], node.leading,
                                   node.sv_cutoff_abs, node.max_bond)
                values[NodeRef(nid, 0)] = u
                values[NodeRef(nid, 1)] = s
                values[NodeRef(nid, 2)] = v
        except Exception as exc:  # aggregate, keep evaluating the rest
            failures.append((nid, exc))
            poisoned.add(nid)
    if failures:
        raise DagEvaluationError(failures)
    return values


def eval_dag(dag: OpDag, inputs: dict[int, DenseTensor]) -> list[DenseTensor]:
    """Evaluate the dag and return the result tensors in order."""
    values = eval_dag_values(dag, inputs)
    return [values[ref] for ref in dag.results]
