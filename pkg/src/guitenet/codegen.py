"""Emit a dag as a self-contained Python function over numpy arrays.

Variables are named ``T<id>`` after the session's monotone tensor counter,
so the same action script always produces the same text.  Inputs become
the function parameters in creation order and the results come back as a
tuple (or a bare tensor for a single result).  Statements wrap at 79
columns; a wrapped call continues with an extra 8 spaces of indent, and
einsum calls break between operand pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidDag, UnsupportedTarget
from .ir import (
    ContractionNode,
    InputNode,
    NodeRef,
    OpDag,
    QRSplitNode,
    SVDSplitNode,
    TranspositionNode,
    topo_order,
    validate,
)

_WIDTH = 79
_BODY_INDENT = 4
_CONT_INDENT = 8

TARGETS = ("numpy",)


@dataclass
class EmittedProgram:
    function_name: str
    parameters: list[str]
    statements: list[str]           # physical lines, body indent excluded
    returned: list[str]
    logical_statements: list[str] = field(default_factory=list)


def _var(ref: NodeRef) -> str:
    return f"T{ref.node + ref.port}"


def _labels(labels) -> str:
    return repr(tuple(labels))


def _wrap(prefix: str, chunks: list[str]) -> list[str]:
    """Greedy fill: join chunks with spaces, breaking before a chunk that
    would push the line past the width limit."""
    lines: list[str] = []
    current = prefix + chunks[0]
    for chunk in chunks[1:]:
        if _BODY_INDENT + len(current) + 1 + len(chunk) <= _WIDTH:
            current += " " + chunk
        else:
            lines.append(current)
            current = " " * _CONT_INDENT + chunk
    lines.append(current)
    return lines


def _reshape_expr(operand: str, leading: int) -> list[str]:
    """Chunks of ``X.reshape((np.prod(X.shape[:l]), np.prod(X.shape[l:])))``
    split between the two row/column products."""
    return [
        f"{operand}.reshape((np.prod({operand}.shape[:{leading}]),",
        f"np.prod({operand}.shape[{leading}:]))),",
    ]


def emit(dag: OpDag, target: str = "numpy") -> EmittedProgram:
    """Turn a validated dag into an EmittedProgram for ``target``."""
    if target not in TARGETS:
        raise UnsupportedTarget(
            f"target {target!r} not supported (available: {TARGETS})")
    violations = validate(dag)
    if violations:
        raise InvalidDag(violations)

    program = EmittedProgram(
        function_name="f",
        parameters=[f"T{nid}" for nid in sorted(dag.nodes)
                    if isinstance(dag.nodes[nid], InputNode)],
        statements=[],
        returned=[_var(ref) for ref in dag.results],
    )

    def push(prefix: str, chunks: list[str]) -> None:
        lines = _wrap(prefix, chunks)
        program.statements.extend(lines)
        program.logical_statements.append(prefix + " ".join(chunks))

    for nid in topo_order(dag):
        node = dag.nodes[nid]
        if isinstance(node, InputNode):
            continue
        if isinstance(node, ContractionNode):
            chunks = []
            for index, (ref, labels) in enumerate(node.operands):
                piece = f"{_var(ref)}, {_labels(labels)},"
                if index == 0:
                    piece = "np.einsum(" + piece
                chunks.append(piece)
            chunks.append(f"{_labels(node.output_labels)})")
            push(f"T{nid} = ", chunks)
        elif isinstance(node, TranspositionNode):
            push(f"T{nid} = ",
                 [f"np.transpose({_var(node.operand)}, {node.perm!r})"])
        elif isinstance(node, QRSplitNode):
            x = _var(node.operand)
            l = node.leading
            q, r = f"T{nid}", f"T{nid + 1}"
            head, tail = _reshape_expr(x, l)
            push(f"{q}, {r} = ",
                 ["np.linalg.qr(" + head, tail, "mode='reduced')"])
            push(f"{q} = ", [f"{q}.reshape({x}.shape[:{l}] + ({q}.shape[1],))"])
            push(f"{r} = ", [f"{r}.reshape(({r}.shape[0],) + {x}.shape[{l}:])"])
        elif isinstance(node, SVDSplitNode):
            x = _var(node.operand)
            l = node.leading
            u, s, v = f"T{nid}", f"T{nid + 1}", f"T{nid + 2}"
            head, tail = _reshape_expr(x, l)
            push(f"{u}, {s}, {v} = ",
                 ["np.linalg.svd(" + head, tail, "full_matrices=False)"])
            kept = f"int(np.sum({s} > {node.sv_cutoff_abs!r}))"
            if node.max_bond is not None:
                kept = f"min({kept}, {node.max_bond})"
            push("k = ", [f"max({kept}, 1)"])
            push(f"{u} = ", [f"{u}[:, :k].reshape({x}.shape[:{l}] + (k,))"])
            push(f"{s} = ", [f"{s}[:k]"])
            push(f"{v} = ", [f"{v}[:k, :].reshape((k,) + {x}.shape[{l}:])"])
    return program


def emit_module(dag_or_program, target: str = "numpy") -> str:
    """Full module text: the import header, a blank line and the function.

    Accepts either a dag (emitted first) or an EmittedProgram.
    """
    if isinstance(dag_or_program, EmittedProgram):
        program = dag_or_program
    else:
        program = emit(dag_or_program, target=target)
    if len(program.returned) == 1:
        return_line = f"return {program.returned[0]}"
    else:
        return_line = f"return ({', '.join(program.returned)})"
    lines = ["import numpy as np", ""]
    lines.append(f"def {program.function_name}"
                 f"({', '.join(program.parameters)}):")
    body = " " * _BODY_INDENT
    for statement in program.statements:
        lines.append(body + statement)
    lines.append(body + return_line)
    return "\n".join(lines) + "\n"
