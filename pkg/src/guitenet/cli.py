"""Command-line entry points: compile, run, serve.

Exit codes: 0 success, 1 malformed script document, 2 action or dag level
failures (the message names the failing action index when there is one),
3 file I/O problems.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import compare
from .codegen import emit, emit_module
from .errors import (
    GuiteNetError,
    ScriptError,
    ScriptParseError,
    ShapeMismatch,
)
from .interpreter import DenseTensor, eval_dag_values
from .ir import InputNode, dag_to_dict, topo_levels
from .lowering import lower_script
from .optimizer import report_to_dict, run_pipeline
from .session import load_script

EXIT_OK = 0
EXIT_BAD_SCRIPT = 1
EXIT_BAD_ACTION = 2
EXIT_IO = 3

DEFAULT_ADDR = "127.0.0.1:8000"
ADDR_ENV = "GUITENET_ADDR"


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


class _IOFailure(Exception):
    pass


def _load_actions(path: str):
    return load_script(_read_text(path))


def cmd_compile(args) -> int:
    actions = _load_actions(args.script)
    dag = lower_script(actions)
    dag, reports = run_pipeline(dag, args.opt)
    code = emit_module(emit(dag, target=args.target))
    if args.output:
        _write_text(args.output, code)
    else:
        sys.stdout.write(code)
    if args.emit_ir:
        document = {
            "opt_level": args.opt,
            "dag": dag_to_dict(dag),
            "pass_reports": [report_to_dict(r) for r in reports],
        }
        _write_text(args.emit_ir, json.dumps(document, indent=2) + "\n")
    if args.schedule:
        document = {"levels": topo_levels(dag)}
        _write_text(args.schedule, json.dumps(document, indent=2) + "\n")
    return EXIT_OK


def _load_shapes(path: str, dag):
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ScriptParseError(f"shapes file is not valid JSON: {exc}") \
            from None
    if not isinstance(data, dict):
        raise ScriptParseError("shapes file must map tensor names to "
                               "dimension lists")
    inputs = {}
    for nid in sorted(dag.nodes):
        node = dag.nodes[nid]
        if not isinstance(node, InputNode):
            continue
        key = f"T{nid}"
        if key not in data:
            raise ShapeMismatch(f"shapes file misses input tensor {key}")
        dims = data[key]
        if (not isinstance(dims, list)
                or not all(isinstance(d, int) and not isinstance(d, bool)
                           and d > 0 for d in dims)):
            raise ShapeMismatch(f"shape of {key} must be a list of "
                                f"positive integers")
        if len(dims) != node.rank:
            raise ShapeMismatch(
                f"input tensor {key} has rank {node.rank}, shapes file "
                f"gives {len(dims)} dimensions")
        inputs[nid] = tuple(dims)
    return inputs


def cmd_run(args) -> int:
    actions = _load_actions(args.script)
    dag = lower_script(actions)
    shapes = _load_shapes(args.shapes, dag)

    rng = np.random.default_rng(args.seed)
    inputs = {}
    lines = []
    for nid in sorted(shapes):
        shape = shapes[nid]
        size = 1
        for d in shape:
            size *= d
        inputs[nid] = DenseTensor(shape, rng.standard_normal(size))
    lines.append("inputs: " + "; ".join(
        f"T{nid} {shapes[nid]!r}" for nid in sorted(shapes)))

    values_base = eval_dag_values(dag, inputs)
    dag_opt, reports = run_pipeline(dag, args.opt)
    values_opt = eval_dag_values(dag_opt, inputs)

    result_names = []
    for ref in dag.results:
        tensor = values_base[ref]
        result_names.append(f"T{ref.node + ref.port} {tensor.shape!r}")
    lines.append("results: " + ("; ".join(result_names) or "(none)"))

    deviation = compare.compare_evaluations(
        dag, values_base, dag_opt, values_opt, reports)
    lines.append(f"max relative deviation (opt 0 vs opt {args.opt}): "
                 f"{deviation:.3e}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ScriptParseError(f"address must look like HOST:PORT, "
                               f"got {addr!r}")
    return host, int(port)


def cmd_serve(args) -> int:
    addr = os.environ.get(ADDR_ENV) or args.addr
    host, port = _parse_addr(addr)
    from .server import serve

    serve(host, port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guitenet",
        description="tensor-network action scripts: compile to numpy "
                    "source, check optimization levels, serve the editor")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser(
        "compile", help="lower a script and print the generated function")
    p_compile.add_argument("script")
    p_compile.add_argument("--opt", type=int, default=0, choices=(0, 1, 2))
    p_compile.add_argument("--target", default="numpy")
    p_compile.add_argument("-o", "--output")
    p_compile.add_argument("--emit-ir", dest="emit_ir",
                           help="write the dag and pass reports as JSON")
    p_compile.add_argument("--schedule",
                           help="write the parallel schedule as JSON")
    p_compile.set_defaults(func=cmd_compile)

    p_run = sub.add_parser(
        "run", help="evaluate a script on random inputs and compare "
                    "optimization levels")
    p_run.add_argument("script")
    p_run.add_argument("--shapes", required=True,
                       help="JSON file: {\"T0\": [2, 3], ...}")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--opt", type=int, default=2, choices=(0, 1, 2))
    p_run.set_defaults(func=cmd_run)

    p_serve = sub.add_parser("serve", help="start the HTTP session service")
    p_serve.add_argument("--addr", default=DEFAULT_ADDR,
                         help=f"HOST:PORT (default {DEFAULT_ADDR}; "
                              f"env {ADDR_ENV} wins when set)")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ScriptParseError as exc:
        print(f"error: malformed script: {exc}", file=sys.stderr)
        return EXIT_BAD_SCRIPT
    except ScriptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ACTION
    except GuiteNetError as exc:
        print(f"error: [{exc.code}] {exc}", file=sys.stderr)
        return EXIT_BAD_ACTION


if __name__ == "__main__":
    sys.exit(main())
